// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tenfem/assembly.hpp"
#include "tenfem/element.hpp"
#include "tenfem/forms.hpp"
#include "tenfem/mesh.hpp"

#include <random>
#include <vector>

namespace oracles {

/// Closed-form simplex integral of x^a y^b z^c over the reference cell:
/// a! b! c! / (a + b + c + dim)!.
double simplex_monomial_integral(int dim, int a, int b, int c = 0);

/// Random nondegenerate affine cell geometry with |det J| >= 0.05; the sign
/// of det J alternates with the draw index when signs is true.
tenfem::CellGeometry random_geometry(int dim, std::mt19937& rng,
                                     bool negative_det);

/// Reference-cell geometry (J = I).
tenfem::CellGeometry identity_geometry(int dim);

/// Reference vertices of the dim-simplex.
std::vector<std::array<double, 3>> reference_vertices(int dim);

/// Largest jump of the mapped normal (or tangential) traces of all global
/// basis functions across the interior facets of the space's mesh.
double max_conformity_jump(const tenfem::FunctionSpace& space, bool tangential);

/// Element tensor of a bilinear form assembled entry-wise from the quadrature
/// oracle, global scatter included (used to cross-check assemble_matrix).
Eigen::MatrixXd assemble_dense_by_quadrature(
    const tenfem::forms::FormIR& form, const tenfem::Mesh& mesh,
    const tenfem::FunctionSpace& test,
    const tenfem::FunctionSpace& trial);

}  // namespace oracles
