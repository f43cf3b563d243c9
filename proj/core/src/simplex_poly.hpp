// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "jet.hpp"

#include <vector>

namespace tenfem::detail {

/// dim P_degree on a dim-simplex.
int scalar_space_dim(int dim, int degree);

/// Index of the first basis function of total degree exactly t in the
/// degree-major enumeration used by the tabulators below.
int scalar_degree_offset(int dim, int t);

/// Orthonormal (Dubiner) basis of P_degree on the reference triangle
/// {X >= 0, Y >= 0, X + Y <= 1}, all functions evaluated at one point.
/// Enumeration is degree-major.
std::vector<Jet<2>> dubiner_triangle(int degree, double x, double y);

/// Same on the reference tetrahedron.
std::vector<Jet<3>> dubiner_tetrahedron(int degree, double x, double y,
                                        double z);

}  // namespace tenfem::detail
