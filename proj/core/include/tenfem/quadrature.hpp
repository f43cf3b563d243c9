// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tenfem/mesh.hpp"

#include <vector>

namespace tenfem {

/// Quadrature rule on the reference triangle or tetrahedron, exact for all
/// polynomials of total degree <= exactness_degree.
struct QuadratureRule {
  CellType cell;
  int exactness_degree = 0;
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;

  int num_points() const { return static_cast<int>(points.size()); }
};

/// Collapsed-coordinate Gauss-Jacobi tensor rule of the requested exactness
/// degree (0 <= degree <= 30). Throws for unsupported degrees.
QuadratureRule make_rule(CellType cell, int degree);

}  // namespace tenfem
