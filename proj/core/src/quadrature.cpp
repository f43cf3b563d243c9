// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "tenfem/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace tenfem {

namespace {

struct Rule1d {
  std::vector<double> points;   // on [-1, 1]
  std::vector<double> weights;  // against (1-x)^alpha
};

// Golub-Welsch for the Jacobi weight (1-x)^alpha on [-1, 1] (beta = 0).
Rule1d gauss_jacobi(int q, int alpha) {
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(q, q);
  auto diag = [&](int k) -> double {
    if (k == 0) return -static_cast<double>(alpha) / (alpha + 2);
    const double s = 2.0 * k + alpha;
    return -static_cast<double>(alpha) * alpha / (s * (s + 2.0));
  };
  auto offdiag = [&](int k) -> double {
    const double s = 2.0 * k + alpha;
    return 2.0 * k * (k + alpha) / s * std::sqrt(1.0 / ((s + 1.0) * (s - 1.0)));
  };
  for (int k = 0; k < q; ++k) {
    T(k, k) = diag(k);
    if (k > 0) T(k, k - 1) = T(k - 1, k) = offdiag(k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  const double mu0 = std::pow(2.0, alpha + 1) / (alpha + 1);
  Rule1d rule;
  rule.points.resize(q);
  rule.weights.resize(q);
  for (int k = 0; k < q; ++k) {
    rule.points[k] = es.eigenvalues()[k];
    const double v0 = es.eigenvectors()(0, k);
    rule.weights[k] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace

QuadratureRule make_rule(CellType cell, int degree) {
  if (degree < 0 || degree > 30)
    throw std::invalid_argument("make_rule: unsupported degree");
  const int q = degree / 2 + 1;  // (2q - 1) >= degree

  QuadratureRule rule;
  rule.cell = cell;
  rule.exactness_degree = degree;

  if (cell == CellType::Triangle) {
    const Rule1d ra = gauss_jacobi(q, 0);
    const Rule1d rb = gauss_jacobi(q, 1);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) {
        const double a = ra.points[i], b = rb.points[j];
        rule.points.push_back({0.25 * (1.0 + a) * (1.0 - b), 0.5 * (1.0 + b), 0.0});
        rule.weights.push_back(ra.weights[i] * rb.weights[j] / 8.0);
      }
  } else {
    const Rule1d ra = gauss_jacobi(q, 0);
    const Rule1d rb = gauss_jacobi(q, 1);
    const Rule1d rc = gauss_jacobi(q, 2);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j)
        for (int k = 0; k < q; ++k) {
          const double a = ra.points[i], b = rb.points[j], c = rc.points[k];
          rule.points.push_back({0.125 * (1.0 + a) * (1.0 - b) * (1.0 - c),
                                 0.25 * (1.0 + b) * (1.0 - c),
                                 0.5 * (1.0 + c)});
          rule.weights.push_back(ra.weights[i] * rb.weights[j] * rc.weights[k] /
                                 64.0);
        }
  }
  return rule;
}

}  // namespace tenfem
