// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "simplex_poly.hpp"

#include <cmath>

namespace tenfem::detail {

namespace {

// Rows P_q^{(alpha,0)}(t), q = 0..count-1, on a jet argument.
template <int Dim>
std::vector<Jet<Dim>> jacobi_row(int count, int alpha, const Jet<Dim>& t) {
  std::vector<Jet<Dim>> P(count);
  if (count == 0) return P;
  P[0] = Jet<Dim>::constant(1.0);
  if (count == 1) return P;
  P[1] = 0.5 * (alpha + 2.0) * t + Jet<Dim>::constant(0.5 * alpha);
  for (int q = 1; q + 1 < count; ++q) {
    const double s = 2.0 * q + alpha;
    const double a = 2.0 * (q + 1.0) * (q + alpha + 1.0) * s;
    const double b = (s + 1.0) * alpha * alpha;
    const double c = s * (s + 1.0) * (s + 2.0);
    const double d = 2.0 * (q + alpha) * q * (s + 2.0);
    P[q + 1] = (1.0 / a) * ((c * t + Jet<Dim>::constant(b)) * P[q] -
                            d * P[q - 1]);
  }
  return P;
}

// chi_p = P_p(2x/s - 1) * s^p for s = 1 - y (triangle) or 1 - y - z (tet),
// written as a polynomial recurrence free of the collapsed-coordinate
// singularity.
template <int Dim>
std::vector<Jet<Dim>> chi_row(int count, const Jet<Dim>& x,
                              const Jet<Dim>& s) {
  std::vector<Jet<Dim>> chi(count);
  if (count == 0) return chi;
  chi[0] = Jet<Dim>::constant(1.0);
  if (count == 1) return chi;
  const Jet<Dim> u = 2.0 * x - s;
  chi[1] = u;
  const Jet<Dim> s2 = s * s;
  for (int p = 1; p + 1 < count; ++p)
    chi[p + 1] =
        (1.0 / (p + 1.0)) * ((2.0 * p + 1.0) * (u * chi[p]) - p * (s2 * chi[p - 1]));
  return chi;
}

}  // namespace

int scalar_space_dim(int dim, int degree) {
  if (dim == 2) return (degree + 1) * (degree + 2) / 2;
  return (degree + 1) * (degree + 2) * (degree + 3) / 6;
}

int scalar_degree_offset(int dim, int t) {
  return t == 0 ? 0 : scalar_space_dim(dim, t - 1);
}

std::vector<Jet<2>> dubiner_triangle(int degree, double x, double y) {
  using J = Jet<2>;
  const J X = J::variable(x, 0);
  const J Y = J::variable(y, 1);
  const J s = J::constant(1.0) - Y;
  const auto chi = chi_row<2>(degree + 1, X, s);
  const J t = 2.0 * Y - J::constant(1.0);

  std::vector<J> out(scalar_space_dim(2, degree));
  std::vector<std::vector<J>> jac(degree + 1);
  for (int p = 0; p <= degree; ++p)
    jac[p] = jacobi_row<2>(degree - p + 1, 2 * p + 1, t);

  int idx = 0;
  for (int total = 0; total <= degree; ++total)
    for (int p = 0; p <= total; ++p) {
      const int q = total - p;
      const double norm = std::sqrt(2.0 * (2.0 * p + 1.0) * (p + q + 1.0));
      out[idx++] = norm * (chi[p] * jac[p][q]);
    }
  return out;
}

std::vector<Jet<3>> dubiner_tetrahedron(int degree, double x, double y,
                                        double z) {
  using J = Jet<3>;
  const J X = J::variable(x, 0);
  const J Y = J::variable(y, 1);
  const J Z = J::variable(z, 2);
  const J one = J::constant(1.0);
  const auto chi = chi_row<3>(degree + 1, X, one - Y - Z);

  // psi_{p,q} = P_q^{(2p+1,0)}(2y/(1-z) - 1) * (1-z)^q via the same
  // singularity-free rewrite.
  const J u = one - Z;
  const J u2 = u * u;
  const J w = 2.0 * Y - u;
  std::vector<std::vector<J>> psi(degree + 1);
  for (int p = 0; p <= degree; ++p) {
    const int count = degree - p + 1;
    const double alpha = 2.0 * p + 1.0;
    auto& row = psi[p];
    row.resize(count);
    if (count == 0) continue;
    row[0] = J::constant(1.0);
    if (count > 1) row[1] = 0.5 * ((alpha + 2.0) * w + alpha * u);
    for (int q = 1; q + 1 < count; ++q) {
      const double s = 2.0 * q + alpha;
      const double a = 2.0 * (q + 1.0) * (q + alpha + 1.0) * s;
      const double b = (s + 1.0) * alpha * alpha;
      const double c = s * (s + 1.0) * (s + 2.0);
      const double d = 2.0 * (q + alpha) * q * (s + 2.0);
      row[q + 1] = (1.0 / a) * ((c * w + b * u) * row[q] - d * (u2 * row[q - 1]));
    }
  }

  const J tz = 2.0 * Z - one;
  std::vector<J> out(scalar_space_dim(3, degree));
  int idx = 0;
  for (int total = 0; total <= degree; ++total)
    for (int p = 0; p <= total; ++p)
      for (int q = 0; q <= total - p; ++q) {
        const int r = total - p - q;
        const auto jr = jacobi_row<3>(r + 1, 2 * (p + q + 1), tz);
        const double norm = std::sqrt(2.0 * (2.0 * p + 1.0) * (p + q + 1.0) *
                                      (2.0 * (p + q + r) + 3.0));
        out[idx++] = norm * (chi[p] * (psi[p][q] * jr[r]));
      }
  return out;
}

}  // namespace tenfem::detail
