// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

namespace tenfem::detail {

/// Value, gradient and Hessian of a polynomial expression, propagated exactly
/// through +, - and *. Evaluating a polynomial recurrence on jets yields its
/// derivatives up to order two without truncation error.
template <int Dim>
struct Jet {
  double v = 0.0;
  std::array<double, Dim> g{};
  std::array<std::array<double, Dim>, Dim> h{};

  static Jet constant(double c) {
    Jet j;
    j.v = c;
    return j;
  }
  static Jet variable(double value, int axis) {
    Jet j;
    j.v = value;
    j.g[axis] = 1.0;
    return j;
  }

  Jet& operator+=(const Jet& o) {
    v += o.v;
    for (int a = 0; a < Dim; ++a) {
      g[a] += o.g[a];
      for (int b = 0; b < Dim; ++b) h[a][b] += o.h[a][b];
    }
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    for (int a = 0; a < Dim; ++a) {
      g[a] -= o.g[a];
      for (int b = 0; b < Dim; ++b) h[a][b] -= o.h[a][b];
    }
    return *this;
  }
  Jet& operator*=(double s) {
    v *= s;
    for (int a = 0; a < Dim; ++a) {
      g[a] *= s;
      for (int b = 0; b < Dim; ++b) h[a][b] *= s;
    }
    return *this;
  }
};

template <int Dim>
Jet<Dim> operator+(Jet<Dim> a, const Jet<Dim>& b) {
  return a += b;
}
template <int Dim>
Jet<Dim> operator-(Jet<Dim> a, const Jet<Dim>& b) {
  return a -= b;
}
template <int Dim>
Jet<Dim> operator*(Jet<Dim> a, double s) {
  return a *= s;
}
template <int Dim>
Jet<Dim> operator*(double s, Jet<Dim> a) {
  return a *= s;
}

template <int Dim>
Jet<Dim> operator*(const Jet<Dim>& a, const Jet<Dim>& b) {
  Jet<Dim> r;
  r.v = a.v * b.v;
  for (int i = 0; i < Dim; ++i) r.g[i] = a.v * b.g[i] + b.v * a.g[i];
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j)
      r.h[i][j] = a.v * b.h[i][j] + b.v * a.h[i][j] + a.g[i] * b.g[j] +
                  a.g[j] * b.g[i];
  return r;
}

}  // namespace tenfem::detail
