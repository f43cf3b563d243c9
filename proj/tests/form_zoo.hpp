// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tenfem/forms.hpp"

namespace form_zoo {

using namespace tenfem;
using forms::argument;
using forms::coefficient;
using forms::component;
using forms::curl;
using forms::div;
using forms::dot;
using forms::rot;
using forms::skew;
using forms::trace;

inline forms::FormIR mass_affine(CellType cell, int degree) {
  const FiniteElement el =
      vector_element(create_element(Family::Lagrange, cell, degree));
  return {{el, el}, {}, dot(argument(0), argument(1))};
}

inline forms::FormIR mass_contravariant(CellType cell, int degree) {
  const FiniteElement el = create_element(Family::RT, cell, degree);
  return {{el, el}, {}, dot(argument(0), argument(1))};
}

inline forms::FormIR mass_covariant(CellType cell, int degree) {
  const FiniteElement el = create_element(Family::NED1, cell, degree);
  return {{el, el}, {}, dot(argument(0), argument(1))};
}

inline forms::FormIR div_term(CellType cell, int degree) {
  const FiniteElement v =
      create_element(Family::DiscontinuousLagrange, cell, degree - 1);
  const FiniteElement s = create_element(Family::RT, cell, degree);
  return {{v, s}, {}, argument(0) * div(argument(1))};
}

inline forms::FormIR mixed_poisson(CellType cell, Family hdiv, int degree) {
  const FiniteElement S = create_element(hdiv, cell, degree);
  const FiniteElement V =
      create_element(Family::DiscontinuousLagrange, cell, degree - 1);
  const FiniteElement MX = mixed_element({S, V});
  const auto tau = argument(0, 0), v = argument(0, 1);
  const auto sig = argument(1, 0), u = argument(1, 1);
  return {{MX, MX}, {}, dot(tau, sig) - div(tau) * u + v * div(sig)};
}

inline forms::FormIR curl_div(Family hdiv, int degree) {
  const FiniteElement C =
      create_element(Family::NED1, CellType::Tetrahedron, degree);
  const FiniteElement D = create_element(hdiv, CellType::Tetrahedron, degree);
  const FiniteElement MX = mixed_element({C, D});
  const auto tau = argument(0, 0), v = argument(0, 1);
  const auto sig = argument(1, 0), u = argument(1, 1);
  return {{MX, MX},
          {},
          dot(tau, sig) - dot(curl(tau), u) + dot(v, curl(sig)) +
              div(v) * div(u)};
}

inline forms::FormIR maxwell_stiffness(CellType cell, int degree) {
  const FiniteElement el = create_element(Family::NED1, cell, degree);
  if (cell == CellType::Triangle)
    return {{el, el}, {}, rot(argument(0)) * rot(argument(1))};
  return {{el, el}, {}, dot(curl(argument(0)), curl(argument(1)))};
}

inline forms::FormIR elasticity(int degree, double nu, double zeta) {
  const FiniteElement S = create_element(Family::BDM, CellType::Triangle, degree);
  const FiniteElement V = vector_element(create_element(
      Family::DiscontinuousLagrange, CellType::Triangle, degree - 1));
  const FiniteElement Q = create_element(Family::DiscontinuousLagrange,
                                         CellType::Triangle, degree - 1);
  const FiniteElement MX = mixed_element({S, S, V, Q});
  const auto tau0 = argument(0, 0), tau1 = argument(0, 1);
  const auto v = argument(0, 2), eta = argument(0, 3);
  const auto sig0 = argument(1, 0), sig1 = argument(1, 1);
  const auto u = argument(1, 2), gam = argument(1, 3);
  auto A = [&](const forms::Expr& s0, const forms::Expr& s1,
               const forms::Expr& t0, const forms::Expr& t1) {
    return nu * (dot(s0, t0) + dot(s1, t1)) -
           zeta * (trace({s0, s1}) * trace({t0, t1}));
  };
  auto b = [&](const forms::Expr& t0, const forms::Expr& t1,
               const forms::Expr& w, const forms::Expr& q) {
    return div(t0) * component(w, 0) + div(t1) * component(w, 1) +
           skew({t0, t1}) * q;
  };
  return {{MX, MX},
          {},
          A(sig0, sig1, tau0, tau1) + b(tau0, tau1, u, gam) +
              b(sig0, sig1, v, eta)};
}

inline forms::FormIR load_vector(CellType cell, int degree, int f_degree) {
  const FiniteElement V = vector_element(
      create_element(Family::DiscontinuousLagrange, cell, degree));
  const FiniteElement F =
      vector_element(create_element(Family::DiscontinuousLagrange, cell, f_degree));
  return {{V}, {F}, dot(argument(0), coefficient(0))};
}

}  // namespace form_zoo
