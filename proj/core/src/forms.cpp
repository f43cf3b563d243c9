// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "tenfem/forms.hpp"

#include <stdexcept>

namespace tenfem::forms {

namespace {

Expr make(Expr::Op op, std::vector<Expr> operands, double scale = 1.0,
          int slot = -1, int block = -1, int comp = -1) {
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->scale = scale;
  n->slot = slot;
  n->block = block;
  n->comp = comp;
  n->operands = std::move(operands);
  return Expr(std::move(n));
}

}  // namespace

Expr argument(int slot, int block) {
  return make(Expr::Op::Argument, {}, 1.0, slot, block);
}
Expr coefficient(int id, int block) {
  return make(Expr::Op::Coefficient, {}, 1.0, id, block);
}
Expr component(const Expr& e, int comp) {
  return make(Expr::Op::Component, {e}, 1.0, -1, -1, comp);
}
Expr grad(const Expr& e) { return make(Expr::Op::Grad, {e}); }
Expr div(const Expr& e) { return make(Expr::Op::Div, {e}); }
Expr curl(const Expr& e) { return make(Expr::Op::Curl, {e}); }
Expr rot(const Expr& e) { return make(Expr::Op::Rot, {e}); }
Expr dot(const Expr& a, const Expr& b) { return make(Expr::Op::Dot, {a, b}); }
Expr trace(std::vector<Expr> rows) {
  return make(Expr::Op::Trace, std::move(rows));
}
Expr skew(std::vector<Expr> rows) {
  if (rows.size() != 2)
    throw std::invalid_argument("skew: expected two row expressions");
  return make(Expr::Op::Skew, std::move(rows));
}
Expr operator+(const Expr& a, const Expr& b) {
  return make(Expr::Op::Add, {a, b});
}
Expr operator-(const Expr& a, const Expr& b) {
  return make(Expr::Op::Sub, {a, b});
}
Expr operator*(double c, const Expr& e) {
  return make(Expr::Op::Scale, {e}, c);
}
Expr operator*(const Expr& a, const Expr& b) {
  return make(Expr::Op::Mul, {a, b});
}

}  // namespace tenfem::forms
