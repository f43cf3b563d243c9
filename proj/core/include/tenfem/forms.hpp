// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tenfem/element.hpp"
#include "tenfem/mesh.hpp"
#include "tenfem/quadrature.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace tenfem::forms {

/// Expression tree over form arguments and coefficients. Cell integrals only;
/// the measure is implied. Expressions are scalars or vectors; ranks are
/// validated during compilation.
class Expr {
public:
  enum class Op {
    Argument,
    Coefficient,
    Component,
    Grad,
    Div,
    Curl,
    Rot,
    Dot,
    Mul,
    Add,
    Sub,
    Scale,
    Trace,
    Skew,
  };

  struct Node {
    Op op;
    double scale = 1.0;
    int slot = -1;   // Argument: argument slot; Coefficient: coefficient id
    int block = -1;  // sub-element of a mixed space (-1: whole element)
    int comp = -1;   // Component
    std::vector<Expr> operands;
  };

  Expr() = default;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  bool valid() const { return node_ != nullptr; }
  const Node& node() const { return *node_; }

private:
  std::shared_ptr<const Node> node_;
};

/// Test/trial function of slot j (0 = test, 1 = trial); block selects a
/// sub-element of a mixed space.
Expr argument(int slot, int block = -1);
Expr coefficient(int id, int block = -1);

Expr component(const Expr& e, int comp);
Expr grad(const Expr& e);
Expr div(const Expr& e);
Expr curl(const Expr& e);  // 3D
Expr rot(const Expr& e);   // 2D scalar curl
Expr dot(const Expr& a, const Expr& b);
/// trace of the matrix whose rows are the given vector expressions
Expr trace(std::vector<Expr> rows);
/// scalar representation of the skew part: (tau_21 - tau_12) / 2
Expr skew(std::vector<Expr> rows);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(double c, const Expr& e);
Expr operator*(const Expr& a, const Expr& b);  // scalar * scalar

/// Multilinear form of arity 1 or 2: argument spaces, declared coefficient
/// spaces and the integrand over the cell measure.
struct FormIR {
  std::vector<FiniteElement> arguments;
  std::vector<FiniteElement> coefficients;
  Expr integrand;

  int arity() const { return static_cast<int>(arguments.size()); }
  CellType cell() const { return arguments.front().cell_type(); }
  int dim() const { return arguments.front().dim(); }
};

struct GeometryFactor {
  bool forward = true;  // true: dx_row/dX_col, false: dX_row/dx_col
  int row = 0;          // >= 0 concrete, < 0 internal summation symbol
  int col = 0;
};

/// One entry of the secondary index set: |detJ|/(detJ)^gamma times a sum over
/// internal indices of a product of Jacobian entries.
struct GeometryProduct {
  int gamma = 0;
  std::vector<GeometryFactor> factors;
  int num_internal = 0;
};

/// Compiled form: reference tensor A0 over primary indices (basis function
/// per argument slot, then dofs per coefficient) and the flat secondary
/// index, plus the per-entry geometry recipes.
struct TensorRepresentation {
  FormIR form;
  std::vector<int> primary_shape;
  std::vector<int> coefficient_shape;
  std::vector<GeometryProduct> secondary;
  int secondary_rank = 0;
  int quadrature_degree = 0;
  std::vector<double> reference_tensor;  // row-major over
                                         // primary x coefficient x secondary

  int num_secondary() const { return static_cast<int>(secondary.size()); }
  std::string dump() const;
};

struct CompileOptions {
  /// Apply the (dx/dX)(dX/dx) -> delta contraction pass.
  bool simplify = true;
  /// Override the reference quadrature degree (-1: sum of argument and
  /// coefficient polynomial degrees).
  int quadrature_degree = -1;
};

TensorRepresentation compile(const FormIR& form, const CompileOptions& options = {});

/// Evaluates the geometry recipes for one cell; the result is indexed by
/// (coefficient dofs..., secondary index), flattened row-major, with
/// coefficient dofs entering as an outer product.
std::vector<double> geometry_tensor(
    const TensorRepresentation& rep, const CellGeometry& geometry,
    std::span<const Eigen::VectorXd> coefficient_dofs = {});

/// A^K_i = sum_alpha A0_{i alpha} G^alpha as a flat loop; returns the element
/// tensor row-major over the primary shape.
std::vector<double> contract(const TensorRepresentation& rep,
                             std::span<const double> G);

/// Independent element-tensor path: tabulate on the reference cell, push
/// through the block mappings, evaluate the integrand pointwise and sum with
/// quadrature weights times |detJ|. Serves as the oracle for the contraction
/// path.
std::vector<double> evaluate_by_quadrature(
    const FormIR& form, const CellGeometry& geometry,
    std::span<const Eigen::VectorXd> coefficient_dofs = {},
    int quadrature_degree = -1);

/// Oracle variant with analytic coefficients evaluated at physical points.
using AnalyticCoefficient =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
std::vector<double> evaluate_by_quadrature_analytic(
    const FormIR& form, const CellGeometry& geometry,
    std::span<const AnalyticCoefficient> coefficients,
    int quadrature_degree = -1);

}  // namespace tenfem::forms
