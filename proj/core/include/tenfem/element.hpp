// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tenfem/mesh.hpp"

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <vector>

namespace tenfem {

enum class Family { Lagrange, DiscontinuousLagrange, RT, BDM, NED1 };

enum class MappingKind { Affine, Contravariant, Covariant };

/// One degree of freedom of a reference element. All functionals are of the
/// form ell(v) = sum_k v(points[k]) . weights[k]; point functionals have a
/// single term whose weight carries the measure-scaled direction (rotated
/// edge vector, face cross product, edge vector, or unit component).
struct DofFunctional {
  enum class Kind { PointEval, PointNormal, PointTangential, InteriorMoment };
  Kind kind = Kind::PointEval;

  int entity_dim = 0;    // 0 vertex, 1 edge, 2 face, cell = mesh dim
  int entity_index = 0;  // local entity index (0 for the cell)

  std::vector<std::array<double, 3>> points;
  std::vector<Eigen::VectorXd> weights;

  // Point functionals: barycentric position within the entity's ascending
  // vertex tuple, so the matching physical functional can be rebuilt from
  // the global entity.
  std::vector<double> entity_coords;
  // PointTangential: which of the facet frame tangents (0/1); -1 otherwise.
  int direction = -1;
  // PointEval on vector-valued elements: value component; -1 otherwise.
  int component = -1;
};

/// Basis function values and derivatives at a set of reference points.
/// Derivative multi-indices are enumerated value, d/dX_a, then symmetric
/// second derivatives (a <= b).
struct Tabulation {
  int dim = 0;
  int num_basis = 0;
  int num_components = 0;
  int num_points = 0;
  int deriv_order = 0;
  std::vector<double> data;

  static int num_deriv_ids(int dim, int order) {
    int n = 1;
    if (order >= 1) n += dim;
    if (order >= 2) n += dim * (dim + 1) / 2;
    return n;
  }
  int deriv2_id(int a, int b) const {
    if (a > b) std::swap(a, b);
    // pairs (0,0),(0,1),...,(0,dim-1),(1,1),... after the dim+1 lower ids
    return 1 + dim + a * dim - a * (a - 1) / 2 + (b - a);
  }
  double& at(int deriv_id, int basis, int comp, int pt) {
    return data[((static_cast<std::size_t>(deriv_id) * num_basis + basis) *
                     num_components +
                 comp) *
                    num_points +
                pt];
  }
  double at(int deriv_id, int basis, int comp, int pt) const {
    return data[((static_cast<std::size_t>(deriv_id) * num_basis + basis) *
                     num_components +
                 comp) *
                    num_points +
                pt];
  }
  double value(int basis, int comp, int pt) const { return at(0, basis, comp, pt); }
  double deriv1(int a, int basis, int comp, int pt) const {
    return at(1 + a, basis, comp, pt);
  }
};

/// Reference finite element: nodal basis of a polynomial space, stored as
/// prime-basis coefficients together with the defining dof functionals and
/// their entity layout. Instances are immutable and cheap to copy.
///
/// Degree convention is one-based "constructive": RT(d) and NED1(d) are the
/// reduced spaces P_d^- (the literature's RT_{d-1} / NED^1_{d-1}), BDM(r) is
/// the full space P_r.
class FiniteElement {
public:
  enum class Kind { Simple, Vector, Mixed };

  Kind kind() const;
  Family family() const;  // Simple and Vector (sub family)
  CellType cell_type() const;
  int dim() const;
  int degree() const;
  /// Polynomial degree of the containing full space (max over blocks).
  int embedded_degree() const;

  int space_dimension() const;
  int value_size() const;
  MappingKind mapping() const;  // non-mixed

  /// Mixed structure: blocks are the direct sub-elements (one block for
  /// non-mixed elements).
  int num_blocks() const;
  const FiniteElement& block(int b) const;
  int block_dof_offset(int b) const;
  int block_value_offset(int b) const;

  /// Number of dofs attached to each entity of the given dimension
  /// (non-mixed elements; uniform over entities of equal dimension).
  int num_entity_dofs(int entity_dim) const;
  std::span<const int> entity_dofs(int entity_dim, int local_entity) const;

  const std::vector<DofFunctional>& dof_functionals() const;  // non-mixed

  /// Nodal basis in terms of the prime basis (row i = coefficients of
  /// basis function i). Exposed for diagnostics; non-mixed elements.
  const Eigen::MatrixXd& nodal_coefficients() const;

  /// Condition number estimate of the generalized Vandermonde matrix.
  double vandermonde_condition() const;

  /// Exact pointwise evaluation of all basis functions and derivatives
  /// (deriv_order <= 2) at reference points.
  Tabulation tabulate(std::span<const std::array<double, 3>> points,
                      int deriv_order) const;

  struct Impl;
  explicit FiniteElement(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  const Impl& impl() const { return *impl_; }

private:
  std::shared_ptr<const Impl> impl_;
};

/// Builds a reference element. Supported: Lagrange 1..6 and DG 0..6 on both
/// cells, RT/BDM 1..4, NED1 1..3. Throws on an unsupported tuple or if the
/// dof functionals fail to be unisolvent.
FiniteElement create_element(Family family, CellType cell, int degree);

/// dim independent copies of a scalar element; components of one point are
/// consecutive dofs.
FiniteElement vector_element(const FiniteElement& scalar_sub);

/// Concatenates sub-elements; dofs and value components in declaration order.
FiniteElement mixed_element(std::vector<FiniteElement> subs);

/// Pushes a reference tabulation to a physical cell: affine composition,
/// contravariant Piola (1/det J) J, or covariant Piola J^-T per block, with
/// derivatives mapped by the inverse Jacobian chain rule.
Tabulation map_basis(const FiniteElement& element, const CellGeometry& geometry,
                     const Tabulation& reference_values);

}  // namespace tenfem
