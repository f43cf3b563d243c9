// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tenfem/element.hpp"
#include "tenfem/forms.hpp"
#include "tenfem/mesh.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>

namespace tenfem {

/// Attribution of a global dof to a mesh entity.
struct DofInfo {
  int block = 0;
  int entity_dim = 0;    // 0 vertex, 1 edge, 2 face, mesh dim = cell
  int entity_index = 0;  // global entity index (cell index for interior dofs)
  int component = -1;    // value component for vector point evaluations
  std::array<double, 3> point{};  // physical location (point dofs)
};

/// Mesh + element + local-to-global dof indexing. Global dofs are numbered
/// entity-major (vertices, edges, faces, cells) per mixed block, each
/// entity's dofs ordered along the entity's ascending-vertex orientation.
/// Two cells sharing a facet therefore address its dofs identically; no sign
/// flips exist anywhere.
class FunctionSpace {
public:
  FunctionSpace(std::shared_ptr<const Mesh> mesh, FiniteElement element);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const FiniteElement& element() const { return element_; }

  /// Global dimension N.
  int dim() const { return dim_; }
  std::span<const int> cell_dofs(int cell) const {
    const int n = element_.space_dimension();
    return {dofmap_.data() + static_cast<std::size_t>(cell) * n,
            static_cast<std::size_t>(n)};
  }
  const DofInfo& dof_info(int global_dof) const { return info_[global_dof]; }

  int num_blocks() const { return element_.num_blocks(); }
  /// Global dof offset of a mixed block; block dofs are contiguous and equal
  /// to the block's standalone numbering plus this offset.
  int block_offset(int block) const { return block_offsets_[block]; }
  int block_dim(int block) const {
    return (block + 1 < static_cast<int>(block_offsets_.size())
                ? block_offsets_[block + 1]
                : dim_) -
           block_offsets_[block];
  }

  /// Dofs attached to the closure of the boundary (boundary facets, their
  /// edges and vertices). Ascending order.
  std::vector<int> boundary_dofs() const;

private:
  std::shared_ptr<const Mesh> mesh_;
  FiniteElement element_;
  int dim_ = 0;
  std::vector<int> dofmap_;  // [cell][local dof]
  std::vector<DofInfo> info_;
  std::vector<int> block_offsets_;
};

FunctionSpace build_dofmap(std::shared_ptr<const Mesh> mesh,
                           const FiniteElement& element);

/// Compressed sparse matrix with add-into assembly semantics.
class SparseMatrix {
public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols) : mat_(rows, cols) {}

  int rows() const { return static_cast<int>(mat_.rows()); }
  int cols() const { return static_cast<int>(mat_.cols()); }
  Eigen::SparseMatrix<double>& eigen() { return mat_; }
  const Eigen::SparseMatrix<double>& eigen() const { return mat_; }

  bool symmetric_structure = false;

  /// Coordinate text export: one "i j value" line per entry, 0-based,
  /// row-major order.
  void write_coordinate(std::ostream& out) const;

private:
  Eigen::SparseMatrix<double> mat_;
};

/// Coefficient vector over a function space; evaluable on physical cells via
/// the element's mapping.
struct DiscreteField {
  std::shared_ptr<const FunctionSpace> space;
  Eigen::VectorXd coefficients;

  /// Values of the field on one cell at reference points.
  Eigen::MatrixXd evaluate_on_cell(int cell,
                                   std::span<const std::array<double, 3>> points)
      const;  // (ncomp x npoints)
  /// Point evaluation; locates the first cell containing x (values on facet
  /// points are one-sided).
  Eigen::VectorXd evaluate_at(const Eigen::VectorXd& x) const;
};

/// Extracts a mixed block as a standalone field (shared coefficients copy).
DiscreteField sub_field(const DiscreteField& mixed, int block);

/// Assembles the compiled bilinear form over the mesh by contracting the
/// reference tensor with per-cell geometry tensors. Cell kernels may run on
/// several threads; the scatter order is cell-major and deterministic for
/// any thread count.
SparseMatrix assemble_matrix(const forms::TensorRepresentation& rep,
                             const FunctionSpace& test,
                             const FunctionSpace& trial,
                             std::span<const DiscreteField> coefficients = {},
                             int threads = 1);

Eigen::VectorXd assemble_vector(const forms::TensorRepresentation& rep,
                                const FunctionSpace& test,
                                std::span<const DiscreteField> coefficients = {},
                                int threads = 1);

/// Symmetric elimination: constrained rows and columns are zeroed, the
/// diagonal set to one, and the right-hand side adjusted so constrained dofs
/// solve to the given values.
void apply_essential_bc(SparseMatrix& A, Eigen::VectorXd& b,
                        std::span<const int> dofs,
                        std::span<const double> values);
void apply_essential_bc(SparseMatrix& A, Eigen::VectorXd& b,
                        std::span<const int> dofs, double value = 0.0);

/// Restriction of a square matrix to a dof subset (used to pose eigenproblems
/// on free dofs).
SparseMatrix restrict_to_dofs(const SparseMatrix& A, std::span<const int> dofs);

/// Smooth field given analytically; div/curl are needed only for the
/// corresponding error norms. In 2D `curl` returns the scalar rot in a
/// 1-vector.
struct AnalyticField {
  int ncomp = 1;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> value;
  std::function<double(const Eigen::VectorXd&)> div;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> curl;
};

/// Canonical interpolation: applies every global dof functional to the field.
/// Facet functionals evaluate the physical trace against the global facet
/// frame; interior moments integrate the pulled-back field on the reference
/// cell, so fields already in the space are reproduced exactly.
DiscreteField interpolate(std::shared_ptr<const FunctionSpace> space,
                          const AnalyticField& field);

enum class ErrorNorm { L2, Hdiv, Hcurl };

/// Quadrature norm of (field - exact) at degree element degree + 4.
double error_norm(const DiscreteField& field, const AnalyticField& exact,
                  ErrorNorm norm);

}  // namespace tenfem
