// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace tenfem {

enum class CellType { Triangle, Tetrahedron };

enum class MeshPattern { Regular, CrissCross };

/// Per-cell affine map data for x = J X + x_K. J is constant on the cell and
/// det J may carry either sign; cells are never reoriented.
struct CellGeometry {
  Eigen::MatrixXd jacobian;
  double det_jacobian = 0.0;
  Eigen::MatrixXd jacobian_inverse_transposed;
  Eigen::VectorXd translation;

  int dim() const { return static_cast<int>(jacobian.rows()); }
};

/// Tangent(s), normal and measure of a mesh facet, derived from the facet's
/// global vertex tuple alone. Both cells next to an interior facet therefore
/// see the identical frame. In 2D the normal is the clockwise rotation of the
/// tangent; in 3D it is the normalized cross product of the two facet edges
/// leaving the lowest-index vertex.
struct FacetFrame {
  int facet = -1;
  std::vector<Eigen::VectorXd> tangents;
  Eigen::VectorXd normal;
  double measure = 0.0;
};

/// Immutable simplicial mesh (triangles or tetrahedra) with derived edges,
/// faces and incidence. Cell vertex tuples are stored in ascending global
/// index order, which makes neighboring cells agree on the induced
/// orientation of every shared facet.
class Mesh {
public:
  /// Builds a mesh from raw vertex coordinates and cell connectivity.
  /// Cell tuples are sorted ascending; connectivity is derived eagerly.
  /// Throws if a cell is degenerate (det J == 0) or if a facet is shared
  /// by more than two cells.
  Mesh(int dim, std::vector<std::array<double, 3>> vertices,
       std::vector<int> cell_vertices);

  int dim() const { return dim_; }
  CellType cell_type() const {
    return dim_ == 2 ? CellType::Triangle : CellType::Tetrahedron;
  }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const {
    return static_cast<int>(cells_.size()) / (dim_ + 1);
  }
  int num_edges() const { return static_cast<int>(edges_.size()) / 2; }
  int num_faces() const { return static_cast<int>(faces_.size()) / 3; }
  /// Facets are edges in 2D and faces in 3D.
  int num_facets() const { return dim_ == 2 ? num_edges() : num_faces(); }

  const std::array<double, 3>& vertex(int v) const { return vertices_[v]; }

  /// Global vertex indices of cell c, ascending.
  std::span<const int> cell(int c) const {
    return {cells_.data() + static_cast<std::size_t>(c) * (dim_ + 1),
            static_cast<std::size_t>(dim_ + 1)};
  }
  std::span<const int> edge(int e) const {
    return {edges_.data() + static_cast<std::size_t>(e) * 2, 2};
  }
  std::span<const int> face(int f) const {
    return {faces_.data() + static_cast<std::size_t>(f) * 3, 3};
  }
  std::span<const int> facet(int f) const {
    return dim_ == 2 ? edge(f) : face(f);
  }

  /// Global index of local edge k of cell c (local edges follow the
  /// reference-cell convention, see reference_edges()).
  int cell_edge(int c, int k) const {
    return cell_edges_[static_cast<std::size_t>(c) * edges_per_cell() + k];
  }
  int cell_face(int c, int k) const {
    return cell_faces_[static_cast<std::size_t>(c) * 4 + k];
  }
  int cell_facet(int c, int k) const {
    return dim_ == 2 ? cell_edge(c, k) : cell_face(c, k);
  }
  int edges_per_cell() const { return dim_ == 2 ? 3 : 6; }
  int facets_per_cell() const { return dim_ + 1; }

  /// Cells adjacent to a facet: two for interior facets, one on the boundary.
  std::span<const int> facet_cells(int f) const;
  bool facet_on_boundary(int f) const { return facet_cells(f).size() == 1; }
  std::vector<int> boundary_facets() const;

  /// Boundary vertices/edges: entities contained in some boundary facet.
  std::vector<bool> boundary_vertex_mask() const;
  std::vector<bool> boundary_edge_mask() const;

  double h_max() const;

  /// Local vertex pairs of the reference cell's edges: triangle edge k is
  /// opposite vertex k; tetrahedron edges are lexicographic.
  static std::span<const std::array<int, 2>> reference_edges(int dim);
  /// Local vertex triples of the reference tetrahedron's faces,
  /// lexicographic.
  static std::span<const std::array<int, 3>> reference_faces();

  /// Resolution tag carried by unit_cube_mesh, used by refine_uniform in 3D.
  std::optional<int> structured_cube_resolution;

private:
  void build_connectivity();

  int dim_;
  std::vector<std::array<double, 3>> vertices_;
  std::vector<int> cells_;

  std::vector<int> edges_;
  std::vector<int> faces_;
  std::vector<int> cell_edges_;
  std::vector<int> cell_faces_;
  // facet -> adjacent cells, CSR-style (at most 2 per facet)
  std::vector<int> facet_cell_offsets_;
  std::vector<int> facet_cell_data_;
};

/// Triangulation of [0, scale]^2 with n x n squares. Regular pattern splits
/// each square by one diagonal (2 n^2 cells); criss-cross splits by both
/// diagonals around a center vertex (4 n^2 cells).
Mesh unit_square_mesh(int n, MeshPattern pattern = MeshPattern::Regular,
                      double scale = 1.0);

/// Tetrahedralization of the unit cube with 6 n^3 cells (six-tet split of
/// each subcube along its main diagonal).
Mesh unit_cube_mesh(int n);

/// 2D: each triangle splits into four congruent children. 3D: structured
/// cube meshes are regenerated at doubled resolution.
Mesh refine_uniform(const Mesh& mesh);

CellGeometry cell_geometry(const Mesh& mesh, int cell);
/// Frame of a facet; throws on zero measure.
FacetFrame facet_frame(const Mesh& mesh, int facet);

/// Plain-text mesh format: header "dim nv nc", nv coordinate lines, nc cell
/// lines of 0-based vertex indices. Import re-sorts cell tuples ascending.
Mesh read_mesh(std::istream& in);
void write_mesh(const Mesh& mesh, std::ostream& out);

}  // namespace tenfem
