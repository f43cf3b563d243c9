// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "tenfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

namespace tenfem {

namespace {

constexpr std::array<std::array<int, 2>, 3> kTriangleEdges = {
    {{1, 2}, {0, 2}, {0, 1}}};
constexpr std::array<std::array<int, 2>, 6> kTetEdges = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
constexpr std::array<std::array<int, 3>, 4> kTetFaces = {
    {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};

Eigen::VectorXd to_vec(const std::array<double, 3>& p, int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = p[i];
  return v;
}

}  // namespace

std::span<const std::array<int, 2>> Mesh::reference_edges(int dim) {
  if (dim == 2) return {kTriangleEdges.data(), kTriangleEdges.size()};
  return {kTetEdges.data(), kTetEdges.size()};
}

std::span<const std::array<int, 3>> Mesh::reference_faces() {
  return {kTetFaces.data(), kTetFaces.size()};
}

Mesh::Mesh(int dim, std::vector<std::array<double, 3>> vertices,
           std::vector<int> cell_vertices)
    : dim_(dim), vertices_(std::move(vertices)), cells_(std::move(cell_vertices)) {
  if (dim_ != 2 && dim_ != 3) throw std::invalid_argument("mesh dim must be 2 or 3");
  if (cells_.size() % (dim_ + 1) != 0)
    throw std::invalid_argument("cell array size not a multiple of dim+1");
  const int nv = num_vertices();
  for (int v : cells_) {
    if (v < 0 || v >= nv) throw std::invalid_argument("cell vertex index out of range");
  }
  // Ascending global order inside each cell tuple.
  for (int c = 0; c < num_cells(); ++c) {
    auto* begin = cells_.data() + static_cast<std::size_t>(c) * (dim_ + 1);
    std::sort(begin, begin + dim_ + 1);
    if (std::adjacent_find(begin, begin + dim_ + 1) != begin + dim_ + 1)
      throw std::invalid_argument("cell with repeated vertex");
  }
  build_connectivity();
  for (int c = 0; c < num_cells(); ++c) {
    if (cell_geometry(*this, c).det_jacobian == 0.0)
      throw std::invalid_argument("degenerate cell (det J = 0)");
  }
}

void Mesh::build_connectivity() {
  const int nc = num_cells();
  const auto ref_edges = reference_edges(dim_);

  // Global edges: sorted vertex pairs, numbered lexicographically.
  std::map<std::array<int, 2>, int> edge_ids;
  for (int c = 0; c < nc; ++c) {
    auto cv = cell(c);
    for (const auto& le : ref_edges)
      edge_ids.emplace(std::array<int, 2>{cv[le[0]], cv[le[1]]}, 0);
  }
  int next = 0;
  for (auto& [key, id] : edge_ids) id = next++;
  edges_.resize(static_cast<std::size_t>(edge_ids.size()) * 2);
  for (const auto& [key, id] : edge_ids) {
    edges_[2 * id] = key[0];
    edges_[2 * id + 1] = key[1];
  }
  cell_edges_.resize(static_cast<std::size_t>(nc) * ref_edges.size());
  for (int c = 0; c < nc; ++c) {
    auto cv = cell(c);
    for (std::size_t k = 0; k < ref_edges.size(); ++k) {
      const auto& le = ref_edges[k];
      cell_edges_[c * ref_edges.size() + k] =
          edge_ids.at({cv[le[0]], cv[le[1]]});
    }
  }

  if (dim_ == 3) {
    std::map<std::array<int, 3>, int> face_ids;
    for (int c = 0; c < nc; ++c) {
      auto cv = cell(c);
      for (const auto& lf : kTetFaces)
        face_ids.emplace(std::array<int, 3>{cv[lf[0]], cv[lf[1]], cv[lf[2]]}, 0);
    }
    next = 0;
    for (auto& [key, id] : face_ids) id = next++;
    faces_.resize(static_cast<std::size_t>(face_ids.size()) * 3);
    for (const auto& [key, id] : face_ids) {
      faces_[3 * id] = key[0];
      faces_[3 * id + 1] = key[1];
      faces_[3 * id + 2] = key[2];
    }
    cell_faces_.resize(static_cast<std::size_t>(nc) * 4);
    for (int c = 0; c < nc; ++c) {
      auto cv = cell(c);
      for (int k = 0; k < 4; ++k) {
        const auto& lf = kTetFaces[k];
        cell_faces_[c * 4 + k] = face_ids.at({cv[lf[0]], cv[lf[1]], cv[lf[2]]});
      }
    }
  }

  // Facet -> cell adjacency.
  const int nf = num_facets();
  std::vector<std::vector<int>> adj(nf);
  for (int c = 0; c < nc; ++c)
    for (int k = 0; k < facets_per_cell(); ++k) adj[cell_facet(c, k)].push_back(c);
  facet_cell_offsets_.assign(nf + 1, 0);
  for (int f = 0; f < nf; ++f) {
    if (adj[f].empty() || adj[f].size() > 2)
      throw std::invalid_argument("facet shared by an invalid number of cells");
    facet_cell_offsets_[f + 1] = facet_cell_offsets_[f] + static_cast<int>(adj[f].size());
  }
  facet_cell_data_.reserve(facet_cell_offsets_[nf]);
  for (int f = 0; f < nf; ++f)
    facet_cell_data_.insert(facet_cell_data_.end(), adj[f].begin(), adj[f].end());
}

std::span<const int> Mesh::facet_cells(int f) const {
  const int b = facet_cell_offsets_[f];
  const int e = facet_cell_offsets_[f + 1];
  return {facet_cell_data_.data() + b, static_cast<std::size_t>(e - b)};
}

std::vector<int> Mesh::boundary_facets() const {
  std::vector<int> out;
  for (int f = 0; f < num_facets(); ++f)
    if (facet_on_boundary(f)) out.push_back(f);
  return out;
}

std::vector<bool> Mesh::boundary_vertex_mask() const {
  std::vector<bool> mask(num_vertices(), false);
  for (int f : boundary_facets())
    for (int v : facet(f)) mask[v] = true;
  return mask;
}

std::vector<bool> Mesh::boundary_edge_mask() const {
  std::vector<bool> mask(num_edges(), false);
  if (dim_ == 2) {
    for (int f : boundary_facets()) mask[f] = true;
    return mask;
  }
  // 3D: edges of boundary faces. Identify by vertex pair lookup.
  std::map<std::array<int, 2>, int> edge_ids;
  for (int e = 0; e < num_edges(); ++e)
    edge_ids.emplace(std::array<int, 2>{edges_[2 * e], edges_[2 * e + 1]}, e);
  for (int f : boundary_facets()) {
    auto fv = face(f);
    const std::array<std::array<int, 2>, 3> pairs = {
        {{fv[0], fv[1]}, {fv[0], fv[2]}, {fv[1], fv[2]}}};
    for (const auto& p : pairs) mask[edge_ids.at(p)] = true;
  }
  return mask;
}

double Mesh::h_max() const {
  double h = 0.0;
  for (int e = 0; e < num_edges(); ++e) {
    const auto& a = vertices_[edges_[2 * e]];
    const auto& b = vertices_[edges_[2 * e + 1]];
    double d2 = 0.0;
    for (int i = 0; i < dim_; ++i) d2 += (b[i] - a[i]) * (b[i] - a[i]);
    h = std::max(h, std::sqrt(d2));
  }
  return h;
}

CellGeometry cell_geometry(const Mesh& mesh, int cell) {
  const int dim = mesh.dim();
  auto cv = mesh.cell(cell);
  CellGeometry g;
  g.jacobian.resize(dim, dim);
  g.translation = to_vec(mesh.vertex(cv[0]), dim);
  for (int j = 0; j < dim; ++j) {
    const auto& p = mesh.vertex(cv[j + 1]);
    for (int i = 0; i < dim; ++i) g.jacobian(i, j) = p[i] - g.translation[i];
  }
  g.det_jacobian = g.jacobian.determinant();
  if (g.det_jacobian != 0.0)
    g.jacobian_inverse_transposed = g.jacobian.inverse().transpose();
  return g;
}

FacetFrame facet_frame(const Mesh& mesh, int facet) {
  const int dim = mesh.dim();
  FacetFrame frame;
  frame.facet = facet;
  auto fv = mesh.facet(facet);
  if (dim == 2) {
    Eigen::VectorXd a = to_vec(mesh.vertex(fv[0]), 2);
    Eigen::VectorXd b = to_vec(mesh.vertex(fv[1]), 2);
    Eigen::VectorXd t = b - a;
    frame.measure = t.norm();
    if (frame.measure == 0.0) throw std::invalid_argument("degenerate facet");
    t /= frame.measure;
    frame.tangents.push_back(t);
    // n = R t with R the clockwise rotation matrix.
    frame.normal.resize(2);
    frame.normal[0] = t[1];
    frame.normal[1] = -t[0];
  } else {
    Eigen::VectorXd a = to_vec(mesh.vertex(fv[0]), 3);
    Eigen::Vector3d e1 = to_vec(mesh.vertex(fv[1]), 3) - a;
    Eigen::Vector3d e2 = to_vec(mesh.vertex(fv[2]), 3) - a;
    Eigen::Vector3d cr = e1.cross(e2);
    const double area2 = cr.norm();
    if (area2 == 0.0) throw std::invalid_argument("degenerate facet");
    frame.measure = 0.5 * area2;
    frame.tangents.push_back(e1 / e1.norm());
    frame.tangents.push_back(e2 / e2.norm());
    frame.normal = cr / area2;
  }
  return frame;
}

Mesh unit_square_mesh(int n, MeshPattern pattern, double scale) {
  if (n < 1) throw std::invalid_argument("unit_square_mesh: n must be >= 1");
  if (scale <= 0.0) throw std::invalid_argument("unit_square_mesh: scale must be > 0");
  const double h = scale / n;
  std::vector<std::array<double, 3>> vertices;
  std::vector<int> cells;
  auto grid = [&](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      vertices.push_back({i * h, j * h, 0.0});

  if (pattern == MeshPattern::Regular) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int a = grid(i, j), b = grid(i + 1, j);
        const int c = grid(i, j + 1), d = grid(i + 1, j + 1);
        cells.insert(cells.end(), {a, b, d});
        cells.insert(cells.end(), {a, c, d});
      }
  } else {
    const int base = (n + 1) * (n + 1);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        vertices.push_back({(i + 0.5) * h, (j + 0.5) * h, 0.0});
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const int a = grid(i, j), b = grid(i + 1, j);
        const int c = grid(i, j + 1), d = grid(i + 1, j + 1);
        const int m = base + j * n + i;
        cells.insert(cells.end(), {a, b, m});
        cells.insert(cells.end(), {b, d, m});
        cells.insert(cells.end(), {c, d, m});
        cells.insert(cells.end(), {a, c, m});
      }
  }
  return Mesh(2, std::move(vertices), std::move(cells));
}

Mesh unit_cube_mesh(int n) {
  if (n < 1) throw std::invalid_argument("unit_cube_mesh: n must be >= 1");
  const double h = 1.0 / n;
  std::vector<std::array<double, 3>> vertices;
  auto grid = [&](int i, int j, int k) { return (k * (n + 1) + j) * (n + 1) + i; };
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        vertices.push_back({i * h, j * h, k * h});

  // Six tetrahedra per subcube, all sharing the main diagonal: walk from
  // (i,j,k) to (i+1,j+1,k+1) taking unit steps in each axis order.
  constexpr std::array<std::array<int, 3>, 6> orders = {
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  std::vector<int> cells;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& ord : orders) {
          std::array<int, 3> p = {i, j, k};
          cells.push_back(grid(p[0], p[1], p[2]));
          for (int axis : ord) {
            p[axis] += 1;
            cells.push_back(grid(p[0], p[1], p[2]));
          }
        }
  Mesh mesh(3, std::move(vertices), std::move(cells));
  mesh.structured_cube_resolution = n;
  return mesh;
}

Mesh refine_uniform(const Mesh& mesh) {
  if (mesh.dim() == 3) {
    if (!mesh.structured_cube_resolution)
      throw std::invalid_argument(
          "refine_uniform(3D) requires a structured cube mesh");
    return unit_cube_mesh(2 * *mesh.structured_cube_resolution);
  }
  // Red refinement: midpoint vertices indexed after the parent vertices in
  // global edge order.
  std::vector<std::array<double, 3>> vertices;
  vertices.reserve(mesh.num_vertices() + mesh.num_edges());
  for (int v = 0; v < mesh.num_vertices(); ++v) vertices.push_back(mesh.vertex(v));
  const int base = mesh.num_vertices();
  for (int e = 0; e < mesh.num_edges(); ++e) {
    auto ev = mesh.edge(e);
    const auto& a = mesh.vertex(ev[0]);
    const auto& b = mesh.vertex(ev[1]);
    vertices.push_back(
        {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])});
  }
  std::vector<int> cells;
  cells.reserve(static_cast<std::size_t>(mesh.num_cells()) * 4 * 3);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    auto cv = mesh.cell(c);
    // Midpoint opposite local vertex k sits on local edge k.
    const int m0 = base + mesh.cell_edge(c, 0);
    const int m1 = base + mesh.cell_edge(c, 1);
    const int m2 = base + mesh.cell_edge(c, 2);
    cells.insert(cells.end(), {cv[0], m1, m2});
    cells.insert(cells.end(), {cv[1], m0, m2});
    cells.insert(cells.end(), {cv[2], m0, m1});
    cells.insert(cells.end(), {m0, m1, m2});
  }
  return Mesh(2, std::move(vertices), std::move(cells));
}

Mesh read_mesh(std::istream& in) {
  int dim = 0, nv = 0, nc = 0;
  if (!(in >> dim >> nv >> nc)) throw std::runtime_error("mesh header parse error");
  std::vector<std::array<double, 3>> vertices(nv, {0.0, 0.0, 0.0});
  for (int v = 0; v < nv; ++v)
    for (int i = 0; i < dim; ++i)
      if (!(in >> vertices[v][i])) throw std::runtime_error("mesh vertex parse error");
  std::vector<int> cells(static_cast<std::size_t>(nc) * (dim + 1));
  for (int c = 0; c < nc * (dim + 1); ++c)
    if (!(in >> cells[c])) throw std::runtime_error("mesh cell parse error");
  return Mesh(dim, std::move(vertices), std::move(cells));
}

void write_mesh(const Mesh& mesh, std::ostream& out) {
  const int dim = mesh.dim();
  out << dim << ' ' << mesh.num_vertices() << ' ' << mesh.num_cells() << '\n';
  out.precision(17);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const auto& p = mesh.vertex(v);
    for (int i = 0; i < dim; ++i) out << (i ? " " : "") << p[i];
    out << '\n';
  }
  for (int c = 0; c < mesh.num_cells(); ++c) {
    auto cv = mesh.cell(c);
    for (int i = 0; i <= dim; ++i) out << (i ? " " : "") << cv[i];
    out << '\n';
  }
}

}  // namespace tenfem
