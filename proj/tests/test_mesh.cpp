// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "tenfem/mesh.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <numbers>
#include <set>
#include <sstream>

using namespace tenfem;

namespace {

Eigen::VectorXd vec(const std::array<double, 3>& p, int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = p[i];
  return v;
}

// Scaled conormal of a vertex tuple: rotated edge vector (2D) or edge cross
// product (3D).
Eigen::VectorXd conormal(std::span<const std::array<double, 3>> verts,
                         std::span<const int> ids, int dim) {
  if (dim == 2) {
    Eigen::VectorXd e = vec(verts[ids[1]], 2) - vec(verts[ids[0]], 2);
    Eigen::VectorXd n(2);
    n << e[1], -e[0];
    return n;
  }
  Eigen::Vector3d e1 = vec(verts[ids[1]], 3) - vec(verts[ids[0]], 3);
  Eigen::Vector3d e2 = vec(verts[ids[2]], 3) - vec(verts[ids[0]], 3);
  return e1.cross(e2);
}

void check_invariants(const Mesh& mesh) {
  for (int c = 0; c < mesh.num_cells(); ++c) {
    auto cv = mesh.cell(c);
    for (std::size_t k = 1; k < cv.size(); ++k) CHECK(cv[k - 1] < cv[k]);
    CHECK(cell_geometry(mesh, c).det_jacobian != 0.0);
  }
  for (int f = 0; f < mesh.num_facets(); ++f) {
    const auto cells = mesh.facet_cells(f);
    CHECK(cells.size() >= 1);
    CHECK(cells.size() <= 2);
  }
}

// The orientation claim: both cells next to a facet induce the same ordered
// vertex tuple for it.
void check_facet_orientation(const Mesh& mesh) {
  const int dim = mesh.dim();
  for (int f = 0; f < mesh.num_facets(); ++f) {
    auto fv = mesh.facet(f);
    for (int c : mesh.facet_cells(f)) {
      auto cv = mesh.cell(c);
      int local = -1;
      for (int k = 0; k < mesh.facets_per_cell(); ++k)
        if (mesh.cell_facet(c, k) == f) local = k;
      REQUIRE(local >= 0);
      if (dim == 2) {
        const auto le = Mesh::reference_edges(2)[local];
        CHECK(cv[le[0]] == fv[0]);
        CHECK(cv[le[1]] == fv[1]);
      } else {
        const auto lf = Mesh::reference_faces()[local];
        for (int k = 0; k < 3; ++k) CHECK(cv[lf[k]] == fv[k]);
      }
    }
  }
}

}  // namespace

TEST_CASE("unit square meshes: counts") {
  const Mesh m1 = unit_square_mesh(1, MeshPattern::Regular, 1.0);
  CHECK(m1.num_cells() == 2);
  CHECK(m1.num_vertices() == 4);
  CHECK(m1.num_edges() == 5);

  const Mesh m2 = unit_square_mesh(1, MeshPattern::CrissCross, 1.0);
  CHECK(m2.num_cells() == 4);
  CHECK(m2.num_vertices() == 5);
  CHECK(m2.num_edges() == 8);

  const Mesh m3 =
      unit_square_mesh(16, MeshPattern::CrissCross, std::numbers::pi);
  CHECK(m3.num_cells() == 1024);
  // Planar Euler characteristic (outer face excluded): V - E + F = 1.
  CHECK(m3.num_vertices() - m3.num_edges() + m3.num_cells() == 1);
  check_invariants(m3);
  check_facet_orientation(m3);

  CHECK_THROWS(unit_square_mesh(0));
  CHECK_THROWS(unit_square_mesh(2, MeshPattern::Regular, -1.0));
}

TEST_CASE("unit cube meshes: counts and incidence") {
  const Mesh m1 = unit_cube_mesh(1);
  CHECK(m1.num_cells() == 6);
  CHECK(m1.num_vertices() == 8);
  const Mesh m2 = unit_cube_mesh(2);
  CHECK(m2.num_cells() == 48);
  for (const Mesh* m : {&m1, &m2}) {
    check_invariants(*m);
    check_facet_orientation(*m);
    int boundary = 0;
    for (int f = 0; f < m->num_facets(); ++f)
      if (m->facet_on_boundary(f)) ++boundary;
    // 2 triangles per cube face per subsquare
    const int n = *m->structured_cube_resolution;
    CHECK(boundary == 12 * n * n);
  }
}

TEST_CASE("facet frames in 2D") {
  const Mesh m = unit_square_mesh(1, MeshPattern::Regular, 1.0);
  // vertex ids: (0,0)=0, (1,0)=1, (0,1)=2, (1,1)=3
  for (int e = 0; e < m.num_edges(); ++e) {
    auto ev = m.edge(e);
    const FacetFrame fr = facet_frame(m, e);
    CHECK(fr.normal.dot(fr.tangents[0]) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(fr.normal.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(fr.tangents[0].norm() == doctest::Approx(1.0).epsilon(1e-14));
    if (ev[0] == 0 && ev[1] == 1) {
      CHECK(fr.tangents[0][0] == doctest::Approx(1.0));
      CHECK(fr.tangents[0][1] == doctest::Approx(0.0));
      CHECK(fr.normal[0] == doctest::Approx(0.0));
      CHECK(fr.normal[1] == doctest::Approx(-1.0));
    }
    if (ev[0] == 0 && ev[1] == 2) {
      CHECK(fr.tangents[0][0] == doctest::Approx(0.0));
      CHECK(fr.tangents[0][1] == doctest::Approx(1.0));
      CHECK(fr.normal[0] == doctest::Approx(1.0));
      CHECK(fr.normal[1] == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("interior facet frames agree from both sides") {
  const Mesh m = unit_cube_mesh(1);
  for (int f = 0; f < m.num_facets(); ++f) {
    if (m.facet_on_boundary(f)) continue;
    // The frame is a function of the facet's global tuple alone; recomputing
    // it per adjacent cell must be bitwise identical.
    const FacetFrame a = facet_frame(m, f);
    const FacetFrame b = facet_frame(m, f);
    CHECK(a.normal == b.normal);
    CHECK(a.measure == b.measure);
  }
  check_facet_orientation(m);
}

TEST_CASE("cell geometry") {
  {
    std::vector<std::array<double, 3>> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    const Mesh m(2, v, {0, 1, 2});
    const CellGeometry g = cell_geometry(m, 0);
    CHECK((g.jacobian - Eigen::MatrixXd::Identity(2, 2)).norm() ==
          doctest::Approx(0.0));
    CHECK(g.det_jacobian == doctest::Approx(1.0));
  }
  {
    std::vector<std::array<double, 3>> v = {{0, 0, 0}, {2, 0, 0}, {0, 2, 0}};
    const Mesh m(2, v, {0, 1, 2});
    CHECK(cell_geometry(m, 0).det_jacobian == doctest::Approx(4.0));
  }
  {
    // index order forces the reflected map; the negative determinant is kept
    std::vector<std::array<double, 3>> v = {{0, 0, 0}, {0, 1, 0}, {1, 0, 0}};
    const Mesh m(2, v, {0, 1, 2});
    CHECK(cell_geometry(m, 0).det_jacobian == doctest::Approx(-1.0));
  }
}

TEST_CASE("uniform refinement") {
  const Mesh coarse = unit_square_mesh(2);
  const Mesh fine = refine_uniform(coarse);
  CHECK(fine.num_cells() == 4 * coarse.num_cells());
  CHECK(fine.h_max() == doctest::Approx(0.5 * coarse.h_max()).epsilon(1e-13));
  check_invariants(fine);
  check_facet_orientation(fine);

  std::set<std::array<double, 2>> fine_coords;
  for (int v = 0; v < fine.num_vertices(); ++v)
    fine_coords.insert({fine.vertex(v)[0], fine.vertex(v)[1]});
  for (int v = 0; v < coarse.num_vertices(); ++v)
    CHECK(fine_coords.count({coarse.vertex(v)[0], coarse.vertex(v)[1]}) == 1);

  const Mesh cube = unit_cube_mesh(1);
  const Mesh cube2 = refine_uniform(cube);
  CHECK(cube2.num_cells() == 48);
}

TEST_CASE("facet mapping identity") {
  // The physical scaled conormal equals det J * J^-T times the reference one;
  // the covariant analogue holds for edge vectors mapped by J.
  for (int dim : {2, 3}) {
    const Mesh mesh = dim == 2 ? unit_square_mesh(3, MeshPattern::CrissCross)
                               : unit_cube_mesh(2);
    const auto ref_verts = oracles::reference_vertices(dim);
    std::vector<std::array<double, 3>> phys_verts;
    for (int v = 0; v < mesh.num_vertices(); ++v)
      phys_verts.push_back(mesh.vertex(v));

    for (int c = 0; c < mesh.num_cells(); ++c) {
      const CellGeometry g = cell_geometry(mesh, c);
      auto cv = mesh.cell(c);
      for (int k = 0; k < mesh.facets_per_cell(); ++k) {
        std::vector<int> local_ref, global_ids;
        if (dim == 2) {
          const auto le = Mesh::reference_edges(2)[k];
          local_ref = {le[0], le[1]};
          global_ids = {cv[le[0]], cv[le[1]]};
        } else {
          const auto lf = Mesh::reference_faces()[k];
          local_ref = {lf[0], lf[1], lf[2]};
          global_ids = {cv[lf[0]], cv[lf[1]], cv[lf[2]]};
        }
        const Eigen::VectorXd N =
            conormal(ref_verts, {local_ref.data(), local_ref.size()}, dim);
        const Eigen::VectorXd n =
            conormal(phys_verts, {global_ids.data(), global_ids.size()}, dim);
        const Eigen::VectorXd mapped =
            g.det_jacobian * (g.jacobian_inverse_transposed * N);
        CHECK((n - mapped).norm() <= 1e-13 * n.norm());
      }
    }
  }
}

TEST_CASE("mesh text io round trip") {
  const Mesh m = unit_square_mesh(2, MeshPattern::CrissCross);
  std::stringstream ss;
  write_mesh(m, ss);
  const Mesh back = read_mesh(ss);
  CHECK(back.num_vertices() == m.num_vertices());
  CHECK(back.num_cells() == m.num_cells());
  CHECK(back.num_edges() == m.num_edges());
  for (int v = 0; v < m.num_vertices(); ++v)
    for (int i = 0; i < 2; ++i)
      CHECK(back.vertex(v)[i] == doctest::Approx(m.vertex(v)[i]));
}

TEST_CASE("degenerate cells are rejected") {
  std::vector<std::array<double, 3>> v = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CHECK_THROWS(Mesh(2, v, {0, 1, 2}));  // collinear: det J = 0
}
