// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "tenfem/element.hpp"

#include "oracles.hpp"
#include "tenfem/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tenfem;

namespace {

struct Supported {
  Family family;
  CellType cell;
  int degree;
};

std::vector<Supported> supported_elements() {
  std::vector<Supported> out;
  for (CellType cell : {CellType::Triangle, CellType::Tetrahedron}) {
    for (int d = 1; d <= 6; ++d) out.push_back({Family::Lagrange, cell, d});
    for (int d = 0; d <= 6; ++d)
      out.push_back({Family::DiscontinuousLagrange, cell, d});
    for (int d = 1; d <= 4; ++d) out.push_back({Family::RT, cell, d});
    for (int d = 1; d <= 4; ++d) out.push_back({Family::BDM, cell, d});
    for (int d = 1; d <= 3; ++d) out.push_back({Family::NED1, cell, d});
  }
  return out;
}

// ell_i applied to a tabulation of basis function j.
Eigen::MatrixXd apply_dofs(const FiniteElement& el) {
  const auto& dofs = el.dof_functionals();
  const int n = el.space_dimension();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const DofFunctional& f = dofs[i];
    const Tabulation tab = el.tabulate(f.points, 0);
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < f.points.size(); ++k)
        for (int c = 0; c < el.value_size(); ++c)
          acc += tab.value(j, c, static_cast<int>(k)) * f.weights[k][c];
      D(i, j) = acc;
    }
  }
  return D;
}

// Facet sample points (quadrature points mapped onto the facet).
std::vector<std::array<double, 3>> facet_samples(int dim, int facet, int n) {
  const auto verts = oracles::reference_vertices(dim);
  std::vector<std::array<double, 3>> out;
  if (dim == 2) {
    const auto le = Mesh::reference_edges(2)[facet];
    for (int k = 1; k <= n; ++k) {
      const double t = static_cast<double>(k) / (n + 1);
      std::array<double, 3> p{};
      for (int a = 0; a < 2; ++a)
        p[a] = (1 - t) * verts[le[0]][a] + t * verts[le[1]][a];
      out.push_back(p);
    }
  } else {
    const auto lf = Mesh::reference_faces()[facet];
    for (int i = 1; i <= n; ++i)
      for (int j = 1; i + j <= n + 1; ++j) {
        const double b1 = static_cast<double>(i) / (n + 2);
        const double b2 = static_cast<double>(j) / (n + 2);
        std::array<double, 3> p{};
        for (int a = 0; a < 3; ++a)
          p[a] = (1 - b1 - b2) * verts[lf[0]][a] + b1 * verts[lf[1]][a] +
                 b2 * verts[lf[2]][a];
        out.push_back(p);
      }
  }
  return out;
}

Eigen::VectorXd facet_conormal_ref(int dim, int facet) {
  const auto verts = oracles::reference_vertices(dim);
  if (dim == 2) {
    const auto le = Mesh::reference_edges(2)[facet];
    Eigen::VectorXd e(2), n(2);
    e << verts[le[1]][0] - verts[le[0]][0], verts[le[1]][1] - verts[le[0]][1];
    n << e[1], -e[0];
    return n;
  }
  const auto lf = Mesh::reference_faces()[facet];
  Eigen::Vector3d a(verts[lf[0]].data()), b(verts[lf[1]].data()),
      c(verts[lf[2]].data());
  return Eigen::Vector3d((b - a).cross(c - a));
}

std::vector<Eigen::VectorXd> facet_tangents_ref(int dim, int facet) {
  const auto verts = oracles::reference_vertices(dim);
  std::vector<Eigen::VectorXd> out;
  if (dim == 2) {
    const auto le = Mesh::reference_edges(2)[facet];
    Eigen::VectorXd e(2);
    e << verts[le[1]][0] - verts[le[0]][0], verts[le[1]][1] - verts[le[0]][1];
    out.push_back(e);
  } else {
    const auto lf = Mesh::reference_faces()[facet];
    Eigen::Vector3d a(verts[lf[0]].data()), b(verts[lf[1]].data()),
        c(verts[lf[2]].data());
    out.push_back(Eigen::Vector3d(b - a));
    out.push_back(Eigen::Vector3d(c - a));
  }
  return out;
}

}  // namespace

TEST_CASE("dof counts match the family formulas") {
  CHECK(create_element(Family::RT, CellType::Triangle, 1).space_dimension() == 3);
  CHECK(create_element(Family::BDM, CellType::Triangle, 1).space_dimension() ==
        6);
  CHECK(create_element(Family::NED1, CellType::Tetrahedron, 1)
            .space_dimension() == 6);
  // one dof per edge for RT(1)/NED1(1)
  const FiniteElement rt1 = create_element(Family::RT, CellType::Triangle, 1);
  CHECK(rt1.num_entity_dofs(1) == 1);
  CHECK(rt1.num_entity_dofs(2) == 0);
  const FiniteElement bdm1 = create_element(Family::BDM, CellType::Triangle, 1);
  CHECK(bdm1.num_entity_dofs(1) == 2);
  const FiniteElement ned1 =
      create_element(Family::NED1, CellType::Tetrahedron, 1);
  CHECK(ned1.num_entity_dofs(1) == 1);
  CHECK(ned1.num_entity_dofs(2) == 0);
  CHECK(ned1.num_entity_dofs(3) == 0);

  CHECK_THROWS(create_element(Family::RT, CellType::Triangle, 5));
  CHECK_THROWS(create_element(Family::NED1, CellType::Tetrahedron, 4));
  CHECK_THROWS(create_element(Family::Lagrange, CellType::Triangle, 0));
}

TEST_CASE("unisolvence across all supported elements") {
  for (const auto& s : supported_elements()) {
    CAPTURE(static_cast<int>(s.family));
    CAPTURE(s.degree);
    const FiniteElement el = create_element(s.family, s.cell, s.degree);
    CHECK(el.vandermonde_condition() < 1e8);
    const Eigen::MatrixXd D = apply_dofs(el);
    const double err =
        (D - Eigen::MatrixXd::Identity(el.space_dimension(),
                                       el.space_dimension()))
            .cwiseAbs()
            .maxCoeff();
    CHECK(err <= 1e-10);
  }
}

TEST_CASE("Lagrange1 tabulation at vertices is the identity") {
  const FiniteElement el = create_element(Family::Lagrange, CellType::Triangle, 1);
  const auto verts = oracles::reference_vertices(2);
  const Tabulation tab = el.tabulate(verts, 0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(tab.value(i, 0, j) == doctest::Approx(i == j ? 1.0 : 0.0));
}

TEST_CASE("RT1 divergence is constant with unit net flux") {
  const FiniteElement el = create_element(Family::RT, CellType::Triangle, 1);
  const QuadratureRule rule = make_rule(CellType::Triangle, 2);
  const Tabulation tab = el.tabulate(rule.points, 1);
  const auto verts = oracles::reference_vertices(2);
  for (int b = 0; b < 3; ++b) {
    const double d0 = tab.deriv1(0, b, 0, 0) + tab.deriv1(1, b, 1, 0);
    double integral = 0.0;
    for (int q = 0; q < rule.num_points(); ++q) {
      const double dq = tab.deriv1(0, b, 0, q) + tab.deriv1(1, b, 1, q);
      CHECK(dq == doctest::Approx(d0).epsilon(1e-12));
      integral += rule.weights[q] * dq;
    }
    CHECK(std::abs(integral) == doctest::Approx(1.0).epsilon(1e-12));

    // divergence-theorem oracle: the same number from edge quadrature of the
    // outward normal flux, two Gauss points per edge
    double flux = 0.0;
    const double gauss[2] = {0.5 - 0.5 / std::sqrt(3.0),
                             0.5 + 0.5 / std::sqrt(3.0)};
    for (int e = 0; e < 3; ++e) {
      const auto le = Mesh::reference_edges(2)[e];
      const double ax = verts[le[0]][0], ay = verts[le[0]][1];
      const double bx = verts[le[1]][0], by = verts[le[1]][1];
      // outward normal scaled by edge length
      Eigen::Vector2d n_out(by - ay, ax - bx);
      const Eigen::Vector2d mid(0.5 * (ax + bx) - 1.0 / 3.0,
                                0.5 * (ay + by) - 1.0 / 3.0);
      if (n_out.dot(mid) < 0) n_out = -n_out;
      for (double t : gauss) {
        std::array<double, 3> p{(1 - t) * ax + t * bx, (1 - t) * ay + t * by,
                                0.0};
        const Tabulation et = el.tabulate({&p, 1}, 0);
        flux += 0.5 * (et.value(b, 0, 0) * n_out[0] + et.value(b, 1, 0) * n_out[1]);
      }
    }
    CHECK(flux == doctest::Approx(integral).epsilon(1e-12));
  }
}

TEST_CASE("tabulated derivatives match finite differences") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(0.15, 0.25);
  for (const auto& s : {Supported{Family::Lagrange, CellType::Triangle, 4},
                        Supported{Family::RT, CellType::Tetrahedron, 2},
                        Supported{Family::NED1, CellType::Triangle, 3},
                        Supported{Family::BDM, CellType::Tetrahedron, 3}}) {
    const FiniteElement el = create_element(s.family, s.cell, s.degree);
    const int dim = el.dim();
    std::array<double, 3> p{uni(rng), uni(rng), dim == 3 ? uni(rng) : 0.0};
    const double h = 1e-5;
    const Tabulation at = el.tabulate({&p, 1}, 2);
    for (int a = 0; a < dim; ++a) {
      auto pp = p, pm = p;
      pp[a] += h;
      pm[a] -= h;
      const Tabulation tp = el.tabulate({&pp, 1}, 1);
      const Tabulation tm = el.tabulate({&pm, 1}, 1);
      for (int b = 0; b < el.space_dimension(); ++b)
        for (int c = 0; c < el.value_size(); ++c) {
          const double fd = (tp.value(b, c, 0) - tm.value(b, c, 0)) / (2 * h);
          CHECK(at.deriv1(a, b, c, 0) == doctest::Approx(fd).epsilon(1e-5));
          for (int a2 = 0; a2 < dim; ++a2) {
            const double fd2 =
                (tp.deriv1(a2, b, c, 0) - tm.deriv1(a2, b, c, 0)) / (2 * h);
            CHECK(at.at(at.deriv2_id(a, a2), b, c, 0) ==
                  doctest::Approx(fd2).epsilon(1e-4));
          }
        }
    }
  }
}

TEST_CASE("trace locality on foreign facets") {
  for (const auto& s : supported_elements()) {
    if (s.family == Family::Lagrange ||
        s.family == Family::DiscontinuousLagrange)
      continue;
    const FiniteElement el = create_element(s.family, s.cell, s.degree);
    const int dim = el.dim();
    const int nfacets = dim + 1;
    for (int f = 0; f < nfacets; ++f) {
      const auto samples = facet_samples(dim, f, s.degree + 2);
      const Tabulation tab = el.tabulate(samples, 0);
      const Eigen::VectorXd n = facet_conormal_ref(dim, f);
      const auto ts = facet_tangents_ref(dim, f);
      for (int other = 0; other < nfacets; ++other) {
        if (other == f) continue;
        // basis functions of dofs attached to facet `other`
        for (int dof : el.entity_dofs(dim - 1, other)) {
          for (std::size_t q = 0; q < samples.size(); ++q) {
            Eigen::VectorXd v(dim);
            for (int c = 0; c < dim; ++c)
              v[c] = tab.value(dof, c, static_cast<int>(q));
            if (s.family == Family::NED1) {
              for (const auto& t : ts) CHECK(std::abs(v.dot(t)) <= 1e-10);
            } else {
              CHECK(std::abs(v.dot(n)) <= 1e-10);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("Piola mappings preserve the matching traces") {
  std::mt19937 rng(12345);
  for (CellType cell : {CellType::Triangle, CellType::Tetrahedron}) {
    const int dim = cell == CellType::Triangle ? 2 : 3;
    const FiniteElement rt = create_element(Family::RT, cell, 2);
    const FiniteElement ned = create_element(Family::NED1, cell, 2);
    for (int trial = 0; trial < 200; ++trial) {
      const CellGeometry g =
          oracles::random_geometry(dim, rng, trial % 2 == 0);
      for (int f = 0; f < dim + 1; ++f) {
        const auto samples = facet_samples(dim, f, 2);
        const Tabulation rt_ref = rt.tabulate(samples, 0);
        const Tabulation rt_phys = map_basis(rt, g, rt_ref);
        const Tabulation ned_ref = ned.tabulate(samples, 0);
        const Tabulation ned_phys = map_basis(ned, g, ned_ref);
        const Eigen::VectorXd N = facet_conormal_ref(dim, f);
        const Eigen::VectorXd n_phys =
            g.det_jacobian * (g.jacobian_inverse_transposed * N);
        const auto T = facet_tangents_ref(dim, f);
        for (int b = 0; b < rt.space_dimension(); ++b)
          for (std::size_t q = 0; q < samples.size(); ++q) {
            Eigen::VectorXd Phi(dim), phi(dim);
            for (int c = 0; c < dim; ++c) {
              Phi[c] = rt_ref.value(b, c, static_cast<int>(q));
              phi[c] = rt_phys.value(b, c, static_cast<int>(q));
            }
            const double lhs = phi.dot(n_phys);
            const double rhs = Phi.dot(N);
            CHECK(std::abs(lhs - rhs) <=
                  1e-12 * std::max({std::abs(rhs), phi.norm() * n_phys.norm(),
                                    1e-6}));
          }
        for (int b = 0; b < ned.space_dimension(); ++b)
          for (std::size_t q = 0; q < samples.size(); ++q) {
            Eigen::VectorXd Phi(dim), phi(dim);
            for (int c = 0; c < dim; ++c) {
              Phi[c] = ned_ref.value(b, c, static_cast<int>(q));
              phi[c] = ned_phys.value(b, c, static_cast<int>(q));
            }
            for (const auto& t : T) {
              const double lhs = phi.dot(g.jacobian * t);
              const double rhs = Phi.dot(t);
              CHECK(std::abs(lhs - rhs) <=
                    1e-12 * std::max({std::abs(rhs),
                                      phi.norm() * (g.jacobian * t).norm(),
                                      1e-6}));
            }
          }
      }
    }
  }
}

TEST_CASE("identity and scaled maps") {
  const FiniteElement rt = create_element(Family::RT, CellType::Triangle, 2);
  const FiniteElement ned = create_element(Family::NED1, CellType::Triangle, 2);
  std::vector<std::array<double, 3>> pts = {{0.2, 0.3, 0.0}, {0.1, 0.6, 0.0}};
  const Tabulation rt_ref = rt.tabulate(pts, 0);

  const CellGeometry id = oracles::identity_geometry(2);
  const Tabulation same = map_basis(rt, id, rt_ref);
  for (std::size_t k = 0; k < same.data.size(); ++k)
    CHECK(same.data[k] == doctest::Approx(rt_ref.data[k]));

  // J = 2I: contravariant scales by 2/4 = 1/2, covariant by 1/2 as well
  CellGeometry twice = id;
  twice.jacobian *= 2.0;
  twice.det_jacobian = 4.0;
  twice.jacobian_inverse_transposed *= 0.5;
  const Tabulation half = map_basis(rt, twice, rt_ref);
  for (std::size_t k = 0; k < half.data.size(); ++k)
    CHECK(half.data[k] == doctest::Approx(0.5 * rt_ref.data[k]));
  const Tabulation ned_ref = ned.tabulate(pts, 0);
  const Tabulation ned_half = map_basis(ned, twice, ned_ref);
  for (std::size_t k = 0; k < ned_half.data.size(); ++k)
    CHECK(ned_half.data[k] == doctest::Approx(0.5 * ned_ref.data[k]));
}

TEST_CASE("conformal maps make the two Piola transforms coincide") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> uni(0.3, 2.0);
  const FiniteElement rt = create_element(Family::RT, CellType::Triangle, 3);
  std::vector<std::array<double, 3>> pts = {{0.25, 0.5, 0.0}, {0.4, 0.1, 0.0}};
  const Tabulation ref = rt.tabulate(pts, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const double c = uni(rng);
    const double theta = uni(rng);
    CellGeometry g;
    g.jacobian.resize(2, 2);
    g.jacobian << c * std::cos(theta), -c * std::sin(theta),
        c * std::sin(theta), c * std::cos(theta);
    g.det_jacobian = g.jacobian.determinant();
    g.jacobian_inverse_transposed = g.jacobian.inverse().transpose();
    g.translation = Eigen::VectorXd::Zero(2);

    const Eigen::MatrixXd contra = g.jacobian / g.det_jacobian;
    const Eigen::MatrixXd co = g.jacobian_inverse_transposed;
    CHECK((contra - co).cwiseAbs().maxCoeff() <= 1e-13);
    const Tabulation phys = map_basis(rt, g, ref);
    for (int b = 0; b < rt.space_dimension(); ++b)
      for (int comp = 0; comp < 2; ++comp)
        for (int q = 0; q < 2; ++q) {
          double covariant = 0.0;
          for (int a = 0; a < 2; ++a)
            covariant += co(comp, a) * ref.value(b, a, q);
          CHECK(std::abs(phys.value(b, comp, q) - covariant) <= 1e-13);
        }
  }
}

TEST_CASE("RT space is contained in the BDM space of equal degree") {
  for (CellType cell : {CellType::Triangle, CellType::Tetrahedron}) {
    const int dim = cell == CellType::Triangle ? 2 : 3;
    for (int d = 1; d <= 4; ++d) {
      const FiniteElement rt = create_element(Family::RT, cell, d);
      const FiniteElement bdm = create_element(Family::BDM, cell, d);
      const QuadratureRule rule = make_rule(cell, 2 * d + 1);
      const Tabulation rt_tab = rt.tabulate(rule.points, 0);
      const Tabulation bdm_tab = bdm.tabulate(rule.points, 0);
      const int rows = rule.num_points() * dim;
      Eigen::MatrixXd B(rows, bdm.space_dimension());
      for (int j = 0; j < bdm.space_dimension(); ++j)
        for (int q = 0; q < rule.num_points(); ++q)
          for (int c = 0; c < dim; ++c)
            B(q * dim + c, j) = bdm_tab.value(j, c, q);
      for (int i = 0; i < rt.space_dimension(); ++i) {
        Eigen::VectorXd r(rows);
        for (int q = 0; q < rule.num_points(); ++q)
          for (int c = 0; c < dim; ++c) r[q * dim + c] = rt_tab.value(i, c, q);
        const Eigen::VectorXd fit = B.colPivHouseholderQr().solve(r);
        CHECK((B * fit - r).norm() <= 1e-10 * std::max(1.0, r.norm()));
      }
    }
  }
}

TEST_CASE("vector and mixed composition") {
  const FiniteElement p1 = create_element(Family::Lagrange, CellType::Triangle, 1);
  const FiniteElement v = vector_element(p1);
  CHECK(v.space_dimension() == 6);
  CHECK(v.value_size() == 2);
  CHECK(v.num_entity_dofs(0) == 2);

  const FiniteElement rt = create_element(Family::RT, CellType::Triangle, 1);
  const FiniteElement dg = create_element(Family::DiscontinuousLagrange,
                                          CellType::Triangle, 0);
  const FiniteElement mx = mixed_element({rt, dg});
  CHECK(mx.space_dimension() == 4);
  CHECK(mx.value_size() == 3);
  CHECK(mx.num_blocks() == 2);
  CHECK(mx.block_dof_offset(1) == 3);
  CHECK(mx.block_value_offset(1) == 2);

  std::vector<std::array<double, 3>> pts = {{0.3, 0.3, 0.0}};
  const Tabulation tab = mx.tabulate(pts, 0);
  // block-diagonal values: RT functions vanish in the DG component and
  // vice versa
  for (int b = 0; b < 3; ++b) CHECK(tab.value(b, 2, 0) == 0.0);
  CHECK(tab.value(3, 0, 0) == 0.0);
  CHECK(tab.value(3, 1, 0) == 0.0);
  CHECK(tab.value(3, 2, 0) == doctest::Approx(1.0));
}

TEST_CASE("error paths: tabulation order and degenerate maps") {
  const FiniteElement el = create_element(Family::RT, CellType::Triangle, 1);
  std::vector<std::array<double, 3>> pts = {{0.3, 0.3, 0.0}};
  CHECK_THROWS(el.tabulate(pts, 3));
  CellGeometry bad = oracles::identity_geometry(2);
  bad.det_jacobian = 0.0;
  CHECK_THROWS(map_basis(el, bad, el.tabulate(pts, 0)));
}
