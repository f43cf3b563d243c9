// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "tenfem/element.hpp"

#include "simplex_poly.hpp"
#include "tenfem/quadrature.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tenfem {

namespace {

using detail::Jet;

struct Prime {
  enum class Kind { ScalarComp, RadialScalar, RotRadialScalar, Koszul };
  Kind kind = Kind::ScalarComp;
  int comp = 0;    // ScalarComp: value component carrying the scalar
  int scalar = 0;  // index into the scalar Dubiner table
  std::array<int, 3> mono{};  // Koszul: monomial exponents
  int pair_a = 0, pair_b = 0;
};

std::array<std::array<double, 3>, 4> ref_vertices(int dim) {
  if (dim == 2) return {{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 0}}};
  return {{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
}

// Evaluates all prime functions at one point; output is prime-major,
// component-minor jets.
template <int Dim>
std::vector<Jet<Dim>> eval_primes(const std::vector<Prime>& primes,
                                  int scalar_degree, int ncomp,
                                  const std::array<double, 3>& pt) {
  std::vector<Jet<Dim>> dub;
  if constexpr (Dim == 2)
    dub = detail::dubiner_triangle(scalar_degree, pt[0], pt[1]);
  else
    dub = detail::dubiner_tetrahedron(scalar_degree, pt[0], pt[1], pt[2]);

  std::array<Jet<Dim>, 3> X;
  for (int a = 0; a < Dim; ++a) X[a] = Jet<Dim>::variable(pt[a], a);

  std::vector<Jet<Dim>> out(primes.size() * ncomp);
  for (std::size_t i = 0; i < primes.size(); ++i) {
    const Prime& p = primes[i];
    Jet<Dim>* vals = out.data() + i * ncomp;
    switch (p.kind) {
      case Prime::Kind::ScalarComp:
        vals[p.comp] = dub[p.scalar];
        break;
      case Prime::Kind::RadialScalar:
        for (int c = 0; c < Dim; ++c) vals[c] = X[c] * dub[p.scalar];
        break;
      case Prime::Kind::RotRadialScalar:
        vals[0] = -1.0 * (X[1] * dub[p.scalar]);
        vals[1] = X[0] * dub[p.scalar];
        break;
      case Prime::Kind::Koszul: {
        Jet<Dim> m = Jet<Dim>::constant(1.0);
        for (int a = 0; a < Dim; ++a)
          for (int e = 0; e < p.mono[a]; ++e) m = m * X[a];
        vals[p.pair_a] = m * X[p.pair_b];
        vals[p.pair_b] = -1.0 * (m * X[p.pair_a]);
        break;
      }
    }
  }
  return out;
}

struct PrimeBasis {
  std::vector<Prime> primes;
  int scalar_degree = 0;  // degree of the scalar Dubiner table
  int ncomp = 1;
};

// Vector Dubiner basis of (P_degree)^dim, component-major per scalar.
PrimeBasis full_vector_primes(int dim, int degree) {
  PrimeBasis b;
  b.scalar_degree = degree;
  b.ncomp = dim;
  const int ns = detail::scalar_space_dim(dim, degree);
  for (int s = 0; s < ns; ++s)
    for (int c = 0; c < dim; ++c)
      b.primes.push_back({Prime::Kind::ScalarComp, c, s, {}, 0, 0});
  return b;
}

PrimeBasis make_primes(Family family, int dim, int degree) {
  PrimeBasis b;
  switch (family) {
    case Family::Lagrange:
    case Family::DiscontinuousLagrange: {
      b.scalar_degree = degree;
      b.ncomp = 1;
      const int ns = detail::scalar_space_dim(dim, degree);
      for (int s = 0; s < ns; ++s)
        b.primes.push_back({Prime::Kind::ScalarComp, 0, s, {}, 0, 0});
      return b;
    }
    case Family::BDM:
      return full_vector_primes(dim, degree);
    case Family::RT: {
      b = full_vector_primes(dim, degree - 1);
      // Supplement x * p for p of total degree exactly degree-1; lower-order
      // parts of p fall inside (P_{d-1})^n, so Dubiner functions of the top
      // degree slice span the homogeneous additions.
      const int lo = detail::scalar_degree_offset(dim, degree - 1);
      const int hi = detail::scalar_space_dim(dim, degree - 1);
      for (int s = lo; s < hi; ++s)
        b.primes.push_back({Prime::Kind::RadialScalar, 0, s, {}, 0, 0});
      return b;
    }
    case Family::NED1: {
      b = full_vector_primes(dim, degree - 1);
      const int lo = detail::scalar_degree_offset(dim, degree - 1);
      const int hi = detail::scalar_space_dim(dim, degree - 1);
      if (dim == 2) {
        for (int s = lo; s < hi; ++s)
          b.primes.push_back({Prime::Kind::RotRadialScalar, 0, s, {}, 0, 0});
        return b;
      }
      // S_d basis: m (x_b e_a - x_a e_b) over monomials m of degree d-1 and
      // pairs (a,b); dropping pair (1,2) entries with m divisible by x_0
      // removes exactly the Koszul relations.
      const int d1 = degree - 1;
      for (int e0 = d1; e0 >= 0; --e0)
        for (int e1 = d1 - e0; e1 >= 0; --e1) {
          const int e2 = d1 - e0 - e1;
          const std::array<int, 3> mono{e0, e1, e2};
          const std::array<std::array<int, 2>, 3> pairs = {{{0, 1}, {0, 2}, {1, 2}}};
          for (const auto& pr : pairs) {
            if (pr[0] == 1 && pr[1] == 2 && e0 >= 1) continue;
            Prime p;
            p.kind = Prime::Kind::Koszul;
            p.mono = mono;
            p.pair_a = pr[0];
            p.pair_b = pr[1];
            b.primes.push_back(p);
          }
        }
      return b;
    }
  }
  throw std::invalid_argument("unknown family");
}

// Interior lattice of a segment: m points at i/(m+1).
std::vector<double> segment_interior(int m) {
  std::vector<double> t;
  for (int i = 1; i <= m; ++i) t.push_back(static_cast<double>(i) / (m + 1));
  return t;
}

// Interior lattice of a triangle of order ord: barycentric (b0,b1,b2) =
// (ord-i-j, i, j)/ord with i,j >= 1, i+j <= ord-1; lexicographic in (i, j).
std::vector<std::array<double, 3>> triangle_interior_bary(int ord) {
  std::vector<std::array<double, 3>> out;
  for (int i = 1; i <= ord - 2; ++i)
    for (int j = 1; j <= ord - 1 - i; ++j)
      out.push_back({static_cast<double>(ord - i - j) / ord,
                     static_cast<double>(i) / ord,
                     static_cast<double>(j) / ord});
  return out;
}

std::array<double, 3> bary_point(std::span<const std::array<double, 3>> verts,
                                 std::span<const int> ids,
                                 std::span<const double> bary) {
  std::array<double, 3> p{0, 0, 0};
  for (std::size_t k = 0; k < ids.size(); ++k)
    for (int a = 0; a < 3; ++a) p[a] += bary[k] * verts[ids[k]][a];
  return p;
}

Eigen::VectorXd edge_vector(int dim, const std::array<double, 3>& a,
                            const std::array<double, 3>& b) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = b[i] - a[i];
  return v;
}

// Scaled reference facet normal: rotated edge vector in 2D, cross product of
// the two edges leaving the lowest vertex in 3D.
Eigen::VectorXd facet_conormal(int dim, std::span<const std::array<double, 3>> verts,
                               std::span<const int> fv) {
  if (dim == 2) {
    Eigen::VectorXd e = edge_vector(2, verts[fv[0]], verts[fv[1]]);
    Eigen::VectorXd n(2);
    n[0] = e[1];
    n[1] = -e[0];
    return n;
  }
  Eigen::Vector3d e1 = edge_vector(3, verts[fv[0]], verts[fv[1]]);
  Eigen::Vector3d e2 = edge_vector(3, verts[fv[0]], verts[fv[2]]);
  return e1.cross(e2);
}

}  // namespace

struct FiniteElement::Impl {
  FiniteElement::Kind kind = FiniteElement::Kind::Simple;
  Family family = Family::Lagrange;
  CellType cell = CellType::Triangle;
  int dim = 2;
  int degree = 1;
  int embedded_degree = 1;
  int space_dim = 0;
  int value_size = 1;
  MappingKind mapping = MappingKind::Affine;

  // Simple / Vector
  PrimeBasis prime_basis;
  Eigen::MatrixXd nodal_coeffs;  // row i = prime coefficients of basis i
  double vandermonde_cond = 1.0;
  std::vector<DofFunctional> dofs;
  // [entity_dim] -> [local_entity] -> dof ids
  std::vector<std::vector<std::vector<int>>> entity_dof_ids;

  // Mixed
  std::vector<FiniteElement> blocks;
  std::vector<int> dof_offsets;
  std::vector<int> value_offsets;
};

namespace {

void append_interior_moments(std::vector<DofFunctional>& dofs, CellType cell,
                             int dim, int ncomp, const PrimeBasis& fields,
                             int quad_degree) {
  const QuadratureRule rule = make_rule(cell, quad_degree);
  std::vector<std::vector<Eigen::VectorXd>> field_values(fields.primes.size());
  for (int q = 0; q < rule.num_points(); ++q) {
    std::vector<double> vals;
    if (dim == 2) {
      auto jets = eval_primes<2>(fields.primes, fields.scalar_degree,
                                 fields.ncomp, rule.points[q]);
      for (auto& j : jets) vals.push_back(j.v);
    } else {
      auto jets = eval_primes<3>(fields.primes, fields.scalar_degree,
                                 fields.ncomp, rule.points[q]);
      for (auto& j : jets) vals.push_back(j.v);
    }
    for (std::size_t i = 0; i < fields.primes.size(); ++i) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(ncomp);
      for (int c = 0; c < fields.ncomp; ++c)
        w[c] = rule.weights[q] * vals[i * fields.ncomp + c];
      field_values[i].push_back(w);
    }
  }
  for (std::size_t i = 0; i < fields.primes.size(); ++i) {
    DofFunctional f;
    f.kind = DofFunctional::Kind::InteriorMoment;
    f.entity_dim = dim;
    f.entity_index = 0;
    f.points = rule.points;
    f.weights = std::move(field_values[i]);
    dofs.push_back(std::move(f));
  }
}

std::vector<DofFunctional> make_dofs(Family family, CellType cell, int degree) {
  const int dim = cell == CellType::Triangle ? 2 : 3;
  const auto verts = ref_vertices(dim);
  const auto edges = Mesh::reference_edges(dim);
  const auto faces = Mesh::reference_faces();
  std::vector<DofFunctional> dofs;

  auto point_dof = [&](DofFunctional::Kind kind, int entity_dim, int entity_index,
                       const std::array<double, 3>& pt, Eigen::VectorXd covector,
                       std::vector<double> coords, int direction, int component) {
    DofFunctional f;
    f.kind = kind;
    f.entity_dim = entity_dim;
    f.entity_index = entity_index;
    f.points = {pt};
    f.weights = {std::move(covector)};
    f.entity_coords = std::move(coords);
    f.direction = direction;
    f.component = component;
    dofs.push_back(std::move(f));
  };

  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);

  switch (family) {
    case Family::Lagrange:
    case Family::DiscontinuousLagrange: {
      const bool dg = family == Family::DiscontinuousLagrange;
      const int p = degree;
      auto entity = [&](int edim, int eidx) {
        return dg ? std::pair<int, int>{dim, 0} : std::pair<int, int>{edim, eidx};
      };
      if (p == 0) {
        const double c = 1.0 / (dim + 1);
        std::array<double, 3> pt{c, c, dim == 3 ? c : 0.0};
        point_dof(DofFunctional::Kind::PointEval, dim, 0, pt, one, {}, -1, -1);
        return dofs;
      }
      for (int v = 0; v <= dim; ++v) {
        auto [ed, ei] = entity(0, v);
        point_dof(DofFunctional::Kind::PointEval, ed, ei, verts[v], one, {}, -1, -1);
      }
      for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& le = edges[k];
        for (double t : segment_interior(p - 1)) {
          auto [ed, ei] = entity(1, static_cast<int>(k));
          std::array<double, 3> pt{};
          for (int a = 0; a < 3; ++a)
            pt[a] = (1 - t) * verts[le[0]][a] + t * verts[le[1]][a];
          point_dof(DofFunctional::Kind::PointEval, ed, ei, pt, one, {1 - t, t},
                    -1, -1);
        }
      }
      if (dim == 3) {
        for (std::size_t k = 0; k < faces.size(); ++k) {
          const auto& lf = faces[k];
          for (const auto& b : triangle_interior_bary(p)) {
            auto [ed, ei] = entity(2, static_cast<int>(k));
            const std::array<int, 3> ids{lf[0], lf[1], lf[2]};
            auto pt = bary_point({verts.data(), 4}, ids, b);
            point_dof(DofFunctional::Kind::PointEval, ed, ei, pt, one,
                      {b[0], b[1], b[2]}, -1, -1);
          }
        }
        // Cell interior: barycentric with all weights >= 1/p.
        for (int i = 1; i <= p - 3; ++i)
          for (int j = 1; j <= p - 2 - i; ++j)
            for (int k2 = 1; k2 <= p - 1 - i - j; ++k2) {
              const double b1 = static_cast<double>(i) / p;
              const double b2 = static_cast<double>(j) / p;
              const double b3 = static_cast<double>(k2) / p;
              std::array<double, 3> pt{b1, b2, b3};
              point_dof(DofFunctional::Kind::PointEval, dim, 0, pt, one, {}, -1, -1);
            }
      } else {
        for (const auto& b : triangle_interior_bary(p)) {
          const std::array<int, 3> ids{0, 1, 2};
          auto pt = bary_point({verts.data(), 4}, ids, b);
          point_dof(DofFunctional::Kind::PointEval, dim, 0, pt, one, {}, -1, -1);
        }
      }
      return dofs;
    }

    case Family::RT:
    case Family::BDM: {
      const int trace_degree = family == Family::RT ? degree - 1 : degree;
      if (dim == 2) {
        for (std::size_t k = 0; k < edges.size(); ++k) {
          const auto& le = edges[k];
          Eigen::VectorXd n = facet_conormal(2, {verts.data(), 4},
                                             std::span<const int>(le.data(), 2));
          for (double t : segment_interior(trace_degree + 1)) {
            std::array<double, 3> pt{};
            for (int a = 0; a < 3; ++a)
              pt[a] = (1 - t) * verts[le[0]][a] + t * verts[le[1]][a];
            point_dof(DofFunctional::Kind::PointNormal, 1, static_cast<int>(k),
                      pt, n, {1 - t, t}, -1, -1);
          }
        }
      } else {
        for (std::size_t k = 0; k < faces.size(); ++k) {
          const auto& lf = faces[k];
          const std::array<int, 3> ids{lf[0], lf[1], lf[2]};
          Eigen::VectorXd n = facet_conormal(3, {verts.data(), 4},
                                             std::span<const int>(ids.data(), 3));
          for (const auto& b : triangle_interior_bary(trace_degree + 3)) {
            auto pt = bary_point({verts.data(), 4}, ids, b);
            point_dof(DofFunctional::Kind::PointNormal, 2, static_cast<int>(k),
                      pt, n, {b[0], b[1], b[2]}, -1, -1);
          }
        }
      }
      if (family == Family::RT && degree >= 2)
        append_interior_moments(dofs, cell, dim, dim,
                                full_vector_primes(dim, degree - 2), 2 * degree);
      if (family == Family::BDM && degree >= 2)
        append_interior_moments(dofs, cell, dim, dim,
                                make_primes(Family::NED1, dim, degree - 1),
                                2 * degree);
      return dofs;
    }

    case Family::NED1: {
      for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& le = edges[k];
        Eigen::VectorXd tvec = edge_vector(dim, verts[le[0]], verts[le[1]]);
        for (double t : segment_interior(degree)) {
          std::array<double, 3> pt{};
          for (int a = 0; a < 3; ++a)
            pt[a] = (1 - t) * verts[le[0]][a] + t * verts[le[1]][a];
          point_dof(DofFunctional::Kind::PointTangential, 1, static_cast<int>(k),
                    pt, tvec, {1 - t, t}, 0, -1);
        }
      }
      if (dim == 3 && degree >= 2) {
        for (std::size_t k = 0; k < faces.size(); ++k) {
          const auto& lf = faces[k];
          const std::array<int, 3> ids{lf[0], lf[1], lf[2]};
          Eigen::VectorXd t1 = edge_vector(3, verts[lf[0]], verts[lf[1]]);
          Eigen::VectorXd t2 = edge_vector(3, verts[lf[0]], verts[lf[2]]);
          for (const auto& b : triangle_interior_bary(degree + 1)) {
            auto pt = bary_point({verts.data(), 4}, ids, b);
            point_dof(DofFunctional::Kind::PointTangential, 2, static_cast<int>(k),
                      pt, t1, {b[0], b[1], b[2]}, 0, -1);
            point_dof(DofFunctional::Kind::PointTangential, 2, static_cast<int>(k),
                      pt, t2, {b[0], b[1], b[2]}, 1, -1);
          }
        }
      }
      const int interior_deg = dim == 2 ? degree - 2 : degree - 3;
      if (interior_deg >= 0)
        append_interior_moments(dofs, cell, dim, dim,
                                full_vector_primes(dim, interior_deg), 2 * degree);
      return dofs;
    }
  }
  throw std::invalid_argument("unknown family");
}

int expected_dimension(Family family, int dim, int degree) {
  const int d = degree;
  switch (family) {
    case Family::Lagrange:
    case Family::DiscontinuousLagrange:
      return detail::scalar_space_dim(dim, d);
    case Family::RT:
      return dim == 2 ? d * (d + 2) : d * (d + 1) * (d + 3) / 2;
    case Family::BDM:
      return dim == 2 ? (d + 1) * (d + 2) : (d + 1) * (d + 2) * (d + 3) / 2;
    case Family::NED1:
      return dim == 2 ? d * (d + 2) : d * (d + 2) * (d + 3) / 2;
  }
  return 0;
}

void check_supported(Family family, int degree) {
  bool ok = false;
  switch (family) {
    case Family::Lagrange: ok = degree >= 1 && degree <= 6; break;
    case Family::DiscontinuousLagrange: ok = degree >= 0 && degree <= 6; break;
    case Family::RT:
    case Family::BDM: ok = degree >= 1 && degree <= 4; break;
    case Family::NED1: ok = degree >= 1 && degree <= 3; break;
  }
  if (!ok) throw std::invalid_argument("unsupported (family, degree)");
}

std::vector<std::vector<std::vector<int>>> layout_entity_dofs(
    const std::vector<DofFunctional>& dofs, int dim) {
  std::vector<std::vector<std::vector<int>>> out(dim + 1);
  out[0].resize(dim + 1);
  out[1].resize(dim == 2 ? 3 : 6);
  if (dim == 3) out[2].resize(4);
  out[dim].resize(std::max<std::size_t>(out[dim].size(), 1));
  for (std::size_t i = 0; i < dofs.size(); ++i)
    out[dofs[i].entity_dim][dofs[i].entity_index].push_back(static_cast<int>(i));
  return out;
}

}  // namespace

FiniteElement create_element(Family family, CellType cell, int degree) {
  check_supported(family, degree);
  auto impl = std::make_shared<FiniteElement::Impl>();
  impl->kind = FiniteElement::Kind::Simple;
  impl->family = family;
  impl->cell = cell;
  impl->dim = cell == CellType::Triangle ? 2 : 3;
  impl->degree = degree;
  impl->embedded_degree = degree;
  impl->mapping = family == Family::RT || family == Family::BDM
                      ? MappingKind::Contravariant
                      : (family == Family::NED1 ? MappingKind::Covariant
                                                : MappingKind::Affine);
  impl->value_size =
      (family == Family::Lagrange || family == Family::DiscontinuousLagrange)
          ? 1
          : impl->dim;

  impl->prime_basis = make_primes(family, impl->dim, degree);
  impl->dofs = make_dofs(family, cell, degree);
  const int n = static_cast<int>(impl->prime_basis.primes.size());
  impl->space_dim = n;
  if (n != expected_dimension(family, impl->dim, degree))
    throw std::logic_error("element dimension mismatch");
  if (static_cast<int>(impl->dofs.size()) != n)
    throw std::logic_error("dof count does not match space dimension");

  // Generalized Vandermonde V_ij = ell_i(P_j).
  Eigen::MatrixXd V(n, n);
  for (int i = 0; i < n; ++i) {
    const DofFunctional& f = impl->dofs[i];
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < f.points.size(); ++k) {
      std::vector<double> vals;
      if (impl->dim == 2) {
        auto jets = eval_primes<2>(impl->prime_basis.primes,
                                   impl->prime_basis.scalar_degree,
                                   impl->value_size, f.points[k]);
        vals.reserve(jets.size());
        for (auto& j : jets) vals.push_back(j.v);
      } else {
        auto jets = eval_primes<3>(impl->prime_basis.primes,
                                   impl->prime_basis.scalar_degree,
                                   impl->value_size, f.points[k]);
        vals.reserve(jets.size());
        for (auto& j : jets) vals.push_back(j.v);
      }
      for (int j = 0; j < n; ++j) {
        double dot = 0.0;
        for (int c = 0; c < impl->value_size; ++c)
          dot += vals[static_cast<std::size_t>(j) * impl->value_size + c] *
                 f.weights[k][c];
        row[j] += dot;
      }
    }
    V.row(i) = row;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V);
  const double smin = svd.singularValues()[n - 1];
  impl->vandermonde_cond = smin > 0.0 ? svd.singularValues()[0] / smin
                                      : std::numeric_limits<double>::infinity();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
  if (!lu.isInvertible())
    throw std::runtime_error("singular Vandermonde: dofs are not unisolvent");
  if (impl->vandermonde_cond >= 1e8)
    throw std::runtime_error("Vandermonde condition number exceeds 1e8");
  impl->nodal_coeffs = lu.inverse().transpose();

  const double resid =
      (V * impl->nodal_coeffs.transpose() - Eigen::MatrixXd::Identity(n, n))
          .cwiseAbs()
          .maxCoeff();
  if (resid > 1e-10)
    throw std::runtime_error("unisolvence check failed past 1e-10");

  impl->entity_dof_ids = layout_entity_dofs(impl->dofs, impl->dim);
  return FiniteElement(std::move(impl));
}

FiniteElement vector_element(const FiniteElement& scalar_sub) {
  if (scalar_sub.kind() != FiniteElement::Kind::Simple ||
      scalar_sub.value_size() != 1)
    throw std::invalid_argument("vector_element requires a scalar sub-element");
  const auto& s = scalar_sub.impl();
  auto impl = std::make_shared<FiniteElement::Impl>();
  impl->kind = FiniteElement::Kind::Vector;
  impl->family = s.family;
  impl->cell = s.cell;
  impl->dim = s.dim;
  impl->degree = s.degree;
  impl->embedded_degree = s.embedded_degree;
  impl->mapping = MappingKind::Affine;
  impl->value_size = s.dim;
  impl->space_dim = s.space_dim * s.dim;
  impl->prime_basis = s.prime_basis;
  impl->nodal_coeffs = s.nodal_coeffs;
  impl->vandermonde_cond = s.vandermonde_cond;

  for (std::size_t i = 0; i < s.dofs.size(); ++i)
    for (int c = 0; c < s.dim; ++c) {
      DofFunctional f = s.dofs[i];
      for (auto& w : f.weights) {
        Eigen::VectorXd wc = Eigen::VectorXd::Zero(s.dim);
        wc[c] = w[0];
        w = wc;
      }
      f.component = c;
      impl->dofs.push_back(std::move(f));
    }
  impl->entity_dof_ids = layout_entity_dofs(impl->dofs, impl->dim);
  return FiniteElement(std::move(impl));
}

FiniteElement mixed_element(std::vector<FiniteElement> subs) {
  if (subs.empty()) throw std::invalid_argument("mixed_element: no sub-elements");
  auto impl = std::make_shared<FiniteElement::Impl>();
  impl->kind = FiniteElement::Kind::Mixed;
  impl->cell = subs.front().cell_type();
  impl->dim = subs.front().dim();
  impl->degree = 0;
  impl->embedded_degree = 0;
  impl->space_dim = 0;
  impl->value_size = 0;
  for (const auto& s : subs) {
    if (s.kind() == FiniteElement::Kind::Mixed)
      throw std::invalid_argument("mixed_element: nested mixed elements");
    if (s.cell_type() != impl->cell)
      throw std::invalid_argument("mixed_element: mismatched cells");
    impl->dof_offsets.push_back(impl->space_dim);
    impl->value_offsets.push_back(impl->value_size);
    impl->space_dim += s.space_dimension();
    impl->value_size += s.value_size();
    impl->embedded_degree = std::max(impl->embedded_degree, s.embedded_degree());
    impl->degree = std::max(impl->degree, s.degree());
  }
  impl->blocks = std::move(subs);
  return FiniteElement(std::move(impl));
}

FiniteElement::Kind FiniteElement::kind() const { return impl_->kind; }
Family FiniteElement::family() const {
  if (impl_->kind == Kind::Mixed)
    throw std::logic_error("mixed element has no single family");
  return impl_->family;
}
CellType FiniteElement::cell_type() const { return impl_->cell; }
int FiniteElement::dim() const { return impl_->dim; }
int FiniteElement::degree() const { return impl_->degree; }
int FiniteElement::embedded_degree() const { return impl_->embedded_degree; }
int FiniteElement::space_dimension() const { return impl_->space_dim; }
int FiniteElement::value_size() const { return impl_->value_size; }
MappingKind FiniteElement::mapping() const {
  if (impl_->kind == Kind::Mixed)
    throw std::logic_error("mixed element has no single mapping");
  return impl_->mapping;
}
int FiniteElement::num_blocks() const {
  return impl_->kind == Kind::Mixed ? static_cast<int>(impl_->blocks.size()) : 1;
}
const FiniteElement& FiniteElement::block(int b) const {
  if (impl_->kind == Kind::Mixed) return impl_->blocks[b];
  return *this;
}
int FiniteElement::block_dof_offset(int b) const {
  return impl_->kind == Kind::Mixed ? impl_->dof_offsets[b] : 0;
}
int FiniteElement::block_value_offset(int b) const {
  return impl_->kind == Kind::Mixed ? impl_->value_offsets[b] : 0;
}
int FiniteElement::num_entity_dofs(int entity_dim) const {
  if (impl_->kind == Kind::Mixed)
    throw std::logic_error("entity dofs are per block for mixed elements");
  if (impl_->entity_dof_ids[entity_dim].empty()) return 0;
  return static_cast<int>(impl_->entity_dof_ids[entity_dim][0].size());
}
std::span<const int> FiniteElement::entity_dofs(int entity_dim,
                                                int local_entity) const {
  const auto& v = impl_->entity_dof_ids[entity_dim][local_entity];
  return {v.data(), v.size()};
}
const std::vector<DofFunctional>& FiniteElement::dof_functionals() const {
  if (impl_->kind == Kind::Mixed)
    throw std::logic_error("dof functionals are per block for mixed elements");
  return impl_->dofs;
}
const Eigen::MatrixXd& FiniteElement::nodal_coefficients() const {
  return impl_->nodal_coeffs;
}
double FiniteElement::vandermonde_condition() const {
  return impl_->vandermonde_cond;
}

namespace {

template <int Dim>
void tabulate_simple(const FiniteElement::Impl& e,
                     std::span<const std::array<double, 3>> points,
                     int deriv_order, int comp_offset, bool vector_copies,
                     Tabulation& tab) {
  const int nsub = static_cast<int>(e.prime_basis.primes.size());
  const int pncomp = e.prime_basis.ncomp;
  const Eigen::MatrixXd& W = e.nodal_coeffs;

  for (int q = 0; q < static_cast<int>(points.size()); ++q) {
    auto jets = eval_primes<Dim>(e.prime_basis.primes, e.prime_basis.scalar_degree,
                                 pncomp, points[q]);
    // Nodal combination per derivative id and component.
    auto emit = [&](int deriv_id, auto get) {
      for (int i = 0; i < nsub; ++i)
        for (int c = 0; c < pncomp; ++c) {
          double acc = 0.0;
          for (int j = 0; j < nsub; ++j)
            acc += W(i, j) * get(jets[static_cast<std::size_t>(j) * pncomp + c]);
          if (!vector_copies) {
            tab.at(deriv_id, i, comp_offset + c, q) = acc;
          } else {
            for (int copy = 0; copy < Dim; ++copy)
              tab.at(deriv_id, i * Dim + copy, comp_offset + copy, q) = acc;
          }
        }
    };
    emit(0, [](const Jet<Dim>& j) { return j.v; });
    if (deriv_order >= 1)
      for (int a = 0; a < Dim; ++a)
        emit(1 + a, [a](const Jet<Dim>& j) { return j.g[a]; });
    if (deriv_order >= 2) {
      int id = 1 + Dim;
      for (int a = 0; a < Dim; ++a)
        for (int b = a; b < Dim; ++b, ++id)
          emit(id, [a, b](const Jet<Dim>& j) { return j.h[a][b]; });
    }
  }
}

}  // namespace

Tabulation FiniteElement::tabulate(std::span<const std::array<double, 3>> points,
                                   int deriv_order) const {
  if (deriv_order < 0 || deriv_order > 2)
    throw std::invalid_argument("tabulate: deriv_order must be 0..2");
  const auto& e = *impl_;
  Tabulation tab;
  tab.dim = e.dim;
  tab.num_basis = e.space_dim;
  tab.num_components = e.value_size;
  tab.num_points = static_cast<int>(points.size());
  tab.deriv_order = deriv_order;
  tab.data.assign(static_cast<std::size_t>(Tabulation::num_deriv_ids(
                      e.dim, deriv_order)) *
                      e.space_dim * e.value_size * tab.num_points,
                  0.0);

  if (e.kind == Kind::Mixed) {
    for (std::size_t b = 0; b < e.blocks.size(); ++b) {
      Tabulation sub = e.blocks[b].tabulate(points, deriv_order);
      const int doff = e.dof_offsets[b];
      const int voff = e.value_offsets[b];
      for (int d = 0; d < Tabulation::num_deriv_ids(e.dim, deriv_order); ++d)
        for (int i = 0; i < sub.num_basis; ++i)
          for (int c = 0; c < sub.num_components; ++c)
            for (int q = 0; q < sub.num_points; ++q)
              tab.at(d, doff + i, voff + c, q) = sub.at(d, i, c, q);
    }
    return tab;
  }

  const bool vec = e.kind == Kind::Vector;
  if (e.dim == 2)
    tabulate_simple<2>(e, points, deriv_order, 0, vec, tab);
  else
    tabulate_simple<3>(e, points, deriv_order, 0, vec, tab);
  return tab;
}

Tabulation map_basis(const FiniteElement& element, const CellGeometry& geometry,
                     const Tabulation& ref) {
  if (geometry.det_jacobian == 0.0)
    throw std::invalid_argument("map_basis: degenerate geometry");
  const int dim = element.dim();
  Tabulation phys = ref;  // same shape
  std::fill(phys.data.begin(), phys.data.end(), 0.0);

  // K[g][b] = dX_g / dx_b
  const Eigen::MatrixXd K = geometry.jacobian_inverse_transposed.transpose();

  for (int b = 0; b < element.num_blocks(); ++b) {
    const FiniteElement& blk = element.block(b);
    const int doff = element.block_dof_offset(b);
    const int voff = element.block_value_offset(b);
    const int nc = blk.value_size();
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(nc, nc);
    if (blk.mapping() == MappingKind::Contravariant)
      M = geometry.jacobian / geometry.det_jacobian;
    else if (blk.mapping() == MappingKind::Covariant)
      M = geometry.jacobian_inverse_transposed;

    for (int i = 0; i < blk.space_dimension(); ++i)
      for (int q = 0; q < ref.num_points; ++q) {
        for (int c = 0; c < nc; ++c) {
          double v = 0.0;
          for (int a = 0; a < nc; ++a)
            v += M(c, a) * ref.at(0, doff + i, voff + a, q);
          phys.at(0, doff + i, voff + c, q) = v;
        }
        if (ref.deriv_order >= 1) {
          for (int c = 0; c < nc; ++c)
            for (int x = 0; x < dim; ++x) {
              double v = 0.0;
              for (int a = 0; a < nc; ++a)
                for (int g = 0; g < dim; ++g)
                  v += M(c, a) * ref.at(1 + g, doff + i, voff + a, q) * K(g, x);
              phys.at(1 + x, doff + i, voff + c, q) = v;
            }
        }
        if (ref.deriv_order >= 2) {
          for (int c = 0; c < nc; ++c)
            for (int x = 0; x < dim; ++x)
              for (int y = x; y < dim; ++y) {
                double v = 0.0;
                for (int a = 0; a < nc; ++a)
                  for (int g = 0; g < dim; ++g)
                    for (int h = 0; h < dim; ++h)
                      v += M(c, a) * ref.at(ref.deriv2_id(g, h), doff + i,
                                            voff + a, q) *
                           K(g, x) * K(h, y);
                phys.at(phys.deriv2_id(x, y), doff + i, voff + c, q) = v;
              }
        }
      }
  }
  return phys;
}

}  // namespace tenfem
