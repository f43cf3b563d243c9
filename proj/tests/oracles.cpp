// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include "tenfem/assembly.hpp"
#include "tenfem/quadrature.hpp"

#include <map>

using namespace tenfem;

namespace oracles {

double simplex_monomial_integral(int dim, int a, int b, int c) {
  // a! b! c! / (a + b + c + dim)! accumulated as a product of ratios to stay
  // in range.
  double result = 1.0;
  int denom = dim == 2 ? a + b + 2 : a + b + c + 3;
  auto fold = [&](int k) {
    for (int i = 1; i <= k; ++i) result *= static_cast<double>(i);
  };
  fold(a);
  fold(b);
  if (dim == 3) fold(c);
  for (int i = 1; i <= denom; ++i) result /= static_cast<double>(i);
  return result;
}

tenfem::CellGeometry random_geometry(int dim, std::mt19937& rng,
                                     bool negative_det) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  tenfem::CellGeometry g;
  g.jacobian.resize(dim, dim);
  g.translation = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < dim; ++i) g.translation[i] = uni(rng);
  do {
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) g.jacobian(i, j) = uni(rng);
    g.det_jacobian = g.jacobian.determinant();
  } while (std::abs(g.det_jacobian) < 0.05);
  if (negative_det != (g.det_jacobian < 0.0)) {
    g.jacobian.col(0) *= -1.0;
    g.det_jacobian = -g.det_jacobian;
  }
  g.jacobian_inverse_transposed = g.jacobian.inverse().transpose();
  return g;
}

tenfem::CellGeometry identity_geometry(int dim) {
  tenfem::CellGeometry g;
  g.jacobian = Eigen::MatrixXd::Identity(dim, dim);
  g.det_jacobian = 1.0;
  g.jacobian_inverse_transposed = Eigen::MatrixXd::Identity(dim, dim);
  g.translation = Eigen::VectorXd::Zero(dim);
  return g;
}

std::vector<std::array<double, 3>> reference_vertices(int dim) {
  if (dim == 2) return {{{0, 0, 0}}, {{1, 0, 0}}, {{0, 1, 0}}};
  return {{{0, 0, 0}}, {{1, 0, 0}}, {{0, 1, 0}}, {{0, 0, 1}}};
}


double max_conformity_jump(const tenfem::FunctionSpace& space, bool tangential) {

  const Mesh& mesh = space.mesh();
  const int dim = mesh.dim();
  const FiniteElement& el = space.element();
  // facet sample points per adjacent cell via the cells' reference maps
  double worst = 0.0;
  for (int f = 0; f < mesh.num_facets(); ++f) {
    if (mesh.facet_on_boundary(f)) continue;
    auto fv = mesh.facet(f);
    // sample points in barycentric coordinates of the facet
    std::vector<std::vector<double>> barys;
    if (dim == 2) {
      for (double t : {0.21, 0.5, 0.83}) barys.push_back({1 - t, t});
    } else {
      barys = {{0.6, 0.2, 0.2}, {0.2, 0.6, 0.2}, {0.25, 0.35, 0.4}};
    }
    const auto cells = mesh.facet_cells(f);

    // physical frame vectors of the facet
    std::vector<Eigen::VectorXd> dirs;
    {
      const FacetFrame fr = facet_frame(mesh, f);
      if (tangential)
        dirs = fr.tangents;
      else
        dirs = {fr.normal};
    }

    // evaluate all basis functions of both cells at the shared points
    for (const auto& bary : barys) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
      for (std::size_t k = 0; k < fv.size(); ++k)
        for (int a = 0; a < dim; ++a) x[a] += bary[k] * mesh.vertex(fv[k])[a];

      // trace contribution of each global dof from each side
      std::vector<std::map<int, Eigen::VectorXd>> side(2);
      for (int s = 0; s < 2; ++s) {
        const int c = cells[s];
        const CellGeometry geom = cell_geometry(mesh, c);
        Eigen::VectorXd X =
            geom.jacobian_inverse_transposed.transpose() * (x - geom.translation);
        std::array<double, 3> Xp{};
        for (int a = 0; a < dim; ++a) Xp[a] = X[a];
        const Tabulation phys = map_basis(el, geom, el.tabulate({&Xp, 1}, 0));
        auto dofs = space.cell_dofs(c);
        for (int b = 0; b < el.space_dimension(); ++b) {
          Eigen::VectorXd v(dim);
          for (int comp = 0; comp < dim; ++comp) v[comp] = phys.value(b, comp, 0);
          side[s][dofs[b]] = v;
        }
      }
      for (const auto& [g, va] : side[0]) {
        const Eigen::VectorXd vb = side[1].count(g)
                                       ? side[1].at(g)
                                       : Eigen::VectorXd::Zero(dim);
        for (const auto& d : dirs)
          worst = std::max(worst, std::abs((va - vb).dot(d)));
      }
      for (const auto& [g, vb] : side[1])
        if (!side[0].count(g))
          for (const auto& d : dirs) worst = std::max(worst, std::abs(vb.dot(d)));
    }
  }
  return worst;
}


Eigen::MatrixXd assemble_dense_by_quadrature(const tenfem::forms::FormIR& form,
                                             const tenfem::Mesh& mesh,
                                             const tenfem::FunctionSpace& test,
                                             const tenfem::FunctionSpace& trial) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(test.dim(), trial.dim());
  const int n1 = test.element().space_dimension();
  const int n2 = trial.element().space_dimension();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const tenfem::CellGeometry geom = tenfem::cell_geometry(mesh, c);
    const auto AK = tenfem::forms::evaluate_by_quadrature(form, geom);
    auto rows = test.cell_dofs(c);
    auto cols = trial.cell_dofs(c);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j)
        A(rows[i], cols[j]) += AK[static_cast<std::size_t>(i) * n2 + j];
  }
  return A;
}

}  // namespace oracles
