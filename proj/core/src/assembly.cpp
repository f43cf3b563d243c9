// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "tenfem/assembly.hpp"

#include "tenfem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace tenfem {

namespace {

Eigen::VectorXd to_vec(const std::array<double, 3>& p, int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = p[i];
  return v;
}

int global_entity(const Mesh& mesh, int cell, int entity_dim, int local) {
  if (entity_dim == 0) return mesh.cell(cell)[local];
  if (entity_dim == 1) return mesh.cell_edge(cell, local);
  if (entity_dim == 2 && mesh.dim() == 3) return mesh.cell_face(cell, local);
  return cell;
}

int entity_count(const Mesh& mesh, int entity_dim) {
  if (entity_dim == 0) return mesh.num_vertices();
  if (entity_dim == 1) return mesh.num_edges();
  if (entity_dim == 2 && mesh.dim() == 3) return mesh.num_faces();
  return mesh.num_cells();
}

// Physical facet covectors matching the reference dof convention: rotated
// edge vector (2D), edge vector, or face edge cross product, all built from
// the entity's ascending global vertices.
Eigen::VectorXd physical_covector(const Mesh& mesh, const DofFunctional& f,
                                  int gentity) {
  const int dim = mesh.dim();
  if (f.kind == DofFunctional::Kind::PointNormal) {
    if (dim == 2) {
      auto ev = mesh.edge(gentity);
      Eigen::VectorXd e =
          to_vec(mesh.vertex(ev[1]), 2) - to_vec(mesh.vertex(ev[0]), 2);
      Eigen::VectorXd n(2);
      n[0] = e[1];
      n[1] = -e[0];
      return n;
    }
    auto fv = mesh.face(gentity);
    Eigen::Vector3d a = to_vec(mesh.vertex(fv[0]), 3);
    Eigen::Vector3d e1 = Eigen::Vector3d(to_vec(mesh.vertex(fv[1]), 3)) - a;
    Eigen::Vector3d e2 = Eigen::Vector3d(to_vec(mesh.vertex(fv[2]), 3)) - a;
    return e1.cross(e2);
  }
  // tangential
  if (f.entity_dim == 1) {
    auto ev = mesh.edge(gentity);
    return to_vec(mesh.vertex(ev[1]), dim) - to_vec(mesh.vertex(ev[0]), dim);
  }
  auto fv = mesh.face(gentity);
  const int other = f.direction == 0 ? 1 : 2;
  return to_vec(mesh.vertex(fv[other]), 3) - to_vec(mesh.vertex(fv[0]), 3);
}

}  // namespace

FunctionSpace::FunctionSpace(std::shared_ptr<const Mesh> mesh,
                             FiniteElement element)
    : mesh_(std::move(mesh)), element_(std::move(element)) {
  const Mesh& m = *mesh_;
  const int dim = m.dim();
  if ((element_.cell_type() == CellType::Triangle) != (dim == 2))
    throw std::invalid_argument("element cell does not match mesh dimension");

  const int ncells = m.num_cells();
  const int n_local = element_.space_dimension();
  dofmap_.assign(static_cast<std::size_t>(ncells) * n_local, -1);

  dim_ = 0;
  for (int b = 0; b < element_.num_blocks(); ++b) {
    const FiniteElement& blk = element_.block(b);
    block_offsets_.push_back(dim_);

    // Entity-major global numbering inside the block.
    std::vector<int> dim_offset(dim + 1, 0);
    std::vector<int> per_entity(dim + 1, 0);
    int running = 0;
    for (int ed = 0; ed <= dim; ++ed) {
      per_entity[ed] = blk.num_entity_dofs(ed);
      dim_offset[ed] = running;
      running += per_entity[ed] * entity_count(m, ed);
    }
    const int block_dim = running;

    // local dof -> (entity_dim, local entity, index within entity)
    struct Attribution {
      int ed, le, k;
    };
    std::vector<Attribution> attribution(blk.space_dimension());
    for (int ed = 0; ed <= dim; ++ed) {
      const int nent = ed == dim ? 1
                       : ed == 0 ? dim + 1
                       : ed == 1 ? (dim == 2 ? 3 : 6)
                                 : 4;
      for (int le = 0; le < nent; ++le) {
        auto ids = blk.entity_dofs(ed, le);
        for (std::size_t k = 0; k < ids.size(); ++k)
          attribution[ids[k]] = {ed, le, static_cast<int>(k)};
      }
    }

    const int doff = element_.block_dof_offset(b);
    for (int c = 0; c < ncells; ++c)
      for (int l = 0; l < blk.space_dimension(); ++l) {
        const auto& at = attribution[l];
        const int ge = global_entity(m, c, at.ed, at.le);
        const int g = dim_ + dim_offset[at.ed] + ge * per_entity[at.ed] + at.k;
        dofmap_[static_cast<std::size_t>(c) * n_local + doff + l] = g;
      }
    dim_ += block_dim;
  }

  // Dof attribution records, filled once per global dof.
  info_.resize(dim_);
  std::vector<char> seen(dim_, 0);
  for (int c = 0; c < ncells; ++c) {
    const CellGeometry geom = cell_geometry(m, c);
    for (int b = 0; b < element_.num_blocks(); ++b) {
      const FiniteElement& blk = element_.block(b);
      const int doff = element_.block_dof_offset(b);
      const auto& funcs = blk.dof_functionals();
      for (int l = 0; l < blk.space_dimension(); ++l) {
        const int g = dofmap_[static_cast<std::size_t>(c) * n_local + doff + l];
        if (seen[g]) continue;
        seen[g] = 1;
        const DofFunctional& f = funcs[l];
        DofInfo& di = info_[g];
        di.block = b;
        di.entity_dim = f.entity_dim;
        di.entity_index = global_entity(m, c, f.entity_dim, f.entity_index);
        di.component = f.component;
        if (f.points.size() == 1) {
          Eigen::VectorXd X = to_vec(f.points[0], dim);
          Eigen::VectorXd x = geom.jacobian * X + geom.translation;
          for (int a = 0; a < dim; ++a) di.point[a] = x[a];
        } else {
          // interior moment: cell centroid
          std::array<double, 3> ctr{};
          for (int v : m.cell(c))
            for (int a = 0; a < dim; ++a) ctr[a] += m.vertex(v)[a] / (dim + 1);
          di.point = ctr;
        }
      }
    }
  }
}

FunctionSpace build_dofmap(std::shared_ptr<const Mesh> mesh,
                           const FiniteElement& element) {
  return FunctionSpace(std::move(mesh), element);
}

std::vector<int> FunctionSpace::boundary_dofs() const {
  const Mesh& m = *mesh_;
  const int dim = m.dim();
  const std::vector<bool> vmask = m.boundary_vertex_mask();
  const std::vector<bool> emask = m.boundary_edge_mask();
  std::vector<bool> fmask;
  if (dim == 3) {
    fmask.assign(m.num_faces(), false);
    for (int f : m.boundary_facets()) fmask[f] = true;
  }
  std::vector<int> out;
  for (int g = 0; g < dim_; ++g) {
    const DofInfo& di = info_[g];
    const bool on = (di.entity_dim == 0 && vmask[di.entity_index]) ||
                    (di.entity_dim == 1 && emask[di.entity_index]) ||
                    (dim == 3 && di.entity_dim == 2 && fmask[di.entity_index]);
    if (on) out.push_back(g);
  }
  return out;
}

void SparseMatrix::write_coordinate(std::ostream& out) const {
  std::vector<std::tuple<int, int, double>> entries;
  entries.reserve(mat_.nonZeros());
  for (int k = 0; k < mat_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(mat_, k); it; ++it)
      entries.emplace_back(it.row(), it.col(), it.value());
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) {
              return std::pair(std::get<0>(a), std::get<1>(a)) <
                     std::pair(std::get<0>(b), std::get<1>(b));
            });
  out.precision(17);
  for (const auto& [i, j, v] : entries) out << i << ' ' << j << ' ' << v << '\n';
}

Eigen::MatrixXd DiscreteField::evaluate_on_cell(
    int cell, std::span<const std::array<double, 3>> points) const {
  const FiniteElement& el = space->element();
  const CellGeometry geom = cell_geometry(space->mesh(), cell);
  const Tabulation phys = map_basis(el, geom, el.tabulate(points, 0));
  auto dofs = space->cell_dofs(cell);
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Zero(el.value_size(), static_cast<int>(points.size()));
  for (int b = 0; b < el.space_dimension(); ++b) {
    const double u = coefficients[dofs[b]];
    if (u == 0.0) continue;
    for (int c = 0; c < el.value_size(); ++c)
      for (int q = 0; q < static_cast<int>(points.size()); ++q)
        out(c, q) += u * phys.value(b, c, q);
  }
  return out;
}

Eigen::VectorXd DiscreteField::evaluate_at(const Eigen::VectorXd& x) const {
  const Mesh& m = space->mesh();
  const int dim = m.dim();
  constexpr double tol = 1e-12;
  for (int c = 0; c < m.num_cells(); ++c) {
    const CellGeometry geom = cell_geometry(m, c);
    Eigen::VectorXd X =
        geom.jacobian_inverse_transposed.transpose() * (x - geom.translation);
    double sum = 0.0;
    bool inside = true;
    for (int a = 0; a < dim; ++a) {
      if (X[a] < -tol) inside = false;
      sum += X[a];
    }
    if (!inside || sum > 1.0 + tol) continue;
    std::array<double, 3> pt{};
    for (int a = 0; a < dim; ++a) pt[a] = X[a];
    return evaluate_on_cell(c, {&pt, 1}).col(0);
  }
  throw std::invalid_argument("evaluate_at: point outside the mesh");
}

DiscreteField sub_field(const DiscreteField& mixed, int block) {
  const FunctionSpace& space = *mixed.space;
  auto sub_space = std::make_shared<FunctionSpace>(
      space.mesh_ptr(), space.element().block(block));
  const int off = space.block_offset(block);
  DiscreteField out;
  out.coefficients = mixed.coefficients.segment(off, sub_space->dim());
  out.space = std::move(sub_space);
  return out;
}

namespace {

std::vector<Eigen::VectorXd> cell_coefficient_dofs(
    std::span<const DiscreteField> coefficients, int cell) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(coefficients.size());
  for (const auto& f : coefficients) {
    auto dofs = f.space->cell_dofs(cell);
    Eigen::VectorXd v(dofs.size());
    for (std::size_t k = 0; k < dofs.size(); ++k)
      v[static_cast<int>(k)] = f.coefficients[dofs[k]];
    out.push_back(std::move(v));
  }
  return out;
}

void run_chunked(int n, int threads, const std::function<void(int, int)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2 * threads) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(fn, lo, hi);
  }
  for (auto& th : pool) th.join();
}

}  // namespace

SparseMatrix assemble_matrix(const forms::TensorRepresentation& rep,
                             const FunctionSpace& test,
                             const FunctionSpace& trial,
                             std::span<const DiscreteField> coefficients,
                             int threads) {
  if (rep.primary_shape.size() != 2)
    throw std::invalid_argument("assemble_matrix: bilinear form expected");
  const int n1 = rep.primary_shape[0];
  const int n2 = rep.primary_shape[1];
  if (test.element().space_dimension() != n1 ||
      trial.element().space_dimension() != n2)
    throw std::invalid_argument("assemble_matrix: space/representation mismatch");
  const Mesh& mesh = test.mesh();
  const int ncells = mesh.num_cells();

  std::vector<Eigen::Triplet<double>> triplets(
      static_cast<std::size_t>(ncells) * n1 * n2);
  run_chunked(ncells, threads, [&](int lo, int hi) {
    for (int c = lo; c < hi; ++c) {
      const CellGeometry geom = cell_geometry(mesh, c);
      const auto coeff_dofs = cell_coefficient_dofs(coefficients, c);
      const auto G = forms::geometry_tensor(rep, geom, coeff_dofs);
      const auto AK = forms::contract(rep, G);
      auto rows = test.cell_dofs(c);
      auto cols = trial.cell_dofs(c);
      std::size_t base = static_cast<std::size_t>(c) * n1 * n2;
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
          triplets[base + static_cast<std::size_t>(i) * n2 + j] = {
              rows[i], cols[j], AK[static_cast<std::size_t>(i) * n2 + j]};
    }
  });

  SparseMatrix A(test.dim(), trial.dim());
  A.eigen().setFromTriplets(triplets.begin(), triplets.end());
  A.eigen().makeCompressed();
  return A;
}

Eigen::VectorXd assemble_vector(const forms::TensorRepresentation& rep,
                                const FunctionSpace& test,
                                std::span<const DiscreteField> coefficients,
                                int threads) {
  if (rep.primary_shape.size() != 1)
    throw std::invalid_argument("assemble_vector: linear form expected");
  const int n1 = rep.primary_shape[0];
  if (test.element().space_dimension() != n1)
    throw std::invalid_argument("assemble_vector: space/representation mismatch");
  const Mesh& mesh = test.mesh();
  const int ncells = mesh.num_cells();

  std::vector<double> local(static_cast<std::size_t>(ncells) * n1);
  run_chunked(ncells, threads, [&](int lo, int hi) {
    for (int c = lo; c < hi; ++c) {
      const CellGeometry geom = cell_geometry(mesh, c);
      const auto coeff_dofs = cell_coefficient_dofs(coefficients, c);
      const auto G = forms::geometry_tensor(rep, geom, coeff_dofs);
      const auto AK = forms::contract(rep, G);
      std::copy(AK.begin(), AK.end(),
                local.begin() + static_cast<std::size_t>(c) * n1);
    }
  });

  Eigen::VectorXd b = Eigen::VectorXd::Zero(test.dim());
  for (int c = 0; c < ncells; ++c) {
    auto dofs = test.cell_dofs(c);
    for (int i = 0; i < n1; ++i)
      b[dofs[i]] += local[static_cast<std::size_t>(c) * n1 + i];
  }
  return b;
}

void apply_essential_bc(SparseMatrix& A, Eigen::VectorXd& b,
                        std::span<const int> dofs,
                        std::span<const double> values) {
  if (dofs.size() != values.size())
    throw std::invalid_argument("apply_essential_bc: size mismatch");
  const int n = A.rows();
  std::vector<char> mask(n, 0);
  std::vector<double> val(n, 0.0);
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    mask[dofs[k]] = 1;
    val[dofs[k]] = values[k];
  }

  const Eigen::SparseMatrix<double>& M = A.eigen();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(M.nonZeros() + dofs.size());
  for (int k = 0; k < M.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(M, k); it; ++it) {
      const int i = static_cast<int>(it.row());
      const int j = static_cast<int>(it.col());
      if (!mask[i] && mask[j]) {
        b[i] -= it.value() * val[j];
        continue;
      }
      if (mask[i] || mask[j]) continue;
      triplets.emplace_back(i, j, it.value());
    }
  for (int d : dofs) triplets.emplace_back(d, d, 1.0);
  Eigen::SparseMatrix<double> out(A.rows(), A.cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  A.eigen() = std::move(out);
  for (std::size_t k = 0; k < dofs.size(); ++k) b[dofs[k]] = values[k];
}

void apply_essential_bc(SparseMatrix& A, Eigen::VectorXd& b,
                        std::span<const int> dofs, double value) {
  std::vector<double> values(dofs.size(), value);
  apply_essential_bc(A, b, dofs, values);
}

SparseMatrix restrict_to_dofs(const SparseMatrix& A, std::span<const int> dofs) {
  std::vector<int> local(A.rows(), -1);
  for (std::size_t k = 0; k < dofs.size(); ++k)
    local[dofs[k]] = static_cast<int>(k);
  std::vector<Eigen::Triplet<double>> triplets;
  const Eigen::SparseMatrix<double>& M = A.eigen();
  for (int k = 0; k < M.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(M, k); it; ++it) {
      const int i = local[it.row()];
      const int j = local[it.col()];
      if (i >= 0 && j >= 0) triplets.emplace_back(i, j, it.value());
    }
  SparseMatrix out(static_cast<int>(dofs.size()), static_cast<int>(dofs.size()));
  out.eigen().setFromTriplets(triplets.begin(), triplets.end());
  out.eigen().makeCompressed();
  out.symmetric_structure = A.symmetric_structure;
  return out;
}

DiscreteField interpolate(std::shared_ptr<const FunctionSpace> space,
                          const AnalyticField& field) {
  const FunctionSpace& sp = *space;
  const Mesh& mesh = sp.mesh();
  const int dim = mesh.dim();
  Eigen::VectorXd U = Eigen::VectorXd::Zero(sp.dim());
  std::vector<char> seen(sp.dim(), 0);

  const FiniteElement& el = sp.element();
  const int n_local = el.space_dimension();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry geom = cell_geometry(mesh, c);
    const Eigen::MatrixXd Jinv =
        geom.jacobian_inverse_transposed.transpose();  // dX/dx
    auto dofs = sp.cell_dofs(c);
    for (int b = 0; b < el.num_blocks(); ++b) {
      const FiniteElement& blk = el.block(b);
      const int doff = el.block_dof_offset(b);
      const auto& funcs = blk.dof_functionals();
      for (int l = 0; l < blk.space_dimension(); ++l) {
        const int g = dofs[doff + l];
        if (seen[g]) continue;
        seen[g] = 1;
        const DofFunctional& f = funcs[l];
        switch (f.kind) {
          case DofFunctional::Kind::PointEval: {
            const Eigen::VectorXd x =
                geom.jacobian * to_vec(f.points[0], dim) + geom.translation;
            const Eigen::VectorXd v = field.value(x);
            U[g] = v[std::max(f.component, 0)];
            break;
          }
          case DofFunctional::Kind::PointNormal:
          case DofFunctional::Kind::PointTangential: {
            const Eigen::VectorXd x =
                geom.jacobian * to_vec(f.points[0], dim) + geom.translation;
            const int ge = global_entity(mesh, c, f.entity_dim, f.entity_index);
            const Eigen::VectorXd w = physical_covector(mesh, f, ge);
            U[g] = field.value(x).dot(w);
            break;
          }
          case DofFunctional::Kind::InteriorMoment: {
            double acc = 0.0;
            for (std::size_t k = 0; k < f.points.size(); ++k) {
              const Eigen::VectorXd x =
                  geom.jacobian * to_vec(f.points[k], dim) + geom.translation;
              Eigen::VectorXd v = field.value(x);
              switch (blk.mapping()) {
                case MappingKind::Affine:
                  break;
                case MappingKind::Contravariant:
                  v = geom.det_jacobian * (Jinv * v);
                  break;
                case MappingKind::Covariant:
                  v = geom.jacobian.transpose() * v;
                  break;
              }
              acc += v.dot(f.weights[k]);
            }
            U[g] = acc;
            break;
          }
        }
      }
    }
  }
  DiscreteField out;
  out.space = std::move(space);
  out.coefficients = std::move(U);
  return out;
}

double error_norm(const DiscreteField& field, const AnalyticField& exact,
                  ErrorNorm norm) {
  const FunctionSpace& sp = *field.space;
  const Mesh& mesh = sp.mesh();
  const int dim = mesh.dim();
  const FiniteElement& el = sp.element();
  const int nc = el.value_size();
  const QuadratureRule rule =
      make_rule(mesh.cell_type(), el.embedded_degree() + 4);
  const Tabulation ref = el.tabulate(rule.points, 1);

  if ((norm == ErrorNorm::Hdiv || norm == ErrorNorm::Hcurl) && !exact.div &&
      !exact.curl)
    throw std::invalid_argument("error_norm: missing exact derivative data");

  double err2 = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry geom = cell_geometry(mesh, c);
    const Tabulation phys = map_basis(el, geom, ref);
    auto dofs = sp.cell_dofs(c);
    const double absdet = std::abs(geom.det_jacobian);
    for (int q = 0; q < rule.num_points(); ++q) {
      Eigen::VectorXd vh = Eigen::VectorXd::Zero(nc);
      Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(nc, dim);
      for (int b = 0; b < el.space_dimension(); ++b) {
        const double u = field.coefficients[dofs[b]];
        if (u == 0.0) continue;
        for (int comp = 0; comp < nc; ++comp) {
          vh[comp] += u * phys.value(b, comp, q);
          for (int x = 0; x < dim; ++x)
            dh(comp, x) += u * phys.deriv1(x, b, comp, q);
        }
      }
      const Eigen::VectorXd x =
          geom.jacobian * to_vec(rule.points[q], dim) + geom.translation;
      const Eigen::VectorXd ve = exact.value(x);
      double point_err = (vh - ve).squaredNorm();
      if (norm == ErrorNorm::Hdiv) {
        double div_h = 0.0;
        for (int a = 0; a < dim; ++a) div_h += dh(a, a);
        const double d = div_h - exact.div(x);
        point_err += d * d;
      } else if (norm == ErrorNorm::Hcurl) {
        if (dim == 2) {
          const double rot_h = dh(1, 0) - dh(0, 1);
          const double d = rot_h - exact.curl(x)[0];
          point_err += d * d;
        } else {
          Eigen::Vector3d curl_h(dh(2, 1) - dh(1, 2), dh(0, 2) - dh(2, 0),
                                 dh(1, 0) - dh(0, 1));
          point_err += (curl_h - Eigen::Vector3d(exact.curl(x))).squaredNorm();
        }
      }
      err2 += rule.weights[q] * absdet * point_err;
    }
  }
  return std::sqrt(err2);
}

}  // namespace tenfem
