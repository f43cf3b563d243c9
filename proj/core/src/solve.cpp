// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "tenfem/solve.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <sstream>
#include <stdexcept>

namespace tenfem {

LinearSolution solve_linear(const SparseMatrix& A, const Eigen::VectorXd& b,
                            double rtol) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw std::invalid_argument("solve_linear: shape mismatch");
  LinearSolution sol;
  sol.method = "sparse-lu";
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    sol.x = Eigen::VectorXd::Zero(b.size());
    sol.relative_residual = 0.0;
    return sol;
  }
  // TODO: a multifrontal factorization would cut the 3D experiment times;
  // the n=16 cube solve dominates the curl-div runs.
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A.eigen());
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("solve_linear: factorization failed (singular?)");
  sol.x = lu.solve(b);
  sol.relative_residual = (A.eigen() * sol.x - b).norm() / bnorm;
  if (!(sol.relative_residual <= rtol)) {
    std::ostringstream os;
    os << "solve_linear: residual " << sol.relative_residual
       << " exceeds rtol " << rtol;
    throw std::runtime_error(os.str());
  }
  return sol;
}

EigenSolution solve_generalized_eigen(const SparseMatrix& A,
                                      const SparseMatrix& M, int k,
                                      double zero_threshold) {
  if (A.rows() != A.cols() || M.rows() != M.cols() || A.rows() != M.rows())
    throw std::invalid_argument("solve_generalized_eigen: shape mismatch");
  const Eigen::MatrixXd Ad = Eigen::MatrixXd(A.eigen());
  const Eigen::MatrixXd Md = Eigen::MatrixXd(M.eigen());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      Ad, Md, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("solve_generalized_eigen: solver failed");
  const Eigen::VectorXd& lambda = es.eigenvalues();

  double threshold = zero_threshold;
  if (threshold < 0.0) {
    const double lmax = lambda.size() ? std::abs(lambda[lambda.size() - 1]) : 0.0;
    threshold = 1e-6 * lmax;
  }

  EigenSolution sol;
  sol.zero_threshold = threshold;
  std::vector<int> keep;
  for (int i = 0; i < lambda.size(); ++i)
    if (lambda[i] > threshold) keep.push_back(i);
  if (static_cast<int>(keep.size()) < k)
    throw std::invalid_argument(
        "solve_generalized_eigen: fewer nonzero eigenvalues than requested");
  keep.resize(k);

  sol.eigenvectors.resize(Ad.rows(), k);
  for (int i = 0; i < k; ++i) {
    const double l = lambda[keep[i]];
    const Eigen::VectorXd v = es.eigenvectors().col(keep[i]);
    const Eigen::VectorXd Av = Ad * v;
    const double resid = (Av - l * (Md * v)).norm();
    if (resid > 1e-8 * Av.norm())
      throw std::runtime_error("solve_generalized_eigen: residual check failed");
    sol.eigenvalues.push_back(l);
    sol.eigenvectors.col(i) = v;
  }
  return sol;
}

}  // namespace tenfem
