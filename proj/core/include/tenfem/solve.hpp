// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tenfem/assembly.hpp"

#include <string>
#include <vector>

namespace tenfem {

struct LinearSolution {
  Eigen::VectorXd x;
  double relative_residual = 0.0;
  std::string method;
};

/// Sparse LU solve; handles the symmetric indefinite saddle-point systems of
/// the mixed formulations. Throws if the achieved residual exceeds rtol.
LinearSolution solve_linear(const SparseMatrix& A, const Eigen::VectorXd& b,
                            double rtol = 1e-10);

struct EigenSolution {
  std::vector<double> eigenvalues;  // ascending, above the zero threshold
  Eigen::MatrixXd eigenvectors;     // column k pairs with eigenvalues[k]
  double zero_threshold = 0.0;
};

/// Dense generalized eigensolve A x = lambda M x for symmetric A and SPD M
/// (both restricted to free dofs beforehand). Returns the k smallest
/// eigenvalues strictly above zero_threshold; the default threshold is
/// 1e-6 * lambda_max, which filters the curl kernel.
EigenSolution solve_generalized_eigen(const SparseMatrix& A,
                                      const SparseMatrix& M, int k,
                                      double zero_threshold = -1.0);

}  // namespace tenfem
