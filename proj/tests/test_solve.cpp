// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "tenfem/solve.hpp"

#include "form_zoo.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace tenfem;

namespace {

SparseMatrix from_dense(const Eigen::MatrixXd& D) {
  SparseMatrix A(static_cast<int>(D.rows()), static_cast<int>(D.cols()));
  std::vector<Eigen::Triplet<double>> ts;
  for (int i = 0; i < D.rows(); ++i)
    for (int j = 0; j < D.cols(); ++j)
      if (D(i, j) != 0.0) ts.emplace_back(i, j, D(i, j));
  A.eigen().setFromTriplets(ts.begin(), ts.end());
  return A;
}

}  // namespace

TEST_CASE("linear solves") {
  SUBCASE("identity") {
    const SparseMatrix I = from_dense(Eigen::MatrixXd::Identity(4, 4));
    Eigen::VectorXd b(4);
    b << 1, -2, 3, 0.5;
    const LinearSolution sol = solve_linear(I, b);
    CHECK((sol.x - b).norm() <= 1e-14);
  }
  SUBCASE("diagonal") {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
    D(0, 0) = 2.0;
    D(1, 1) = 3.0;
    Eigen::VectorXd b(2);
    b << 2, 3;
    const LinearSolution sol = solve_linear(from_dense(D), b);
    CHECK(sol.x[0] == doctest::Approx(1.0));
    CHECK(sol.x[1] == doctest::Approx(1.0));
  }
  SUBCASE("zero rhs short-circuits to zero") {
    const SparseMatrix I = from_dense(Eigen::MatrixXd::Identity(3, 3));
    const LinearSolution sol = solve_linear(I, Eigen::VectorXd::Zero(3));
    CHECK(sol.x.norm() == 0.0);
  }
  SUBCASE("assembled mixed Poisson saddle point") {
    auto mesh = std::make_shared<Mesh>(unit_square_mesh(4));
    const auto form = form_zoo::mixed_poisson(CellType::Triangle, Family::RT, 1);
    const FunctionSpace space(mesh, form.arguments[0]);
    SparseMatrix A = assemble_matrix(forms::compile(form), space, space);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(space.dim());
    for (int i = 0; i < b.size(); ++i) b[i] = std::sin(0.37 * i + 0.2);
    const LinearSolution sol = solve_linear(A, b, 1e-10);
    CHECK(sol.relative_residual <= 1e-10);
  }
  SUBCASE("singular matrix reports failure") {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
    D(0, 0) = 1.0;
    CHECK_THROWS(solve_linear(from_dense(D), Eigen::VectorXd::Ones(2)));
  }
}

TEST_CASE("generalized eigensolves") {
  SUBCASE("A equals M gives unit eigenvalues") {
    Eigen::MatrixXd D = Eigen::MatrixXd::Identity(5, 5) * 2.5;
    const SparseMatrix A = from_dense(D);
    const EigenSolution sol = solve_generalized_eigen(A, A, 3);
    for (double l : sol.eigenvalues) CHECK(l == doctest::Approx(1.0));
  }
  SUBCASE("zero modes are filtered") {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(4, 4);
    D(2, 2) = 1.0;
    D(3, 3) = 2.0;
    const EigenSolution sol = solve_generalized_eigen(
        from_dense(D), from_dense(Eigen::MatrixXd::Identity(4, 4)), 2, 1e-6);
    REQUIRE(sol.eigenvalues.size() == 2);
    CHECK(sol.eigenvalues[0] == doctest::Approx(1.0));
    CHECK(sol.eigenvalues[1] == doctest::Approx(2.0));
    CHECK_THROWS(solve_generalized_eigen(
        from_dense(D), from_dense(Eigen::MatrixXd::Identity(4, 4)), 3, 1e-6));
  }
  SUBCASE("eigenvector M-orthogonality") {
    // small assembled pencil: NED1 mass and stiffness on a coarse cavity
    auto mesh = std::make_shared<Mesh>(
        unit_square_mesh(3, MeshPattern::CrissCross, 3.14159));
    const auto a_form = form_zoo::maxwell_stiffness(CellType::Triangle, 1);
    const auto m_form = form_zoo::mass_covariant(CellType::Triangle, 1);
    const FunctionSpace space(mesh, a_form.arguments[0]);
    SparseMatrix A = assemble_matrix(forms::compile(a_form), space, space);
    SparseMatrix M = assemble_matrix(forms::compile(m_form), space, space);
    const auto bd = space.boundary_dofs();
    std::vector<char> constrained(space.dim(), 0);
    for (int g : bd) constrained[g] = 1;
    std::vector<int> free;
    for (int g = 0; g < space.dim(); ++g)
      if (!constrained[g]) free.push_back(g);
    const EigenSolution sol = solve_generalized_eigen(
        restrict_to_dofs(A, free), restrict_to_dofs(M, free), 4);
    const Eigen::MatrixXd Md(restrict_to_dofs(M, free).eigen());
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        CHECK(std::abs(sol.eigenvectors.col(i).dot(Md * sol.eigenvectors.col(j))) <=
              1e-8);
    // eigenvalues ascending
    for (std::size_t i = 1; i < sol.eigenvalues.size(); ++i)
      CHECK(sol.eigenvalues[i - 1] <= sol.eigenvalues[i]);
  }
}
