// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "tenfem/assembly.hpp"
#include "tenfem/forms.hpp"
#include "tenfem/solve.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace tenfem;

namespace {

forms::FormIR mixed_poisson_form(Family hdiv, int degree) {
  const FiniteElement S = create_element(hdiv, CellType::Triangle, degree);
  const FiniteElement V = create_element(Family::DiscontinuousLagrange,
                                         CellType::Triangle, degree - 1);
  const FiniteElement MX = mixed_element({S, V});
  using namespace forms;
  const Expr tau = argument(0, 0), v = argument(0, 1);
  const Expr sig = argument(1, 0), u = argument(1, 1);
  return {{MX, MX}, {}, dot(tau, sig) - div(tau) * u + v * div(sig)};
}

void bench_compile(benchmark::State& state) {
  const auto form = mixed_poisson_form(Family::BDM, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto rep = forms::compile(form);
    benchmark::DoNotOptimize(rep.reference_tensor.data());
  }
}
BENCHMARK(bench_compile)->Arg(1)->Arg(2)->Arg(3);

void bench_contract_cell(benchmark::State& state) {
  const auto form = mixed_poisson_form(Family::BDM, static_cast<int>(state.range(0)));
  const auto rep = forms::compile(form);
  const Mesh mesh = unit_square_mesh(8);
  const CellGeometry geom = cell_geometry(mesh, 3);
  for (auto _ : state) {
    const auto G = forms::geometry_tensor(rep, geom);
    auto AK = forms::contract(rep, G);
    benchmark::DoNotOptimize(AK.data());
  }
}
BENCHMARK(bench_contract_cell)->Arg(1)->Arg(2)->Arg(3);

void bench_quadrature_cell(benchmark::State& state) {
  const auto form = mixed_poisson_form(Family::BDM, static_cast<int>(state.range(0)));
  const Mesh mesh = unit_square_mesh(8);
  const CellGeometry geom = cell_geometry(mesh, 3);
  for (auto _ : state) {
    auto AK = forms::evaluate_by_quadrature(form, geom);
    benchmark::DoNotOptimize(AK.data());
  }
}
BENCHMARK(bench_quadrature_cell)->Arg(1)->Arg(2)->Arg(3);

void bench_assemble(benchmark::State& state) {
  const auto form = mixed_poisson_form(Family::RT, 2);
  const auto rep = forms::compile(form);
  auto mesh = std::make_shared<Mesh>(unit_square_mesh(32));
  const FunctionSpace space(mesh, form.arguments[0]);
  for (auto _ : state) {
    SparseMatrix A =
        assemble_matrix(rep, space, space, {}, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(A.eigen().valuePtr());
  }
}
BENCHMARK(bench_assemble)->Arg(1)->Arg(2)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
