// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tenfem/assembly.hpp"
#include "tenfem/solve.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tenfem::experiments {

/// One refinement level of an experiment. Unset errors stay NaN and print as
/// empty CSV cells.
struct RunRecord {
  int level = 0;
  int n = 0;
  double h = 0.0;
  int dofs = 0;
  double err_L2_sigma = std::numeric_limits<double>::quiet_NaN();
  double err_Hdiv_sigma = std::numeric_limits<double>::quiet_NaN();
  double err_Hcurl_sigma = std::numeric_limits<double>::quiet_NaN();
  double err_L2_u = std::numeric_limits<double>::quiet_NaN();
  double err_Hdiv_u = std::numeric_limits<double>::quiet_NaN();
  double rate_running = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;  // reported in the JSON summary only
};

struct ExperimentReport {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::string exact_solution;
  std::vector<RunRecord> runs;
  /// Fitted convergence rates per reported error (least-squares slope of
  /// log error against log h over the last three usable levels).
  std::vector<std::pair<std::string, double>> rates;
  std::vector<double> eigenvalues;
  std::vector<double> exact_eigenvalues;
  std::vector<std::pair<std::string, std::string>> tolerances;
  bool pass = true;

  /// CSV with the fixed header level,n,h,dofs,err_L2_sigma,err_Hdiv_sigma,
  /// err_Hcurl_sigma,err_L2_u,err_Hdiv_u,rate_running,seconds. Wall times are
  /// left empty so two runs of the same experiment emit identical bytes.
  std::string csv() const;
  std::string json() const;
};

/// Least-squares slope of log(err) vs log(h) over the last (up to) three
/// levels with err >= 1e-9 (values below that sit at the precision floor).
double fit_rate(std::span<const double> h, std::span<const double> err);

struct MixedPoissonOptions {
  Family family = Family::RT;  // RT or BDM
  int degree = 1;
  int levels = 4;
  int n0 = 4;
  double scale = 100.0;  // C
  MeshPattern pattern = MeshPattern::Regular;
  int threads = 1;
};
ExperimentReport run_mixed_poisson(const MixedPoissonOptions& opt);

struct CurlDivOptions {
  Family hdiv_family = Family::RT;  // RT or BDM partner space
  int degree = 1;
  std::vector<int> ns = {2, 4, 8};
  int threads = 1;
};
ExperimentReport run_curl_div(const CurlDivOptions& opt);

struct CavityOptions {
  Family element = Family::NED1;  // NED1 or (vector) Lagrange
  int degree = 1;
  int n = 16;
  int count = 20;  // eigenvalues requested
  MeshPattern pattern = MeshPattern::CrissCross;
  int threads = 1;
};
ExperimentReport run_cavity_eigen(const CavityOptions& opt);

struct ElasticityOptions {
  int degree = 1;
  int levels = 3;
  int n0 = 4;
  double nu = 0.5;
  double zeta = 0.2475;
  int threads = 1;
};
ExperimentReport run_elasticity(const ElasticityOptions& opt);

/// First nonzero cavity eigenvalues m1^2 + ... + mn^2 on [0, pi]^dim with at
/// most one index zero, ascending with multiplicity.
std::vector<double> exact_cavity_eigenvalues(int dim, int count);

/// Manufactured exact solutions used by the runners, exposed so tests can
/// cross-check the hand-derived derivatives by finite differences.
AnalyticField mixed_poisson_exact_sigma(double C);
AnalyticField mixed_poisson_exact_f(double C);
AnalyticField curl_div_exact_u();
AnalyticField curl_div_exact_sigma();
AnalyticField curl_div_exact_f();
AnalyticField elasticity_exact_u();
AnalyticField elasticity_exact_sigma_row(int row, double nu);
AnalyticField elasticity_exact_f(double nu);

}  // namespace tenfem::experiments
