// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "tenfem/experiments.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using tenfem::Family;
using tenfem::MeshPattern;
namespace ex = tenfem::experiments;

void write_report(const ex::ExperimentReport& rep, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path base =
      std::filesystem::path(out_dir) / rep.experiment;
  {
    std::ofstream csv(base.string() + ".csv", std::ios::binary);
    csv << rep.csv();
  }
  {
    std::ofstream json(base.string() + ".json", std::ios::binary);
    json << rep.json();
  }
  for (const auto& [name, rate] : rep.rates)
    std::cout << "rate " << name << " = " << rate << "\n";
  if (!rep.eigenvalues.empty()) {
    std::cout << "eigenvalues:";
    for (double l : rep.eigenvalues) std::cout << ' ' << l;
    std::cout << "\n";
  }
  std::cout << (rep.pass ? "PASS" : "FAIL") << " (" << rep.experiment
            << "); reports in " << out_dir << "\n";
}

MeshPattern parse_pattern(const std::string& s) {
  if (s == "regular") return MeshPattern::Regular;
  if (s == "crisscross") return MeshPattern::CrissCross;
  throw CLI::ValidationError("--pattern must be regular or crisscross");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixed H(div)/H(curl) finite element experiments"};
  app.require_subcommand(1);

  std::string family = "RT", pattern = "regular", out_dir = ".", ns_list;
  int degree = 1, levels = 4, n = 0, threads = 1, count = 20;
  long seed = 0;
  double scale = 100.0, nu = 0.5, zeta = 0.2475;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--degree", degree, "element degree r");
    cmd->add_option("--levels", levels, "number of refinement levels");
    cmd->add_option("--n", n, "base mesh resolution");
    cmd->add_option("--pattern", pattern, "regular|crisscross");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--threads", threads, "assembly threads");
    cmd->add_option("--seed", seed, "random seed (recorded; runs are deterministic)");
  };

  auto* mp = app.add_subcommand("mixed-poisson", "mixed Poisson convergence");
  mp->add_option("--family", family, "RT|BDM");
  mp->add_option("--scale", scale, "manufactured solution scale C");
  add_common(mp);

  auto* cd = app.add_subcommand("curl-div", "3D Hodge Laplacian convergence");
  cd->add_option("--family", family, "RT|BDM (H(div) partner)");
  cd->add_option("--ns", ns_list, "comma-separated mesh resolutions");
  add_common(cd);

  auto* cav = app.add_subcommand("cavity-eigen", "cavity resonator eigenvalues");
  cav->add_option("--family", family, "NED1|Lagrange");
  cav->add_option("--count", count, "number of nonzero eigenvalues");
  add_common(cav);

  auto* el = app.add_subcommand("elasticity", "weak-symmetry elasticity");
  el->add_option("--nu", nu, "material parameter nu");
  el->add_option("--zeta", zeta, "material parameter zeta");
  add_common(el);

  CLI11_PARSE(app, argc, argv);

  try {
    ex::ExperimentReport rep;
    if (app.got_subcommand(mp)) {
      ex::MixedPoissonOptions opt;
      opt.family = family == "BDM" ? Family::BDM : Family::RT;
      opt.degree = degree;
      opt.levels = levels;
      if (n > 0) opt.n0 = n;
      opt.scale = scale;
      opt.pattern = parse_pattern(pattern);
      opt.threads = threads;
      rep = ex::run_mixed_poisson(opt);
    } else if (app.got_subcommand(cd)) {
      ex::CurlDivOptions opt;
      opt.hdiv_family = family == "BDM" ? Family::BDM : Family::RT;
      opt.degree = degree;
      opt.threads = threads;
      if (!ns_list.empty()) {
        opt.ns.clear();
        std::stringstream ss(ns_list);
        std::string tok;
        while (std::getline(ss, tok, ',')) opt.ns.push_back(std::stoi(tok));
      } else if (n > 0) {
        opt.ns.clear();
        for (int l = 0; l < levels; ++l) opt.ns.push_back(n << l);
      }
      rep = ex::run_curl_div(opt);
    } else if (app.got_subcommand(cav)) {
      ex::CavityOptions opt;
      opt.element = family == "Lagrange" ? Family::Lagrange : Family::NED1;
      opt.degree = degree;
      opt.n = n > 0 ? n : 16;
      opt.count = count;
      opt.pattern = cav->count("--pattern") ? parse_pattern(pattern)
                                            : MeshPattern::CrissCross;
      opt.threads = threads;
      rep = ex::run_cavity_eigen(opt);
    } else {
      ex::ElasticityOptions opt;
      opt.degree = degree;
      opt.levels = levels == 4 ? 3 : levels;
      if (n > 0) opt.n0 = n;
      opt.nu = nu;
      opt.zeta = zeta;
      opt.threads = threads;
      rep = ex::run_elasticity(opt);
    }
    write_report(rep, out_dir);
    return rep.pass ? 0 : 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}
