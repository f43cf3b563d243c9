// Copyright (c) the tenfem authors
// SPDX-License-Identifier: Apache-2.0

#include "tenfem/experiments.hpp"

#include "tenfem/forms.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace tenfem::experiments {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kErrorFloor = 1e-9;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12e", v);
  return buf;
}

std::string cell_or_empty(double v) {
  return std::isnan(v) ? std::string() : fmt(v);
}

double running_rate(double e_prev, double e_cur, double h_prev, double h_cur) {
  if (std::isnan(e_prev) || std::isnan(e_cur) || e_prev < kErrorFloor ||
      e_cur < kErrorFloor)
    return std::numeric_limits<double>::quiet_NaN();
  return std::log(e_prev / e_cur) / std::log(h_prev / h_cur);
}

class Stopwatch {
public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

double fit_rate(std::span<const double> h, std::span<const double> err) {
  std::vector<double> lh, le;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (!std::isnan(err[i]) && err[i] >= kErrorFloor) {
      lh.push_back(std::log(h[i]));
      le.push_back(std::log(err[i]));
    }
  const int m = static_cast<int>(lh.size());
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  const int use = std::min(3, m);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = m - use; i < m; ++i) {
    sx += lh[i];
    sy += le[i];
    sxx += lh[i] * lh[i];
    sxy += lh[i] * le[i];
  }
  return (use * sxy - sx * sy) / (use * sxx - sx * sx);
}

std::string ExperimentReport::csv() const {
  std::ostringstream os;
  os << "level,n,h,dofs,err_L2_sigma,err_Hdiv_sigma,err_Hcurl_sigma,err_L2_u,"
        "err_Hdiv_u,rate_running,seconds\n";
  for (const auto& r : runs) {
    os << r.level << ',' << r.n << ',' << fmt(r.h) << ',' << r.dofs << ','
       << cell_or_empty(r.err_L2_sigma) << ',' << cell_or_empty(r.err_Hdiv_sigma)
       << ',' << cell_or_empty(r.err_Hcurl_sigma) << ','
       << cell_or_empty(r.err_L2_u) << ',' << cell_or_empty(r.err_Hdiv_u) << ','
       << cell_or_empty(r.rate_running) << ',' << /* wall time: in JSON */ '\n';
  }
  return os.str();
}

std::string ExperimentReport::json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : parameters) params[k] = v;
  j["parameters"] = params;
  j["exact_solution"] = exact_solution;
  nlohmann::json lv = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json rec;
    rec["level"] = r.level;
    rec["n"] = r.n;
    rec["h"] = r.h;
    rec["dofs"] = r.dofs;
    rec["seconds"] = r.seconds;
    auto put = [&rec](const char* key, double v) {
      if (!std::isnan(v)) rec[key] = v;
    };
    put("err_L2_sigma", r.err_L2_sigma);
    put("err_Hdiv_sigma", r.err_Hdiv_sigma);
    put("err_Hcurl_sigma", r.err_Hcurl_sigma);
    put("err_L2_u", r.err_L2_u);
    put("err_Hdiv_u", r.err_Hdiv_u);
    put("rate_running", r.rate_running);
    lv.push_back(rec);
  }
  j["levels"] = lv;
  nlohmann::json rs = nlohmann::json::object();
  for (const auto& [k, v] : rates)
    if (!std::isnan(v)) rs[k] = v;
  j["rates"] = rs;
  if (!eigenvalues.empty()) j["eigenvalues"] = eigenvalues;
  if (!exact_eigenvalues.empty()) j["exact_eigenvalues"] = exact_eigenvalues;
  nlohmann::json tol = nlohmann::json::object();
  for (const auto& [k, v] : tolerances) tol[k] = v;
  j["tolerances"] = tol;
  j["pass"] = pass;
  return j.dump(2) + "\n";
}

std::vector<double> exact_cavity_eigenvalues(int dim, int count) {
  std::vector<double> vals;
  const int mmax = 2 * count + 4;  // generous enumeration bound
  if (dim == 2) {
    for (int m1 = 0; m1 <= mmax; ++m1)
      for (int m2 = 0; m2 <= mmax; ++m2) {
        if (m1 == 0 && m2 == 0) continue;
        vals.push_back(m1 * m1 + m2 * m2);
      }
  } else {
    for (int m1 = 0; m1 <= mmax; ++m1)
      for (int m2 = 0; m2 <= mmax; ++m2)
        for (int m3 = 0; m3 <= mmax; ++m3) {
          if ((m1 == 0) + (m2 == 0) + (m3 == 0) > 1) continue;
          vals.push_back(m1 * m1 + m2 * m2 + m3 * m3);
        }
  }
  std::sort(vals.begin(), vals.end());
  vals.resize(count);
  return vals;
}

// ---------------------------------------------------------------------------
// Mixed Poisson: -lap(u) = f on the unit square, u = C sin(pi x0) sin(pi x1).
// Flux sigma = -grad u = -C pi (cos sin, sin cos); f = -lap u = 2 pi^2 u.
// u vanishes on the boundary, so the natural condition holds and no dofs are
// constrained.

AnalyticField mixed_poisson_exact_sigma(double C) {
  return {2,
          [C](const Eigen::VectorXd& x) {
            Eigen::VectorXd v(2);
            v[0] = -C * kPi * std::cos(kPi * x[0]) * std::sin(kPi * x[1]);
            v[1] = -C * kPi * std::sin(kPi * x[0]) * std::cos(kPi * x[1]);
            return v;
          },
          [C](const Eigen::VectorXd& x) {
            return 2.0 * kPi * kPi * C * std::sin(kPi * x[0]) *
                   std::sin(kPi * x[1]);
          },
          {}};
}

AnalyticField mixed_poisson_exact_f(double C) {
  return {1,
          [C](const Eigen::VectorXd& x) {
            Eigen::VectorXd v(1);
            v[0] = 2.0 * kPi * kPi * C * std::sin(kPi * x[0]) *
                   std::sin(kPi * x[1]);
            return v;
          },
          {},
          {}};
}

ExperimentReport run_mixed_poisson(const MixedPoissonOptions& opt) {
  using namespace forms;
  const double C = opt.scale;
  ExperimentReport rep;
  rep.experiment = "mixed-poisson";
  rep.parameters = {
      {"family", opt.family == Family::RT ? "RT" : "BDM"},
      {"degree", std::to_string(opt.degree)},
      {"levels", std::to_string(opt.levels)},
      {"n0", std::to_string(opt.n0)},
      {"C", fmt(C)},
      {"pattern", opt.pattern == MeshPattern::Regular ? "regular" : "crisscross"},
  };
  rep.exact_solution = "u = C sin(pi x0) sin(pi x1); sigma = -grad u";
  const double expected_rate =
      opt.family == Family::RT ? opt.degree : opt.degree + 1;
  rep.tolerances = {{"rate_L2_sigma",
                     fmt(expected_rate) + " +/- 1.5e-1"}};

  const AnalyticField f_exact = mixed_poisson_exact_f(C);
  const AnalyticField sigma_exact = mixed_poisson_exact_sigma(C);

  const FiniteElement S =
      create_element(opt.family, CellType::Triangle, opt.degree);
  const FiniteElement V =
      create_element(Family::DiscontinuousLagrange, CellType::Triangle,
                     opt.degree - 1);
  const FiniteElement MX = mixed_element({S, V});
  // Data space one degree above the flux space keeps the data oscillation
  // below the BDM convergence order.
  const FiniteElement F = create_element(Family::DiscontinuousLagrange,
                                         CellType::Triangle, opt.degree + 1);

  const Expr tau = argument(0, 0), v = argument(0, 1);
  const Expr sig = argument(1, 0), u = argument(1, 1);
  const Expr a_expr = dot(tau, sig) - div(tau) * u + v * div(sig);
  const Expr L_expr = v * coefficient(0);
  const FormIR a{{MX, MX}, {}, a_expr};
  const FormIR L{{MX}, {F}, L_expr};
  const auto a_rep = compile(a);
  const auto L_rep = compile(L);

  std::vector<double> hs, errs;
  for (int level = 0; level < opt.levels; ++level) {
    Stopwatch timer;
    const int n = opt.n0 << level;
    auto mesh = std::make_shared<Mesh>(unit_square_mesh(n, opt.pattern, 1.0));
    auto space = std::make_shared<FunctionSpace>(mesh, MX);
    auto f_space = std::make_shared<FunctionSpace>(mesh, F);
    const DiscreteField f_h = interpolate(f_space, f_exact);

    SparseMatrix A = assemble_matrix(a_rep, *space, *space, {}, opt.threads);
    A.symmetric_structure = true;
    const Eigen::VectorXd b =
        assemble_vector(L_rep, *space, {&f_h, 1}, opt.threads);
    const LinearSolution sol = solve_linear(A, b);

    DiscreteField uh{space, sol.x};
    const DiscreteField sigma_h = sub_field(uh, 0);

    RunRecord rec;
    rec.level = level;
    rec.n = n;
    rec.h = mesh->h_max();
    rec.dofs = space->dim();
    rec.err_L2_sigma = error_norm(sigma_h, sigma_exact, ErrorNorm::L2);
    rec.seconds = timer.seconds();
    if (!rep.runs.empty())
      rec.rate_running = running_rate(rep.runs.back().err_L2_sigma,
                                      rec.err_L2_sigma, rep.runs.back().h, rec.h);
    hs.push_back(rec.h);
    errs.push_back(rec.err_L2_sigma);
    rep.runs.push_back(rec);
  }
  const double rate = fit_rate(hs, errs);
  rep.rates = {{"L2_sigma", rate}};
  rep.pass = !std::isnan(rate) ? std::abs(rate - expected_rate) <= 0.15
                               : errs.back() <= 1e-12;
  return rep;
}

// ---------------------------------------------------------------------------
// Curl-div Hodge Laplacian on the unit cube. With
//   u_i = x_i^2 (x_i - 1)^2 sin(pi x_j) sin(pi x_k)   (cyclic j, k)
// both u x n and div u vanish on the boundary, so the natural conditions
// hold. sigma = curl u, and curl sigma - grad div u = -lap u = f; since
// div u is not identically zero in the interior, curl sigma = f + grad div u.
// Writing b(t) = t^2 (t-1)^2:
//   div u       = sum_i b'(x_i) ss_i,       ss_i = sin(pi x_j) sin(pi x_k)
//   (grad div u)_i = b''(x_i) ss_i + pi cos(pi x_i) (b'(x_j) sin(pi x_k)
//                    + b'(x_k) sin(pi x_j))
//   f_i         = 2 pi^2 u_i - b''(x_i) ss_i.

namespace {

double bump(double t) { return t * t * (t - 1.0) * (t - 1.0); }
double dbump(double t) { return 2.0 * t * (t - 1.0) * (2.0 * t - 1.0); }
double ddbump(double t) { return 12.0 * t * t - 12.0 * t + 2.0; }

Eigen::Vector3d curl_div_u(const Eigen::VectorXd& x) {
  return {bump(x[0]) * std::sin(kPi * x[1]) * std::sin(kPi * x[2]),
          bump(x[1]) * std::sin(kPi * x[0]) * std::sin(kPi * x[2]),
          bump(x[2]) * std::sin(kPi * x[0]) * std::sin(kPi * x[1])};
}

double curl_div_div_u(const Eigen::VectorXd& x) {
  const double ss[3] = {std::sin(kPi * x[1]) * std::sin(kPi * x[2]),
                        std::sin(kPi * x[0]) * std::sin(kPi * x[2]),
                        std::sin(kPi * x[0]) * std::sin(kPi * x[1])};
  return dbump(x[0]) * ss[0] + dbump(x[1]) * ss[1] + dbump(x[2]) * ss[2];
}

Eigen::Vector3d curl_div_grad_div_u(const Eigen::VectorXd& x) {
  const double s[3] = {std::sin(kPi * x[0]), std::sin(kPi * x[1]),
                       std::sin(kPi * x[2])};
  const double c[3] = {std::cos(kPi * x[0]), std::cos(kPi * x[1]),
                       std::cos(kPi * x[2])};
  Eigen::Vector3d g;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    g[i] = ddbump(x[i]) * s[j] * s[k] +
           kPi * c[i] * (dbump(x[j]) * s[k] + dbump(x[k]) * s[j]);
  }
  return g;
}

Eigen::Vector3d curl_div_sigma(const Eigen::VectorXd& x) {
  // curl u, by direct differentiation of the cyclic components.
  const double s0 = std::sin(kPi * x[0]), c0 = std::cos(kPi * x[0]);
  const double s1 = std::sin(kPi * x[1]), c1 = std::cos(kPi * x[1]);
  const double s2 = std::sin(kPi * x[2]), c2 = std::cos(kPi * x[2]);
  const double b0 = bump(x[0]), b1 = bump(x[1]), b2 = bump(x[2]);
  return {kPi * s0 * (b2 * c1 - b1 * c2), kPi * s1 * (b0 * c2 - b2 * c0),
          kPi * s2 * (b1 * c0 - b0 * c1)};
}

Eigen::Vector3d curl_div_f(const Eigen::VectorXd& x) {
  // f = -lap u with lap u_i = b''(x_i) ss_i - 2 pi^2 u_i.
  const Eigen::Vector3d u = curl_div_u(x);
  Eigen::Vector3d f;
  const double ss[3] = {std::sin(kPi * x[1]) * std::sin(kPi * x[2]),
                        std::sin(kPi * x[0]) * std::sin(kPi * x[2]),
                        std::sin(kPi * x[0]) * std::sin(kPi * x[1])};
  for (int i = 0; i < 3; ++i)
    f[i] = 2.0 * kPi * kPi * u[i] - ddbump(x[i]) * ss[i];
  return f;
}

Eigen::Vector3d curl_div_curl_sigma(const Eigen::VectorXd& x) {
  return Eigen::Vector3d(curl_div_f(x) + curl_div_grad_div_u(x));
}

}  // namespace


AnalyticField curl_div_exact_u() {
  return {3,
          [](const Eigen::VectorXd& x) { return Eigen::VectorXd(curl_div_u(x)); },
          [](const Eigen::VectorXd& x) { return curl_div_div_u(x); },
          {}};
}

AnalyticField curl_div_exact_sigma() {
  return {3,
          [](const Eigen::VectorXd& x) {
            return Eigen::VectorXd(curl_div_sigma(x));
          },
          [](const Eigen::VectorXd&) { return 0.0; },
          [](const Eigen::VectorXd& x) {
            return Eigen::VectorXd(curl_div_curl_sigma(x));
          }};
}

AnalyticField curl_div_exact_f() {
  return {3,
          [](const Eigen::VectorXd& x) { return Eigen::VectorXd(curl_div_f(x)); },
          {},
          {}};
}

ExperimentReport run_curl_div(const CurlDivOptions& opt) {
  using namespace forms;
  // The stable pairings along the complex are NED1(d) x RT(d) and
  // NED1(d) x BDM(d-1): curl maps the edge space onto exactly those face
  // spaces. Pairing equal-degree NED1 and BDM yields a singular system.
  const int div_degree =
      opt.hdiv_family == Family::BDM ? opt.degree - 1 : opt.degree;
  if (div_degree < 1)
    throw std::invalid_argument("curl-div: BDM pairing needs degree >= 2");
  ExperimentReport rep;
  rep.experiment = "curl-div";
  std::string ns_str;
  for (int n : opt.ns) ns_str += (ns_str.empty() ? "" : " ") + std::to_string(n);
  rep.parameters = {
      {"hdiv_family", opt.hdiv_family == Family::RT ? "RT" : "BDM"},
      {"degree", std::to_string(opt.degree)},
      {"hdiv_degree", std::to_string(div_degree)},
      {"ns", ns_str},
  };
  rep.exact_solution =
      "u_i = x_i^2(x_i-1)^2 sin(pi x_j) sin(pi x_k); sigma = curl u";

  const int r = opt.degree;
  const bool bdm = opt.hdiv_family == Family::BDM;
  const double tol = bdm ? 0.25 : 0.2;
  const double exp_sigma = r, exp_u = r;
  const double exp_hdiv_u = bdm ? r - 1 : r;
  rep.tolerances = {
      {"rate_L2_sigma", fmt(exp_sigma) + " +/- " + fmt(tol)},
      {"rate_Hcurl_sigma", fmt(exp_sigma) + " +/- " + fmt(tol)},
      {"rate_L2_u", fmt(exp_u) + " +/- " + fmt(tol)},
      {"rate_Hdiv_u", fmt(exp_hdiv_u) + " +/- " + fmt(tol)},
  };

  const AnalyticField u_exact = curl_div_exact_u();
  const AnalyticField sigma_exact = curl_div_exact_sigma();
  const AnalyticField f_exact = curl_div_exact_f();

  const FiniteElement CURL =
      create_element(Family::NED1, CellType::Tetrahedron, opt.degree);
  const FiniteElement DIV =
      create_element(opt.hdiv_family, CellType::Tetrahedron, div_degree);
  const FiniteElement MX = mixed_element({CURL, DIV});
  const FiniteElement F = vector_element(create_element(
      Family::DiscontinuousLagrange, CellType::Tetrahedron, opt.degree + 2));

  const Expr tau = argument(0, 0), v = argument(0, 1);
  const Expr sig = argument(1, 0), u = argument(1, 1);
  const Expr a_expr = dot(tau, sig) - dot(curl(tau), u) + dot(v, curl(sig)) +
                      div(v) * div(u);
  const Expr L_expr = dot(v, coefficient(0));
  const auto a_rep = compile(FormIR{{MX, MX}, {}, a_expr});
  const auto L_rep = compile(FormIR{{MX}, {F}, L_expr});

  std::vector<double> hs, e_s, e_sc, e_u, e_ud;
  for (std::size_t level = 0; level < opt.ns.size(); ++level) {
    Stopwatch timer;
    const int n = opt.ns[level];
    auto mesh = std::make_shared<Mesh>(unit_cube_mesh(n));
    auto space = std::make_shared<FunctionSpace>(mesh, MX);
    auto f_space = std::make_shared<FunctionSpace>(mesh, F);
    const DiscreteField f_h = interpolate(f_space, f_exact);

    SparseMatrix A = assemble_matrix(a_rep, *space, *space, {}, opt.threads);
    A.symmetric_structure = true;
    const Eigen::VectorXd b =
        assemble_vector(L_rep, *space, {&f_h, 1}, opt.threads);
    const LinearSolution sol = solve_linear(A, b);

    DiscreteField mixed{space, sol.x};
    const DiscreteField sigma_h = sub_field(mixed, 0);
    const DiscreteField u_h = sub_field(mixed, 1);

    RunRecord rec;
    rec.level = static_cast<int>(level);
    rec.n = n;
    rec.h = mesh->h_max();
    rec.dofs = space->dim();
    rec.err_L2_sigma = error_norm(sigma_h, sigma_exact, ErrorNorm::L2);
    rec.err_Hcurl_sigma = error_norm(sigma_h, sigma_exact, ErrorNorm::Hcurl);
    rec.err_L2_u = error_norm(u_h, u_exact, ErrorNorm::L2);
    rec.err_Hdiv_u = error_norm(u_h, u_exact, ErrorNorm::Hdiv);
    rec.seconds = timer.seconds();
    if (!rep.runs.empty())
      rec.rate_running = running_rate(rep.runs.back().err_L2_sigma,
                                      rec.err_L2_sigma, rep.runs.back().h, rec.h);
    hs.push_back(rec.h);
    e_s.push_back(rec.err_L2_sigma);
    e_sc.push_back(rec.err_Hcurl_sigma);
    e_u.push_back(rec.err_L2_u);
    e_ud.push_back(rec.err_Hdiv_u);
    rep.runs.push_back(rec);
  }
  rep.rates = {{"L2_sigma", fit_rate(hs, e_s)},
               {"Hcurl_sigma", fit_rate(hs, e_sc)},
               {"L2_u", fit_rate(hs, e_u)},
               {"Hdiv_u", fit_rate(hs, e_ud)}};
  rep.pass = std::abs(rep.rates[0].second - exp_sigma) <= tol &&
             std::abs(rep.rates[1].second - exp_sigma) <= tol &&
             std::abs(rep.rates[2].second - exp_u) <= tol &&
             std::abs(rep.rates[3].second - exp_hdiv_u) <= tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Cavity resonator on [0, pi]^2: <rot F, rot E> = w^2 <F, E> with tangential
// boundary dofs removed. Edge elements approximate the true spectrum
// m1^2 + m2^2; vector Lagrange elements produce spurious modes.

ExperimentReport run_cavity_eigen(const CavityOptions& opt) {
  using namespace forms;
  ExperimentReport rep;
  rep.experiment = "cavity-eigen";
  rep.parameters = {
      {"element", opt.element == Family::NED1 ? "NED1" : "Lagrange"},
      {"degree", std::to_string(opt.degree)},
      {"n", std::to_string(opt.n)},
      {"count", std::to_string(opt.count)},
      {"pattern", opt.pattern == MeshPattern::Regular ? "regular" : "crisscross"},
  };
  rep.exact_solution = "omega^2 = m1^2 + m2^2, (m1, m2) != (0, 0)";
  rep.tolerances = {{"first5", "5e-2 relative"}, {"first10", "8e-2 relative"}};

  auto mesh = std::make_shared<Mesh>(unit_square_mesh(opt.n, opt.pattern, kPi));
  FiniteElement el =
      opt.element == Family::NED1
          ? create_element(Family::NED1, CellType::Triangle, opt.degree)
          : vector_element(
                create_element(Family::Lagrange, CellType::Triangle, opt.degree));
  auto space = std::make_shared<FunctionSpace>(mesh, el);

  const Expr F = argument(0), E = argument(1);
  const auto a_rep = compile(FormIR{{el, el}, {}, rot(F) * rot(E)});
  const auto m_rep = compile(FormIR{{el, el}, {}, dot(F, E)});

  Stopwatch timer;
  SparseMatrix A = assemble_matrix(a_rep, *space, *space, {}, opt.threads);
  SparseMatrix M = assemble_matrix(m_rep, *space, *space, {}, opt.threads);

  // Tangential boundary constraints: all dofs on boundary edges for edge
  // elements; for vector Lagrange, the along-edge component at the vertices
  // of each boundary edge (boundary edges of the square are axis-aligned).
  std::vector<int> constrained;
  if (opt.element == Family::NED1) {
    constrained = space->boundary_dofs();
  } else {
    std::vector<std::vector<int>> vertex_dofs(mesh->num_vertices());
    std::vector<std::vector<int>> edge_dofs(mesh->num_edges());
    for (int g = 0; g < space->dim(); ++g) {
      const DofInfo& di = space->dof_info(g);
      if (di.entity_dim == 0) {
        auto& vd = vertex_dofs[di.entity_index];
        vd.resize(2, -1);
        vd[di.component] = g;
      } else if (di.entity_dim == 1) {
        edge_dofs[di.entity_index].push_back(g);
      }
    }
    std::vector<char> picked(space->dim(), 0);
    auto pick = [&](int g) {
      if (g >= 0 && !picked[g]) {
        picked[g] = 1;
        constrained.push_back(g);
      }
    };
    for (int e = 0; e < mesh->num_edges(); ++e) {
      if (!mesh->facet_on_boundary(e)) continue;
      auto ev = mesh->edge(e);
      const auto& a = mesh->vertex(ev[0]);
      const auto& b = mesh->vertex(ev[1]);
      const int comp = std::abs(b[0] - a[0]) > std::abs(b[1] - a[1]) ? 0 : 1;
      for (int v : ev) pick(vertex_dofs[v][comp]);
      for (int g : edge_dofs[e])
        if (space->dof_info(g).component == comp) pick(g);
    }
    std::sort(constrained.begin(), constrained.end());
  }

  std::vector<char> is_constrained(space->dim(), 0);
  for (int g : constrained) is_constrained[g] = 1;
  std::vector<int> free;
  for (int g = 0; g < space->dim(); ++g)
    if (!is_constrained[g]) free.push_back(g);

  const SparseMatrix Af = restrict_to_dofs(A, free);
  const SparseMatrix Mf = restrict_to_dofs(M, free);
  const EigenSolution eig = solve_generalized_eigen(Af, Mf, opt.count);
  rep.eigenvalues = eig.eigenvalues;
  rep.exact_eigenvalues = exact_cavity_eigenvalues(2, opt.count);

  RunRecord rec;
  rec.level = 0;
  rec.n = opt.n;
  rec.h = mesh->h_max();
  rec.dofs = static_cast<int>(free.size());
  rec.seconds = timer.seconds();
  rep.runs.push_back(rec);

  auto within = [&](int count, double tol) {
    for (int i = 0; i < count; ++i) {
      const double exact = rep.exact_eigenvalues[i];
      if (std::abs(rep.eigenvalues[i] - exact) > tol * exact) return false;
    }
    return true;
  };
  const int k5 = std::min<int>(5, opt.count);
  const int k10 = std::min<int>(10, opt.count);
  const bool accurate = within(k5, 0.05) && within(k10, 0.08);
  // Edge elements must match the spectrum; the Lagrange run is the spurious
  // counterexample and "passes" by deviating.
  rep.pass = opt.element == Family::NED1 ? accurate : !accurate;
  return rep;
}

// ---------------------------------------------------------------------------
// Planar elasticity with weakly imposed stress symmetry. Manufactured
// displacement u = (-x1 sin(pi x0), pi x1^2 cos(pi x0) / 2) is divergence
// free, so with A sigma = nu sigma - zeta tr(sigma) I = eps(u) the exact
// stress is sigma = eps(u)/nu (trace-free) and f = div sigma = lap(u)/(2 nu):
//   sigma00 = -pi x1 cos(pi x0)/nu              sigma11 = -sigma00
//   sigma01 = sigma10 = -(1 + pi^2 x1^2/2) sin(pi x0)/(2 nu)
//   f = (pi^2 x1 sin(pi x0), pi cos(pi x0)(1 - pi^2 x1^2/2)) / (2 nu)
// gamma = rot u. u vanishes on {x1 = 0} only; the normal stress dofs on the
// other three sides are constrained to the interpolated exact values, which
// keeps the weak displacement condition consistent.


AnalyticField elasticity_exact_u() {
  return {2,
          [](const Eigen::VectorXd& x) {
            Eigen::VectorXd v(2);
            v << -x[1] * std::sin(kPi * x[0]),
                0.5 * kPi * x[1] * x[1] * std::cos(kPi * x[0]);
            return v;
          },
          [](const Eigen::VectorXd&) { return 0.0; },
          {}};
}

AnalyticField elasticity_exact_sigma_row(int row, double nu) {
  AnalyticField f;
  f.ncomp = 2;
  f.value = [nu, row](const Eigen::VectorXd& x) {
    const double s = std::sin(kPi * x[0]), c = std::cos(kPi * x[0]);
    const double s00 = -kPi * x[1] * c / nu;
    const double s01 = -(1.0 + 0.5 * kPi * kPi * x[1] * x[1]) * s / (2.0 * nu);
    Eigen::VectorXd v(2);
    if (row == 0)
      v << s00, s01;
    else
      v << s01, -s00;
    return v;
  };
  f.div = [nu, row](const Eigen::VectorXd& x) {
    const double s = std::sin(kPi * x[0]), c = std::cos(kPi * x[0]);
    if (row == 0) return kPi * kPi * x[1] * s / (2.0 * nu);
    return kPi * c * (1.0 - 0.5 * kPi * kPi * x[1] * x[1]) / (2.0 * nu);
  };
  return f;
}

AnalyticField elasticity_exact_f(double nu) {
  return {2,
          [nu](const Eigen::VectorXd& x) {
            const double s = std::sin(kPi * x[0]);
            const double c = std::cos(kPi * x[0]);
            Eigen::VectorXd v(2);
            v << kPi * kPi * x[1] * s / (2.0 * nu),
                kPi * c * (1.0 - 0.5 * kPi * kPi * x[1] * x[1]) / (2.0 * nu);
            return v;
          },
          {},
          {}};
}

ExperimentReport run_elasticity(const ElasticityOptions& opt) {
  using namespace forms;
  ExperimentReport rep;
  rep.experiment = "elasticity";
  rep.parameters = {
      {"degree", std::to_string(opt.degree)},
      {"levels", std::to_string(opt.levels)},
      {"n0", std::to_string(opt.n0)},
      {"nu", fmt(opt.nu)},
      {"zeta", fmt(opt.zeta)},
  };
  rep.exact_solution =
      "u = (-x1 sin(pi x0), pi x1^2 cos(pi x0)/2); sigma = eps(u)/nu";
  rep.tolerances = {{"rate_Hdiv_sigma",
                     fmt(static_cast<double>(opt.degree)) + " +/- 2e-1"}};
  const double nu = opt.nu;

  auto sigma_row = [nu](int row) { return elasticity_exact_sigma_row(row, nu); };
  const AnalyticField f_exact = elasticity_exact_f(nu);

  const int r = opt.degree;
  const FiniteElement S = create_element(Family::BDM, CellType::Triangle, r);
  const FiniteElement V = vector_element(
      create_element(Family::DiscontinuousLagrange, CellType::Triangle, r - 1));
  const FiniteElement Q =
      create_element(Family::DiscontinuousLagrange, CellType::Triangle, r - 1);
  const FiniteElement MX = mixed_element({S, S, V, Q});
  const FiniteElement F = vector_element(
      create_element(Family::DiscontinuousLagrange, CellType::Triangle, r + 1));

  const Expr tau0 = argument(0, 0), tau1 = argument(0, 1);
  const Expr v = argument(0, 2), eta = argument(0, 3);
  const Expr sig0 = argument(1, 0), sig1 = argument(1, 1);
  const Expr u = argument(1, 2), gam = argument(1, 3);

  auto compliance = [&](const Expr& s0, const Expr& s1, const Expr& t0,
                        const Expr& t1) {
    return opt.nu * (dot(s0, t0) + dot(s1, t1)) -
           opt.zeta * (trace({s0, s1}) * trace({t0, t1}));
  };
  auto coupling = [&](const Expr& t0, const Expr& t1, const Expr& w,
                      const Expr& q) {
    return div(t0) * component(w, 0) + div(t1) * component(w, 1) +
           skew({t0, t1}) * q;
  };
  const Expr a_expr = compliance(sig0, sig1, tau0, tau1) +
                      coupling(tau0, tau1, u, gam) +
                      coupling(sig0, sig1, v, eta);
  const Expr L_expr = dot(v, coefficient(0));
  const auto a_rep = compile(FormIR{{MX, MX}, {}, a_expr});
  const auto L_rep = compile(FormIR{{MX}, {F}, L_expr});

  std::vector<double> hs, errs;
  for (int level = 0; level < opt.levels; ++level) {
    Stopwatch timer;
    const int n = opt.n0 << level;
    auto mesh = std::make_shared<Mesh>(unit_square_mesh(n));
    auto space = std::make_shared<FunctionSpace>(mesh, MX);
    auto f_space = std::make_shared<FunctionSpace>(mesh, F);
    const DiscreteField f_h = interpolate(f_space, f_exact);

    SparseMatrix A = assemble_matrix(a_rep, *space, *space, {}, opt.threads);
    const Eigen::VectorXd b_vec =
        assemble_vector(L_rep, *space, {&f_h, 1}, opt.threads);
    Eigen::VectorXd b = b_vec;

    // Essential normal-stress dofs on the three sides where u != 0.
    auto s_space = std::make_shared<FunctionSpace>(mesh, S);
    const DiscreteField s0_h = interpolate(s_space, sigma_row(0));
    const DiscreteField s1_h = interpolate(s_space, sigma_row(1));
    std::vector<int> bc_dofs;
    std::vector<double> bc_values;
    for (int blk = 0; blk < 2; ++blk) {
      const int off = space->block_offset(blk);
      const DiscreteField& row = blk == 0 ? s0_h : s1_h;
      for (int g : space->boundary_dofs()) {
        const DofInfo& di = space->dof_info(g);
        if (di.block != blk || di.entity_dim != 1) continue;
        auto ev = mesh->edge(di.entity_index);
        if (mesh->vertex(ev[0])[1] == 0.0 && mesh->vertex(ev[1])[1] == 0.0)
          continue;  // natural side {x1 = 0}
        bc_dofs.push_back(g);
        bc_values.push_back(row.coefficients[g - off]);
      }
    }
    apply_essential_bc(A, b, bc_dofs, bc_values);
    const LinearSolution sol = solve_linear(A, b);

    DiscreteField mixed{space, sol.x};
    const DiscreteField row0 = sub_field(mixed, 0);
    const DiscreteField row1 = sub_field(mixed, 1);
    const double e0 = error_norm(row0, sigma_row(0), ErrorNorm::Hdiv);
    const double e1 = error_norm(row1, sigma_row(1), ErrorNorm::Hdiv);

    RunRecord rec;
    rec.level = level;
    rec.n = n;
    rec.h = mesh->h_max();
    rec.dofs = space->dim();
    rec.err_Hdiv_sigma = std::sqrt(e0 * e0 + e1 * e1);
    rec.seconds = timer.seconds();
    if (!rep.runs.empty())
      rec.rate_running =
          running_rate(rep.runs.back().err_Hdiv_sigma, rec.err_Hdiv_sigma,
                       rep.runs.back().h, rec.h);
    hs.push_back(rec.h);
    errs.push_back(rec.err_Hdiv_sigma);
    rep.runs.push_back(rec);
  }
  const double rate = fit_rate(hs, errs);
  rep.rates = {{"Hdiv_sigma", rate}};
  rep.pass = !std::isnan(rate) ? std::abs(rate - opt.degree) <= 0.2
                               : errs.back() <= 1e-12;
  return rep;
}

}  // namespace tenfem::experiments
