#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cornerfem/study.hpp"

using namespace cornerfem;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

StudyConfig corner_config(Domain dom, Family fam, double alpha, double a, Vec x0, int levels) {
  StudyConfig c;
  c.domain = dom;
  c.family = fam;
  c.solution = make_corner_solution(alpha, a, x0);
  c.levels = levels;
  return c;
}

// Solve one level and return the default-policy and oracle-policy L2 errors.
std::pair<double, double> level_errors(const StudyConfig& cfg, int level) {
  const Mesh mesh = build_mesh(cfg.domain, level);
  const FemSpace S = build_space(mesh, cfg.family);
  const ExactSolution& sol = cfg.solution;
  Csr K = assemble_stiffness(S);
  QuadPolicy load_pol;
  load_pol.degree = 2 * family_degree(cfg.family) + 2;
  if (auto x0 = sol.singular_point()) {
    load_pol.graded = true;
    load_pol.x0 = *x0;
  }
  std::vector<double> b = assemble_load(
      S, [&](const Vec& p, const Vec& cc) { return sol.f(p, sol.side_hint(p, cc)); }, load_pol);
  const ReducedSystem R = apply_dirichlet_nodal(
      S, K, b, [&](const Vec& p, const Vec& cc) { return sol.u(p, sol.side_hint(p, cc)); });
  const std::vector<double> u = compose_solution(R, solve_cg(R.K, R.b));
  return {l2_error(S, u, sol, default_error_policy(cfg.family)).value,
          l2_error(S, u, sol, oracle_error_policy(cfg.family)).value};
}

struct RateRun {
  double rate = 0.0;
  long long dofs = 0;
  double secs = 0.0;
};

RateRun finest_rate(const StudyConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const ConvergenceTable t = run_study(cfg);
  RateRun r;
  r.rate = t.rates[0].back();
  r.dofs = t.rows.back().dofs;
  r.secs = seconds_since(t0);
  return r;
}

// Reference convergence histories; printed rates rounded to two decimals.
const std::vector<long long> kLshapeDofs = {81,     289,    1089,    4225,   16641,
                                            66049,  263169, 1050625, 4198401};
const std::vector<std::pair<std::vector<double>, std::vector<double>>> kLshapeColumns = {
    {{6.1585e-03, 2.6986e-03, 1.1123e-03, 4.4037e-04, 1.7107e-04, 6.5689e-05, 2.5030e-05,
      9.4877e-06, 3.5834e-06},
     {1.19, 1.28, 1.34, 1.36, 1.38, 1.39, 1.40, 1.40}},
    {{6.8141e-03, 2.5648e-03, 8.8428e-04, 2.9202e-04, 9.4164e-05, 2.9909e-05, 9.4012e-06,
      2.9328e-06, 9.0968e-07},
     {1.41, 1.54, 1.60, 1.63, 1.65, 1.67, 1.68, 1.69}},
    {{6.2506e-03, 2.1211e-03, 6.7413e-04, 2.0903e-04, 6.4027e-05, 1.9471e-05, 5.8930e-06,
      1.7774e-06, 5.3475e-07},
     {1.56, 1.65, 1.69, 1.71, 1.72, 1.72, 1.73, 1.73}}};
const std::vector<long long> kFicheraDofs = {316, 3032, 26416, 220256, 1798336, 14532992};
const std::vector<double> kFicheraErrors = {0.075444,   0.017182,   0.0039376,
                                            0.00094597, 0.00023208, 5.7491e-05};
const std::vector<double> kFicheraRates = {1.96, 2.04, 2.02, 2.01, 2.00};

}  // namespace

int main() {
  bool all_pass = true;
  auto report = [&](int id, bool pass, const std::string& detail) {
    std::printf("criterion %2d %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) all_pass = false;
  };
  auto guarded = [&](int id, auto fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what());
    }
  };
  char buf[256];

  guarded(1, [&] {
    double worst = 0.0;
    for (Domain dom : {Domain::UnitSquareCentered, Domain::LShape, Domain::Slit}) {
      StudyConfig cfg;
      cfg.domain = dom;
      cfg.family = Family::P1;
      cfg.solution = make_polynomial(2, {{1.0, 0, 0, 0}, {2.0, 1, 0, 0}, {-3.0, 0, 1, 0}});
      cfg.levels = 4;
      for (const StudyRow& r : run_study(cfg).rows) worst = std::max(worst, r.values[0]);
    }
    std::snprintf(buf, sizeof buf,
                  "patch test: max l2 error %.3g over square/lshape/slit, levels 0-4 (<= 1e-9)",
                  worst);
    report(1, worst <= 1e-9, buf);
  });

  guarded(2, [&] {
    const RateRun r =
        finest_rate(corner_config(Domain::LShape, Family::P1, 0.75, 2.0 / 3.0, {0, 0, 0}, 7));
    std::snprintf(buf, sizeof buf,
                  "l-shape corner alpha=0.75: rate %.2f vs 1.40 +/- 0.06 at %lld dofs, %.0f s",
                  r.rate, r.dofs, r.secs);
    report(2, std::abs(r.rate - 1.40) <= 0.06 && r.dofs >= 100000 && r.secs <= 300.0, buf);
  });

  guarded(3, [&] {
    const RateRun r = finest_rate(
        corner_config(Domain::LShape, Family::P1, 1.5, 2.0 / 3.0, {0, 0, 0}, 7));
    std::snprintf(buf, sizeof buf, "l-shape corner alpha=3/2: rate %.2f vs 1.97 +/- 0.06", r.rate);
    report(3, std::abs(r.rate - 1.97) <= 0.06, buf);
  });

  guarded(4, [&] {
    const RateRun r =
        finest_rate(corner_config(Domain::LShape, Family::P1, 0.75, 1.0, {0, 1, 0}, 7));
    std::snprintf(buf, sizeof buf, "l-shape top alpha=0.75: rate %.2f vs 1.72 +/- 0.06", r.rate);
    report(4, std::abs(r.rate - 1.72) <= 0.06, buf);
  });

  guarded(5, [&] {
    const RateRun r =
        finest_rate(corner_config(Domain::Slit, Family::P1, 0.75, 0.5, {0, 0, 0}, 7));
    std::snprintf(buf, sizeof buf, "slit tip alpha=0.75: rate %.2f vs 1.24 +/- 0.06", r.rate);
    report(5, std::abs(r.rate - 1.24) <= 0.06, buf);
  });

  guarded(6, [&] {
    const RateRun r = finest_rate(
        corner_config(Domain::LShape, Family::P2, 2.375, 2.0 / 3.0, {0, 0, 0}, 6));
    std::snprintf(buf, sizeof buf,
                  "quadratic alpha=2.375: rate %.2f vs 3.01 +/- 0.10 at %lld dofs, %.0f s",
                  r.rate, r.dofs, r.secs);
    report(6, std::abs(r.rate - 3.01) <= 0.10 && r.secs <= 600.0, buf);
  });

  guarded(7, [&] {
    StudyConfig cfg;
    cfg.domain = Domain::FicheraCube;
    cfg.family = Family::Q1;
    cfg.solution = make_fichera_smooth();
    cfg.levels = 4;
    const RateRun r = finest_rate(cfg);
    std::snprintf(buf, sizeof buf,
                  "fichera smooth: dof-based rate %.2f vs 2.02 +/- 0.05 at %lld dofs, %.0f s",
                  r.rate, r.dofs, r.secs);
    report(7, std::abs(r.rate - 2.02) <= 0.05 && r.secs <= 600.0, buf);
  });

  guarded(8, [&] {
    double worst = 0.0;
    auto check = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
    check(predict_l2_local(1, 1.75, {{2.0 / 3.0, 1.75}}).tau, 17.0 / 12.0);
    check(predict_l2_local(1, 1.75, {{2.0 / 3.0, kInf}}).tau, 1.75);
    check(predict_l2_local(1, 1.75, {{0.5, 1.75}}).tau, 1.25);
    for (double alpha : {2.175, 2.275, 2.375})
      check(predict_l2_local(2, 1.0 + alpha, {{2.0 / 3.0, 1.0 + alpha}}).tau,
            std::min(3.0, 2.0 / 3.0 + alpha));
    for (double alpha : {0.5, 2.0 / 3.0, 0.75, 1.01, 10.0 / 9.0, 4.0 / 3.0, 1.5})
      check(predict_l2_local(1, 1.0 + alpha, {{0.5, 1.0 + alpha}}).tau,
            std::min(2.0, 0.5 + alpha));
    std::snprintf(buf, sizeof buf,
                  "golden predictions 1.417/1.75/1.25 and both families: max deviation %.2g",
                  worst);
    report(8, worst <= 1e-9, buf);
  });

  guarded(9, [&] {
    double worst = 0.0;
    for (const auto& [errors, printed] : kLshapeColumns) {
      const std::vector<double> rates = observed_rates(errors, kLshapeDofs, 2);
      for (size_t i = 0; i < printed.size(); ++i)
        worst = std::max(worst, std::abs(rates[i] - printed[i]));
    }
    const std::vector<double> rates3 = observed_rates(kFicheraErrors, kFicheraDofs, 3);
    for (size_t i = 0; i < kFicheraRates.size(); ++i)
      worst = std::max(worst, std::abs(rates3[i] - kFicheraRates[i]));
    std::snprintf(buf, sizeof buf,
                  "recorded rate columns reproduced: max deviation %.3f (<= 0.01)", worst);
    report(9, worst <= 0.01, buf);
  });

  guarded(10, [&] {
    StudyConfig cfg;
    cfg.domain = Domain::UnitSquareCentered;
    cfg.family = Family::P1;
    cfg.solution = make_polynomial(2, {{1.0, 4, 0, 0}, {1.0, 0, 4, 0}});
    cfg.levels = 6;
    cfg.metrics = {"strip"};
    std::vector<double> errors;
    for (const StudyRow& r : run_study(cfg).rows) errors.push_back(r.values[0]);
    const double fitted = fitted_rate(errors, 3, 6);
    std::snprintf(buf, sizeof buf, "smooth square strip: fitted rate %.2f over levels 3-6 (>= 2.3)",
                  fitted);
    report(10, fitted >= 2.3, buf);
  });

  guarded(11, [&] {
    double fit[2] = {0.0, 0.0};
    const Family fams[2] = {Family::P1, Family::P2};
    for (int i = 0; i < 2; ++i) {
      StudyConfig cfg;
      cfg.domain = Domain::LShape;
      cfg.family = fams[i];
      cfg.solution = make_polynomial(2, {{1.0, 4, 0, 0}, {1.0, 0, 4, 0}});
      cfg.levels = 6;
      cfg.metrics = {"flux"};
      std::vector<double> errors;
      for (const StudyRow& r : run_study(cfg).rows) errors.push_back(r.values[0]);
      fit[i] = fitted_rate(errors, 4, 6);
    }
    std::snprintf(buf, sizeof buf,
                  "smooth l-shape flux: fitted rates p1 %.2f (>= 0.9), p2 %.2f (>= 1.85)",
                  fit[0], fit[1]);
    report(11, fit[0] >= 0.9 && fit[1] >= 1.85, buf);
  });

  guarded(12, [&] {
    const auto [def, orc] = level_errors(
        corner_config(Domain::LShape, Family::P1, 0.75, 2.0 / 3.0, {0, 0, 0}, 4), 4);
    const double rel = std::abs(def - orc) / orc;
    std::snprintf(buf, sizeof buf,
                  "level-4 singular l2 vs deeper oracle: relative gap %.2e (<= 1e-3)", rel);
    report(12, rel <= 1e-3, buf);
  });

  std::printf("%s\n", all_pass ? "acceptance: all criteria passed"
                               : "acceptance: at least one criterion failed");
  return all_pass ? 0 : 1;
}
