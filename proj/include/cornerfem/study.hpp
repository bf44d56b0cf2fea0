#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cornerfem/assembly.hpp"
#include "cornerfem/error_metrics.hpp"
#include "cornerfem/exact_solution.hpp"
#include "cornerfem/mesh.hpp"
#include "cornerfem/rate_theory.hpp"
#include "cornerfem/space.hpp"
#include "cornerfem/sparse.hpp"

namespace cornerfem {

struct StudyConfig {
  Domain domain = Domain::UnitSquareCentered;
  Family family = Family::P1;
  ExactSolution solution;
  int levels = -1;
  std::vector<std::string> metrics = {"l2"};
  double tolerance = 0.06;
  long long max_dofs = 0;
  std::string format = "csv";
  std::string output;
  double cg_tol = 1e-10;
  int cg_max_iter = 200000;
};

inline Domain parse_domain(const std::string& s) {
  if (s == "square") return Domain::UnitSquareCentered;
  if (s == "lshape") return Domain::LShape;
  if (s == "slit") return Domain::Slit;
  if (s == "fichera") return Domain::FicheraCube;
  throw std::invalid_argument("unknown domain: " + s);
}

inline const char* domain_name(Domain d) {
  switch (d) {
    case Domain::UnitSquareCentered: return "square";
    case Domain::LShape: return "lshape";
    case Domain::Slit: return "slit";
    case Domain::FicheraCube: return "fichera";
  }
  return "";
}

inline Family parse_family(const std::string& s) {
  if (s == "p1") return Family::P1;
  if (s == "p2") return Family::P2;
  if (s == "q1") return Family::Q1;
  throw std::invalid_argument("unknown family: " + s);
}

inline const char* family_name(Family f) {
  switch (f) {
    case Family::P1: return "p1";
    case Family::P2: return "p2";
    case Family::Q1: return "q1";
  }
  return "";
}

inline int default_levels(Family f) {
  switch (f) {
    case Family::P1: return 7;
    case Family::P2: return 6;
    case Family::Q1: return 4;
  }
  return 2;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& s, const std::string& key) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty())
    throw std::invalid_argument("config key " + key + ": not a number: " + s);
  return v;
}

inline long long parse_integer(const std::string& s, const std::string& key) {
  size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty())
    throw std::invalid_argument("config key " + key + ": not an integer: " + s);
  return v;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t end = s.find(',', pos);
    if (end == std::string::npos) end = s.size();
    out.push_back(trim(s.substr(pos, end - pos)));
    pos = end + 1;
  }
  return out;
}

}  // namespace detail

inline void validate_config(const StudyConfig& cfg) {
  if (cfg.levels < 2) throw std::invalid_argument("levels must be at least 2");
  const int ddim = cfg.domain == Domain::FicheraCube ? 3 : 2;
  if (cfg.solution.dim != ddim)
    throw std::invalid_argument("solution dimension does not match the domain");
  if ((cfg.family == Family::Q1) != (ddim == 3))
    throw std::invalid_argument("family q1 pairs with the fichera domain, p1/p2 with 2d domains");
  if (cfg.metrics.empty()) throw std::invalid_argument("metrics must not be empty");
  for (size_t i = 0; i < cfg.metrics.size(); ++i) {
    const std::string& m = cfg.metrics[i];
    if (m != "l2" && m != "flux" && m != "strip")
      throw std::invalid_argument("unknown metric: " + m);
    for (size_t j = 0; j < i; ++j)
      if (cfg.metrics[j] == m) throw std::invalid_argument("duplicate metric: " + m);
    if (m == "flux" && ddim == 3)
      throw std::invalid_argument("flux is only available on 2d domains");
  }
  if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (cfg.max_dofs < 0) throw std::invalid_argument("max_dofs must be nonnegative");
  if (cfg.format != "csv" && cfg.format != "markdown")
    throw std::invalid_argument("unknown format: " + cfg.format);
  if (!(cfg.cg_tol > 0.0)) throw std::invalid_argument("cg_tol must be positive");
  if (cfg.cg_max_iter < 1) throw std::invalid_argument("cg_max_iter must be at least 1");
}

// Flat key=value text, one pair per line; blank lines and whole-line '#'
// comments are skipped.  Keys: domain, family, solution, levels, metrics,
// tolerance, max_dofs, format, output, cg_tol, cg_max_iter.
inline StudyConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  " is not key=value: " + t);
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string val = detail::trim(t.substr(eq + 1));
    if (!kv.emplace(key, val).second)
      throw std::invalid_argument("duplicate config key: " + key);
  }
  for (const char* req : {"domain", "family", "solution"})
    if (!kv.count(req))
      throw std::invalid_argument("config missing required key: " + std::string(req));

  StudyConfig cfg;
  for (const auto& [key, val] : kv) {
    if (key == "domain") cfg.domain = parse_domain(val);
    else if (key == "family") cfg.family = parse_family(val);
    else if (key == "solution") cfg.solution = parse_solution(val);
    else if (key == "levels") cfg.levels = static_cast<int>(detail::parse_integer(val, key));
    else if (key == "metrics") cfg.metrics = detail::split_list(val);
    else if (key == "tolerance") cfg.tolerance = detail::parse_number(val, key);
    else if (key == "max_dofs") cfg.max_dofs = detail::parse_integer(val, key);
    else if (key == "format") cfg.format = val;
    else if (key == "output") cfg.output = val;
    else if (key == "cg_tol") cfg.cg_tol = detail::parse_number(val, key);
    else if (key == "cg_max_iter")
      cfg.cg_max_iter = static_cast<int>(detail::parse_integer(val, key));
    else throw std::invalid_argument("unknown config key: " + key);
  }
  if (cfg.levels < 0) cfg.levels = default_levels(cfg.family);
  validate_config(cfg);
  return cfg;
}

struct StudyRow {
  int level = 0;
  double h = 0.0;
  long long dofs = 0;
  std::vector<double> values;
};

struct VerdictResult {
  std::string metric;
  double observed = 0.0;
  double lo = 0.0, hi = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string explanation;
};

struct ConvergenceTable {
  int dim = 2;
  std::vector<std::string> metrics;
  std::vector<StudyRow> rows;
  std::vector<std::vector<double>> rates;
  std::vector<RatePrediction> predictions;
  std::vector<VerdictResult> verdicts;
};

// Pass iff the mean of the last two observed rates lands in
// [tau - tolerance, cap + tolerance]; a log-flagged prediction widens the
// lower bound by 0.05.
inline VerdictResult verdict(const std::vector<double>& rates, const RatePrediction& pred,
                             double tolerance) {
  if (rates.size() < 2) throw std::invalid_argument("verdict: needs at least three levels");
  VerdictResult v;
  v.metric = pred.metric;
  v.observed = 0.5 * (rates[rates.size() - 2] + rates[rates.size() - 1]);
  v.tolerance = tolerance;
  v.lo = pred.tau - tolerance - (pred.log_factor ? 0.05 : 0.0);
  v.hi = pred.cap + tolerance;
  v.pass = v.observed >= v.lo && v.observed <= v.hi;
  char buf[160];
  std::snprintf(buf, sizeof buf, "observed %.4g %s [%.4g, %.4g] for tau %.4g", v.observed,
                v.pass ? "inside" : "outside", v.lo, v.hi, pred.tau);
  v.explanation = buf;
  return v;
}

// Predictions for the configured metrics, derived from the solution's Besov
// regularity and the domain's corner data.  The l2 column gets the local
// predictor; the global shift-theorem bound rides along as l2_global for
// reference and never drives a verdict.  Flux and strip predictions run on
// the offset scale, where k means maximal regularity.
inline std::vector<RatePrediction> study_predictions(const StudyConfig& cfg) {
  const int k = family_degree(cfg.family);
  const BesovReport reg = besov_regularity(cfg.solution, cfg.domain);
  const std::vector<DomainCorner> corners = domain_corners(cfg.domain);
  std::vector<std::pair<double, double>> terms;
  for (size_t j = 0; j < corners.size(); ++j)
    terms.emplace_back(singular_exponent(corners[j].omega), reg.s_corner[j]);
  const double k_d = static_cast<double>(k);
  const double s_off = std::isfinite(reg.s) ? std::clamp(reg.s - 1.5, 0.0, k_d) : k_d;

  std::vector<RatePrediction> out;
  for (const std::string& m : cfg.metrics) {
    if (m == "l2") {
      RatePrediction local = predict_l2_local(k, reg.s, terms);
      local.metric = "l2";
      out.push_back(local);
      RatePrediction global = predict_l2_global(k, reg.s, shift_index(cfg.domain));
      global.metric = "l2_global";
      out.push_back(global);
    } else if (m == "flux") {
      out.push_back(predict_flux(k, s_off));
    } else {
      out.push_back(predict_strip(k, s_off));
    }
  }
  return out;
}

inline ConvergenceTable run_study(const StudyConfig& cfg, int nthreads = 1) {
  validate_config(cfg);
  const ExactSolution& sol = cfg.solution;
  ConvergenceTable t;
  t.dim = cfg.domain == Domain::FicheraCube ? 3 : 2;
  t.metrics = cfg.metrics;
  const ErrorPolicy epol = default_error_policy(cfg.family);

  std::vector<long long> dofs;
  std::vector<std::vector<double>> errs(cfg.metrics.size());
  for (int level = 0; level <= cfg.levels; ++level) {
    const Mesh mesh = build_mesh(cfg.domain, level);
    const FemSpace S = build_space(mesh, cfg.family);
    if (cfg.max_dofs > 0 && S.ndofs > cfg.max_dofs) {
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "study stopped before level %d: %d dofs exceed max_dofs=%lld; lower levels "
                    "or raise max_dofs if memory allows",
                    level, S.ndofs, cfg.max_dofs);
      throw std::runtime_error(buf);
    }

    Csr K = assemble_stiffness(S);
    QuadPolicy load_pol;
    load_pol.degree = 2 * family_degree(cfg.family) + 2;
    if (auto x0 = sol.singular_point()) {
      load_pol.graded = true;
      load_pol.x0 = *x0;
    }
    std::vector<double> b = assemble_load(
        S, [&](const Vec& p, const Vec& cc) { return sol.f(p, sol.side_hint(p, cc)); },
        load_pol);
    const ReducedSystem R = apply_dirichlet_nodal(
        S, K, b, [&](const Vec& p, const Vec& cc) { return sol.u(p, sol.side_hint(p, cc)); });

    CgStats stats;
    std::vector<double> x;
    try {
      x = solve_cg(R.K, R.b, &stats, cfg.cg_tol, cfg.cg_max_iter);
    } catch (const CgFailure& f) {
      throw std::runtime_error("cg failed at level " + std::to_string(level) +
                               ": relative residual " + std::to_string(f.residual) + " after " +
                               std::to_string(f.iterations) + " iterations");
    }
    const std::vector<double> u = compose_solution(R, x);

    StudyRow row;
    row.level = level;
    row.h = mesh.h();
    row.dofs = S.ndofs;
    for (size_t m = 0; m < cfg.metrics.size(); ++m) {
      double v = 0.0;
      if (cfg.metrics[m] == "l2") v = l2_error(S, u, sol, epol, nthreads).value;
      else if (cfg.metrics[m] == "flux") v = flux_error(S, u, sol, epol).value;
      else v = strip_l2_error(S, u, sol, epol, nthreads).value;
      row.values.push_back(v);
      errs[m].push_back(v);
    }
    dofs.push_back(S.ndofs);
    t.rows.push_back(row);
  }

  // A column that hits quadrature roundoff is degenerate: its rates would be
  // noise, so the rate cells stay empty and no verdict is issued.
  for (const auto& e : errs) {
    const bool degenerate =
        std::any_of(e.begin(), e.end(), [](double v) { return !(v > 1e-12); });
    t.rates.push_back(degenerate ? std::vector<double>{} : observed_rates(e, dofs, t.dim));
  }

  t.predictions = study_predictions(cfg);
  if (t.rows.size() >= 3) {
    for (size_t m = 0; m < cfg.metrics.size(); ++m) {
      if (t.rates[m].size() < 2) continue;
      for (const RatePrediction& p : t.predictions)
        if (p.metric == cfg.metrics[m]) {
          t.verdicts.push_back(verdict(t.rates[m], p, cfg.tolerance));
          break;
        }
    }
  }
  return t;
}

namespace detail {

inline std::string fmt_g6(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

inline std::string fmt_g4(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

inline std::string fmt_rate(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

inline std::string predict_line(const RatePrediction& p) {
  std::string s = "# predict " + p.metric + " tau=" + fmt_g4(p.tau);
  if (p.minus_eps) s += "-eps";
  s += " cap=" + fmt_g4(p.cap);
  s += p.log_factor ? " log=1" : " log=0";
  s += " active=" + p.active;
  return s;
}

inline std::string verdict_line(const VerdictResult& v) {
  return "# verdict " + v.metric + " observed=" + fmt_g4(v.observed) + " window=[" +
         fmt_g4(v.lo) + "," + fmt_g4(v.hi) + "] tolerance=" + fmt_g4(v.tolerance) +
         (v.pass ? " pass" : " fail");
}

inline std::string emit_csv(const ConvergenceTable& t) {
  std::string out = "level,h,dofs";
  for (const std::string& m : t.metrics) out += "," + m + "," + m + "_rate";
  out += "\n";
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const StudyRow& r = t.rows[i];
    out += std::to_string(r.level) + "," + fmt_g6(r.h) + "," + std::to_string(r.dofs);
    for (size_t m = 0; m < t.metrics.size(); ++m) {
      out += "," + fmt_g6(r.values[m]) + ",";
      if (i > 0 && t.rates[m].size() == t.rows.size() - 1) out += fmt_rate(t.rates[m][i - 1]);
    }
    out += "\n";
  }
  for (const RatePrediction& p : t.predictions) {
    out += predict_line(p) + "\n";
    if (!p.caveat.empty()) out += "# note " + p.metric + " " + p.caveat + "\n";
  }
  for (const VerdictResult& v : t.verdicts) out += verdict_line(v) + "\n";
  return out;
}

inline std::string emit_markdown(const ConvergenceTable& t) {
  std::string out = "| level | h | dofs |";
  std::string rule = "| ---: | ---: | ---: |";
  for (const std::string& m : t.metrics) {
    out += " " + m + " | rate |";
    rule += " ---: | ---: |";
  }
  out += "\n" + rule + "\n";
  for (size_t i = 0; i < t.rows.size(); ++i) {
    const StudyRow& r = t.rows[i];
    out += "| " + std::to_string(r.level) + " | " + fmt_g6(r.h) + " | " +
           std::to_string(r.dofs) + " |";
    for (size_t m = 0; m < t.metrics.size(); ++m) {
      out += " " + fmt_g6(r.values[m]) + " |";
      if (i > 0 && t.rates[m].size() == t.rows.size() - 1)
        out += " " + fmt_rate(t.rates[m][i - 1]) + " |";
      else
        out += "  |";
    }
    out += "\n";
  }
  out += "\n";
  for (const RatePrediction& p : t.predictions) {
    out += "Prediction (" + p.metric + "): tau " + fmt_g4(p.tau) + (p.minus_eps ? "-eps" : "") +
           ", cap " + fmt_g4(p.cap) + (p.log_factor ? ", with log factor" : "") +
           ", active constraint: " + p.active + ".";
    if (!p.caveat.empty()) out += " Note: " + p.caveat + ".";
    out += "\n";
  }
  for (const VerdictResult& v : t.verdicts)
    out += "Verdict (" + v.metric + "): " + v.explanation + ", tolerance " +
           fmt_g4(v.tolerance) + ": " + (v.pass ? "pass" : "fail") + ".\n";
  return out;
}

}  // namespace detail

inline std::string emit_table(const ConvergenceTable& t, const std::string& format) {
  if (format == "csv") return detail::emit_csv(t);
  if (format == "markdown") return detail::emit_markdown(t);
  throw std::invalid_argument("unknown table format: " + format);
}

// Reads the numeric part of a CSV emission back; footer lines are skipped.
inline ConvergenceTable parse_table(const std::string& text) {
  ConvergenceTable t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("parse_table: empty input");
  std::vector<std::string> head = detail::split_list(line);
  if (head.size() < 3 || head[0] != "level" || head[1] != "h" || head[2] != "dofs" ||
      (head.size() - 3) % 2 != 0)
    throw std::invalid_argument("parse_table: bad header: " + line);
  for (size_t i = 3; i < head.size(); i += 2) t.metrics.push_back(head[i]);
  t.rates.resize(t.metrics.size());
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> cols = detail::split_list(line);
    if (cols.size() != head.size())
      throw std::invalid_argument("parse_table: bad row: " + line);
    StudyRow row;
    row.level = static_cast<int>(detail::parse_integer(cols[0], "level"));
    row.h = detail::parse_number(cols[1], "h");
    row.dofs = detail::parse_integer(cols[2], "dofs");
    for (size_t m = 0; m < t.metrics.size(); ++m) {
      row.values.push_back(detail::parse_number(cols[3 + 2 * m], t.metrics[m]));
      const std::string& rc = cols[4 + 2 * m];
      if (!rc.empty()) t.rates[m].push_back(detail::parse_number(rc, t.metrics[m] + "_rate"));
    }
    t.rows.push_back(row);
  }
  return t;
}

struct ReproduceStudy {
  std::string label;
  StudyConfig cfg;
};

// Built-in study lists behind the reproduce subcommand, one study per table
// column.  Mesh vertex counts differ from the reference tables, so comparisons
// align by refinement level and look at rates.
inline std::vector<ReproduceStudy> reproduce_studies(const std::string& table_id) {
  auto corner2d = [](Domain dom, Family fam, double alpha, double a, Vec x0, int L) {
    StudyConfig c;
    c.domain = dom;
    c.family = fam;
    c.solution = make_corner_solution(alpha, a, x0);
    c.levels = L;
    return c;
  };
  std::vector<ReproduceStudy> out;
  if (table_id == "lshape1") {
    out.push_back({"alpha=0.75 at the corner, a=2/3",
                   corner2d(Domain::LShape, Family::P1, 0.75, 2.0 / 3.0, {0, 0, 0}, 7)});
    out.push_back({"alpha=0.75 on the edge, a=1",
                   corner2d(Domain::LShape, Family::P1, 0.75, 1.0, {0.5, 0, 0}, 7)});
    out.push_back({"alpha=0.75 at the top, a=1",
                   corner2d(Domain::LShape, Family::P1, 0.75, 1.0, {0, 1, 0}, 7)});
  } else if (table_id == "lshape2") {
    for (double alpha : {10.0 / 9.0, 4.0 / 3.0, 1.5})
      out.push_back({"alpha=" + detail::fmt_g4(alpha) + " at the corner, a=2/3",
                     corner2d(Domain::LShape, Family::P1, alpha, 2.0 / 3.0, {0, 0, 0}, 7)});
  } else if (table_id == "slit1") {
    out.push_back({"alpha=0.75 at the tip, a=1/2",
                   corner2d(Domain::Slit, Family::P1, 0.75, 0.5, {0, 0, 0}, 7)});
    out.push_back({"alpha=0.75 on the edge, a=1",
                   corner2d(Domain::Slit, Family::P1, 0.75, 1.0, {0.5, 0, 0}, 7)});
    out.push_back({"alpha=0.75 at the top, a=1",
                   corner2d(Domain::Slit, Family::P1, 0.75, 1.0, {0, 1, 0}, 7)});
  } else if (table_id == "slit2") {
    for (double alpha : {10.0 / 9.0, 4.0 / 3.0, 1.5})
      out.push_back({"alpha=" + detail::fmt_g4(alpha) + " at the tip, a=1/2",
                     corner2d(Domain::Slit, Family::P1, alpha, 0.5, {0, 0, 0}, 7)});
  } else if (table_id == "quadratic") {
    for (double alpha : {2.175, 2.275, 2.375})
      out.push_back({"alpha=" + detail::fmt_g4(alpha) + " at the corner, a=2/3",
                     corner2d(Domain::LShape, Family::P2, alpha, 2.0 / 3.0, {0, 0, 0}, 6)});
  } else if (table_id == "fichera") {
    StudyConfig c;
    c.domain = Domain::FicheraCube;
    c.family = Family::Q1;
    c.solution = make_fichera_smooth();
    c.levels = 4;
    out.push_back({"smooth", c});
  } else {
    throw std::invalid_argument("unknown table id: " + table_id +
                                " (expected lshape1, lshape2, slit1, slit2, quadratic, fichera)");
  }
  return out;
}

inline std::string emit_predictions(const StudyConfig& cfg) {
  validate_config(cfg);
  std::string out;
  for (const RatePrediction& p : study_predictions(cfg)) {
    out += detail::predict_line(p) + "\n";
    if (!p.caveat.empty()) out += "# note " + p.metric + " " + p.caveat + "\n";
  }
  return out;
}

inline int env_thread_count() {
  const char* s = std::getenv("CORNERFEM_NUM_THREADS");
  if (!s) return 1;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (end == s || *end != '\0' || v < 1) return 1;
  return static_cast<int>(std::min<long>(v, 64));
}

}  // namespace cornerfem
