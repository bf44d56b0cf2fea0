#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include "cornerfem/assembly.hpp"
#include "cornerfem/exact_solution.hpp"
#include "cornerfem/mesh.hpp"
#include "cornerfem/space.hpp"

namespace cornerfem {

// Error quadrature is deliberately hotter than assembly quadrature: the
// discretization error oscillates within cells, so the base rule runs at
// degree 2k+4 on twice-subdivided cells, and cells touching the singular
// point get the geometric grading on top.
struct ErrorPolicy {
  int base_degree = 6;
  int uniform_subdiv = 2;
  int annulus_depth = 24;
  int graded_degree = 12;
  int graded_subdiv = 1;
};

inline ErrorPolicy default_error_policy(Family fam) {
  ErrorPolicy p;
  p.base_degree = 2 * family_degree(fam) + 4;
  return p;
}

// Used by tests to pin reported errors against an independent, deeper rule.
inline ErrorPolicy oracle_error_policy(Family fam) {
  ErrorPolicy p;
  p.base_degree = 2 * family_degree(fam) + 6;
  p.uniform_subdiv = 3;
  p.annulus_depth = 40;
  p.graded_degree = 14;
  p.graded_subdiv = 3;
  return p;
}

struct ErrorReport {
  enum class Metric { L2Omega, FluxGamma, L2Strip };
  Metric metric = Metric::L2Omega;
  double value = 0.0;
  ErrorPolicy policy;
};

namespace detail {

inline QuadPolicy error_quad_policy(const ErrorPolicy& pol, const ExactSolution& sol) {
  QuadPolicy q;
  q.degree = pol.base_degree;
  q.uniform_subdiv = pol.uniform_subdiv;
  q.annulus_depth = pol.annulus_depth;
  q.graded_degree = pol.graded_degree;
  q.graded_subdiv = pol.graded_subdiv;
  if (auto x0 = sol.singular_point()) {
    q.graded = true;
    q.x0 = *x0;
  }
  return q;
}

// Squared L2 error on one cell.
inline double cell_l2_sq(const FemSpace& S, const std::vector<double>& u, int c,
                         const ExactSolution& sol, const QuadPolicy& q) {
  const Mesh& mesh = *S.mesh;
  const Vec cc = mesh.centroid(c);
  const int* cd = S.cdofs(c);
  const int nd = S.dofs_per_cell;
  double N[8];
  double acc = 0.0;
  for_cell_quadrature(mesh, c, q, [&](Vec t, Vec p, double w) {
    shape_values(S.family, t, N);
    double uh = 0.0;
    for (int i = 0; i < nd; ++i) uh += u[cd[i]] * N[i];
    const double diff = sol.u(p, sol.side_hint(p, cc)) - uh;
    acc += w * diff * diff;
  });
  return acc;
}

// Runs fn(c) for every cell index in `cells`, optionally on a small thread
// pool.  Each call writes only its own slot of the output array, and the
// caller sums slots in index order, so results do not depend on the thread
// count.
template <class F>
void for_each_indexed(const std::vector<int>& cells, int nthreads, F&& fn) {
  const int n = static_cast<int>(cells.size());
  nthreads = std::clamp(nthreads, 1, std::max(1, n));
  if (nthreads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int tid = 0; tid < nthreads; ++tid)
    pool.emplace_back([&, tid] {
      for (int i = tid; i < n; i += nthreads) fn(i);
    });
  for (auto& t : pool) t.join();
}

inline ErrorReport l2_on_cells(const FemSpace& S, const std::vector<double>& u,
                               const ExactSolution& sol, const std::vector<int>& cells,
                               ErrorReport::Metric metric, const ErrorPolicy& pol, int nthreads) {
  const QuadPolicy q = error_quad_policy(pol, sol);
  std::vector<double> contrib(cells.size(), 0.0);
  for_each_indexed(cells, nthreads,
                   [&](int i) { contrib[i] = cell_l2_sq(S, u, cells[i], sol, q); });
  double sum = 0.0;
  for (double v : contrib) sum += v;
  ErrorReport rep;
  rep.metric = metric;
  rep.value = std::sqrt(sum);
  rep.policy = pol;
  return rep;
}

}  // namespace detail

inline ErrorReport l2_error(const FemSpace& S, const std::vector<double>& u,
                            const ExactSolution& sol, const ErrorPolicy& pol = {},
                            int nthreads = 1) {
  std::vector<int> cells(S.mesh->num_cells());
  for (int c = 0; c < S.mesh->num_cells(); ++c) cells[c] = c;
  return detail::l2_on_cells(S, u, sol, cells, ErrorReport::Metric::L2Omega, pol, nthreads);
}

inline ErrorReport strip_l2_error(const FemSpace& S, const std::vector<double>& u,
                                  const ExactSolution& sol, const ErrorPolicy& pol = {},
                                  int nthreads = 1) {
  return detail::l2_on_cells(S, u, sol, element_layer_strip(*S.mesh),
                             ErrorReport::Metric::L2Strip, pol, nthreads);
}

// L2(Gamma) norm of the normal-derivative mismatch.  The discrete flux is the
// trace of the adjacent cell's gradient; each boundary edge has exactly one.
// Edges whose closure contains the singular point are split geometrically
// toward it, mirroring the area rules, with the innermost tip segment kept
// under the base rule.
inline ErrorReport flux_error(const FemSpace& S, const std::vector<double>& u,
                              const ExactSolution& sol, const ErrorPolicy& pol = {}) {
  const Mesh& mesh = *S.mesh;
  if (mesh.dim != 2)
    throw std::runtime_error("flux_error: only 2D boundaries are supported");
  const QuadRule& g = gauss_rule(6);
  const Vec corner[3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const int nd = S.dofs_per_cell;
  std::vector<Vec> gp(nd);
  double sum = 0.0;
  for (const auto& bf : mesh.boundary) {
    const Vec a = mesh.verts[bf.v[0]], b = mesh.verts[bf.v[1]];
    const Vec ta = corner[bf.local], tb = corner[(bf.local + 1) % 3];
    const Vec cc = mesh.centroid(bf.cell);
    const int* cd = S.cdofs(bf.cell);
    double acc = 0.0;
    auto segment = [&](double s0, double s1) {
      // 6-point Gauss on the edge parameter interval [s0, s1]
      for (size_t qi = 0; qi < g.pts.size(); ++qi) {
        const double s = s0 + (s1 - s0) * g.pts[qi].x;
        const Vec p = (1.0 - s) * a + s * b;
        const Vec t = (1.0 - s) * ta + s * tb;
        detail::physical_grads(mesh, bf.cell, S.family, t, gp.data());
        Vec gh{};
        for (int i = 0; i < nd; ++i) gh = gh + u[cd[i]] * gp[i];
        const Vec ge = sol.grad(p, sol.side_hint(p, cc));
        const double diff = dot(ge - gh, bf.normal);
        acc += g.w[qi] * (s1 - s0) * bf.measure * diff * diff;
      }
    };
    double sing_param = -1.0;
    if (auto x0 = sol.singular_point()) {
      if (dist_point_segment(*x0, a, b) < 1e-12) {
        const Vec d = b - a;
        sing_param = std::clamp(dot(*x0 - a, d) / dot(d, d), 0.0, 1.0);
      }
    }
    if (sing_param < 0.0) {
      segment(0.0, 1.0);
    } else {
      // grade [0, sing] and [sing, 1] toward the singular parameter
      for (double end : {0.0, 1.0}) {
        const double len = std::abs(end - sing_param);
        if (len < 1e-14) continue;
        double s = 1.0;
        for (int j = 0; j < pol.annulus_depth; ++j) {
          const double s2 = 0.5 * s;
          segment(sing_param + s2 * (end - sing_param), sing_param + s * (end - sing_param));
          s = s2;
        }
        segment(sing_param, sing_param + s * (end - sing_param));
      }
    }
    sum += acc;
  }
  ErrorReport rep;
  rep.metric = ErrorReport::Metric::FluxGamma;
  rep.value = std::sqrt(sum);
  rep.policy = pol;
  return rep;
}

// Observed decay rates.  2D meshes halve h each level, so consecutive errors
// give log2 ratios; the 3D column is an exponent with respect to N^(1/3),
// which reproduces the hexahedral reference rates.
inline std::vector<double> observed_rates(const std::vector<double>& errors,
                                          const std::vector<long long>& dofs, int d) {
  if (d != 2 && d != 3) throw std::invalid_argument("observed_rates: dimension must be 2 or 3");
  if (errors.size() > dofs.size())
    throw std::invalid_argument("observed_rates: more errors than dof counts");
  for (double e : errors)
    if (!(e > 0.0)) throw std::invalid_argument("observed_rates: errors must be positive");
  std::vector<double> rates;
  for (size_t i = 1; i < errors.size(); ++i) {
    if (d == 2)
      rates.push_back(std::log2(errors[i - 1] / errors[i]));
    else
      rates.push_back(std::log(errors[i - 1] / errors[i]) /
                      std::log(std::cbrt(static_cast<double>(dofs[i]) / dofs[i - 1])));
  }
  return rates;
}

// Least-squares slope of log2(error) against level over [first, last]; the
// property-style acceptance checks use this to smooth preasymptotic wiggle.
inline double fitted_rate(const std::vector<double>& errors, int first, int last) {
  if (first < 0 || last >= static_cast<int>(errors.size()) || last - first < 1)
    throw std::invalid_argument("fitted_rate: bad window");
  const int n = last - first + 1;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i = first; i <= last; ++i) {
    const double x = i, y = std::log2(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace cornerfem
