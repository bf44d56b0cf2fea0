#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cornerfem/geometry.hpp"

namespace cornerfem {

// Points live on reference cells: unit triangle {xi,eta >= 0, xi+eta <= 1},
// unit interval [0,1], unit cube [0,1]^3.  Weights include the reference
// measure, so sum(w) equals 1/2 (triangle) resp. 1 (interval, cube).
struct QuadRule {
  int exactness = 0;
  std::vector<Vec> pts;
  std::vector<double> w;
};

namespace detail {

inline void tri_orbit3(QuadRule& r, double a, double b, double weight) {
  // permutations of barycentric (a,b,b); (xi,eta) = (lambda_1, lambda_2)
  r.pts.push_back({b, b, 0.0});
  r.pts.push_back({a, b, 0.0});
  r.pts.push_back({b, a, 0.0});
  for (int i = 0; i < 3; ++i) r.w.push_back(0.5 * weight);
}

inline void tri_orbit6(QuadRule& r, double a, double b, double c, double weight) {
  const double l[6][2] = {{b, c}, {c, b}, {a, c}, {c, a}, {a, b}, {b, a}};
  for (auto& p : l) {
    r.pts.push_back({p[0], p[1], 0.0});
    r.w.push_back(0.5 * weight);
  }
}

}  // namespace detail

inline const QuadRule& gauss_rule(int n);

// Symmetric triangle rules, exact to the requested polynomial degree.
inline const QuadRule& tri_rule(int degree) {
  static const QuadRule deg2 = [] {
    QuadRule r;
    r.exactness = 2;
    detail::tri_orbit3(r, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0);
    return r;
  }();
  static const QuadRule deg4 = [] {
    QuadRule r;
    r.exactness = 4;
    detail::tri_orbit3(r, 0.108103018168070, 0.445948490915965, 0.223381589678011);
    detail::tri_orbit3(r, 0.816847572980459, 0.091576213509771, 0.109951743655322);
    return r;
  }();
  static const QuadRule deg6 = [] {
    QuadRule r;
    r.exactness = 6;
    detail::tri_orbit3(r, 0.501426509658179, 0.249286745170910, 0.116786275726379);
    detail::tri_orbit3(r, 0.873821971016996, 0.063089014491502, 0.050844906370207);
    detail::tri_orbit6(r, 0.053145049844816, 0.310352451033785, 0.636502499121399,
                       0.082851075618374);
    return r;
  }();
  // Degrees beyond 6: collapsed (Duffy) tensor Gauss.  xi = x, eta = y(1-x)
  // maps the square to the triangle with Jacobian 1-x; a monomial of total
  // degree d becomes degree d+1 per axis, so n >= (d+3)/2 Gauss points per
  // axis integrate it exactly.
  static QuadRule duffy_cache[16];
  if (degree <= 2) return deg2;
  if (degree <= 4) return deg4;
  if (degree <= 6) return deg6;
  if (degree > 14) throw std::invalid_argument("tri_rule: no rule of degree " + std::to_string(degree));
  QuadRule& r = duffy_cache[degree];
  if (r.pts.empty()) {
    const int n = (degree + 4) / 2;
    const QuadRule& g = gauss_rule(n);
    r.exactness = degree;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x = g.pts[i].x, y = g.pts[j].x;
        r.pts.push_back({x, y * (1.0 - x), 0.0});
        r.w.push_back(g.w[i] * g.w[j] * (1.0 - x));
      }
  }
  return r;
}

// Gauss-Legendre on [0,1], n points, exact to degree 2n-1.  Nodes from Newton
// iteration on P_n; converges to machine precision in a handful of steps.
inline const QuadRule& gauss_rule(int n) {
  static std::vector<QuadRule> cache(33);
  if (n < 1 || n > 32) throw std::invalid_argument("gauss_rule: n out of range");
  QuadRule& r = cache[n];
  if (!r.pts.empty()) return r;
  r.exactness = 2 * n - 1;
  for (int i = 1; i <= n; ++i) {
    double x = std::cos(M_PI * (i - 0.25) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.pts.push_back({0.5 * (1.0 + x), 0.0, 0.0});
    r.w.push_back(1.0 / ((1.0 - x * x) * dp * dp));
  }
  return r;
}

// Tensor product of 1D Gauss rules on the unit cube.
inline const QuadRule& hex_rule(int n_per_axis) {
  static std::vector<QuadRule> cache(9);
  if (n_per_axis < 1 || n_per_axis > 8)
    throw std::invalid_argument("hex_rule: points per axis out of range");
  QuadRule& r = cache[n_per_axis];
  if (!r.pts.empty()) return r;
  const QuadRule& g = gauss_rule(n_per_axis);
  r.exactness = g.exactness;
  for (int i = 0; i < n_per_axis; ++i)
    for (int j = 0; j < n_per_axis; ++j)
      for (int k = 0; k < n_per_axis; ++k) {
        r.pts.push_back({g.pts[i].x, g.pts[j].x, g.pts[k].x});
        r.w.push_back(g.w[i] * g.w[j] * g.w[k]);
      }
  return r;
}

}  // namespace cornerfem
