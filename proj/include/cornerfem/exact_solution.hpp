#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cornerfem/geometry.hpp"
#include "cornerfem/mesh.hpp"

namespace cornerfem {

struct SingularEvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Manufactured solutions for -div(grad u) = f.
//
// CornerSingular2D is u = r^alpha * sin(a*phi) around x0 with
// f = (a^2 - alpha^2) r^(alpha-2) sin(a*phi); the polar angle phi is taken
// counterclockwise from the positive x-axis in [0, 2*pi).  The branch cut
// (the ray phi = 0) lies on the domain boundary in every shipped
// configuration; points exactly on it are two-valued whenever sin(2*pi*a)
// != 0, so evaluation there takes a side: +1 for the phi -> 0 limit (from
// above), -1 for phi -> 2*pi (from below).  side_hint derives the side from
// the centroid of an adjacent cell.
struct ExactSolution {
  enum class Kind { CornerSingular2D, SmoothFichera3D, Polynomial };
  struct Mono {
    double c = 0.0;
    int px = 0, py = 0, pz = 0;
  };

  Kind kind = Kind::Polynomial;
  int dim = 2;
  double alpha = 0.0, a = 0.0;
  Vec x0;
  std::vector<Mono> terms;

  std::optional<Vec> singular_point() const {
    if (kind == Kind::CornerSingular2D) return x0;
    return std::nullopt;
  }

  int side_hint(Vec p, Vec adjacent_centroid) const {
    if (kind != Kind::CornerSingular2D) return 0;
    if (p.y == x0.y && p.x > x0.x) return adjacent_centroid.y > x0.y ? 1 : -1;
    return 0;
  }

  double u(Vec p, int side = 0) const {
    switch (kind) {
      case Kind::CornerSingular2D: {
        const double dx = p.x - x0.x, dy = p.y - x0.y;
        const double r = std::hypot(dx, dy);
        if (r == 0.0) return 0.0;
        return std::pow(r, alpha) * std::sin(a * angle(dx, dy, side));
      }
      case Kind::SmoothFichera3D:
        return std::sin((p.x + p.y) * M_PI) * std::cos(2.0 * M_PI * p.z);
      case Kind::Polynomial: {
        double s = 0.0;
        for (const Mono& t : terms) s += t.c * ipow(p.x, t.px) * ipow(p.y, t.py) * ipow(p.z, t.pz);
        return s;
      }
    }
    return 0.0;
  }

  Vec grad(Vec p, int side = 0) const {
    switch (kind) {
      case Kind::CornerSingular2D: {
        const double dx = p.x - x0.x, dy = p.y - x0.y;
        const double r = std::hypot(dx, dy);
        if (r == 0.0) {
          if (alpha > 1.0) return {0.0, 0.0, 0.0};
          throw SingularEvalError("gradient evaluated at the singular point");
        }
        const double phi = angle(dx, dy, side);
        const double rm = std::pow(r, alpha - 1.0);
        const double s = std::sin(a * phi), c = std::cos(a * phi);
        const double cp = dx / r, sp = dy / r;
        return {rm * (alpha * s * cp - a * c * sp), rm * (alpha * s * sp + a * c * cp), 0.0};
      }
      case Kind::SmoothFichera3D: {
        const double s = std::sin((p.x + p.y) * M_PI), c = std::cos((p.x + p.y) * M_PI);
        const double cz = std::cos(2.0 * M_PI * p.z), sz = std::sin(2.0 * M_PI * p.z);
        return {M_PI * c * cz, M_PI * c * cz, -2.0 * M_PI * s * sz};
      }
      case Kind::Polynomial: {
        Vec g;
        for (const Mono& t : terms) {
          if (t.px > 0) g.x += t.c * t.px * ipow(p.x, t.px - 1) * ipow(p.y, t.py) * ipow(p.z, t.pz);
          if (t.py > 0) g.y += t.c * t.py * ipow(p.x, t.px) * ipow(p.y, t.py - 1) * ipow(p.z, t.pz);
          if (t.pz > 0) g.z += t.c * t.pz * ipow(p.x, t.px) * ipow(p.y, t.py) * ipow(p.z, t.pz - 1);
        }
        return g;
      }
    }
    return {};
  }

  // Load f = -laplace(u).
  double f(Vec p, int side = 0) const {
    switch (kind) {
      case Kind::CornerSingular2D: {
        const double dx = p.x - x0.x, dy = p.y - x0.y;
        const double r = std::hypot(dx, dy);
        if (r == 0.0) {
          if (alpha < 2.0) throw SingularEvalError("load evaluated at the singular point");
          return 0.0;
        }
        return (a * a - alpha * alpha) * std::pow(r, alpha - 2.0) *
               std::sin(a * angle(dx, dy, side));
      }
      case Kind::SmoothFichera3D:
        return 6.0 * M_PI * M_PI * u(p);
      case Kind::Polynomial: {
        double s = 0.0;
        for (const Mono& t : terms) {
          if (t.px > 1)
            s -= t.c * t.px * (t.px - 1) * ipow(p.x, t.px - 2) * ipow(p.y, t.py) * ipow(p.z, t.pz);
          if (t.py > 1)
            s -= t.c * t.py * (t.py - 1) * ipow(p.x, t.px) * ipow(p.y, t.py - 2) * ipow(p.z, t.pz);
          if (t.pz > 1)
            s -= t.c * t.pz * (t.pz - 1) * ipow(p.x, t.px) * ipow(p.y, t.py) * ipow(p.z, t.pz - 2);
        }
        return s;
      }
    }
    return 0.0;
  }

 private:
  static double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  }

  double angle(double dx, double dy, int side) const {
    if (dy == 0.0 && dx > 0.0) return side < 0 ? 2.0 * M_PI : 0.0;
    double phi = std::atan2(dy, dx);
    if (phi < 0.0) phi += 2.0 * M_PI;
    return phi;
  }
};

inline ExactSolution make_corner_solution(double alpha, double a, Vec x0) {
  if (alpha <= 0.0) throw std::invalid_argument("corner solution needs alpha > 0");
  ExactSolution s;
  s.kind = ExactSolution::Kind::CornerSingular2D;
  s.dim = 2;
  s.alpha = alpha;
  s.a = a;
  s.x0 = x0;
  return s;
}

inline ExactSolution make_fichera_smooth() {
  ExactSolution s;
  s.kind = ExactSolution::Kind::SmoothFichera3D;
  s.dim = 3;
  return s;
}

inline ExactSolution make_polynomial(int dim, std::vector<ExactSolution::Mono> terms) {
  ExactSolution s;
  s.kind = ExactSolution::Kind::Polynomial;
  s.dim = dim;
  s.terms = std::move(terms);
  return s;
}

struct DomainCorner {
  Vec pos;
  double omega;  // interior opening angle
};

// Reentrant corner descriptors of the shipped domains.  The Fichera corner
// structure is not reduced to a single 2D opening angle and stays empty.
inline std::vector<DomainCorner> domain_corners(Domain dom) {
  switch (dom) {
    case Domain::LShape:
      return {{{0.0, 0.0, 0.0}, 1.5 * M_PI}};
    case Domain::Slit:
      return {{{0.0, 0.0, 0.0}, 2.0 * M_PI}};
    default:
      return {};
  }
}

struct BesovReport {
  double s = std::numeric_limits<double>::infinity();
  std::vector<double> s_corner;  // one entry per domain corner
  bool integer_alpha = false;
};

// Scale of Besov smoothness the solution lives in: 1 + alpha for the corner
// solutions (local value +inf at corners away from x0), +inf for smooth ones.
// Integer alpha is flagged: the scale degenerates there.
inline BesovReport besov_regularity(const ExactSolution& sol, Domain dom) {
  BesovReport rep;
  const auto corners = domain_corners(dom);
  rep.s_corner.assign(corners.size(), std::numeric_limits<double>::infinity());
  if (sol.kind != ExactSolution::Kind::CornerSingular2D) return rep;
  rep.s = 1.0 + sol.alpha;
  rep.integer_alpha = sol.alpha == std::floor(sol.alpha);
  for (size_t j = 0; j < corners.size(); ++j) {
    const Vec d = corners[j].pos - sol.x0;
    if (norm(d) <= 1e-12) rep.s_corner[j] = 1.0 + sol.alpha;
  }
  return rep;
}

// Study-config keys: "corner{alpha=0.75,a=1.5707963,x0=0,0}",
// "fichera_smooth", "poly2d{c:px:py, ...}", "poly3d{c:px:py:pz, ...}".
inline ExactSolution parse_solution(const std::string& key) {
  auto fail = [&]() -> ExactSolution {
    throw std::invalid_argument("unrecognized solution key: " + key);
  };
  if (key == "fichera_smooth") return make_fichera_smooth();
  if (key.rfind("corner{", 0) == 0 && key.back() == '}') {
    double alpha, a, x, y;
    if (std::sscanf(key.c_str(), "corner{alpha=%lf,a=%lf,x0=%lf,%lf}", &alpha, &a, &x, &y) != 4)
      return fail();
    return make_corner_solution(alpha, a, {x, y, 0.0});
  }
  const bool p2 = key.rfind("poly2d{", 0) == 0, p3 = key.rfind("poly3d{", 0) == 0;
  if ((p2 || p3) && key.back() == '}') {
    std::vector<ExactSolution::Mono> terms;
    std::string body = key.substr(7, key.size() - 8);
    size_t pos = 0;
    while (pos < body.size()) {
      size_t end = body.find(',', pos);
      if (end == std::string::npos) end = body.size();
      ExactSolution::Mono t;
      int n = p2 ? std::sscanf(body.c_str() + pos, "%lf:%d:%d", &t.c, &t.px, &t.py)
                 : std::sscanf(body.c_str() + pos, "%lf:%d:%d:%d", &t.c, &t.px, &t.py, &t.pz);
      if (n != (p2 ? 3 : 4) || t.px < 0 || t.py < 0 || t.pz < 0) return fail();
      terms.push_back(t);
      pos = end + 1;
    }
    if (terms.empty()) return fail();
    return make_polynomial(p2 ? 2 : 3, std::move(terms));
  }
  return fail();
}

inline std::string solution_key(const ExactSolution& sol) {
  char buf[256];
  switch (sol.kind) {
    case ExactSolution::Kind::CornerSingular2D:
      std::snprintf(buf, sizeof buf, "corner{alpha=%.17g,a=%.17g,x0=%.17g,%.17g}", sol.alpha,
                    sol.a, sol.x0.x, sol.x0.y);
      return buf;
    case ExactSolution::Kind::SmoothFichera3D:
      return "fichera_smooth";
    case ExactSolution::Kind::Polynomial: {
      std::string out = sol.dim == 2 ? "poly2d{" : "poly3d{";
      for (size_t i = 0; i < sol.terms.size(); ++i) {
        const auto& t = sol.terms[i];
        if (sol.dim == 2)
          std::snprintf(buf, sizeof buf, "%.17g:%d:%d", t.c, t.px, t.py);
        else
          std::snprintf(buf, sizeof buf, "%.17g:%d:%d:%d", t.c, t.px, t.py, t.pz);
        out += buf;
        if (i + 1 < sol.terms.size()) out += ",";
      }
      return out + "}";
    }
  }
  return "";
}

}  // namespace cornerfem
