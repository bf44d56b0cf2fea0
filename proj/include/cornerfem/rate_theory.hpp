#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cornerfem/mesh.hpp"

namespace cornerfem {

// Predicted decay exponent for one metric: error ~ h^tau, possibly times a
// logarithm, possibly stated up to an arbitrarily small eps.  `cap` is the
// ceiling the metric can never exceed, and `active` names the argument of the
// min that produced tau.
struct RatePrediction {
  std::string metric;
  double tau = 0.0;
  bool minus_eps = false;
  bool log_factor = false;
  double cap = 0.0;
  std::string active;
  std::string caveat;
};

inline double singular_exponent(double omega) {
  if (!(omega > 0.0) || omega > 2.0 * M_PI + 1e-12)
    throw std::invalid_argument("singular_exponent: opening angle must lie in (0, 2*pi]");
  return M_PI / omega;
}

// Regularity gain of the solution operator on each domain.  The slit value is
// the limiting case of the theory; the Fichera cube never gets a number, its
// smooth-solution prediction comes from the cap alone.
struct ShiftIndex {
  double value = 1.0;
  bool symbolic = false;
  std::string caveat;
};

inline ShiftIndex shift_index(Domain dom) {
  switch (dom) {
    case Domain::UnitSquareCentered:
      return {1.0, false, ""};
    case Domain::LShape:
      return {2.0 / 3.0, false, ""};
    case Domain::Slit:
      return {0.5, false, "limiting case"};
    case Domain::FicheraCube:
      return {1.0, true, "shift index left symbolic"};
  }
  return {};
}

// tau = min(k+1, s-1+s0).  The k = 1 borderline can carry a logarithm, which
// is reported as a caveat rather than a flag.
inline RatePrediction predict_l2_global(int k, double s, const ShiftIndex& s0) {
  if (!(s >= 1.0)) throw std::invalid_argument("predict_l2_global: need s >= 1");
  if (s0.symbolic && std::isfinite(s))
    throw std::invalid_argument("predict_l2_global: no numeric shift index for this domain");
  RatePrediction p;
  p.metric = "l2_global";
  p.cap = k + 1.0;
  const double shifted = s - 1.0 + s0.value;
  if (shifted < p.cap) {
    p.tau = shifted;
    p.active = "s-1+s0";
  } else {
    p.tau = p.cap;
    p.active = "k+1 cap";
  }
  p.caveat = s0.caveat;
  if (k == 1) {
    if (!p.caveat.empty()) p.caveat += "; ";
    p.caveat += "k=1 borderline may carry a log factor";
  }
  return p;
}

// tau = min(1+k, s, min_j(-1+alpha_j+s_j-eps)); eps stays symbolic and is
// surfaced through minus_eps when a corner term is the active constraint.
inline RatePrediction predict_l2_local(int k, double s,
                                       const std::vector<std::pair<double, double>>& corners) {
  RatePrediction p;
  p.metric = "l2_local";
  p.cap = k + 1.0;
  p.tau = p.cap;
  p.active = "k+1 cap";
  if (s < p.tau) {
    p.tau = s;
    p.active = "global regularity s";
  }
  for (size_t j = 0; j < corners.size(); ++j) {
    const auto [alpha_j, s_j] = corners[j];
    if (alpha_j < 0.5 || alpha_j >= 1.0)
      throw std::invalid_argument("predict_l2_local: corner exponent outside [1/2, 1)");
    if (!(s_j > 1.0))
      throw std::invalid_argument("predict_l2_local: corner regularity must exceed 1");
    const double term = -1.0 + alpha_j + s_j;
    if (term < p.tau) {
      p.tau = term;
      p.active = "corner " + std::to_string(j);
      p.minus_eps = true;
    }
    if (alpha_j == 0.5) p.caveat = "limiting case";
  }
  return p;
}

// Flux and strip predictions run on the offset scale of the corollary: s = k
// is maximal regularity, s = 0 boundedness only.
inline RatePrediction predict_flux(int k, double s) {
  if (s < 0.0 || s > static_cast<double>(k))
    throw std::invalid_argument("predict_flux: offset outside [0, k]");
  RatePrediction p;
  p.metric = "flux";
  p.cap = k;
  p.tau = s;
  p.log_factor = k == 1;
  p.active = s == static_cast<double>(k) ? "maximal regularity" : "regularity offset";
  return p;
}

inline RatePrediction predict_strip(int k, double s) {
  if (s < 0.0 || s > static_cast<double>(k))
    throw std::invalid_argument("predict_strip: offset outside [0, k]");
  RatePrediction p;
  p.metric = "strip";
  p.cap = k + 1.5;
  p.tau = s + 1.5;
  p.log_factor = k == 1;
  p.active = s == static_cast<double>(k) ? "maximal regularity" : "regularity offset";
  return p;
}

}  // namespace cornerfem
