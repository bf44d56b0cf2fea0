#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "cornerfem/rate_theory.hpp"

using namespace cornerfem;
using Catch::Approx;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("singular exponent of an opening angle", "[rates]") {
  CHECK(singular_exponent(1.5 * M_PI) == Approx(2.0 / 3.0));
  CHECK(singular_exponent(M_PI) == Approx(1.0));
  CHECK(singular_exponent(2.0 * M_PI) == Approx(0.5));
  CHECK(singular_exponent(0.5 * M_PI) == Approx(2.0));
  CHECK_THROWS_AS(singular_exponent(0.0), std::invalid_argument);
  CHECK_THROWS_AS(singular_exponent(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(singular_exponent(2.0 * M_PI + 0.1), std::invalid_argument);
}

TEST_CASE("shift index per domain", "[rates]") {
  CHECK(shift_index(Domain::UnitSquareCentered).value == Approx(1.0));
  CHECK(shift_index(Domain::LShape).value == Approx(2.0 / 3.0));
  CHECK_FALSE(shift_index(Domain::LShape).symbolic);

  const ShiftIndex slit = shift_index(Domain::Slit);
  CHECK(slit.value == Approx(0.5));
  CHECK(slit.caveat == "limiting case");

  CHECK(shift_index(Domain::FicheraCube).symbolic);
}

TEST_CASE("global l2 prediction", "[rates]") {
  const RatePrediction p = predict_l2_global(1, 1.75, shift_index(Domain::LShape));
  CHECK(p.tau == Approx(0.75 + 2.0 / 3.0));
  CHECK(p.cap == Approx(2.0));
  CHECK(p.active == "s-1+s0");
  CHECK(p.caveat.find("log") != std::string::npos);

  const RatePrediction smooth = predict_l2_global(2, kInf, shift_index(Domain::UnitSquareCentered));
  CHECK(smooth.tau == Approx(3.0));
  CHECK(smooth.active == "k+1 cap");
  CHECK(smooth.caveat.empty());

  const RatePrediction fichera = predict_l2_global(1, kInf, shift_index(Domain::FicheraCube));
  CHECK(fichera.tau == Approx(2.0));

  CHECK_THROWS_AS(predict_l2_global(1, 0.5, shift_index(Domain::LShape)), std::invalid_argument);
  CHECK_THROWS_AS(predict_l2_global(1, 1.75, shift_index(Domain::FicheraCube)),
                  std::invalid_argument);
}

TEST_CASE("local l2 prediction golden values", "[rates]") {
  SECTION("reentrant corner of the l-shape") {
    const RatePrediction p = predict_l2_local(1, 1.75, {{2.0 / 3.0, 1.75}});
    CHECK(p.tau == Approx(17.0 / 12.0));
    CHECK(p.minus_eps);
    CHECK(p.active.find("corner") != std::string::npos);
  }
  SECTION("singularity away from the corner") {
    const RatePrediction p = predict_l2_local(1, 1.75, {{2.0 / 3.0, kInf}});
    CHECK(p.tau == Approx(1.75));
    CHECK_FALSE(p.minus_eps);
    CHECK(p.active == "global regularity s");
  }
  SECTION("slit tip") {
    const RatePrediction p = predict_l2_local(1, 1.75, {{0.5, 1.75}});
    CHECK(p.tau == Approx(1.25));
    CHECK(p.minus_eps);
    CHECK(p.caveat == "limiting case");
  }
  SECTION("quadratic series at the l-shape corner") {
    for (double alpha : {2.175, 2.275, 2.375}) {
      const RatePrediction p = predict_l2_local(2, 1.0 + alpha, {{2.0 / 3.0, 1.0 + alpha}});
      CHECK(p.tau == Approx(std::min(3.0, 2.0 / 3.0 + alpha)));
      CHECK(p.cap == Approx(3.0));
    }
  }
  SECTION("slit family sweep") {
    for (double alpha : {0.5, 2.0 / 3.0, 0.75, 1.01, 10.0 / 9.0, 4.0 / 3.0, 1.5}) {
      const RatePrediction p = predict_l2_local(1, 1.0 + alpha, {{0.5, 1.0 + alpha}});
      CHECK(p.tau == Approx(std::min(2.0, 0.5 + alpha)));
    }
  }
}

TEST_CASE("local l2 prediction properties", "[rates]") {
  SECTION("no corner terms reduces to min(k+1, s)") {
    CHECK(predict_l2_local(1, 1.2, {}).tau == Approx(1.2));
    CHECK(predict_l2_local(1, kInf, {}).tau == Approx(2.0));
    CHECK(predict_l2_local(2, kInf, {}).active == "k+1 cap");
  }
  SECTION("dropping a corner never lowers the rate") {
    for (double alpha_j : {0.5, 0.6, 2.0 / 3.0, 0.8, 0.95}) {
      for (double s_j : {1.1, 1.75, 3.0, kInf}) {
        const double with = predict_l2_local(1, 1.75, {{alpha_j, s_j}}).tau;
        const double without = predict_l2_local(1, 1.75, {}).tau;
        CHECK(with <= without + 1e-15);
      }
    }
  }
  SECTION("monotone in the corner regularity") {
    double prev = 0.0;
    for (double s_j : {1.1, 1.4, 1.75, 2.5, kInf}) {
      const double tau = predict_l2_local(1, kInf, {{2.0 / 3.0, s_j}}).tau;
      CHECK(tau >= prev);
      prev = tau;
    }
  }
  SECTION("cap invariant") {
    for (int k : {1, 2}) {
      for (double s : {1.0, 1.75, 4.0, kInf}) {
        for (double alpha_j : {0.5, 0.7, 0.9}) {
          for (double s_j : {1.01, 2.0, kInf}) {
            const RatePrediction p = predict_l2_local(k, s, {{alpha_j, s_j}});
            CHECK(p.tau >= 0.0);
            CHECK(p.tau <= k + 1.0);
            CHECK(p.cap == Approx(k + 1.0));
          }
        }
      }
    }
  }
  SECTION("argument validation") {
    CHECK_THROWS_AS(predict_l2_local(1, 1.75, {{0.49, 1.75}}), std::invalid_argument);
    CHECK_THROWS_AS(predict_l2_local(1, 1.75, {{1.0, 1.75}}), std::invalid_argument);
    CHECK_THROWS_AS(predict_l2_local(1, 1.75, {{2.0 / 3.0, 1.0}}), std::invalid_argument);
  }
}

TEST_CASE("flux and strip predictions", "[rates]") {
  const RatePrediction f1 = predict_flux(1, 1.0);
  CHECK(f1.tau == Approx(1.0));
  CHECK(f1.cap == Approx(1.0));
  CHECK(f1.log_factor);
  CHECK(f1.active == "maximal regularity");

  const RatePrediction f2 = predict_flux(2, 2.0);
  CHECK(f2.tau == Approx(2.0));
  CHECK_FALSE(f2.log_factor);

  CHECK(predict_flux(1, 0.5).active == "regularity offset");
  CHECK_THROWS_AS(predict_flux(1, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(predict_flux(1, 1.5), std::invalid_argument);

  const RatePrediction s1 = predict_strip(1, 1.0);
  CHECK(s1.tau == Approx(2.5));
  CHECK(s1.cap == Approx(2.5));
  CHECK(s1.log_factor);

  const RatePrediction s2 = predict_strip(2, 2.0);
  CHECK(s2.tau == Approx(3.5));
  CHECK_FALSE(s2.log_factor);

  CHECK(predict_strip(1, 0.0).tau == Approx(1.5));
  CHECK_THROWS_AS(predict_strip(2, 2.5), std::invalid_argument);
}

TEST_CASE("prediction metric labels", "[rates]") {
  CHECK(predict_l2_global(1, 1.5, shift_index(Domain::LShape)).metric == "l2_global");
  CHECK(predict_l2_local(1, 1.5, {}).metric == "l2_local");
  CHECK(predict_flux(1, 0.0).metric == "flux");
  CHECK(predict_strip(1, 0.0).metric == "strip");
}
