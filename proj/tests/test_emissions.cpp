#include <cmath>

#include "doctest.h"
#include "oracle.hpp"
#include "pohmm/emissions.hpp"
#include "pohmm/error.hpp"

using namespace pohmm;

TEST_CASE("log densities agree with the written-out formulas") {
  for (double x : {0.3, 1.0, 7.5, 120.0}) {
    CHECK(std::exp(log_density_1d(x, EmissionKind::normal, 2.0, 3.0)) ==
          doctest::Approx(oracle::density(x, EmissionKind::normal, 2.0, 3.0)).epsilon(1e-12));
    CHECK(std::exp(log_density_1d(x, EmissionKind::lognormal, 1.5, 0.7)) ==
          doctest::Approx(oracle::density(x, EmissionKind::lognormal, 1.5, 0.7)).epsilon(1e-12));
  }
  EmissionParams b{EmissionKind::lognormal, {4.0, 3.0}, {0.5, 0.25}};
  std::vector<double> x{60.0, 25.0};
  CHECK(log_density(x, b) == doctest::Approx(log_density_1d(60.0, b.kind, 4.0, 0.5) +
                                             log_density_1d(25.0, b.kind, 3.0, 0.25)));
}

TEST_CASE("cdf at the median and in the tails") {
  CHECK(cdf_1d(2.0, EmissionKind::normal, 2.0, 5.0) == doctest::Approx(0.5));
  CHECK(cdf_1d(std::exp(1.2), EmissionKind::lognormal, 1.2, 0.4) == doctest::Approx(0.5));
  CHECK(cdf_1d(0.0, EmissionKind::lognormal, 1.2, 0.4) == 0.0);
  CHECK(cdf_1d(-1.0, EmissionKind::normal, 0.0, 1.0) == doctest::Approx(0.15865525393145707));
}

TEST_CASE("domain and shape errors") {
  EmissionParams b{EmissionKind::lognormal, {0.0}, {1.0}};
  std::vector<double> zero{0.0};
  CHECK_THROWS_AS(log_density(zero, b), InputError);
  std::vector<double> two{1.0, 2.0};
  CHECK_THROWS_AS(log_density(two, b), InputError);
  CHECK_THROWS_AS(emission_kind_from_string("gamma"), InputError);
  CHECK(emission_kind_from_string(to_string(EmissionKind::normal)) == EmissionKind::normal);
}

TEST_CASE("weighted MLE matches hand-computed moments") {
  Matrix xs(3, 1);
  xs(0, 0) = 1.0;
  xs(1, 0) = 2.0;
  xs(2, 0) = 4.0;
  std::vector<double> w{1.0, 1.0, 2.0};
  auto b = weighted_mle(xs, w, EmissionKind::normal);
  // mean = (1 + 2 + 8) / 4, var = (1*1.75^2 + 1*0.75^2 + 2*1.25^2) / 4
  CHECK(b.location[0] == doctest::Approx(2.75));
  CHECK(b.scale[0] == doctest::Approx(std::sqrt((1.75 * 1.75 + 0.75 * 0.75 + 2 * 1.25 * 1.25) / 4.0)));

  auto lb = weighted_mle(xs, w, EmissionKind::lognormal);
  double mu = (std::log(1.0) + std::log(2.0) + 2 * std::log(4.0)) / 4.0;
  CHECK(lb.location[0] == doctest::Approx(mu));
}

TEST_CASE("scale floor and zero mass") {
  Matrix xs(2, 1, 5.0);
  std::vector<double> w{1.0, 1.0};
  CHECK(weighted_mle(xs, w, EmissionKind::normal).scale[0] == kScaleFloor);
  std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(weighted_mle(xs, zero, EmissionKind::normal), NumericalError);
}

TEST_CASE("sampled moments approach the parameters") {
  Rng rng(42);
  EmissionParams b{EmissionKind::lognormal, {4.0}, {0.5}};
  Matrix xs = sample(b, 20000, rng);
  std::vector<double> w(xs.rows(), 1.0);
  auto fit = weighted_mle(xs, w, EmissionKind::lognormal);
  CHECK(fit.location[0] == doctest::Approx(4.0).epsilon(0.01));
  CHECK(fit.scale[0] == doctest::Approx(0.5).epsilon(0.03));
  for (double v : xs.values()) CHECK(v > 0.0);
}
