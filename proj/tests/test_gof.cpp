#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "pohmm/error.hpp"
#include "pohmm/gof.hpp"

using namespace pohmm;

namespace {

double normal_cdf(double x, double mu, double sigma) { return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0))); }

// Midpoint rule for the integral of |ECDF - F| over [lo, hi].
double area_oracle(std::vector<double> xs, double mu, double sigma, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const int steps = 2000000;
  const double h = (hi - lo) / steps;
  double total = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double x = lo + (i + 0.5) * h;
    const double ecdf = double(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) / double(xs.size());
    total += std::abs(ecdf - normal_cdf(x, mu, sigma)) * h;
  }
  return total;
}

}  // namespace

TEST_CASE("biased p-value counts strictly more extreme surrogates") {
  std::vector<double> s{1.0, 2.0, 3.0};
  CHECK(biased_p_value(5.0, s) == doctest::Approx(0.25));
  CHECK(biased_p_value(2.0, s) == doctest::Approx(3.0 / 4.0));
  std::vector<double> t{0.0, 10.0, 2.0, 8.0};  // mean 5
  CHECK(biased_p_value(6.0, t) == doctest::Approx(5.0 / 5.0));
  CHECK(biased_p_value(9.5, t) == doctest::Approx(3.0 / 5.0));
  CHECK(biased_p_value(20.0, t) == doctest::Approx(1.0 / 5.0));
}

TEST_CASE("area statistic agrees with dense quadrature") {
  MarginalDensity model(EmissionKind::normal, {{1.0, 2.0, 1.0}});
  std::vector<double> positive{1.0, 2.0, 3.0, 2.5};
  CHECK(area_statistic(positive, model) == doctest::Approx(area_oracle(positive, 2.0, 1.0, 0.5, 6.0)).epsilon(1e-4));
  std::vector<double> mixed{-1.0, 0.0, 2.0};
  CHECK(area_statistic(mixed, model) == doctest::Approx(area_oracle(mixed, 2.0, 1.0, -2.5, 3.5)).epsilon(1e-4));
  CHECK_THROWS_AS(area_statistic(std::vector<double>{}, model), InputError);
}

TEST_CASE("marginal density is a normalized mixture over cells") {
  Rng rng(31);
  auto p = fixtures::random_params(rng, 2, 3, 1, EmissionKind::lognormal);
  auto g = marginal_density(p);
  CHECK(g.components().size() == 6);
  double w = 0.0;
  for (const auto& c : g.components()) w += c.weight;
  CHECK(w == doctest::Approx(1.0));
  // integral of the pdf over a wide range equals the cdf difference
  double lo = 1.0, hi = 5000.0, total = 0.0;
  const int steps = 400000;
  const double h = (hi - lo) / steps;
  for (int i = 0; i < steps; ++i) total += g.pdf(lo + (i + 0.5) * h) * h;
  CHECK(total == doctest::Approx(g.cdf(hi) - g.cdf(lo)).epsilon(1e-5));
  CHECK(g.cdf(0.0) == 0.0);
  CHECK_THROWS_AS(marginal_density(p, 1), InputError);
}

TEST_CASE("Monte Carlo GoF is reproducible from the seed") {
  Rng rng(32);
  auto truth = fixtures::random_params(rng, 2, 2, 1, EmissionKind::lognormal);
  auto seq = sample(truth, 120, rng).sequence;
  GofConfig c;
  c.surrogates = 9;
  auto a = monte_carlo_gof(seq, truth.alphabet, c, Rng(5));
  auto b = monte_carlo_gof(seq, truth.alphabet, c, Rng(5));
  CHECK(a.a_surrogates == b.a_surrogates);
  CHECK(a.p_value == b.p_value);
  CHECK(a.a_surrogates.size() == 9);
  CHECK(a.p_value >= 0.1);
  CHECK(a.p_value <= 1.0);
  CHECK(a.a_empirical > 0.0);
}
