#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "pohmm/error.hpp"
#include "pohmm/inference.hpp"
#include "pohmm/simulation.hpp"

using namespace pohmm;

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = double(k);
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto rx = ranks(x), ry = ranks(y);
  const double n = double(x.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace

TEST_CASE("default generator layout") {
  auto p = default_generator();
  CHECK(p.n_states == 2);
  CHECK(p.n_events() == 3);
  CHECK(p.emission(0, 0).location[0] == 80.0);
  CHECK(p.emission(1, 2).location[0] == 420.0);
  CHECK(p.transition(1, 2)(0, 1) == 0.5);
  CHECK_NOTHROW(validate(p));
}

TEST_CASE("the marginal HMM scores like the marginals") {
  auto p = default_generator();
  auto h = marginal_hmm(p);
  CHECK(h.n_events() == 1);
  CHECK(h.emission(1, 0).location[0] == doctest::Approx(400.0));
  CHECK(h.emission(1, 0).scale[0] == doctest::Approx(std::sqrt(50.0 * 50.0 + 800.0 / 3.0)));
}

TEST_CASE("permuting states twice restores the model") {
  auto p = default_generator();
  auto q = permute_states(p, {1, 0});
  CHECK(q.emission(0, 0).location[0] == 380.0);
  CHECK(state_order(q) == std::vector<std::size_t>{1, 0});
  auto r = permute_states(q, {1, 0});
  CHECK(r.emit == p.emit);
  CHECK_THROWS_AS(permute_states(p, {0}), InputError);
}

TEST_CASE("scenario runs are reproducible") {
  ScenarioConfig c;
  c.lengths = {64, 256};
  c.replicates = 8;
  c.seed = 3;
  auto a = run_scenario(c);
  auto b = run_scenario(c);
  REQUIRE(a.points.size() == 2);
  CHECK(a.points[1].parameters[0].mean_estimate == b.points[1].parameters[0].mean_estimate);
  CHECK(a.points[1].replicates + a.points[1].failed == 8);
  c.scenario = 5;
  CHECK_THROWS_AS(run_scenario(c), InputError);
}

TEST_CASE("residual magnitude shrinks with length in scenarios 1 and 2") {
  for (int scenario : {1, 2}) {
    ScenarioConfig c;
    c.scenario = scenario;
    c.lengths = {64, 128, 256, 512, 1024, 2048, 4096};
    c.replicates = 30;
    c.seed = 11;
    auto report = run_scenario(c);
    std::vector<double> n, res;
    for (const auto& p : report.points) {
      double mean_abs = 0.0, count = 0.0;
      for (const auto& s : p.parameters)
        if (s.name.rfind("location", 0) == 0) {
          mean_abs += s.mean_abs_residual / s.unit;
          count += 1.0;
        }
      n.push_back(double(p.length));
      res.push_back(mean_abs / count);
      CHECK(p.replicates >= 30);
      CHECK(p.accuracy > 0.9);
    }
    CHECK(spearman(n, res) < 0.0);
  }
}

TEST_CASE("state accuracy grows with separation") {
  double previous = 0.0;
  for (double gap : {50.0, 100.0, 200.0}) {
    auto p = default_generator({0.0, 0.0, 0.0}, 50.0);
    for (std::size_t w = 0; w < 3; ++w) p.emission(1, EventId(w)).location[0] = 100.0 + gap;
    marginalize(p);
    ScenarioConfig c;
    c.truth = p;
    c.lengths = {400};
    c.replicates = 30;
    c.seed = 5;
    auto report = run_scenario(c);
    CHECK(report.points[0].accuracy > 0.5);
    CHECK(report.points[0].accuracy > previous);
    previous = report.points[0].accuracy;
  }
  CHECK(previous > 0.9);
}
