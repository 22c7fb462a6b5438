#include <cmath>
#include <limits>

#include "doctest.h"
#include "fixtures.hpp"
#include "pohmm/benchmark.hpp"
#include "pohmm/biometric.hpp"
#include "pohmm/error.hpp"
#include "pohmm/inference.hpp"

using namespace pohmm;

namespace {

PohmmParams shifted_model(double shift) {
  PohmmParams p(2, fixtures::letters(2), EmissionKind::lognormal, 1);
  for (std::size_t w = 0; w < 2; ++w)
    for (std::size_t j = 0; j < 2; ++j)
      p.emission(j, EventId(w)) = EmissionParams{EmissionKind::lognormal, {4.0 + shift + 0.5 * double(j)}, {0.2}};
  marginalize(p);
  return p;
}

LabeledSequence draw(const PohmmParams& p, std::size_t n, Rng& rng) { return decode(p.alphabet, sample(p, n, rng).sequence); }

std::string uid(int u) { return "u" + std::to_string(u); }

}  // namespace

TEST_CASE("population keeps ids sorted and unique") {
  std::vector<UserModel> users{{"b", shifted_model(0), {}}, {"a", shifted_model(1), {}}};
  Population pop(users);
  CHECK(pop[0].id == "a");
  CHECK(pop.index_of("b") == 1);
  CHECK_THROWS_AS(pop.index_of("c"), InputError);
  users.push_back({"a", shifted_model(2), {}});
  CHECK_THROWS_AS(Population{users}, InputError);
}

TEST_CASE("identification") {
  Rng rng(41);
  Population single({{"only", shifted_model(0), {}}});
  CHECK(identify(draw(single[0].model, 10, rng), single).user == "only");

  std::vector<UserModel> users;
  for (int u = 0; u < 10; ++u) users.push_back({uid(u), shifted_model(0.4 * u), {}});
  Population pop(users);
  int correct = 0, total = 0;
  for (int u = 0; u < 10; ++u)
    for (int q = 0; q < 100; ++q, ++total) {
      auto seq = draw(pop[pop.index_of(uid(u))].model, 20, rng);
      correct += identify(seq, pop).user == uid(u);
    }
  CHECK(double(correct) / total >= 0.9);

  // identical copies tie, and the smallest id wins
  Population copies({{"z", shifted_model(0), {}}, {"m", shifted_model(0), {}}});
  CHECK(identify(draw(copies[0].model, 10, rng), copies).user == "m");
}

TEST_CASE("models that cannot score are excluded with a warning") {
  Rng rng(42);
  PohmmParams normal(2, fixtures::letters(2), EmissionKind::normal, 1);
  Population pop({{"lognormal", shifted_model(0), {}}, {"normal", normal, {}}});
  LabeledSequence seq{{"a", "b"}, Matrix(2, 1, -5.0)};
  auto id = identify(seq, pop);
  CHECK(id.user == "normal");
  CHECK(id.warnings.size() == 1);
}

TEST_CASE("min-max normalization") {
  std::vector<double> s{-10.0, -5.0, -2.0};
  CHECK(min_max_normalize(-5.0, s) == doctest::Approx(0.625));
  CHECK(min_max_normalize(-2.0, s) == 1.0);
  CHECK(min_max_normalize(-10.0, s) == 0.0);
  std::vector<double> flat{-3.0, -3.0};
  CHECK(min_max_normalize(-3.0, flat) == 0.5);

  Rng rng(43);
  Population pop({{"a", shifted_model(0), {}}, {"b", shifted_model(1), {}}});
  auto q = draw(pop[0].model, 30, rng);
  CHECK(verification_score(q, "a", pop) == 1.0);
  CHECK(verification_score(q, "b", pop) == 0.0);
  CHECK_THROWS_AS(verification_score(q, "nobody", pop), InputError);
}

TEST_CASE("ROC and EER") {
  std::vector<double> g{0.9, 0.8, 0.7}, i{0.6, 0.75, 0.4};
  auto roc = roc_eer(g, i);
  CHECK(roc.eer == doctest::Approx(1.0 / 3.0));
  CHECK(std::isinf(roc.thresholds.back()));
  for (std::size_t k = 1; k < roc.thresholds.size(); ++k) {
    CHECK(roc.far[k] <= roc.far[k - 1]);
    CHECK(roc.frr[k] >= roc.frr[k - 1]);
  }
  std::vector<double> hi{0.9, 0.95}, lo{0.1, 0.2, 0.3};
  CHECK(roc_eer(hi, lo).eer == 0.0);
  std::vector<double> same{0.1, 0.4, 0.7, 0.9};
  CHECK(roc_eer(same, same).eer == doctest::Approx(0.5).epsilon(0.25));
  CHECK_THROWS_AS(roc_eer(same, std::vector<double>{}), InputError);
}

TEST_CASE("rank penalties over a window") {
  const double inf = std::numeric_limits<double>::infinity();
  // claimed model (index 2) is always the worst of 5
  Matrix inc(60, 5);
  for (std::size_t n = 0; n < 60; ++n)
    for (std::size_t u = 0; u < 5; ++u) inc(n, u) = u == 2 ? -10.0 : -1.0;
  auto t = penalty_from_increments(inc, 2, 25);
  CHECK(t.ranks[0] == 4);
  CHECK(t.cumulative[9] == 40.0);
  CHECK(t.cumulative.back() == 100.0);
  CHECK_FALSE(t.rejection_index.has_value());

  auto rejected = penalty_from_increments(inc, 2, 25, 0.0);
  CHECK(rejected.rejection_index == 1u);

  // claimed model always best
  Matrix best(10, 2, -5.0);
  for (std::size_t n = 0; n < 10; ++n) best(n, 1) = -1.0;
  auto b = penalty_from_increments(best, 1, 25);
  CHECK(b.cumulative.back() == 0.0);

  // equal increments rank by model order
  Matrix tie(1, 3, -1.0);
  CHECK(penalty_from_increments(tie, 0, 25).ranks[0] == 0);
  CHECK(penalty_from_increments(tie, 2, 25).ranks[0] == 2);
  tie(0, 1) = -inf;
  CHECK(penalty_from_increments(tie, 2, 25).ranks[0] == 1);
}

TEST_CASE("per-event increments sum to the sequence loglik") {
  Rng rng(44);
  Population pop({{"a", shifted_model(0), {}}, {"b", shifted_model(0.3), {}}});
  auto q = draw(pop[0].model, 40, rng);
  auto inc = event_increments(q, pop);
  for (std::size_t u = 0; u < 2; ++u) {
    double total = 0.0;
    for (std::size_t n = 0; n < q.size(); ++n) total += inc(n, u);
    CHECK(total == doctest::Approx(loglik(pop[u].model, encode(pop[u].model.alphabet, q))).epsilon(1e-9));
  }
  auto trace = continuous_penalty(q, "a", pop);
  CHECK(trace.ranks.size() == q.size());
}

TEST_CASE("AMRT thresholds never reject the genuine user") {
  Rng rng(45);
  Population twins({{"a", shifted_model(0), {}}, {"b", shifted_model(0), {}}});
  std::vector<Query> same{{"a", draw(twins[0].model, 30, rng)}, {"b", draw(twins[0].model, 30, rng)}};
  auto r = amrt(twins, same, 25);
  REQUIRE(r.pairs.size() == 2);
  // b's genuine query always ranks 1 behind its identical twin, so a's query never exceeds it
  for (const auto& p : r.pairs)
    if (p.model_user == "b") CHECK(p.mrt == 30);

  Population pop({{"a", shifted_model(0), {}}, {"b", shifted_model(1.0), {}}, {"c", shifted_model(2.0), {}}});
  std::vector<Query> qs;
  for (const char* id : {"a", "b", "c"})
    for (int k = 0; k < 2; ++k) qs.push_back({id, draw(pop[pop.index_of(id)].model, 60, rng)});
  auto res = amrt(pop, qs, 25);
  CHECK(res.pairs.size() == 3 * 4);
  for (std::size_t u = 0; u < pop.size(); ++u)
    for (std::size_t k = 0; k < qs.size(); ++k)
      if (qs[k].user == pop[u].id) {
        double threshold = 0.0;
        for (const auto& p : res.pairs)
          if (p.model_user == pop[u].id) threshold = p.threshold;
        auto genuine = penalty_from_increments(event_increments(qs[k].sequence, pop), u, 25, threshold);
        CHECK_FALSE(genuine.rejection_index.has_value());
      }
  CHECK(res.amrt < 60.0);
}

TEST_CASE("Manhattan detectors") {
  Matrix t(2, 1);
  t(0, 0) = 1.0;
  t(1, 0) = 3.0;
  std::vector<double> q{4.0};
  CHECK(manhattan_score(q, t) == -2.0);
  std::vector<double> at_mean{2.0};
  CHECK(manhattan_score(at_mean, t) == 0.0);
  std::vector<double> wrong{1.0, 2.0};
  CHECK_THROWS_AS(manhattan_score(wrong, t), InputError);

  // rescaling every feature rescales the global MAD, so rankings are unchanged
  Rng rng(46);
  Matrix all(30, 3), templ(5, 3);
  for (std::size_t r = 0; r < 30; ++r)
    for (std::size_t c = 0; c < 3; ++c) all(r, c) = (c + 1) * 10.0 * rng.uniform();
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 3; ++c) templ(r, c) = all(r, c);
  auto mad = mean_absolute_deviation(all);
  const double k = 7.5;
  Matrix all_k = all, templ_k = templ;
  for (double& v : all_k.values()) v *= k;
  for (double& v : templ_k.values()) v *= k;
  auto mad_k = mean_absolute_deviation(all_k);
  for (std::size_t r = 5; r < 30; ++r) {
    std::vector<double> x(all.row(r).begin(), all.row(r).end()), xk(all_k.row(r).begin(), all_k.row(r).end());
    CHECK(scaled_manhattan_score(x, templ, mad) == doctest::Approx(scaled_manhattan_score(xk, templ_k, mad_k)));
  }
}

TEST_CASE("HMM baseline is the POHMM on collapsed events") {
  LabeledSequence s{{"a", "b", "c"}, Matrix(3, 1, 5.0)};
  auto c = collapse_events(s);
  CHECK(c.events == std::vector<std::string>(3, kCollapsedEvent));
  CHECK(c.features == s.features);
}

TEST_CASE("cross-fold benchmark over a synthetic population") {
  Rng rng(47);
  auto samples = fixtures::synthetic_population(rng, 4, 4, 30);
  BenchmarkConfig c;
  c.fit.max_iter = 50;
  auto report = run_benchmark(samples, c);
  CHECK(report.folds == 4);
  REQUIRE(report.detectors.size() == 4);
  CHECK(report.detectors[0].name == kManhattan);
  CHECK(report.detectors[1].name == kScaledManhattan);
  CHECK(report.detectors[3].name == kPohmm);
  for (const auto& d : report.detectors) {
    CHECK(d.users.size() == 4);
    CHECK(d.acc.mean >= 0.0);
    CHECK(d.acc.mean <= 1.0);
    CHECK(d.eer.mean <= 0.5);
    CHECK(d.has_amrt == (d.name == std::string(kHmm) || d.name == std::string(kPohmm)));
  }
  auto again = run_benchmark(samples, c);
  CHECK(again.detectors[3].eer.mean == report.detectors[3].eer.mean);
  CHECK(again.detectors[3].amrt.mean == report.detectors[3].amrt.mean);
}

TEST_CASE("split protocol and input errors") {
  Rng rng(48);
  auto samples = fixtures::synthetic_population(rng, 3, 5, 20);
  samples[0].timing.pop_back();  // unequal lengths disable the distance detectors
  BenchmarkConfig c;
  c.protocol = Protocol::split;
  c.train_begin = 0;
  c.train_end = 3;
  c.test_begin = 3;
  c.test_end = 10;
  c.continuous = false;
  auto report = run_benchmark(samples, c);
  CHECK(report.folds == 2);
  REQUIRE(report.detectors.size() == 2);
  CHECK_FALSE(report.detectors[1].has_amrt);

  c.train_begin = 6;
  c.train_end = 8;
  CHECK_THROWS_AS(run_benchmark(samples, c), InputError);
  std::vector<BenchmarkSample> one_user(samples.begin(), samples.begin() + 5);
  CHECK_THROWS_AS(run_benchmark(one_user, BenchmarkConfig{}), InputError);
}

TEST_CASE("summary over users") {
  std::vector<double> v{0.1, 0.2, 0.3};
  auto s = summarize(v);
  CHECK(s.mean == doctest::Approx(0.2));
  CHECK(s.sd == doctest::Approx(0.1));
  CHECK(s.ci95 == doctest::Approx(1.959963984540054 * 0.1 / std::sqrt(3.0)));
}
