#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pohmm/benchmark.hpp"
#include "pohmm/model.hpp"
#include "pohmm/rng.hpp"

namespace fixtures {

inline std::vector<double> random_distribution(pohmm::Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  double total = 0.0;
  for (double& v : p) total += v = 0.05 + rng.uniform();
  for (double& v : p) v /= total;
  return p;
}

inline pohmm::EventAlphabet letters(std::size_t m) {
  std::vector<std::string> s;
  for (std::size_t w = 0; w < m; ++w) s.push_back(std::string(1, static_cast<char>('a' + w)));
  return pohmm::EventAlphabet(s);
}

// Random stochastic tables, random emission cells and a random event chain.
inline pohmm::PohmmParams random_params(pohmm::Rng& rng, std::size_t M, std::size_t m, std::size_t K,
                                        pohmm::EmissionKind kind) {
  pohmm::PohmmParams p(M, letters(m), kind, K);
  for (std::size_t w = 0; w < m; ++w) {
    auto row = random_distribution(rng, M);
    for (std::size_t j = 0; j < M; ++j) p.startp(w, j) = row[j];
  }
  for (auto& a : p.trans)
    for (std::size_t i = 0; i < M; ++i) {
      auto row = random_distribution(rng, M);
      for (std::size_t j = 0; j < M; ++j) a(i, j) = row[j];
    }
  for (auto& b : p.emit)
    for (std::size_t k = 0; k < K; ++k) {
      b.location[k] = kind == pohmm::EmissionKind::lognormal ? 4.0 + 2.0 * rng.uniform() : 100.0 * rng.uniform();
      b.scale[k] = kind == pohmm::EmissionKind::lognormal ? 0.2 + 0.6 * rng.uniform() : 5.0 + 30.0 * rng.uniform();
    }
  p.event_chain.start = random_distribution(rng, m);
  p.event_chain.trans = pohmm::Matrix(m, m);
  for (std::size_t psi = 0; psi < m; ++psi) {
    auto row = random_distribution(rng, m);
    for (std::size_t w = 0; w < m; ++w) p.event_chain.trans(psi, w) = row[w];
  }
  p.event_chain.stationary = pohmm::stationary_distribution(p.event_chain.trans);
  p.marginals.state_stationary.clear();
  pohmm::marginalize(p);
  return p;
}

// Keystroke-like user: an active and a pausing hidden state, with user- and
// key-specific log-latency and log-duration offsets.
inline pohmm::PohmmParams synthetic_user(pohmm::Rng& rng, const pohmm::EventAlphabet& keys, double key_spread = 0.25,
                                         double user_spread = 0.15) {
  using namespace pohmm;
  const std::size_t m = keys.size();
  PohmmParams p(2, keys, EmissionKind::lognormal, 2);
  const double tau0 = std::log(180.0) + user_spread * rng.normal();
  const double dur0 = std::log(100.0) + user_spread * rng.normal();
  for (std::size_t w = 0; w < m; ++w) {
    const double tau = tau0 + key_spread * rng.normal();
    const double dur = dur0 + 0.8 * key_spread * rng.normal();
    p.emission(0, EventId(w)) = EmissionParams{EmissionKind::lognormal, {tau, dur}, {0.25, 0.2}};
    p.emission(1, EventId(w)) = EmissionParams{EmissionKind::lognormal, {tau + 1.2, dur + 0.1}, {0.4, 0.25}};
    p.startp(w, 0) = 0.8;
    p.startp(w, 1) = 0.2;
  }
  for (auto& a : p.trans) {
    a(0, 0) = 0.85;
    a(0, 1) = 0.15;
    a(1, 0) = 0.6;
    a(1, 1) = 0.4;
  }
  p.marginals.state_stationary.clear();
  marginalize(p);
  return p;
}

// Fixed-text samples from `users` synthetic users; every sample types the same
// key sequence. The timing vector concatenates latencies and durations.
inline std::vector<pohmm::BenchmarkSample> synthetic_population(pohmm::Rng& rng, std::size_t users,
                                                                std::size_t samples, std::size_t length,
                                                                std::size_t keys = 5) {
  using namespace pohmm;
  const EventAlphabet alphabet = letters(keys);
  std::vector<EventId> text(length);
  for (std::size_t n = 0; n < length; ++n) text[n] = EventId((n * 3 + n / keys) % keys);
  std::vector<BenchmarkSample> out;
  for (std::size_t u = 0; u < users; ++u) {
    const auto model = synthetic_user(rng, alphabet);
    for (std::size_t s = 0; s < samples; ++s) {
      auto drawn = sample(model, length, rng, std::span<const EventId>(text));
      BenchmarkSample b;
      b.user = std::string(u < 10 ? "user0" : "user") + std::to_string(u);
      b.sequence = decode(alphabet, drawn.sequence);
      for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t n = 0; n < length; ++n) b.timing.push_back(drawn.sequence.features(n, k));
      out.push_back(std::move(b));
    }
  }
  return out;
}

}  // namespace fixtures
