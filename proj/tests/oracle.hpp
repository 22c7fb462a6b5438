#pragma once

// Brute-force reference computations for small models, with the densities
// written out independently of the library.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "pohmm/model.hpp"

namespace oracle {

inline double density(double x, pohmm::EmissionKind kind, double mu, double sigma) {
  const double c = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  if (kind == pohmm::EmissionKind::normal) {
    const double z = (x - mu) / sigma;
    return c * std::exp(-0.5 * z * z);
  }
  const double z = (std::log(x) - mu) / sigma;
  return c / x * std::exp(-0.5 * z * z);
}

inline double emission(const pohmm::PohmmParams& p, std::size_t j, pohmm::EventId w,
                       std::span<const double> x) {
  const auto& b = p.emission(j, w);
  double f = 1.0;
  for (std::size_t k = 0; k < x.size(); ++k) f *= density(x[k], p.kind, b.location[k], b.scale[k]);
  return f;
}

struct Enumeration {
  double likelihood = 0.0;
  std::vector<std::vector<double>> gamma;                // N x M
  std::vector<std::vector<std::vector<double>>> xi;      // (N-1) x M x M
};

// Sums the joint P(x, z | Omega) over all M^N state paths.
inline Enumeration enumerate(const pohmm::PohmmParams& p, const pohmm::ObservationSequence& seq) {
  const std::size_t M = p.n_states;
  const std::size_t N = seq.size();
  Enumeration out;
  out.gamma.assign(N, std::vector<double>(M, 0.0));
  out.xi.assign(N > 0 ? N - 1 : 0, std::vector<std::vector<double>>(M, std::vector<double>(M, 0.0)));
  std::vector<std::size_t> z(N, 0);
  std::size_t paths = 1;
  for (std::size_t n = 0; n < N; ++n) paths *= M;
  for (std::size_t code = 0; code < paths; ++code) {
    std::size_t c = code;
    for (std::size_t n = 0; n < N; ++n) {
      z[n] = c % M;
      c /= M;
    }
    double joint = p.startp(static_cast<std::size_t>(seq.events[0]), z[0]) *
                   emission(p, z[0], seq.events[0], seq.features.row(0));
    for (std::size_t n = 1; n < N; ++n)
      joint *= p.transition(seq.events[n - 1], seq.events[n])(z[n - 1], z[n]) *
               emission(p, z[n], seq.events[n], seq.features.row(n));
    out.likelihood += joint;
    for (std::size_t n = 0; n < N; ++n) out.gamma[n][z[n]] += joint;
    for (std::size_t n = 0; n + 1 < N; ++n) out.xi[n][z[n]][z[n + 1]] += joint;
  }
  for (auto& row : out.gamma)
    for (double& v : row) v /= out.likelihood;
  for (auto& t : out.xi)
    for (auto& row : t)
      for (double& v : row) v /= out.likelihood;
  return out;
}

}  // namespace oracle
