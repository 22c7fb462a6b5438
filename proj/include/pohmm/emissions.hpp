#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pohmm/matrix.hpp"
#include "pohmm/rng.hpp"

namespace pohmm {

enum class EmissionKind { lognormal, normal };

std::string to_string(EmissionKind kind);
// Accepts "lognormal" or "normal"; throws InputError otherwise.
EmissionKind emission_kind_from_string(const std::string& name);

// Lower bound on every scale parameter (log-space units for lognormal).
inline constexpr double kScaleFloor = 1e-4;

// Independent per-feature distributions for one (hidden state, event type)
// cell. For lognormal, location/scale are the mean/sd of ln x.
struct EmissionParams {
  EmissionKind kind = EmissionKind::lognormal;
  std::vector<double> location;
  std::vector<double> scale;

  std::size_t feature_count() const { return location.size(); }

  friend bool operator==(const EmissionParams&, const EmissionParams&) = default;
};

// Sum over features of the univariate log density. Throws InputError
// ("domain") for a nonpositive value under lognormal.
double log_density(std::span<const double> x, const EmissionParams& params);

// Univariate helpers shared with the goodness-of-fit code.
double log_density_1d(double x, EmissionKind kind, double location, double scale);
double cdf_1d(double x, EmissionKind kind, double location, double scale);

// Weighted maximum-likelihood estimate from the rows of `xs`. Scales are
// clamped to kScaleFloor. Throws NumericalError ("degenerate responsibility
// mass") when the weights sum to zero.
EmissionParams weighted_mle(const Matrix& xs, std::span<const double> weights, EmissionKind kind);

// `count` i.i.d. draws, one per row.
Matrix sample(const EmissionParams& params, std::size_t count, Rng& rng);

}  // namespace pohmm
