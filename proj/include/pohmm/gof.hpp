#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pohmm/emissions.hpp"
#include "pohmm/estimation.hpp"
#include "pohmm/model.hpp"
#include "pohmm/rng.hpp"

namespace pohmm {

// Exact marginal emission density of one feature: a mixture over
// (event type, hidden state) cells weighted by Pi[w] * Pi[j].
class MarginalDensity {
 public:
  struct Component {
    double weight;
    double location;
    double scale;
  };

  MarginalDensity(EmissionKind kind, std::vector<Component> components);

  double pdf(double x) const;
  double cdf(double x) const;
  EmissionKind kind() const { return kind_; }
  const std::vector<Component>& components() const { return components_; }

 private:
  EmissionKind kind_;
  std::vector<Component> components_;
};

MarginalDensity marginal_density(const PohmmParams& params, std::size_t feature = 0);

inline constexpr std::size_t kAreaGridPoints = 2048;

// Integral of |empirical CDF - model CDF|. The domain is [min/2, 2*max] on a
// log-spaced grid (positive samples) or [min - r/2, max + r/2] on a linear
// grid otherwise, where r is the sample range. Sample points are merged into
// the grid so the empirical CDF is constant on every panel.
double area_statistic(std::span<const double> sample, const MarginalDensity& model,
                      std::size_t grid_points = kAreaGridPoints);

struct GofConfig {
  FitConfig fit;
  std::size_t surrogates = 99;
  // Draw surrogate event sequences from the fitted event chain; when false the
  // empirical event sequence is reused.
  bool resample_events = true;
};

struct GofResult {
  double a_empirical = 0.0;
  std::vector<double> a_surrogates;
  double p_value = 1.0;
};

// (#{s : |A_s - mean| > |A - mean|} + 1) / (S + 1), mean over the surrogates.
double biased_p_value(double a_empirical, std::span<const double> a_surrogates);

// Fits a model to the first feature of `observed`, computes its area statistic,
// then repeats fit-and-measure on S surrogate samples of the same length drawn
// from the fitted model. Surrogate s uses rng.substream(s); a failed surrogate
// fit is redrawn once before the error propagates.
GofResult monte_carlo_gof(const ObservationSequence& observed, const EventAlphabet& alphabet, const GofConfig& config,
                          const Rng& rng);

}  // namespace pohmm
