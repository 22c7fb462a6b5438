#include "pohmm/gof.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pohmm/error.hpp"
#include "pohmm/parallel.hpp"

namespace pohmm {

MarginalDensity::MarginalDensity(EmissionKind kind, std::vector<Component> components)
    : kind_(kind), components_(std::move(components)) {}

double MarginalDensity::pdf(double x) const {
  if (kind_ == EmissionKind::lognormal && x <= 0.0) return 0.0;
  double total = 0.0;
  for (const auto& c : components_)
    if (c.weight > 0.0) total += c.weight * std::exp(log_density_1d(x, kind_, c.location, c.scale));
  return total;
}

double MarginalDensity::cdf(double x) const {
  double total = 0.0;
  for (const auto& c : components_)
    if (c.weight > 0.0) total += c.weight * cdf_1d(x, kind_, c.location, c.scale);
  return total;
}

MarginalDensity marginal_density(const PohmmParams& params, std::size_t feature) {
  if (feature >= params.n_features) throw InputError("feature index out of range");
  std::vector<MarginalDensity::Component> components;
  const auto& event_weight = params.event_chain.stationary;
  const auto& state_weight = params.marginals.state_stationary;
  for (std::size_t w = 0; w < params.n_events(); ++w)
    for (std::size_t j = 0; j < params.n_states; ++j) {
      const EmissionParams& b = params.emission(j, static_cast<EventId>(w));
      components.push_back({event_weight[w] * state_weight[j], b.location[feature], b.scale[feature]});
    }
  return MarginalDensity(params.kind, std::move(components));
}

double area_statistic(std::span<const double> sample, const MarginalDensity& model, std::size_t grid_points) {
  if (sample.empty()) throw InputError("area statistic needs a nonempty sample");
  if (grid_points < 2) throw InputError("area statistic needs at least 2 grid points");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo_x = sorted.front(), hi_x = sorted.back();

  std::vector<double> nodes(grid_points);
  if (lo_x > 0.0) {
    const double a = std::log(lo_x * 0.5), b = std::log(hi_x * 2.0);
    for (std::size_t i = 0; i < grid_points; ++i)
      nodes[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(grid_points - 1));
    nodes.front() = lo_x * 0.5;
    nodes.back() = hi_x * 2.0;
  } else {
    const double r = std::max(hi_x - lo_x, 1.0);
    const double a = lo_x - 0.5 * r, b = hi_x + 0.5 * r;
    for (std::size_t i = 0; i < grid_points; ++i)
      nodes[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
  }
  nodes.insert(nodes.end(), sorted.begin(), sorted.end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  const double n = static_cast<double>(sorted.size());
  double area = 0.0;
  double f_left = model.cdf(nodes[0]);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double f_right = model.cdf(nodes[i + 1]);
    // Right-continuous step: mass at nodes[i] is included on [nodes[i], nodes[i+1]).
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), nodes[i]) - sorted.begin();
    const double emp = static_cast<double>(count) / n;
    area += 0.5 * (std::abs(emp - f_left) + std::abs(emp - f_right)) * (nodes[i + 1] - nodes[i]);
    f_left = f_right;
  }
  return area;
}

double biased_p_value(double a_empirical, std::span<const double> a_surrogates) {
  if (a_surrogates.empty()) throw InputError("p-value needs at least one surrogate");
  double mean = 0.0;
  for (double a : a_surrogates) mean += a;
  mean /= static_cast<double>(a_surrogates.size());
  const double ref = std::abs(a_empirical - mean);
  std::size_t extreme = 0;
  for (double a : a_surrogates)
    if (std::abs(a - mean) > ref) ++extreme;
  return static_cast<double>(extreme + 1) / static_cast<double>(a_surrogates.size() + 1);
}

namespace {

ObservationSequence first_feature(const ObservationSequence& seq) {
  ObservationSequence out;
  out.events = seq.events;
  out.features = Matrix(seq.size(), 1);
  for (std::size_t n = 0; n < seq.size(); ++n) out.features(n, 0) = seq.features(n, 0);
  return out;
}

std::vector<double> column(const ObservationSequence& seq) {
  std::vector<double> out(seq.size());
  for (std::size_t n = 0; n < seq.size(); ++n) out[n] = seq.features(n, 0);
  return out;
}

double fitted_area(const ObservationSequence& seq, const EventAlphabet& alphabet, const FitConfig& config,
                   PohmmParams* fitted = nullptr) {
  const std::vector<ObservationSequence> data{seq};
  FitResult result = fit(data, alphabet, config);
  const double a = area_statistic(column(seq), marginal_density(result.params));
  if (fitted) *fitted = std::move(result.params);
  return a;
}

}  // namespace

GofResult monte_carlo_gof(const ObservationSequence& observed, const EventAlphabet& alphabet,
                          const GofConfig& config, const Rng& rng) {
  if (config.surrogates < 1) throw InputError("goodness of fit needs S >= 1");
  if (observed.size() == 0) throw InputError("empty sequence");
  const ObservationSequence data = first_feature(observed);
  const std::size_t N = data.size();

  GofResult result;
  PohmmParams fitted;
  result.a_empirical = fitted_area(data, alphabet, config.fit, &fitted);

  result.a_surrogates.assign(config.surrogates, 0.0);
  parallel_for(config.surrogates, [&](std::size_t s) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng stream = rng.substream(s).substream(attempt);
      try {
        SampledSequence draw = config.resample_events
                                   ? sample(fitted, N, stream)
                                   : sample(fitted, N, stream, std::span<const EventId>(data.events));
        // Event types that the surrogate never visits are dropped from its alphabet.
        std::vector<std::string> labels;
        for (EventId id : draw.sequence.events) labels.push_back(fitted.alphabet.symbol(id));
        const std::vector<std::vector<std::string>> label_seqs{labels};
        const EventAlphabet surrogate_alphabet = EventAlphabet::from_sequences(label_seqs);
        const LabeledSequence labeled{labels, draw.sequence.features};
        result.a_surrogates[s] = fitted_area(encode(surrogate_alphabet, labeled), surrogate_alphabet, config.fit);
        return;
      } catch (const std::exception&) {
        if (attempt >= 1) throw;
      }
    }
  });
  result.p_value = biased_p_value(result.a_empirical, result.a_surrogates);
  return result;
}

}  // namespace pohmm
