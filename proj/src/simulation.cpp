#include "pohmm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "pohmm/error.hpp"
#include "pohmm/inference.hpp"
#include "pohmm/parallel.hpp"
#include "pohmm/rng.hpp"

namespace pohmm {

PohmmParams default_generator(std::vector<double> offsets, double scale) {
  const std::vector<double> base{100.0, 400.0};
  std::vector<std::string> labels;
  for (std::size_t w = 0; w < offsets.size(); ++w) labels.push_back(std::string(1, static_cast<char>('a' + w)));
  PohmmParams p(base.size(), EventAlphabet(labels), EmissionKind::normal, 1);
  for (std::size_t w = 0; w < offsets.size(); ++w)
    for (std::size_t j = 0; j < base.size(); ++j)
      p.emission(j, static_cast<EventId>(w)) = EmissionParams{EmissionKind::normal, {base[j] + offsets[w]}, {scale}};
  marginalize(p);
  return p;
}

PohmmParams marginal_hmm(const PohmmParams& params) {
  const std::size_t M = params.n_states;
  PohmmParams h(M, EventAlphabet({kCollapsedEvent}), params.kind, params.n_features);
  for (std::size_t j = 0; j < M; ++j) {
    h.startp(0, j) = params.marginals.start[j];
    h.emission(j, 0) = params.marginals.emit[j];
  }
  h.trans[0] = params.marginals.trans;
  h.marginals.state_stationary = params.marginals.state_stationary;
  marginalize(h);
  return h;
}

PohmmParams permute_states(const PohmmParams& params, const std::vector<std::size_t>& order) {
  const std::size_t M = params.n_states;
  const std::size_t m = params.n_events();
  if (order.size() != M) throw InputError("state permutation has the wrong size");
  PohmmParams out = params;
  for (std::size_t w = 0; w < m; ++w) {
    for (std::size_t k = 0; k < M; ++k) {
      out.startp(w, k) = params.startp(w, order[k]);
      out.emission(k, static_cast<EventId>(w)) = params.emission(order[k], static_cast<EventId>(w));
    }
  }
  for (std::size_t c = 0; c < m * m; ++c)
    for (std::size_t k = 0; k < M; ++k)
      for (std::size_t l = 0; l < M; ++l) out.trans[c](k, l) = params.trans[c](order[k], order[l]);
  for (std::size_t k = 0; k < M; ++k) out.marginals.state_stationary[k] = params.marginals.state_stationary[order[k]];
  marginalize(out);
  return out;
}

std::vector<std::size_t> state_order(const PohmmParams& params) {
  std::vector<std::size_t> order(params.n_states);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return params.marginals.emit[a].location[0] < params.marginals.emit[b].location[0];
  });
  return order;
}

namespace {

struct Estimate {
  std::string name;
  double truth;
  double value;
  double unit;
};

std::string cell(const char* what, std::size_t j, const std::string& w) {
  return std::string(what) + "[" + std::to_string(j) + "|" + w + "]";
}

// Parameters compared in each scenario, with the estimate read from `fitted`.
std::vector<Estimate> extract(int scenario, const PohmmParams& truth, const PohmmParams& fitted) {
  std::vector<Estimate> out;
  const std::size_t M = truth.n_states;
  const std::size_t m = truth.n_events();
  switch (scenario) {
    case 1:
    case 2:
      for (std::size_t w = 0; w < m; ++w) {
        const auto id = static_cast<EventId>(w);
        const std::string& sym = truth.alphabet.symbol(id);
        for (std::size_t j = 0; j < M; ++j) {
          const auto& t = truth.emission(j, id);
          const auto& e = fitted.emission(j, id);
          out.push_back({cell("location", j, sym), t.location[0], e.location[0], t.scale[0]});
          out.push_back({cell("scale", j, sym), t.scale[0], e.scale[0], t.scale[0]});
        }
      }
      for (std::size_t psi = 0; psi < m; ++psi)
        for (std::size_t w = 0; w < m; ++w)
          for (std::size_t i = 0; i < M; ++i)
            for (std::size_t j = 0; j < M; ++j) {
              const auto a = static_cast<EventId>(psi), b = static_cast<EventId>(w);
              out.push_back({"trans[" + std::to_string(i) + "," + std::to_string(j) + "|" + truth.alphabet.symbol(a) +
                                 "," + truth.alphabet.symbol(b) + "]",
                             truth.transition(a, b)(i, j), fitted.transition(a, b)(i, j), 1.0});
            }
      break;
    case 3: {
      // `truth` is the generating HMM here.
      for (std::size_t j = 0; j < M; ++j) {
        const auto& t = truth.emission(j, 0);
        const auto& e = fitted.marginals.emit[j];
        out.push_back({"location[" + std::to_string(j) + "]", t.location[0], e.location[0], t.scale[0]});
        out.push_back({"scale[" + std::to_string(j) + "]", t.scale[0], e.scale[0], t.scale[0]});
      }
      for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < M; ++j)
          out.push_back({"trans[" + std::to_string(i) + "," + std::to_string(j) + "]", truth.transition(0, 0)(i, j),
                         fitted.marginals.trans(i, j), 1.0});
      break;
    }
    case 4:
      for (std::size_t w = 0; w < m; ++w) {
        const auto id = static_cast<EventId>(w);
        for (std::size_t j = 0; j < M; ++j) {
          const auto& t = truth.emission(j, id);
          out.push_back({cell("location", j, truth.alphabet.symbol(id)), t.location[0],
                         fitted.emission(j, 0).location[0], t.scale[0]});
        }
      }
      break;
    default:
      throw InputError("scenario must be 1, 2, 3 or 4");
  }
  return out;
}

struct Replicate {
  std::optional<std::vector<Estimate>> estimates;
  double accuracy = 0.0;
};

Replicate run_replicate(const ScenarioConfig& config, const PohmmParams& truth, const PohmmParams& hmm,
                        std::size_t length, Rng rng) {
  const int scenario = config.scenario;
  FitConfig fit_config = config.fit;
  fit_config.smoothing = scenario == 2;
  fit_config.n_states = truth.n_states;

  SampledSequence drawn;
  EventAlphabet alphabet = truth.alphabet;
  if (scenario == 3) {
    drawn = sample(hmm, length, rng);
    std::vector<double> uniform(truth.n_events(), 1.0);
    for (auto& e : drawn.sequence.events) e = static_cast<EventId>(rng.categorical(uniform));
  } else {
    drawn = sample(truth, length, rng);
    if (scenario == 4) {
      alphabet = EventAlphabet({kCollapsedEvent});
      std::fill(drawn.sequence.events.begin(), drawn.sequence.events.end(), 0);
    }
  }

  Replicate out;
  try {
    std::vector<ObservationSequence> seqs{drawn.sequence};
    auto fitted = fit(std::span<const ObservationSequence>(seqs), alphabet, fit_config).params;
    fitted = permute_states(fitted, state_order(fitted));
    auto states = predict_states(fitted, drawn.sequence);
    std::size_t hits = 0;
    for (std::size_t n = 0; n < states.size(); ++n) hits += states[n] == drawn.states[n];
    out.accuracy = static_cast<double>(hits) / static_cast<double>(states.size());
    out.estimates = extract(scenario, scenario == 3 ? hmm : truth, fitted);
  } catch (const NumericalError&) {
    // counted as a failed replicate
  }
  return out;
}

}  // namespace

ScenarioReport run_scenario(const ScenarioConfig& config) {
  if (config.scenario < 1 || config.scenario > 4) throw InputError("scenario must be 1, 2, 3 or 4");
  if (config.replicates == 0) throw InputError("replicates must be positive");
  if (config.truth.n_features != 1) throw InputError("simulation uses one emission feature");
  config.fit.check();
  validate(config.truth);

  // States sorted by location on both sides.
  const auto order = state_order(config.truth);
  const PohmmParams truth = permute_states(config.truth, order);
  const PohmmParams hmm = marginal_hmm(truth);
  const Rng root(config.seed);

  ScenarioReport report;
  report.scenario = config.scenario;
  for (std::size_t li = 0; li < config.lengths.size(); ++li) {
    const std::size_t length = config.lengths[li];
    if (length < 2) throw InputError("sequence length must be at least 2");
    const Rng stream = root.substream(li);
    std::vector<Replicate> reps(config.replicates);
    parallel_for(config.replicates,
                 [&](std::size_t r) { reps[r] = run_replicate(config, truth, hmm, length, stream.substream(r)); });

    ScenarioPoint point;
    point.length = length;
    std::vector<const std::vector<Estimate>*> ok;
    for (const auto& r : reps) {
      if (r.estimates) {
        ok.push_back(&*r.estimates);
        point.accuracy += r.accuracy;
      } else {
        ++point.failed;
      }
    }
    point.replicates = ok.size();
    if (ok.empty()) throw NumericalError("every replicate failed at N=" + std::to_string(length));
    const double R = static_cast<double>(ok.size());
    point.accuracy /= R;
    for (std::size_t p = 0; p < ok.front()->size(); ++p) {
      ParameterSummary s;
      const Estimate& first = (*ok.front())[p];
      s.name = first.name;
      s.truth = first.truth;
      s.unit = first.unit;
      for (const auto* e : ok) {
        const double res = (*e)[p].value - s.truth;
        s.mean_estimate += (*e)[p].value;
        s.mean_residual += res;
        s.mean_abs_residual += std::abs(res);
      }
      s.mean_estimate /= R;
      s.mean_residual /= R;
      s.mean_abs_residual /= R;
      double ss = 0.0;
      for (const auto* e : ok) {
        const double d = (*e)[p].value - s.mean_estimate;
        ss += d * d;
      }
      const double sd = ok.size() > 1 ? std::sqrt(ss / (R - 1.0)) : 0.0;
      s.stderr_ = sd / std::sqrt(R);
      if (s.stderr_ > 0.0)
        s.studentized = s.mean_residual / s.stderr_;
      else if (s.mean_residual != 0.0)
        s.studentized = std::copysign(std::numeric_limits<double>::infinity(), s.mean_residual);
      point.parameters.push_back(s);
    }
    report.points.push_back(std::move(point));
  }
  return report;
}

double max_parameter_gap(const ScenarioPoint& a, const ScenarioPoint& b) {
  double gap = 0.0;
  for (const auto& pa : a.parameters)
    for (const auto& pb : b.parameters)
      if (pa.name == pb.name) gap = std::max(gap, std::abs(pa.mean_estimate - pb.mean_estimate) / pa.unit);
  return gap;
}

}  // namespace pohmm
