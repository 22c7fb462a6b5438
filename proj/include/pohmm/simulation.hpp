#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pohmm/estimation.hpp"
#include "pohmm/model.hpp"

namespace pohmm {

// Generating model used when none is supplied: 2 hidden states, event types
// {a, b, c}, uniform start/transition tables and event chain, normal
// emissions with state locations {100, 400}, per-event-type offsets added to
// the location and a common scale.
PohmmParams default_generator(std::vector<double> offsets = {-20.0, 0.0, 20.0}, double scale = 50.0);

// The M-state HMM obtained by summing the event type out of `params` (a
// single event type labeled kCollapsedEvent).
PohmmParams marginal_hmm(const PohmmParams& params);

// Reorders hidden states so that new state k is old state order[k].
PohmmParams permute_states(const PohmmParams& params, const std::vector<std::size_t>& order);

// State order that sorts the marginal location of feature 0 ascending.
std::vector<std::size_t> state_order(const PohmmParams& params);

struct ParameterSummary {
  std::string name;
  double truth = 0.0;
  double mean_estimate = 0.0;
  double mean_residual = 0.0;      // mean of (estimate - truth)
  double stderr_ = 0.0;            // across-replicate sd / sqrt(replicates)
  double studentized = 0.0;        // mean_residual / stderr_ (+-inf when only the residual is nonzero)
  double mean_abs_residual = 0.0;
  double unit = 1.0;               // emission scale for emission cells, 1 for probabilities
};

struct ScenarioPoint {
  std::size_t length = 0;
  std::size_t replicates = 0;  // successful fits
  std::size_t failed = 0;
  std::vector<ParameterSummary> parameters;
  double accuracy = 0.0;       // mean per-step hidden-state accuracy
};

struct ScenarioReport {
  int scenario = 1;
  std::vector<ScenarioPoint> points;
};

// 1: POHMM data, POHMM fit without smoothing; conditional parameters compared.
// 2: as 1 with smoothing.
// 3: HMM data (the generator's marginal HMM) with uniformly random event
//    types, POHMM fit; marginal parameters compared to the HMM.
// 4: POHMM data fit by a one-event-type model; its state parameters are
//    compared to every conditional cell of the generator.
struct ScenarioConfig {
  int scenario = 1;
  std::vector<std::size_t> lengths{128, 512, 2048, 4096};
  std::size_t replicates = 100;
  PohmmParams truth = default_generator();
  FitConfig fit{.kind = EmissionKind::normal};
  std::uint64_t seed = 0;
};

// Replicate r at length index i draws from Rng(seed).substream(i).substream(r)
// whatever the scenario, so scenarios 1 and 2 see identical data.
ScenarioReport run_scenario(const ScenarioConfig& config);

// Largest |mean estimate difference| / unit over the parameters the two
// points share.
double max_parameter_gap(const ScenarioPoint& a, const ScenarioPoint& b);

}  // namespace pohmm
