#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pohmm/emissions.hpp"
#include "pohmm/model.hpp"

namespace pohmm {

struct FitConfig {
  std::size_t n_states = 2;
  EmissionKind kind = EmissionKind::lognormal;
  double epsilon = 1e-6;      // stop when the loglik gain drops below this
  std::size_t max_iter = 1000;
  double bandwidth = 2.0;     // initial state means spread over +-bandwidth sd
  bool smoothing = true;
  double pseudocount = 0.0;   // event chain only

  // Throws InputError when a field is out of range.
  void check() const;
};

struct FitReport {
  std::vector<double> loglik_trace;  // loglik of the parameters entering each iteration
  std::size_t iterations = 0;
  bool converged = false;
  double final_loglik = 0.0;
};

// Occurrence counts over the training data, used for smoothing weights.
struct EventFrequencies {
  std::vector<double> unigram;  // f(w)
  Matrix bigram;                // f(psi, w)
};

EventFrequencies count_events(std::span<const ObservationSequence> seqs, std::size_t alphabet_size);

// Observation-based deterministic initialization: uniform start and transition
// tables, per-event-type observed moments with the state means spread evenly
// over [mean - h*sd, mean + h*sd]. Event types with no observations use
// moments pooled over all events.
PohmmParams init_params(std::span<const ObservationSequence> seqs, const EventAlphabet& alphabet,
                        const FitConfig& config);

struct EmStep {
  PohmmParams params;    // re-estimated (and optionally smoothed) parameters
  double loglik = 0.0;   // total loglik of the input parameters
};

// One E-step over all sequences followed by the M-step; statistics are summed
// across sequences before dividing. Cells with no supporting data keep their
// previous values. Marginals are recomputed, then smoothing is applied when
// requested.
EmStep em_step(const PohmmParams& params, std::span<const ObservationSequence> seqs, bool smoothing);

// Blends conditional parameters toward the cached marginals with
// frequency-dependent weights. Does not recompute the marginals.
PohmmParams smooth(const PohmmParams& params, const EventFrequencies& freq);

// Weights applied to {a[i,j|psi,w], a[i,j|psi], a[i,j|w], a[i,j]} for one
// (psi, w) pair.
struct TransitionWeights {
  double pair = 0.0;
  double prev = 0.0;
  double next = 0.0;
  double none = 0.0;
};

double start_emission_weight(double frequency);
TransitionWeights transition_weights(double f_pair, double f_prev, double f_next);

struct FitResult {
  PohmmParams params;
  FitReport report;
};

// Initialize, then iterate em_step until the loglik gain is below epsilon or
// max_iter steps were taken. Deterministic for identical inputs.
FitResult fit(std::span<const ObservationSequence> seqs, const EventAlphabet& alphabet, const FitConfig& config);

// Convenience: builds the alphabet from the training labels (order of first
// appearance) and encodes the sequences.
FitResult fit(std::span<const LabeledSequence> seqs, const FitConfig& config);

// Free parameters after normalization constraints; `emission_params` is the
// number of free parameters per emission distribution.
std::size_t dof(std::size_t n_states, std::size_t n_events, std::size_t emission_params);

}  // namespace pohmm
