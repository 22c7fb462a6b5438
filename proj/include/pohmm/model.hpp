#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pohmm/emissions.hpp"
#include "pohmm/event_chain.hpp"
#include "pohmm/matrix.hpp"
#include "pohmm/rng.hpp"

namespace pohmm {

// Event ids aligned with one feature vector per step.
struct ObservationSequence {
  std::vector<EventId> events;
  Matrix features;  // N x K

  std::size_t size() const { return events.size(); }
};

// Same as ObservationSequence but with raw event labels; each model encodes it
// against its own alphabet (unknown labels become kNovelEvent).
struct LabeledSequence {
  std::vector<std::string> events;
  Matrix features;

  std::size_t size() const { return events.size(); }
};

ObservationSequence encode(const EventAlphabet& alphabet, const LabeledSequence& seq);
LabeledSequence decode(const EventAlphabet& alphabet, const ObservationSequence& seq);

// Label used when event types are ignored (the HMM baseline).
inline constexpr const char* kCollapsedEvent = "*";
// Maps every event to kCollapsedEvent, turning a POHMM into a plain HMM.
LabeledSequence collapse_events(const LabeledSequence& seq);

// Parameters with the event type summed out. Used for novel event types at
// scoring time and as the smoothing target during estimation.
struct Marginals {
  std::vector<double> start;              // pi[j]
  std::vector<Matrix> trans_given_prev;   // a[i,j|psi], one M x M per psi
  std::vector<Matrix> trans_given_next;   // a[i,j|omega], one M x M per omega
  Matrix trans;                           // a[i,j]
  std::vector<EmissionParams> emit;       // moment-matched b[j]
  std::vector<double> state_stationary;   // Pi[j]
};

// Full event-type-conditioned parameter set.
//
// startp(w, j)            = P(z_1 = j | Omega_1 = w)
// trans[psi * m + w](i,j) = P(z_{n+1} = j | z_n = i, Omega_n = psi, Omega_{n+1} = w)
// emit[w * M + j]         = emission parameters of state j given event type w
struct PohmmParams {
  std::size_t n_states = 0;
  EventAlphabet alphabet;
  EmissionKind kind = EmissionKind::lognormal;
  std::size_t n_features = 0;

  Matrix startp;
  std::vector<Matrix> trans;
  std::vector<EmissionParams> emit;
  EventChain event_chain;
  Marginals marginals;

  // Uniform start/transition tables, emission cells zero-location unit-scale,
  // uniform event chain. Marginals are computed.
  PohmmParams(std::size_t states, EventAlphabet events, EmissionKind emission_kind, std::size_t features);
  PohmmParams() = default;

  std::size_t n_events() const { return alphabet.size(); }

  Matrix& transition(EventId prev, EventId next) {
    return trans[static_cast<std::size_t>(prev) * n_events() + static_cast<std::size_t>(next)];
  }
  const Matrix& transition(EventId prev, EventId next) const {
    return trans[static_cast<std::size_t>(prev) * n_events() + static_cast<std::size_t>(next)];
  }
  EmissionParams& emission(std::size_t state, EventId event) {
    return emit[static_cast<std::size_t>(event) * n_states + state];
  }
  const EmissionParams& emission(std::size_t state, EventId event) const {
    return emit[static_cast<std::size_t>(event) * n_states + state];
  }

  // Scoring-time lookups with marginal fallback for kNovelEvent. For a
  // transition, a novel side is summed out: known->novel uses a[i,j|psi],
  // novel->known uses a[i,j|omega], novel->novel uses a[i,j].
  std::span<const double> start_for(EventId event) const;
  const Matrix& transition_for(EventId prev, EventId next) const;
  const EmissionParams& emission_for(std::size_t state, EventId event) const;
};

// Recomputes every marginal table from the conditional tables and the event
// chain and stores them in params.marginals. The hidden-state stationary
// vector is kept when already sized M, otherwise it is set to the stationary
// distribution of a[i,j].
void marginalize(PohmmParams& params);

// Throws InputError describing the first violated invariant (stochastic rows,
// positive scales, matching shapes).
void validate(const PohmmParams& params);

struct SampledSequence {
  ObservationSequence sequence;
  std::vector<std::size_t> states;
};

// Draws N steps. Event types come from the event chain unless `events` is
// given (then its length must equal N and novel ids use the marginals).
SampledSequence sample(const PohmmParams& params, std::size_t length, Rng& rng,
                       std::optional<std::span<const EventId>> events = std::nullopt);

// Stationary distribution of a row-stochastic matrix by power iteration.
std::vector<double> stationary_distribution(const Matrix& trans);

}  // namespace pohmm
