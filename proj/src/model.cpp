#include "pohmm/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pohmm/error.hpp"

namespace pohmm {

ObservationSequence encode(const EventAlphabet& alphabet, const LabeledSequence& seq) {
  ObservationSequence out;
  out.events.reserve(seq.size());
  for (const auto& label : seq.events) out.events.push_back(alphabet.encode(label));
  out.features = seq.features;
  return out;
}

LabeledSequence decode(const EventAlphabet& alphabet, const ObservationSequence& seq) {
  LabeledSequence out;
  out.events.reserve(seq.size());
  for (EventId id : seq.events) {
    if (id == kNovelEvent) throw InputError("cannot decode a novel event id");
    out.events.push_back(alphabet.symbol(id));
  }
  out.features = seq.features;
  return out;
}

LabeledSequence collapse_events(const LabeledSequence& seq) {
  LabeledSequence out;
  out.events.assign(seq.size(), kCollapsedEvent);
  out.features = seq.features;
  return out;
}

PohmmParams::PohmmParams(std::size_t states, EventAlphabet events, EmissionKind emission_kind,
                         std::size_t features)
    : n_states(states), alphabet(std::move(events)), kind(emission_kind), n_features(features) {
  if (n_states == 0) throw InputError("model needs at least one hidden state");
  if (n_features == 0) throw InputError("model needs at least one feature");
  const std::size_t m = alphabet.size();
  const double u = 1.0 / static_cast<double>(n_states);
  startp = Matrix(m, n_states, u);
  trans.assign(m * m, Matrix(n_states, n_states, u));
  emit.assign(m * n_states,
              EmissionParams{kind, std::vector<double>(n_features, 0.0), std::vector<double>(n_features, 1.0)});
  const double um = 1.0 / static_cast<double>(m);
  event_chain.start.assign(m, um);
  event_chain.trans = Matrix(m, m, um);
  event_chain.stationary.assign(m, um);
  marginalize(*this);
}

std::span<const double> PohmmParams::start_for(EventId event) const {
  if (event == kNovelEvent) return marginals.start;
  return startp.row(static_cast<std::size_t>(event));
}

const Matrix& PohmmParams::transition_for(EventId prev, EventId next) const {
  const bool prev_known = prev != kNovelEvent;
  const bool next_known = next != kNovelEvent;
  if (prev_known && next_known) return transition(prev, next);
  if (prev_known) return marginals.trans_given_prev[static_cast<std::size_t>(prev)];
  if (next_known) return marginals.trans_given_next[static_cast<std::size_t>(next)];
  return marginals.trans;
}

const EmissionParams& PohmmParams::emission_for(std::size_t state, EventId event) const {
  if (event == kNovelEvent) return marginals.emit[state];
  return emission(state, event);
}

std::vector<double> stationary_distribution(const Matrix& trans) {
  const std::size_t n = trans.rows();
  std::vector<double> p(n, 1.0 / static_cast<double>(n)), next(n);
  // The lazy chain (P + I) / 2 has the same stationary vector and is aperiodic.
  for (int iter = 0; iter < 100000; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) next[j] += 0.5 * p[i] * (trans(i, j) + (i == j ? 1.0 : 0.0));
    double total = 0.0, diff = 0.0;
    for (double v : next) total += v;
    for (std::size_t j = 0; j < n; ++j) {
      next[j] /= total;
      diff = std::max(diff, std::abs(next[j] - p[j]));
    }
    p.swap(next);
    if (diff < 1e-15) break;
  }
  return p;
}

void marginalize(PohmmParams& params) {
  const std::size_t M = params.n_states;
  const std::size_t m = params.n_events();
  const EventChain& chain = params.event_chain;
  Marginals& out = params.marginals;

  out.start.assign(M, 0.0);
  for (std::size_t w = 0; w < m; ++w)
    for (std::size_t j = 0; j < M; ++j) out.start[j] += params.startp(w, j) * chain.start[w];

  out.trans = Matrix(M, M);
  out.trans_given_prev.assign(m, Matrix(M, M));
  out.trans_given_next.assign(m, Matrix(M, M));
  std::vector<double> into(m, 0.0);
  for (std::size_t psi = 0; psi < m; ++psi) {
    for (std::size_t w = 0; w < m; ++w) {
      const double weight = chain.trans(psi, w);
      into[w] += weight;
      const Matrix& a = params.trans[psi * m + w];
      for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = 0; j < M; ++j) {
          const double v = a(i, j) * weight;
          out.trans_given_prev[psi](i, j) += v;
          out.trans_given_next[w](i, j) += v;
          out.trans(i, j) += v;
        }
      }
    }
  }
  for (auto& v : out.trans.values()) v /= static_cast<double>(m);
  for (std::size_t w = 0; w < m; ++w) {
    if (into[w] > 0.0) {
      for (auto& v : out.trans_given_next[w].values()) v /= into[w];
    } else {
      // Never a successor: the predecessor average is undefined.
      out.trans_given_next[w] = out.trans;
    }
  }

  out.emit.assign(M, EmissionParams{params.kind, std::vector<double>(params.n_features, 0.0),
                                    std::vector<double>(params.n_features, 0.0)});
  for (std::size_t j = 0; j < M; ++j) {
    EmissionParams& b = out.emit[j];
    for (std::size_t k = 0; k < params.n_features; ++k) {
      double mean = 0.0;
      for (std::size_t w = 0; w < m; ++w) mean += chain.stationary[w] * params.emit[w * M + j].location[k];
      double var = 0.0;
      for (std::size_t w = 0; w < m; ++w) {
        const EmissionParams& c = params.emit[w * M + j];
        const double d = c.location[k] - mean;
        var += chain.stationary[w] * (d * d + c.scale[k] * c.scale[k]);
      }
      b.location[k] = mean;
      b.scale[k] = std::max(std::sqrt(var), kScaleFloor);
    }
  }

  if (out.state_stationary.size() != M) out.state_stationary = stationary_distribution(out.trans);
}

namespace {

constexpr double kStochasticTolerance = 1e-9;

void check_distribution(std::span<const double> p, const std::string& what) {
  double total = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw InputError(what + " has a negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > kStochasticTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << " sums to " << total << ", expected 1";
    throw InputError(msg.str());
  }
}

void check_emission(const EmissionParams& b, EmissionKind kind, std::size_t features, const std::string& what) {
  if (b.kind != kind) throw InputError(what + " has the wrong emission kind");
  if (b.location.size() != features || b.scale.size() != features)
    throw InputError(what + " has the wrong feature count");
  for (std::size_t k = 0; k < features; ++k) {
    if (!std::isfinite(b.location[k]) || !std::isfinite(b.scale[k]))
      throw InputError(what + " has a non-finite parameter");
    if (b.scale[k] < kScaleFloor * (1.0 - 1e-12)) throw InputError(what + " has scale below the floor");
  }
}

}  // namespace

void validate(const PohmmParams& params) {
  const std::size_t M = params.n_states;
  const std::size_t m = params.n_events();
  if (M == 0 || m == 0 || params.n_features == 0) throw InputError("model has an empty dimension");
  if (params.startp.rows() != m || params.startp.cols() != M) throw InputError("start table has the wrong shape");
  if (params.trans.size() != m * m) throw InputError("transition table has the wrong shape");
  if (params.emit.size() != m * M) throw InputError("emission table has the wrong shape");

  for (std::size_t w = 0; w < m; ++w)
    check_distribution(params.startp.row(w), "start row for '" + params.alphabet.symbol(static_cast<EventId>(w)) + "'");
  for (std::size_t psi = 0; psi < m; ++psi) {
    for (std::size_t w = 0; w < m; ++w) {
      const Matrix& a = params.trans[psi * m + w];
      if (a.rows() != M || a.cols() != M) throw InputError("transition block has the wrong shape");
      for (std::size_t i = 0; i < M; ++i)
        check_distribution(a.row(i), "transition row " + std::to_string(i) + " for (" +
                                         params.alphabet.symbol(static_cast<EventId>(psi)) + "," +
                                         params.alphabet.symbol(static_cast<EventId>(w)) + ")");
    }
  }
  for (std::size_t w = 0; w < m; ++w)
    for (std::size_t j = 0; j < M; ++j)
      check_emission(params.emit[w * M + j], params.kind, params.n_features,
                     "emission (" + std::to_string(j) + "," + params.alphabet.symbol(static_cast<EventId>(w)) + ")");

  const EventChain& chain = params.event_chain;
  if (chain.size() != m || chain.trans.rows() != m || chain.trans.cols() != m || chain.stationary.size() != m)
    throw InputError("event chain has the wrong shape");
  check_distribution(chain.start, "event chain start");
  check_distribution(chain.stationary, "event chain stationary vector");
  for (std::size_t r = 0; r < m; ++r) check_distribution(chain.trans.row(r), "event chain row");

  const Marginals& mg = params.marginals;
  if (mg.start.size() != M || mg.trans_given_prev.size() != m || mg.trans_given_next.size() != m ||
      mg.emit.size() != M || mg.state_stationary.size() != M)
    throw InputError("marginal tables have the wrong shape");
  check_distribution(mg.start, "marginal start");
  check_distribution(mg.state_stationary, "hidden-state stationary vector");
  for (std::size_t i = 0; i < M; ++i) check_distribution(mg.trans.row(i), "marginal transition row");
  for (std::size_t e = 0; e < m; ++e)
    for (std::size_t i = 0; i < M; ++i) {
      check_distribution(mg.trans_given_prev[e].row(i), "marginal a[i,j|psi] row");
      check_distribution(mg.trans_given_next[e].row(i), "marginal a[i,j|omega] row");
    }
  for (std::size_t j = 0; j < M; ++j) check_emission(mg.emit[j], params.kind, params.n_features, "marginal emission");
}

SampledSequence sample(const PohmmParams& params, std::size_t length, Rng& rng,
                       std::optional<std::span<const EventId>> events) {
  SampledSequence out;
  if (events && events->size() != length) throw InputError("provided event sequence has the wrong length");
  if (length == 0) {
    out.sequence.features = Matrix(0, params.n_features);
    return out;
  }
  const EventChain& chain = params.event_chain;
  auto& ev = out.sequence.events;
  ev.resize(length);
  if (events) {
    for (std::size_t n = 0; n < length; ++n) {
      const EventId id = (*events)[n];
      if (id != kNovelEvent && (id < 0 || static_cast<std::size_t>(id) >= params.n_events()))
        throw InputError("symbol out of alphabet");
      ev[n] = id;
    }
  } else {
    ev[0] = static_cast<EventId>(rng.categorical(chain.start));
    for (std::size_t n = 1; n < length; ++n)
      ev[n] = static_cast<EventId>(rng.categorical(chain.trans.row(static_cast<std::size_t>(ev[n - 1]))));
  }

  out.states.resize(length);
  out.states[0] = rng.categorical(params.start_for(ev[0]));
  for (std::size_t n = 1; n < length; ++n)
    out.states[n] = rng.categorical(params.transition_for(ev[n - 1], ev[n]).row(out.states[n - 1]));

  out.sequence.features = Matrix(length, params.n_features);
  for (std::size_t n = 0; n < length; ++n) {
    const Matrix x = pohmm::sample(params.emission_for(out.states[n], ev[n]), 1, rng);
    for (std::size_t k = 0; k < params.n_features; ++k) out.sequence.features(n, k) = x(0, k);
  }
  return out;
}

}  // namespace pohmm
