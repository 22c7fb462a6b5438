#include "pohmm/estimation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "pohmm/error.hpp"
#include "pohmm/inference.hpp"

namespace pohmm {

void FitConfig::check() const {
  if (n_states < 1) throw InputError("number of hidden states must be at least 1");
  if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
  if (max_iter < 1) throw InputError("max_iter must be at least 1");
  if (!(bandwidth >= 0.0)) throw InputError("bandwidth must be nonnegative");
  if (!(pseudocount >= 0.0)) throw InputError("pseudocount must be nonnegative");
}

namespace {

void check_training_data(std::span<const ObservationSequence> seqs, std::size_t m) {
  if (seqs.empty()) throw InputError("no sequences");
  const std::size_t K = seqs.front().features.cols();
  if (K == 0) throw InputError("sequences have no features");
  bool any = false;
  for (const auto& seq : seqs) {
    if (seq.features.rows() != seq.size()) throw InputError("event and feature sequences differ in length");
    if (seq.size() > 0 && seq.features.cols() != K) throw InputError("sequences differ in feature count");
    for (EventId id : seq.events)
      if (id < 0 || static_cast<std::size_t>(id) >= m) throw InputError("symbol out of alphabet");
    any = any || seq.size() > 0;
  }
  if (!any) throw InputError("no sequences");
}

double transform(double x, EmissionKind kind) {
  if (kind == EmissionKind::normal) return x;
  if (!(x > 0.0)) throw InputError("domain: lognormal emission requires positive values");
  return std::log(x);
}


}  // namespace

EventFrequencies count_events(std::span<const ObservationSequence> seqs, std::size_t alphabet_size) {
  EventFrequencies f{std::vector<double>(alphabet_size, 0.0), Matrix(alphabet_size, alphabet_size)};
  for (const auto& seq : seqs) {
    for (std::size_t n = 0; n < seq.size(); ++n) {
      const auto w = static_cast<std::size_t>(seq.events[n]);
      f.unigram[w] += 1.0;
      if (n + 1 < seq.size()) f.bigram(w, static_cast<std::size_t>(seq.events[n + 1])) += 1.0;
    }
  }
  return f;
}

PohmmParams init_params(std::span<const ObservationSequence> seqs, const EventAlphabet& alphabet,
                        const FitConfig& config) {
  config.check();
  const std::size_t m = alphabet.size();
  check_training_data(seqs, m);
  const std::size_t K = seqs.front().features.cols();
  const std::size_t M = config.n_states;

  PohmmParams params(M, alphabet, config.kind, K);
  std::vector<std::vector<EventId>> events;
  events.reserve(seqs.size());
  for (const auto& seq : seqs) events.push_back(seq.events);
  params.event_chain = fit_event_chain(events, m, config.pseudocount);

  // Per-event-type and pooled means, then variances in a second pass.
  std::vector<double> count(m, 0.0);
  Matrix mean(m, K), var(m, K);
  std::vector<double> pooled_mean(K, 0.0), pooled_var(K, 0.0);
  double pooled_count = 0.0;
  for (const auto& seq : seqs)
    for (std::size_t n = 0; n < seq.size(); ++n) {
      const auto w = static_cast<std::size_t>(seq.events[n]);
      count[w] += 1.0;
      pooled_count += 1.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double y = transform(seq.features(n, k), config.kind);
        mean(w, k) += y;
        pooled_mean[k] += y;
      }
    }
  for (std::size_t k = 0; k < K; ++k) pooled_mean[k] /= pooled_count;
  for (std::size_t w = 0; w < m; ++w)
    for (std::size_t k = 0; k < K; ++k)
      if (count[w] > 0.0) mean(w, k) /= count[w];
  for (const auto& seq : seqs)
    for (std::size_t n = 0; n < seq.size(); ++n) {
      const auto w = static_cast<std::size_t>(seq.events[n]);
      for (std::size_t k = 0; k < K; ++k) {
        const double y = transform(seq.features(n, k), config.kind);
        var(w, k) += (y - mean(w, k)) * (y - mean(w, k));
        pooled_var[k] += (y - pooled_mean[k]) * (y - pooled_mean[k]);
      }
    }
  for (std::size_t k = 0; k < K; ++k) pooled_var[k] /= pooled_count;

  const double h = config.bandwidth;
  for (std::size_t w = 0; w < m; ++w) {
    for (std::size_t k = 0; k < K; ++k) {
      const bool seen = count[w] > 0.0;
      const double mu = seen ? mean(w, k) : pooled_mean[k];
      const double sd = std::sqrt(seen ? var(w, k) / count[w] : pooled_var[k]);
      for (std::size_t j = 0; j < M; ++j) {
        const double offset =
            M == 1 ? 0.0 : 2.0 * h * static_cast<double>(j) / static_cast<double>(M - 1) - h;
        EmissionParams& b = params.emission(j, static_cast<EventId>(w));
        b.location[k] = mu + offset * sd;
        b.scale[k] = std::max(sd, kScaleFloor);
      }
    }
  }
  params.marginals.state_stationary.clear();
  marginalize(params);
  return params;
}

double start_emission_weight(double frequency) { return 1.0 - 1.0 / (1.0 + frequency); }

TransitionWeights transition_weights(double f_pair, double f_prev, double f_next) {
  TransitionWeights w;
  const double d_prev = f_pair + f_next;
  const double d_next = f_pair + f_prev;
  w.prev = d_prev > 0.0 ? 1.0 / d_prev : 1.0;
  w.next = d_next > 0.0 ? 1.0 / d_next : 1.0;
  const double fallback = w.prev + w.next;
  if (fallback > 1.0) {
    // Rescale so the weights stay a convex combination.
    w.prev /= fallback;
    w.next /= fallback;
    w.pair = 0.0;
  } else {
    w.pair = 1.0 - fallback;
  }
  w.none = 0.0;
  return w;
}

PohmmParams smooth(const PohmmParams& params, const EventFrequencies& freq) {
  const std::size_t M = params.n_states;
  const std::size_t m = params.n_events();
  const Marginals& mg = params.marginals;
  PohmmParams out = params;

  for (std::size_t w = 0; w < m; ++w) {
    const double wt = start_emission_weight(freq.unigram[w]);
    for (std::size_t j = 0; j < M; ++j) {
      out.startp(w, j) = wt * params.startp(w, j) + (1.0 - wt) * mg.start[j];
      const EmissionParams& b = params.emission(j, static_cast<EventId>(w));
      EmissionParams& s = out.emission(j, static_cast<EventId>(w));
      for (std::size_t k = 0; k < params.n_features; ++k) {
        s.location[k] = wt * b.location[k] + (1.0 - wt) * mg.emit[j].location[k];
        s.scale[k] = wt * b.scale[k] + (1.0 - wt) * mg.emit[j].scale[k];
      }
    }
  }

  for (std::size_t psi = 0; psi < m; ++psi) {
    for (std::size_t w = 0; w < m; ++w) {
      const TransitionWeights tw = transition_weights(freq.bigram(psi, w), freq.unigram[psi], freq.unigram[w]);
      const Matrix& a = params.trans[psi * m + w];
      Matrix& s = out.trans[psi * m + w];
      for (std::size_t i = 0; i < M; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < M; ++j) {
          s(i, j) = tw.pair * a(i, j) + tw.prev * mg.trans_given_prev[psi](i, j) +
                    tw.next * mg.trans_given_next[w](i, j) + tw.none * mg.trans(i, j);
          total += s(i, j);
        }
        for (std::size_t j = 0; j < M; ++j) s(i, j) /= total;
      }
    }
  }
  return out;
}

EmStep em_step(const PohmmParams& params, std::span<const ObservationSequence> seqs, bool smoothing) {
  const std::size_t M = params.n_states;
  const std::size_t m = params.n_events();
  const std::size_t K = params.n_features;
  check_training_data(seqs, m);

  Matrix start_num(m, M);
  std::vector<double> start_count(m, 0.0);
  std::vector<Matrix> trans_num(m * m, Matrix(M, M));
  Matrix pair_count(m, m);
  std::vector<double> state_mass(M, 0.0);
  double steps = 0.0;

  // Observations and state responsibilities grouped by event type.
  std::vector<std::size_t> per_event(m, 0);
  for (const auto& seq : seqs)
    for (EventId id : seq.events) ++per_event[static_cast<std::size_t>(id)];
  std::vector<Matrix> obs(m), resp(m);
  for (std::size_t w = 0; w < m; ++w) {
    obs[w] = Matrix(per_event[w], K);
    resp[w] = Matrix(per_event[w], M);
  }
  std::vector<std::size_t> fill(m, 0);

  double total_loglik = 0.0;
  Matrix alpha, beta;
  std::vector<double> norm;
  std::vector<double> gamma(M);
  for (const auto& seq : seqs) {
    if (seq.size() == 0) continue;
    const auto table = detail::emission_table(params, seq);
    detail::forward_pass(params, seq, table, alpha, norm);
    detail::backward_pass(params, seq, table, norm, beta);
    for (std::size_t n = 0; n < seq.size(); ++n) total_loglik += table.shift[n] + std::log(norm[n]);

    for (std::size_t n = 0; n < seq.size(); ++n) {
      const auto w = static_cast<std::size_t>(seq.events[n]);
      double total = 0.0;
      for (std::size_t j = 0; j < M; ++j) {
        gamma[j] = alpha(n, j) * beta(n, j);
        total += gamma[j];
      }
      const std::size_t row = fill[w]++;
      for (std::size_t j = 0; j < M; ++j) {
        gamma[j] /= total;
        resp[w](row, j) = gamma[j];
        state_mass[j] += gamma[j];
      }
      for (std::size_t k = 0; k < K; ++k) obs[w](row, k) = seq.features(n, k);
      if (n == 0) {
        start_count[w] += 1.0;
        for (std::size_t j = 0; j < M; ++j) start_num(w, j) += gamma[j];
      }
      if (n + 1 < seq.size()) {
        const auto next = static_cast<std::size_t>(seq.events[n + 1]);
        const Matrix& a = params.transition(seq.events[n], seq.events[n + 1]);
        Matrix& acc = trans_num[w * m + next];
        pair_count(w, next) += 1.0;
        double xi_total = 0.0;
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t j = 0; j < M; ++j)
            xi_total += alpha(n, i) * a(i, j) * table.values(n + 1, j) * beta(n + 1, j);
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t j = 0; j < M; ++j)
            acc(i, j) += alpha(n, i) * a(i, j) * table.values(n + 1, j) * beta(n + 1, j) / xi_total;
      }
    }
    steps += static_cast<double>(seq.size());
  }

  EmStep out{params, total_loglik};
  PohmmParams& next = out.params;

  for (std::size_t w = 0; w < m; ++w) {
    if (start_count[w] <= 0.0) continue;
    double total = 0.0;
    for (std::size_t j = 0; j < M; ++j) total += start_num(w, j);
    if (total > 0.0)
      for (std::size_t j = 0; j < M; ++j) next.startp(w, j) = start_num(w, j) / total;
  }

  for (std::size_t psi = 0; psi < m; ++psi) {
    for (std::size_t w = 0; w < m; ++w) {
      if (pair_count(psi, w) <= 0.0) continue;
      const Matrix& num = trans_num[psi * m + w];
      Matrix& a = next.trans[psi * m + w];
      for (std::size_t i = 0; i < M; ++i) {
        // sum_j xi_n[i,j] = gamma_n[i], so the row sum is the gamma denominator.
        double total = 0.0;
        for (std::size_t j = 0; j < M; ++j) total += num(i, j);
        if (total > 0.0)
          for (std::size_t j = 0; j < M; ++j) a(i, j) = num(i, j) / total;
      }
    }
  }

  std::vector<double> weights;
  for (std::size_t w = 0; w < m; ++w) {
    if (per_event[w] == 0) continue;
    weights.resize(per_event[w]);
    for (std::size_t j = 0; j < M; ++j) {
      double mass = 0.0;
      for (std::size_t r = 0; r < per_event[w]; ++r) {
        weights[r] = resp[w](r, j);
        mass += weights[r];
      }
      if (mass > 0.0) next.emission(j, static_cast<EventId>(w)) = weighted_mle(obs[w], weights, params.kind);
    }
  }

  next.marginals.state_stationary.assign(M, 0.0);
  for (std::size_t j = 0; j < M; ++j) next.marginals.state_stationary[j] = state_mass[j] / steps;
  marginalize(next);
  if (smoothing) {
    next = smooth(next, count_events(seqs, m));
    marginalize(next);
  }
  return out;
}

namespace {

std::string describe_failure(const PohmmParams& params) {
  for (std::size_t w = 0; w < params.n_events(); ++w)
    for (std::size_t j = 0; j < params.n_states; ++j) {
      const EmissionParams& b = params.emission(j, static_cast<EventId>(w));
      for (std::size_t k = 0; k < b.feature_count(); ++k)
        if (!std::isfinite(b.location[k]) || !std::isfinite(b.scale[k]))
          return "non-finite emission parameter in cell (state " + std::to_string(j) + ", event '" +
                 params.alphabet.symbol(static_cast<EventId>(w)) + "')";
    }
  return "no emission cell is non-finite; check input features";
}

}  // namespace

FitResult fit(std::span<const ObservationSequence> seqs, const EventAlphabet& alphabet, const FitConfig& config) {
  FitResult result{init_params(seqs, alphabet, config), {}};
  FitReport& report = result.report;
  PohmmParams& params = result.params;

  auto step = [&](const PohmmParams& p) {
    try {
      EmStep s = em_step(p, seqs, config.smoothing);
      if (!std::isfinite(s.loglik)) throw NumericalError("loglikelihood is not finite");
      return s;
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " after " + std::to_string(report.iterations) +
                           " iterations: " + describe_failure(p));
    }
  };

  for (std::size_t it = 0; it < config.max_iter; ++it) {
    EmStep s = step(params);
    report.loglik_trace.push_back(s.loglik);
    const std::size_t t = report.loglik_trace.size();
    if (t >= 2 && report.loglik_trace[t - 1] - report.loglik_trace[t - 2] < config.epsilon) {
      report.converged = true;
      break;
    }
    params = std::move(s.params);
    ++report.iterations;
  }
  if (!report.converged) {
    report.loglik_trace.push_back(step(params).loglik);
  }
  report.final_loglik = report.loglik_trace.back();
  return result;
}

FitResult fit(std::span<const LabeledSequence> seqs, const FitConfig& config) {
  std::vector<std::vector<std::string>> labels;
  labels.reserve(seqs.size());
  for (const auto& s : seqs) labels.push_back(s.events);
  const EventAlphabet alphabet = EventAlphabet::from_sequences(labels);
  std::vector<ObservationSequence> encoded;
  encoded.reserve(seqs.size());
  for (const auto& s : seqs) encoded.push_back(encode(alphabet, s));
  return fit(encoded, alphabet, config);
}

std::size_t dof(std::size_t n_states, std::size_t n_events, std::size_t emission_params) {
  const std::size_t M = n_states, m = n_events;
  return m * (M - 1) + m * m * M * (M - 1) + m * M * emission_params;
}

}  // namespace pohmm
