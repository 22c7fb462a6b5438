#include "pohmm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pohmm/error.hpp"

namespace pohmm {

namespace {

void check_sequence(const PohmmParams& params, const ObservationSequence& seq) {
  if (seq.size() == 0) throw InputError("empty sequence");
  if (seq.features.rows() != seq.size())
    throw InputError("event and feature sequences differ in length");
  if (seq.features.cols() != params.n_features)
    throw InputError("sequence has " + std::to_string(seq.features.cols()) + " features, model expects " +
                     std::to_string(params.n_features));
  for (EventId id : seq.events)
    if (id != kNovelEvent && (id < 0 || static_cast<std::size_t>(id) >= params.n_events()))
      throw InputError("symbol out of alphabet");
}

double shift_row(std::span<double> row) {
  const double shift = *std::max_element(row.begin(), row.end());
  if (!std::isfinite(shift)) throw NumericalError("emission log density is not finite");
  for (double& v : row) v = std::exp(v - shift);
  return shift;
}

}  // namespace

namespace detail {

EmissionTable emission_table(const PohmmParams& params, const ObservationSequence& seq) {
  const std::size_t N = seq.size();
  const std::size_t M = params.n_states;
  EmissionTable table{Matrix(N, M), std::vector<double>(N)};
  for (std::size_t n = 0; n < N; ++n) {
    auto row = table.values.row(n);
    for (std::size_t j = 0; j < M; ++j)
      row[j] = log_density(seq.features.row(n), params.emission_for(j, seq.events[n]));
    table.shift[n] = shift_row(row);
  }
  return table;
}

void forward_pass(const PohmmParams& params, const ObservationSequence& seq, const EmissionTable& table,
                  Matrix& alpha, std::vector<double>& norm) {
  const std::size_t N = seq.size();
  const std::size_t M = params.n_states;
  alpha = Matrix(N, M);
  norm.assign(N, 0.0);

  auto start = params.start_for(seq.events[0]);
  for (std::size_t j = 0; j < M; ++j) alpha(0, j) = start[j] * table.values(0, j);
  for (std::size_t n = 0; n < N; ++n) {
    if (n > 0) {
      const Matrix& a = params.transition_for(seq.events[n - 1], seq.events[n]);
      for (std::size_t j = 0; j < M; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < M; ++i) acc += alpha(n - 1, i) * a(i, j);
        alpha(n, j) = acc * table.values(n, j);
      }
    }
    double c = 0.0;
    for (std::size_t j = 0; j < M; ++j) c += alpha(n, j);
    if (!(c > 0.0) || !std::isfinite(c))
      throw NumericalError("forward normalizer vanished at step " + std::to_string(n));
    norm[n] = c;
    for (std::size_t j = 0; j < M; ++j) alpha(n, j) /= c;
  }
}

void backward_pass(const PohmmParams& params, const ObservationSequence& seq, const EmissionTable& table,
                   std::span<const double> norm, Matrix& beta) {
  const std::size_t N = seq.size();
  const std::size_t M = params.n_states;
  beta = Matrix(N, M, 1.0);
  for (std::size_t n = N - 1; n-- > 0;) {
    const Matrix& a = params.transition_for(seq.events[n], seq.events[n + 1]);
    for (std::size_t i = 0; i < M; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < M; ++j) acc += a(i, j) * table.values(n + 1, j) * beta(n + 1, j);
      beta(n, i) = acc / norm[n + 1];
    }
  }
}

}  // namespace detail

ForwardResult forward(const PohmmParams& params, const ObservationSequence& seq) {
  check_sequence(params, seq);
  const auto table = detail::emission_table(params, seq);
  ForwardResult out;
  std::vector<double> norm;
  detail::forward_pass(params, seq, table, out.alpha, norm);
  out.log_scale.resize(seq.size());
  for (std::size_t n = 0; n < seq.size(); ++n) {
    out.log_scale[n] = table.shift[n] + std::log(norm[n]);
    out.loglik += out.log_scale[n];
  }
  return out;
}

Matrix backward(const PohmmParams& params, const ObservationSequence& seq, std::span<const double> log_scale) {
  check_sequence(params, seq);
  if (log_scale.size() != seq.size()) throw InputError("scale vector has the wrong length");
  const auto table = detail::emission_table(params, seq);
  std::vector<double> norm(seq.size());
  for (std::size_t n = 0; n < seq.size(); ++n) norm[n] = std::exp(log_scale[n] - table.shift[n]);
  Matrix beta;
  detail::backward_pass(params, seq, table, norm, beta);
  return beta;
}

PosteriorTables posteriors(const PohmmParams& params, const ObservationSequence& seq) {
  check_sequence(params, seq);
  const std::size_t N = seq.size();
  const std::size_t M = params.n_states;
  const auto table = detail::emission_table(params, seq);
  Matrix alpha, beta;
  std::vector<double> norm;
  detail::forward_pass(params, seq, table, alpha, norm);
  detail::backward_pass(params, seq, table, norm, beta);

  PosteriorTables out;
  out.log_scale.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    out.log_scale[n] = table.shift[n] + std::log(norm[n]);
    out.loglik += out.log_scale[n];
  }
  out.gamma = Matrix(N, M);
  for (std::size_t n = 0; n < N; ++n) {
    double total = 0.0;
    for (std::size_t j = 0; j < M; ++j) total += alpha(n, j) * beta(n, j);
    for (std::size_t j = 0; j < M; ++j) out.gamma(n, j) = alpha(n, j) * beta(n, j) / total;
  }
  out.xi.assign(N > 0 ? N - 1 : 0, Matrix(M, M));
  for (std::size_t n = 0; n + 1 < N; ++n) {
    const Matrix& a = params.transition_for(seq.events[n], seq.events[n + 1]);
    Matrix& xi = out.xi[n];
    double total = 0.0;
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < M; ++j) {
        xi(i, j) = alpha(n, i) * a(i, j) * table.values(n + 1, j) * beta(n + 1, j);
        total += xi(i, j);
      }
    for (auto& v : xi.values()) v /= total;
  }
  return out;
}

std::vector<std::size_t> predict_states(const PohmmParams& params, const ObservationSequence& seq) {
  const auto post = posteriors(params, seq);
  std::vector<std::size_t> states(seq.size());
  for (std::size_t n = 0; n < seq.size(); ++n) {
    auto row = post.gamma.row(n);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[best]) best = j;
    states[n] = best;
  }
  return states;
}

double loglik(const PohmmParams& params, const ObservationSequence& seq) {
  return forward(params, seq).loglik;
}

double ForwardState::extend(EventId event, std::span<const double> x) {
  const PohmmParams& params = *params_;
  const std::size_t M = params.n_states;
  if (event != kNovelEvent && (event < 0 || static_cast<std::size_t>(event) >= params.n_events()))
    throw InputError("symbol out of alphabet");

  std::vector<double> e(M);
  for (std::size_t j = 0; j < M; ++j) e[j] = log_density(x, params.emission_for(j, event));
  const double shift = shift_row(e);

  scratch_.assign(M, 0.0);
  if (steps_ == 0) {
    auto start = params.start_for(event);
    for (std::size_t j = 0; j < M; ++j) scratch_[j] = start[j] * e[j];
  } else {
    const Matrix& a = params.transition_for(last_event_, event);
    for (std::size_t j = 0; j < M; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < M; ++i) acc += alpha_[i] * a(i, j);
      scratch_[j] = acc * e[j];
    }
  }
  double c = 0.0;
  for (double v : scratch_) c += v;
  if (!(c > 0.0) || !std::isfinite(c))
    throw NumericalError("forward normalizer vanished at step " + std::to_string(steps_));
  for (double& v : scratch_) v /= c;
  alpha_.swap(scratch_);
  last_event_ = event;
  ++steps_;
  const double increment = shift + std::log(c);
  loglik_ += increment;
  return increment;
}

}  // namespace pohmm
