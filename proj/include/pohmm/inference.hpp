#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pohmm/matrix.hpp"
#include "pohmm/model.hpp"

namespace pohmm {

// Scaled forward variables. Row n of alpha is P(z_n = j | x_1..x_n, Omega)
// (each row sums to 1), log_scale[n] = ln P(x_n | x_1..x_{n-1}, Omega), and
// loglik = sum of log_scale = ln P(x_1..x_N | Omega_1..Omega_N).
struct ForwardResult {
  Matrix alpha;
  std::vector<double> log_scale;
  double loglik = 0.0;
};

ForwardResult forward(const PohmmParams& params, const ObservationSequence& seq);

// Backward variables scaled with the same per-step constants, with
// beta_N = 1, so that sum_j alpha_n[j] * beta_n[j] = 1 at every step.
Matrix backward(const PohmmParams& params, const ObservationSequence& seq, std::span<const double> log_scale);

struct PosteriorTables {
  double loglik = 0.0;
  Matrix gamma;              // N x M, P(z_n = j | x, Omega)
  std::vector<Matrix> xi;    // N-1 tables of M x M, P(z_n = i, z_{n+1} = j | x, Omega)
  std::vector<double> log_scale;
};

PosteriorTables posteriors(const PohmmParams& params, const ObservationSequence& seq);

// argmax_j gamma_n[j] per step; ties go to the smaller state index.
std::vector<std::size_t> predict_states(const PohmmParams& params, const ObservationSequence& seq);

double loglik(const PohmmParams& params, const ObservationSequence& seq);

// Forward recursion extended one event at a time, for online scoring.
class ForwardState {
 public:
  explicit ForwardState(const PohmmParams& params) : params_(&params) {}

  // Consumes one event and returns ln P(x_{n+1} | x_1..x_n, Omega).
  double extend(EventId event, std::span<const double> x);

  double loglik() const { return loglik_; }
  std::size_t steps() const { return steps_; }
  std::span<const double> alpha() const { return alpha_; }

 private:
  const PohmmParams* params_;
  std::vector<double> alpha_;
  std::vector<double> scratch_;
  EventId last_event_ = kNovelEvent;
  std::size_t steps_ = 0;
  double loglik_ = 0.0;
};

namespace detail {

// Emission likelihoods shifted by the per-step maximum log density so the
// largest entry of each row is 1.
struct EmissionTable {
  Matrix values;               // N x M
  std::vector<double> shift;   // per-step max log density
};

EmissionTable emission_table(const PohmmParams& params, const ObservationSequence& seq);

// Scaled forward pass over a precomputed table; norm[n] is the sum of the
// unnormalized shifted forward row, so log_scale[n] = shift[n] + ln norm[n].
void forward_pass(const PohmmParams& params, const ObservationSequence& seq, const EmissionTable& table,
                  Matrix& alpha, std::vector<double>& norm);

void backward_pass(const PohmmParams& params, const ObservationSequence& seq, const EmissionTable& table,
                   std::span<const double> norm, Matrix& beta);

}  // namespace detail

}  // namespace pohmm
