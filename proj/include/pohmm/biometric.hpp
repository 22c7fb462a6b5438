#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pohmm/estimation.hpp"
#include "pohmm/matrix.hpp"
#include "pohmm/model.hpp"

namespace pohmm {

struct UserModel {
  std::string id;
  PohmmParams model;
  Matrix templates;  // training timing vectors for the distance baselines (may be empty)
};

// Models keyed by user id, sorted by id.
class Population {
 public:
  Population() = default;
  // Throws InputError on duplicate ids.
  explicit Population(std::vector<UserModel> users);

  std::size_t size() const { return users_.size(); }
  const UserModel& operator[](std::size_t i) const { return users_[i]; }
  const std::vector<UserModel>& users() const { return users_; }
  // Throws InputError for an unknown id.
  std::size_t index_of(const std::string& id) const;

 private:
  std::vector<UserModel> users_;
};

// Per-model loglik of one query; a model that fails to score is marked invalid.
struct PopulationScores {
  std::vector<double> loglik;
  std::vector<bool> valid;
  std::vector<std::string> warnings;
};

PopulationScores score_population(const LabeledSequence& query, const Population& population);

struct Identification {
  std::string user;
  std::vector<std::string> warnings;
};

// Maximum-loglik model; ties go to the lexicographically smallest id.
Identification identify(const LabeledSequence& query, const Population& population);

// (L_claimed - L_min) / (L_max - L_min) over the valid entries; 0.5 when all
// scores are equal.
double min_max_normalize(double claimed, std::span<const double> scores);

double verification_score(const LabeledSequence& query, const std::string& claimed, const Population& population);

struct RocCurve {
  std::vector<double> thresholds;  // ascending; the last one is +inf
  std::vector<double> far;         // impostor scores >= threshold
  std::vector<double> frr;         // genuine scores < threshold
  double eer = 0.0;
};

// Sweeps every distinct score plus +inf as an acceptance threshold. The EER
// is read where FAR - FRR changes sign, interpolating linearly between the
// two bracketing thresholds.
RocCurve roc_eer(std::span<const double> genuine, std::span<const double> impostor);

inline constexpr std::size_t kPenaltyWindow = 25;

struct PenaltyTrace {
  std::vector<std::size_t> ranks;       // rank of the claimed model per event (0 = best)
  std::size_t window = kPenaltyWindow;
  std::vector<double> cumulative;       // sum of ranks over the last min(n, W) events
  std::optional<double> threshold;
  std::optional<std::size_t> rejection_index;  // 1-based event count at first rejection
};

// Per-event loglik increments of every model: N x U, entry (n, u) =
// ln P(x_1..x_{n+1}) - ln P(x_1..x_n) under model u. A model that fails to
// score gets -inf from the failing event on.
Matrix event_increments(const LabeledSequence& query, const Population& population);

// Rank penalty of model `claimed` given an increments table; equal increments
// rank by model order.
PenaltyTrace penalty_from_increments(const Matrix& increments, std::size_t claimed, std::size_t window,
                                     std::optional<double> threshold = std::nullopt);

PenaltyTrace continuous_penalty(const LabeledSequence& query, const std::string& claimed,
                                const Population& population, std::size_t window = kPenaltyWindow,
                                std::optional<double> threshold = std::nullopt);

struct Query {
  std::string user;  // true owner
  LabeledSequence sequence;
};

struct MrtRecord {
  std::string model_user;
  std::size_t query = 0;      // index into the query list
  double threshold = 0.0;
  std::size_t mrt = 0;
};

struct AmrtResult {
  double amrt = 0.0;
  std::vector<MrtRecord> pairs;
};

// For every model u the threshold is the largest windowed penalty any of u's
// genuine queries reaches, so u's owner is never rejected. The MRT of an
// impostor query is the first event count at which its penalty exceeds that
// threshold, or the query length if it never does. AMRT averages over all
// (impostor query, model) pairs. Models with no genuine query are skipped.
AmrtResult amrt(const Population& population, std::span<const Query> queries, std::size_t window = kPenaltyWindow);

// Negative L1 distance to the template mean.
double manhattan_score(std::span<const double> query, const Matrix& templates);
// Same with every term divided by the matching global mean absolute deviation
// (floored at 1e-9).
double scaled_manhattan_score(std::span<const double> query, const Matrix& templates, std::span<const double> mad);
// Per-column mean absolute deviation about the column mean.
std::vector<double> mean_absolute_deviation(const Matrix& vectors);

}  // namespace pohmm
