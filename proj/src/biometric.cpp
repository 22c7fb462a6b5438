#include "pohmm/biometric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pohmm/error.hpp"
#include "pohmm/inference.hpp"

namespace pohmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMadFloor = 1e-9;

}  // namespace

Population::Population(std::vector<UserModel> users) : users_(std::move(users)) {
  std::sort(users_.begin(), users_.end(), [](const UserModel& a, const UserModel& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < users_.size(); ++i)
    if (users_[i].id == users_[i - 1].id) throw InputError("duplicate user id '" + users_[i].id + "'");
}

std::size_t Population::index_of(const std::string& id) const {
  auto it = std::lower_bound(users_.begin(), users_.end(), id,
                             [](const UserModel& u, const std::string& key) { return u.id < key; });
  if (it == users_.end() || it->id != id) throw InputError("unknown user '" + id + "'");
  return static_cast<std::size_t>(it - users_.begin());
}

PopulationScores score_population(const LabeledSequence& query, const Population& population) {
  PopulationScores out;
  out.loglik.assign(population.size(), kNegInf);
  out.valid.assign(population.size(), false);
  for (std::size_t u = 0; u < population.size(); ++u) {
    const auto& model = population[u].model;
    try {
      double ll = loglik(model, encode(model.alphabet, query));
      if (!std::isfinite(ll)) throw NumericalError("non-finite loglik");
      out.loglik[u] = ll;
      out.valid[u] = true;
    } catch (const std::exception& e) {
      out.warnings.push_back("model '" + population[u].id + "' excluded: " + e.what());
    }
  }
  return out;
}

Identification identify(const LabeledSequence& query, const Population& population) {
  auto scores = score_population(query, population);
  Identification out;
  out.warnings = std::move(scores.warnings);
  std::optional<std::size_t> best;
  for (std::size_t u = 0; u < population.size(); ++u) {
    if (!scores.valid[u]) continue;
    if (!best || scores.loglik[u] > scores.loglik[*best]) best = u;
  }
  if (!best) throw NumericalError("no model could score the query");
  out.user = population[*best].id;
  return out;
}

double min_max_normalize(double claimed, std::span<const double> scores) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = kNegInf;
  for (double s : scores) {
    if (!std::isfinite(s)) continue;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (!std::isfinite(claimed)) return 0.0;
  if (!(hi > lo)) return 0.5;
  return (claimed - lo) / (hi - lo);
}

double verification_score(const LabeledSequence& query, const std::string& claimed, const Population& population) {
  std::size_t c = population.index_of(claimed);
  auto scores = score_population(query, population);
  return min_max_normalize(scores.loglik[c], scores.loglik);
}

RocCurve roc_eer(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty()) throw InputError("ROC needs genuine and impostor scores");
  RocCurve roc;
  std::vector<double> g(genuine.begin(), genuine.end());
  std::vector<double> i(impostor.begin(), impostor.end());
  std::sort(g.begin(), g.end());
  std::sort(i.begin(), i.end());
  roc.thresholds.reserve(g.size() + i.size() + 1);
  roc.thresholds.insert(roc.thresholds.end(), g.begin(), g.end());
  roc.thresholds.insert(roc.thresholds.end(), i.begin(), i.end());
  std::sort(roc.thresholds.begin(), roc.thresholds.end());
  roc.thresholds.erase(std::unique(roc.thresholds.begin(), roc.thresholds.end()), roc.thresholds.end());
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());

  for (double t : roc.thresholds) {
    auto below_g = std::lower_bound(g.begin(), g.end(), t) - g.begin();
    auto below_i = std::lower_bound(i.begin(), i.end(), t) - i.begin();
    roc.frr.push_back(static_cast<double>(below_g) / static_cast<double>(g.size()));
    roc.far.push_back(static_cast<double>(static_cast<std::ptrdiff_t>(i.size()) - below_i) /
                      static_cast<double>(i.size()));
  }

  // FAR - FRR is nonincreasing in the threshold: +1 at the lowest threshold
  // (everything accepted) and -1 at +inf.
  for (std::size_t k = 0; k < roc.thresholds.size(); ++k) {
    double d = roc.far[k] - roc.frr[k];
    if (d == 0.0) {
      roc.eer = roc.far[k];
      return roc;
    }
    if (d < 0.0) {
      if (k == 0) {
        roc.eer = 0.5 * (roc.far[k] + roc.frr[k]);
        return roc;
      }
      double d0 = roc.far[k - 1] - roc.frr[k - 1];
      double w = d0 / (d0 - d);
      double far = roc.far[k - 1] + w * (roc.far[k] - roc.far[k - 1]);
      double frr = roc.frr[k - 1] + w * (roc.frr[k] - roc.frr[k - 1]);
      roc.eer = 0.5 * (far + frr);
      return roc;
    }
  }
  roc.eer = 0.5 * (roc.far.back() + roc.frr.back());
  return roc;
}

Matrix event_increments(const LabeledSequence& query, const Population& population) {
  const std::size_t n = query.size();
  Matrix inc(n, population.size(), kNegInf);
  for (std::size_t u = 0; u < population.size(); ++u) {
    const auto& model = population[u].model;
    ForwardState state(model);
    try {
      for (std::size_t t = 0; t < n; ++t) {
        double d = state.extend(model.alphabet.encode(query.events[t]), query.features.row(t));
        if (!std::isfinite(d)) break;
        inc(t, u) = d;
      }
    } catch (const std::exception&) {
      // remaining entries stay at -inf
    }
  }
  return inc;
}

PenaltyTrace penalty_from_increments(const Matrix& increments, std::size_t claimed, std::size_t window,
                                     std::optional<double> threshold) {
  if (window == 0) throw InputError("penalty window must be positive");
  if (claimed >= increments.cols()) throw InputError("claimed model out of range");
  PenaltyTrace trace;
  trace.window = window;
  trace.threshold = threshold;
  const std::size_t n = increments.rows();
  trace.ranks.resize(n);
  trace.cumulative.resize(n);
  double running = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double own = increments(t, claimed);
    std::size_t rank = 0;
    for (std::size_t u = 0; u < increments.cols(); ++u) {
      double v = increments(t, u);
      if (v > own || (v == own && u < claimed)) ++rank;
    }
    trace.ranks[t] = rank;
    running += static_cast<double>(rank);
    if (t >= window) running -= static_cast<double>(trace.ranks[t - window]);
    trace.cumulative[t] = running;
    if (threshold && !trace.rejection_index && running > *threshold) trace.rejection_index = t + 1;
  }
  return trace;
}

PenaltyTrace continuous_penalty(const LabeledSequence& query, const std::string& claimed,
                                const Population& population, std::size_t window, std::optional<double> threshold) {
  std::size_t c = population.index_of(claimed);
  return penalty_from_increments(event_increments(query, population), c, window, threshold);
}

AmrtResult amrt(const Population& population, std::span<const Query> queries, std::size_t window) {
  std::vector<Matrix> tables;
  tables.reserve(queries.size());
  for (const auto& q : queries) tables.push_back(event_increments(q.sequence, population));

  AmrtResult out;
  double total = 0.0;
  for (std::size_t u = 0; u < population.size(); ++u) {
    const std::string& id = population[u].id;
    std::optional<double> threshold;
    for (std::size_t k = 0; k < queries.size(); ++k) {
      if (queries[k].user != id) continue;
      auto trace = penalty_from_increments(tables[k], u, window);
      double peak = trace.cumulative.empty() ? 0.0 : *std::max_element(trace.cumulative.begin(), trace.cumulative.end());
      threshold = threshold ? std::max(*threshold, peak) : peak;
    }
    if (!threshold) continue;
    for (std::size_t k = 0; k < queries.size(); ++k) {
      if (queries[k].user == id) continue;
      auto trace = penalty_from_increments(tables[k], u, window, threshold);
      MrtRecord rec;
      rec.model_user = id;
      rec.query = k;
      rec.threshold = *threshold;
      rec.mrt = trace.rejection_index.value_or(queries[k].sequence.size());
      total += static_cast<double>(rec.mrt);
      out.pairs.push_back(rec);
    }
  }
  out.amrt = out.pairs.empty() ? 0.0 : total / static_cast<double>(out.pairs.size());
  return out;
}

namespace {

std::vector<double> column_mean(const Matrix& m) {
  if (m.rows() == 0) throw InputError("no template vectors");
  std::vector<double> mean(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) mean[c] += m(r, c);
  for (double& v : mean) v /= static_cast<double>(m.rows());
  return mean;
}

}  // namespace

double manhattan_score(std::span<const double> query, const Matrix& templates) {
  auto mean = column_mean(templates);
  if (query.size() != mean.size()) throw InputError("timing vector length mismatch");
  double d = 0.0;
  for (std::size_t c = 0; c < mean.size(); ++c) d += std::abs(query[c] - mean[c]);
  return -d;
}

double scaled_manhattan_score(std::span<const double> query, const Matrix& templates, std::span<const double> mad) {
  auto mean = column_mean(templates);
  if (query.size() != mean.size() || mad.size() != mean.size()) throw InputError("timing vector length mismatch");
  double d = 0.0;
  for (std::size_t c = 0; c < mean.size(); ++c) d += std::abs(query[c] - mean[c]) / std::max(mad[c], kMadFloor);
  return -d;
}

std::vector<double> mean_absolute_deviation(const Matrix& vectors) {
  auto mean = column_mean(vectors);
  std::vector<double> mad(vectors.cols(), 0.0);
  for (std::size_t r = 0; r < vectors.rows(); ++r)
    for (std::size_t c = 0; c < vectors.cols(); ++c) mad[c] += std::abs(vectors(r, c) - mean[c]);
  for (double& v : mad) v /= static_cast<double>(vectors.rows());
  return mad;
}

}  // namespace pohmm
