#include "pohmm/benchmark.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "pohmm/error.hpp"
#include "pohmm/parallel.hpp"

namespace pohmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Fold {
  std::vector<std::vector<const BenchmarkSample*>> train;  // per user
  std::vector<std::optional<const BenchmarkSample*>> query;
};

// Score of every model for one query; -inf marks a model that could not score.
using ScoreRow = std::vector<double>;

struct Tally {
  std::vector<std::size_t> correct, queries;
  std::vector<std::vector<double>> genuine, impostor;  // per model
  std::vector<double> mrt_sum;
  std::vector<std::size_t> mrt_count;

  explicit Tally(std::size_t users)
      : correct(users), queries(users), genuine(users), impostor(users), mrt_sum(users), mrt_count(users) {}

  void add(const std::vector<std::size_t>& owners, const std::vector<ScoreRow>& rows) {
    for (std::size_t q = 0; q < rows.size(); ++q) {
      const auto& row = rows[q];
      std::optional<std::size_t> best;
      for (std::size_t u = 0; u < row.size(); ++u)
        if (std::isfinite(row[u]) && (!best || row[u] > row[*best])) best = u;
      ++queries[owners[q]];
      if (best && *best == owners[q]) ++correct[owners[q]];
      for (std::size_t u = 0; u < row.size(); ++u) {
        double s = min_max_normalize(row[u], row);
        (u == owners[q] ? genuine : impostor)[u].push_back(s);
      }
    }
  }
};

std::vector<std::vector<const BenchmarkSample*>> group_by_user(std::span<const BenchmarkSample> samples,
                                                               std::vector<std::string>& ids) {
  std::map<std::string, std::vector<const BenchmarkSample*>> groups;
  for (const auto& s : samples) groups[s.user].push_back(&s);
  std::vector<std::vector<const BenchmarkSample*>> out;
  for (auto& [id, list] : groups) {
    ids.push_back(id);
    out.push_back(std::move(list));
  }
  return out;
}

std::vector<Fold> make_folds(const std::vector<std::vector<const BenchmarkSample*>>& by_user,
                             const BenchmarkConfig& config) {
  std::vector<Fold> folds;
  const std::size_t users = by_user.size();
  if (config.protocol == Protocol::crossfold) {
    std::size_t k = std::numeric_limits<std::size_t>::max();
    for (const auto& list : by_user) k = std::min(k, list.size());
    if (k < 2) throw InputError("cross-fold protocol needs at least 2 samples per user");
    for (std::size_t f = 0; f < k; ++f) {
      Fold fold;
      for (std::size_t u = 0; u < users; ++u) {
        std::vector<const BenchmarkSample*> train;
        for (std::size_t i = 0; i < by_user[u].size(); ++i)
          if (i != f) train.push_back(by_user[u][i]);
        fold.train.push_back(std::move(train));
        fold.query.emplace_back(by_user[u][f]);
      }
      folds.push_back(std::move(fold));
    }
    return folds;
  }

  if (config.train_end <= config.train_begin || config.test_end <= config.test_begin)
    throw InputError("split protocol needs nonempty train and test ranges");
  std::vector<std::vector<const BenchmarkSample*>> train(users);
  for (std::size_t u = 0; u < users; ++u) {
    for (std::size_t i = config.train_begin; i < std::min(config.train_end, by_user[u].size()); ++i)
      train[u].push_back(by_user[u][i]);
    if (train[u].empty()) throw InputError("user has no samples in the training range");
  }
  for (std::size_t t = config.test_begin; t < config.test_end; ++t) {
    Fold fold;
    fold.train = train;
    bool any = false;
    for (std::size_t u = 0; u < users; ++u) {
      if (t < by_user[u].size()) {
        fold.query.emplace_back(by_user[u][t]);
        any = true;
      } else {
        fold.query.emplace_back(std::nullopt);
      }
    }
    if (any) folds.push_back(std::move(fold));
  }
  if (folds.empty()) throw InputError("no samples in the test range");
  return folds;
}

Population fit_population(const std::vector<std::string>& ids,
                          const std::vector<std::vector<const BenchmarkSample*>>& train, const FitConfig& fit_config,
                          bool collapse) {
  std::vector<UserModel> models(ids.size());
  parallel_for(ids.size(), [&](std::size_t u) {
    std::vector<LabeledSequence> seqs;
    Matrix templates;
    for (const auto* s : train[u]) {
      seqs.push_back(collapse ? collapse_events(s->sequence) : s->sequence);
      if (!s->timing.empty()) templates.push_row(s->timing);
    }
    models[u] = UserModel{ids[u], fit(std::span<const LabeledSequence>(seqs), fit_config).params, std::move(templates)};
  });
  return Population(std::move(models));
}

}  // namespace

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  s.ci95 = 1.959963984540054 * s.sd / std::sqrt(n);
  return s;
}

BenchmarkReport run_benchmark(std::span<const BenchmarkSample> samples, const BenchmarkConfig& config) {
  config.fit.check();
  if (samples.empty()) throw InputError("no benchmark samples");
  std::vector<std::string> ids;
  auto by_user = group_by_user(samples, ids);
  if (ids.size() < 2) throw InputError("benchmark needs at least 2 users");
  const std::size_t users = ids.size();
  auto folds = make_folds(by_user, config);

  bool distance = true;
  for (const auto& s : samples)
    if (s.timing.empty() || s.timing.size() != samples.front().timing.size()) distance = false;
  std::vector<double> mad;
  if (distance) {
    Matrix all;
    for (const auto& s : samples) all.push_row(s.timing);
    mad = mean_absolute_deviation(all);
  }

  std::vector<std::string> names;
  if (distance) names = {kManhattan, kScaledManhattan};
  names.push_back(kHmm);
  names.push_back(kPohmm);
  std::vector<Tally> tallies(names.size(), Tally(users));

  for (const auto& fold : folds) {
    std::vector<std::size_t> owners;
    std::vector<Query> queries;
    std::vector<const BenchmarkSample*> query_samples;
    for (std::size_t u = 0; u < users; ++u) {
      if (!fold.query[u]) continue;
      owners.push_back(u);
      queries.push_back(Query{ids[u], (*fold.query[u])->sequence});
      query_samples.push_back(*fold.query[u]);
    }

    std::size_t d = 0;
    if (distance) {
      std::vector<Matrix> templates(users);
      for (std::size_t u = 0; u < users; ++u)
        for (const auto* s : fold.train[u]) templates[u].push_row(s->timing);
      for (bool scaled : {false, true}) {
        std::vector<ScoreRow> rows(queries.size(), ScoreRow(users));
        for (std::size_t q = 0; q < queries.size(); ++q)
          for (std::size_t u = 0; u < users; ++u)
            rows[q][u] = scaled ? scaled_manhattan_score(query_samples[q]->timing, templates[u], mad)
                                : manhattan_score(query_samples[q]->timing, templates[u]);
        tallies[d++].add(owners, rows);
      }
    }

    for (bool collapse : {true, false}) {
      Population population = fit_population(ids, fold.train, config.fit, collapse);
      std::vector<Query> scored = queries;
      if (collapse)
        for (auto& q : scored) q.sequence = collapse_events(q.sequence);
      std::vector<ScoreRow> rows(scored.size());
      parallel_for(scored.size(), [&](std::size_t q) {
        auto scores = score_population(scored[q].sequence, population);
        rows[q] = scores.loglik;
      });
      Tally& tally = tallies[d++];
      tally.add(owners, rows);
      if (config.continuous) {
        auto result = amrt(population, scored, config.window);
        for (const auto& rec : result.pairs) {
          std::size_t u = population.index_of(rec.model_user);
          tally.mrt_sum[u] += static_cast<double>(rec.mrt);
          ++tally.mrt_count[u];
        }
      }
    }
  }

  BenchmarkReport report;
  report.folds = folds.size();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const Tally& t = tallies[k];
    DetectorReport det;
    det.name = names[k];
    det.has_amrt = config.continuous && (names[k] == std::string(kHmm) || names[k] == std::string(kPohmm));
    std::vector<double> acc, eer, mrt;
    for (std::size_t u = 0; u < users; ++u) {
      UserMetrics m;
      m.user = ids[u];
      m.acc = t.queries[u] ? static_cast<double>(t.correct[u]) / static_cast<double>(t.queries[u]) : 0.0;
      if (!t.genuine[u].empty() && !t.impostor[u].empty()) {
        m.roc = roc_eer(t.genuine[u], t.impostor[u]);
        m.eer = m.roc.eer;
      }
      if (t.mrt_count[u]) m.amrt = t.mrt_sum[u] / static_cast<double>(t.mrt_count[u]);
      acc.push_back(m.acc);
      eer.push_back(m.eer);
      mrt.push_back(m.amrt);
      det.users.push_back(std::move(m));
    }
    det.acc = summarize(acc);
    det.eer = summarize(eer);
    if (det.has_amrt) det.amrt = summarize(mrt);
    report.detectors.push_back(std::move(det));
  }
  return report;
}

}  // namespace pohmm
