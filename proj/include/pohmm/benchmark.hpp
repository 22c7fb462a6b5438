#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pohmm/biometric.hpp"
#include "pohmm/estimation.hpp"
#include "pohmm/model.hpp"

namespace pohmm {

// One labeled sample of one user. `timing` is the fixed-length vector for the
// distance baselines; leave it empty when sessions differ in length.
struct BenchmarkSample {
  std::string user;
  LabeledSequence sequence;
  std::vector<double> timing;
};

enum class Protocol {
  crossfold,  // fold k holds out the k-th sample of every user
  split,      // train on ordinals [train_begin, train_end), one fold per test ordinal
};

struct BenchmarkConfig {
  FitConfig fit;
  Protocol protocol = Protocol::crossfold;
  std::size_t train_begin = 0, train_end = 0;
  std::size_t test_begin = 0, test_end = 0;
  std::size_t window = kPenaltyWindow;
  bool continuous = true;  // compute AMRT for the model-based detectors
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double ci95 = 0.0;  // half-width, normal approximation over users
};

struct UserMetrics {
  std::string user;
  double acc = 0.0;
  double eer = 0.0;
  double amrt = 0.0;
  RocCurve roc;
};

struct DetectorReport {
  std::string name;
  bool has_amrt = false;
  std::vector<UserMetrics> users;  // sorted by id
  Summary acc, eer, amrt;
};

struct BenchmarkReport {
  std::vector<DetectorReport> detectors;
  std::size_t folds = 0;
};

// Detector names, in report order.
inline constexpr const char* kManhattan = "Manhattan";
inline constexpr const char* kScaledManhattan = "Manhattan (scaled)";
inline constexpr const char* kHmm = "HMM";
inline constexpr const char* kPohmm = "POHMM";

// Fits a model per user on each fold's training samples and scores every
// query against the whole population. Distance detectors run only when every
// sample carries a timing vector of the same length; their scale uses the
// mean absolute deviation over the entire dataset.
BenchmarkReport run_benchmark(std::span<const BenchmarkSample> samples, const BenchmarkConfig& config);

Summary summarize(std::span<const double> values);

}  // namespace pohmm
