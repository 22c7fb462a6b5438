#include "pohmm/emissions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pohmm/error.hpp"

namespace pohmm {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

double transformed(double x, EmissionKind kind) {
  if (kind == EmissionKind::normal) return x;
  if (!(x > 0.0)) throw InputError("domain: lognormal emission requires positive values");
  return std::log(x);
}

}  // namespace

std::string to_string(EmissionKind kind) {
  return kind == EmissionKind::lognormal ? "lognormal" : "normal";
}

EmissionKind emission_kind_from_string(const std::string& name) {
  if (name == "lognormal") return EmissionKind::lognormal;
  if (name == "normal") return EmissionKind::normal;
  throw InputError("unknown emission kind '" + name + "'");
}

double log_density_1d(double x, EmissionKind kind, double location, double scale) {
  const double y = transformed(x, kind);
  const double z = (y - location) / scale;
  double ld = -std::log(scale) - kHalfLog2Pi - 0.5 * z * z;
  if (kind == EmissionKind::lognormal) ld -= y;
  return ld;
}

double cdf_1d(double x, EmissionKind kind, double location, double scale) {
  if (kind == EmissionKind::lognormal) {
    if (x <= 0.0) return 0.0;
    x = std::log(x);
  }
  return 0.5 * std::erfc(-(x - location) / (scale * std::numbers::sqrt2));
}

double log_density(std::span<const double> x, const EmissionParams& params) {
  if (x.size() != params.feature_count())
    throw InputError("feature vector has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(params.feature_count()));
  double total = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k)
    total += log_density_1d(x[k], params.kind, params.location[k], params.scale[k]);
  return total;
}

EmissionParams weighted_mle(const Matrix& xs, std::span<const double> weights, EmissionKind kind) {
  if (xs.rows() != weights.size()) throw InputError("weights and observations differ in length");
  double mass = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw InputError("negative weight");
    mass += w;
  }
  if (!(mass > 0.0)) throw NumericalError("degenerate responsibility mass");

  const std::size_t features = xs.cols();
  EmissionParams out{kind, std::vector<double>(features, 0.0), std::vector<double>(features, 0.0)};
  for (std::size_t k = 0; k < features; ++k) {
    double mean = 0.0;
    for (std::size_t n = 0; n < xs.rows(); ++n) mean += weights[n] * transformed(xs(n, k), kind);
    mean /= mass;
    double var = 0.0;
    for (std::size_t n = 0; n < xs.rows(); ++n) {
      const double d = transformed(xs(n, k), kind) - mean;
      var += weights[n] * d * d;
    }
    var /= mass;
    out.location[k] = mean;
    out.scale[k] = std::max(std::sqrt(var), kScaleFloor);
  }
  return out;
}

Matrix sample(const EmissionParams& params, std::size_t count, Rng& rng) {
  const std::size_t features = params.feature_count();
  Matrix out(count, features);
  for (std::size_t n = 0; n < count; ++n) {
    for (std::size_t k = 0; k < features; ++k) {
      const double y = params.location[k] + params.scale[k] * rng.normal();
      out(n, k) = params.kind == EmissionKind::lognormal ? std::exp(y) : y;
    }
  }
  return out;
}

}  // namespace pohmm
