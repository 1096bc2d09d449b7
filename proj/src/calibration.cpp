#include "lpvce/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lpvce {

namespace {

struct LogitCache {
  std::vector<Eigen::VectorXd> logits;
  std::vector<int> labels;
};

double ece_from_cache(const LogitCache& cache, double temperature, int bins) {
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<int> hits(bins, 0), counts(bins, 0);
  for (std::size_t i = 0; i < cache.logits.size(); ++i) {
    const Eigen::VectorXd u = cache.logits[i] / temperature;
    const double m = u.maxCoeff();
    const double z = (u.array() - m).exp().sum();
    int pred = 0;
    for (int k = 1; k < u.size(); ++k)
      if (u[k] > u[pred]) pred = k;
    const double confidence = std::exp(u[pred] - m) / z;
    int b = static_cast<int>(confidence * bins);
    b = std::min(bins - 1, std::max(0, b));
    conf_sum[b] += confidence;
    counts[b] += 1;
    hits[b] += pred == cache.labels[i] ? 1 : 0;
  }
  const double n = static_cast<double>(cache.logits.size());
  double ece = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (counts[b] == 0) continue;
    const double acc = static_cast<double>(hits[b]) / counts[b];
    const double conf = conf_sum[b] / counts[b];
    ece += (counts[b] / n) * std::abs(acc - conf);
  }
  return ece;
}

LogitCache build_cache(const MlpClassifier& model, const Dataset& data, Split split) {
  LogitCache cache;
  for (int i : data.indices(split)) {
    cache.logits.push_back(model.logits(data.features[i]));
    cache.labels.push_back(data.labels[i]);
  }
  return cache;
}

}  // namespace

double expected_calibration_error(const MlpClassifier& model, const Dataset& data, Split split,
                                  int bins) {
  if (bins < 1) throw std::invalid_argument("expected_calibration_error: bins must be >= 1");
  const LogitCache cache = build_cache(model, data, split);
  if (cache.logits.empty())
    throw std::invalid_argument("expected_calibration_error: empty split");
  return ece_from_cache(cache, model.temperature, bins);
}

double calibrate_temperature(const MlpClassifier& model, const Dataset& data, Split split,
                             int bins) {
  const LogitCache cache = build_cache(model, data, split);
  if (cache.logits.empty()) throw std::invalid_argument("calibrate_temperature: empty split");

  const double lo = std::log(0.05), hi = std::log(20.0);
  const auto ece_at = [&](double log_t) { return ece_from_cache(cache, std::exp(log_t), bins); };

  // ECE is piecewise constant in T, so a coarse grid locates the basin and a
  // golden-section pass refines inside it.
  const int grid = 61;
  double best_log_t = lo;
  double best = ece_at(lo);
  for (int i = 1; i < grid; ++i) {
    const double t = lo + (hi - lo) * i / (grid - 1);
    const double e = ece_at(t);
    if (e < best) {
      best = e;
      best_log_t = t;
    }
  }

  const double cell = (hi - lo) / (grid - 1);
  double a = std::max(lo, best_log_t - cell), b = std::min(hi, best_log_t + cell);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = ece_at(x1), f2 = ece_at(x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = ece_at(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = ece_at(x2);
    }
  }
  const double refined = 0.5 * (a + b);
  if (ece_at(refined) < best) {
    best = ece_at(refined);
    best_log_t = refined;
  }

  // Never degrade: the search set conceptually contains the current value.
  const double current = std::log(model.temperature);
  if (ece_at(current) <= best) return model.temperature;
  return std::exp(best_log_t);
}

}  // namespace lpvce
