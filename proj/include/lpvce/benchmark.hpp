#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lpvce/mlp.hpp"
#include "lpvce/optim.hpp"

namespace lpvce {

// Step-schedule comparison: AFW against every fixed constant and decaying
// gamma_0, per iteration budget, measured as the mean best target
// log-probability over a sample (targets chosen as the second most likely
// class).
struct BenchmarkConfig {
  std::vector<int> budgets{25, 75, 125};
  std::vector<double> constant_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> decaying_grid{1, 5, 10, 15, 20, 25, 30, 35, 40, 50, 75, 100};
  double exponent = 1.5;
  double radius = 3.0;
  int restarts = 1;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct BenchmarkRow {
  std::string method;  // "afw", "fw-constant", "fw-decaying"
  std::optional<double> gamma0;
  int budget = 0;
  double mean_log_prob = 0.0;
  int n = 0;
};

std::vector<BenchmarkRow> benchmark_schedules(const MlpClassifier& model,
                                              const std::vector<Eigen::VectorXd>& sample,
                                              const BenchmarkConfig& config);

// Mean log p(second | x) over the sample before any optimization; the
// baseline every method must reach by best-of selection.
double mean_start_log_prob(const MlpClassifier& model,
                           const std::vector<Eigen::VectorXd>& sample);

// CSV schema: method,gamma0,budget,mean_log_prob,n (gamma0 = "na" for afw).
std::string benchmark_csv(const std::vector<BenchmarkRow>& rows);

// Median LMO wall time per dimension plus the fitted log-log slope.
struct ScalingRow {
  int dim = 0;
  double median_seconds = 0.0;
  int trials = 0;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  double loglog_slope = 0.0;
};

ScalingReport lmo_scaling_probe(const std::vector<int>& dims, int trials, double exponent = 1.5,
                                std::uint64_t seed = 0);

}  // namespace lpvce
