#include "lpvce/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "lpvce/parallel.hpp"
#include "lpvce/rng.hpp"
#include "lpvce/vce.hpp"

namespace lpvce {

double mean_start_log_prob(const MlpClassifier& model,
                           const std::vector<Eigen::VectorXd>& sample) {
  double acc = 0.0;
  for (const Eigen::VectorXd& x : sample) acc += log_prob(model, pick_target_second(model, x), x);
  return acc / static_cast<double>(sample.size());
}

std::vector<BenchmarkRow> benchmark_schedules(const MlpClassifier& model,
                                              const std::vector<Eigen::VectorXd>& sample,
                                              const BenchmarkConfig& config) {
  if (sample.empty()) throw std::invalid_argument("benchmark_schedules: empty sample");

  struct Cell {
    std::string name;
    std::optional<double> gamma0;
    Method method;
  };
  std::vector<Cell> cells;
  cells.push_back({"afw", std::nullopt, Method::afw()});
  for (double g : config.constant_grid)
    cells.push_back({"fw-constant", g, Method::fw_constant(g)});
  for (double g : config.decaying_grid)
    cells.push_back({"fw-decaying", g, Method::fw_decaying(g)});

  const int n = static_cast<int>(sample.size());
  std::vector<int> targets(n);
  for (int i = 0; i < n; ++i) targets[i] = pick_target_second(model, sample[i]);

  std::vector<BenchmarkRow> rows;
  for (int budget : config.budgets) {
    for (const Cell& cell : cells) {
      std::vector<double> objectives(n);
      parallel_for(n, config.threads, [&](int i) {
        VceRequest request;
        request.image = sample[i];
        request.target = targets[i];
        request.exponent = config.exponent;
        request.radius = config.radius;
        request.method = cell.method;
        request.iterations = budget;
        request.restarts = config.restarts;
        request.seed = config.seed + static_cast<std::uint64_t>(i);
        objectives[i] = generate_vce(model, request).best_objective;
      });
      double mean = 0.0;
      for (double v : objectives) mean += v;
      mean /= n;
      rows.push_back({cell.name, cell.gamma0, budget, mean, n});
    }
  }
  return rows;
}

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows) {
  std::string out = "method,gamma0,budget,mean_log_prob,n\n";
  char line[160];
  for (const BenchmarkRow& row : rows) {
    if (row.gamma0)
      std::snprintf(line, sizeof(line), "%s,%g,%d,%.17g,%d\n", row.method.c_str(),
                    *row.gamma0, row.budget, row.mean_log_prob, row.n);
    else
      std::snprintf(line, sizeof(line), "%s,na,%d,%.17g,%d\n", row.method.c_str(), row.budget,
                    row.mean_log_prob, row.n);
    out += line;
  }
  return out;
}

ScalingReport lmo_scaling_probe(const std::vector<int>& dims, int trials, double exponent,
                                std::uint64_t seed) {
  if (dims.empty() || trials < 1) throw std::invalid_argument("lmo_scaling_probe: bad inputs");
  for (std::size_t i = 1; i < dims.size(); ++i)
    if (dims[i] <= dims[i - 1])
      throw std::invalid_argument("lmo_scaling_probe: dims must be ascending");

  ScalingReport report;
  Rng rng(seed);
  for (int d : dims) {
    Eigen::VectorXd center(d), w(d);
    for (int i = 0; i < d; ++i) {
      center[i] = rng.uniform();
      w[i] = rng.normal();
    }
    const FeasibleRegion region(center, 0.1 * std::pow(static_cast<double>(d), 1.0 / exponent),
                                exponent);
    // Repeat each timed block enough times that clock noise stays small for
    // small dimensions.
    const int reps = std::max(1, 200000 / d);
    std::vector<double> times;
    times.reserve(trials);
    volatile double sink = 0.0;
    for (int t = 0; t < trials; ++t) {
      for (int i = 0; i < d; ++i) w[i] = rng.normal();
      const auto start = std::chrono::steady_clock::now();
      for (int r = 0; r < reps; ++r) sink = sink + lmo_box_ball(w, region).objective;
      const auto stop = std::chrono::steady_clock::now();
      times.push_back(std::chrono::duration<double>(stop - start).count() / reps);
    }
    std::sort(times.begin(), times.end());
    report.rows.push_back({d, times[times.size() / 2], trials});
  }

  // Least-squares slope of log(time) against log(dim).
  const int n = static_cast<int>(report.rows.size());
  if (n >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const ScalingRow& row : report.rows) {
      const double x = std::log(static_cast<double>(row.dim));
      const double y = std::log(row.median_seconds);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    report.loglog_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return report;
}

}  // namespace lpvce
