#include "lpvce/optim.hpp"

#include <algorithm>
#include <cmath>

#include "lpvce/parallel.hpp"

namespace lpvce {

std::vector<int> checkpoint_iterations(const StepSchedule& schedule, int total_iterations) {
  std::vector<int> out;
  double prev = 0.0;
  double cur = schedule.first_fraction;
  while (cur < 1.0) {
    const int w = static_cast<int>(std::ceil(cur * total_iterations));
    if (w >= 1 && w < total_iterations && (out.empty() || w > out.back())) out.push_back(w);
    const double next = cur + std::max(cur - prev - schedule.fraction_shrink,
                                       schedule.min_fraction_gap);
    prev = cur;
    cur = next;
  }
  return out;
}

namespace {

// Progress bookkeeping shared by the adaptive Frank-Wolfe scheme and APGD.
// At each checkpoint:
//   condition 1: fewer than rho * span strictly improving steps since the
//                last checkpoint;
//   condition 2: the step scale survived the last checkpoint unchanged and
//                the best objective did not improve since then.
// Either condition triggers a step-scale decay and a reset to the best point.
struct CheckpointMonitor {
  double rho;
  int improving = 0;
  int last_checkpoint = 0;
  double best_at_last = 0.0;
  double scale_at_last = 0.0;

  CheckpointMonitor(double rho_, double initial_scale, double initial_best)
      : rho(rho_), best_at_last(initial_best), scale_at_last(initial_scale) {}

  void record_step(bool improved) { improving += improved ? 1 : 0; }

  bool should_decay(int iteration, double scale, double best) {
    const int span = iteration - last_checkpoint;
    const bool cond1 = improving < rho * span;
    const bool cond2 = scale == scale_at_last && best <= best_at_last;
    scale_at_last = scale;
    improving = 0;
    last_checkpoint = iteration;
    best_at_last = best;
    return cond1 || cond2;
  }
};

void check_finite(double value, int iteration, const char* what) {
  if (!std::isfinite(value))
    throw DivergenceError(std::string("non-finite ") + what + " at iteration " +
                              std::to_string(iteration),
                          iteration);
}

void check_finite(const Eigen::VectorXd& g, int iteration, const char* what) {
  if (!g.allFinite())
    throw DivergenceError(std::string("non-finite ") + what + " at iteration " +
                              std::to_string(iteration),
                          iteration);
}

// lp-ball LMO without the box: delta_i = eps * sign(w_i) * (|w_i| / ||w||_q)^(q/p)
// with q the dual exponent. Used only by the clip baseline.
Eigen::VectorXd ball_lmo(const Eigen::VectorXd& w, const FeasibleRegion& region) {
  const int d = region.dim();
  const double p = region.exponent;
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(d);
  const double scale = w.cwiseAbs().maxCoeff();
  if (scale == 0.0) return delta;
  if (std::isinf(p)) {
    for (int i = 0; i < d; ++i)
      delta[i] = w[i] > 0.0 ? region.radius : (w[i] < 0.0 ? -region.radius : 0.0);
    return delta;
  }
  if (p == 1.0) {
    int best = 0;
    for (int i = 1; i < d; ++i)
      if (std::abs(w[i]) > std::abs(w[best])) best = i;
    delta[best] = w[best] > 0.0 ? region.radius : -region.radius;
    return delta;
  }
  const double q = p / (p - 1.0);
  double norm_q = 0.0;
  for (int i = 0; i < d; ++i) norm_q += std::pow(std::abs(w[i]) / scale, q);
  norm_q = std::pow(norm_q, 1.0 / q);
  for (int i = 0; i < d; ++i) {
    const double s = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
    if (s == 0.0) continue;
    delta[i] = region.radius * s * std::pow(std::abs(w[i]) / (scale * norm_q), q / p);
  }
  return delta;
}

}  // namespace

Eigen::VectorXd fw_step(const Eigen::VectorXd& x_k, const Eigen::VectorXd& gradient,
                        const FeasibleRegion& region, double gamma_k) {
  if (!region.contains(x_k)) throw InvalidStateError("fw_step: iterate is infeasible");
  if (!(gamma_k >= 0.0 && gamma_k <= 1.0))
    throw std::invalid_argument("fw_step: gamma must lie in [0, 1]");
  if (gamma_k == 0.0) return x_k;
  const OracleSolution vertex = lmo_box_ball(gradient, region);
  return clamp_to_box((1.0 - gamma_k) * x_k + gamma_k * (region.center + vertex.delta));
}

RunResult run_frank_wolfe(const GradOracle& objective, const FeasibleRegion& region,
                          const StepSchedule& schedule, int iterations,
                          const Eigen::VectorXd& init, FwLmoMode mode) {
  schedule.validate();
  if (iterations < 1) throw std::invalid_argument("run_frank_wolfe: iterations must be >= 1");
  if (!region.contains(init)) throw InvalidStateError("run_frank_wolfe: infeasible init");

  const bool adaptive = schedule.kind == StepSchedule::Kind::Adaptive;
  const std::vector<int> checkpoints =
      adaptive ? checkpoint_iterations(schedule, iterations) : std::vector<int>{};
  std::size_t next_checkpoint = 0;

  RunResult result;
  Eigen::VectorXd x = init;
  double fx = objective.value(x);
  check_finite(fx, 0, "objective");
  result.best_point = x;
  result.best_objective = fx;
  result.trace.push_back({0, fx, 0.0});

  double m = schedule.initial_m;
  CheckpointMonitor monitor(schedule.rho, m, fx);

  for (int k = 0; k < iterations; ++k) {
    const Eigen::VectorXd g = objective.gradient(x);
    check_finite(g, k + 1, "gradient");
    const double gamma = schedule.step(k, m);
    if (mode == FwLmoMode::Intersection) {
      x = fw_step(x, g, region, gamma);
    } else {
      const Eigen::VectorXd vertex = region.center + ball_lmo(g, region);
      x = clamp_to_box((1.0 - gamma) * x + gamma * vertex);
    }
    const double f_new = objective.value(x);
    check_finite(f_new, k + 1, "objective");
    result.trace.push_back({k + 1, f_new, gamma});
    monitor.record_step(f_new > fx);
    if (f_new > result.best_objective) {
      result.best_objective = f_new;
      result.best_point = x;
    }
    fx = f_new;

    if (adaptive && next_checkpoint < checkpoints.size() &&
        k + 1 == checkpoints[next_checkpoint]) {
      ++next_checkpoint;
      if (monitor.should_decay(k + 1, m, result.best_objective)) {
        m *= schedule.m_decay;
        x = result.best_point;
        fx = result.best_objective;
        result.schedule_events.push_back({k + 1, m});
      }
    }
  }
  result.iterations_used = iterations;
  return result;
}

RunResult run_apgd(const GradOracle& objective, const FeasibleRegion& region, int iterations,
                   const Eigen::VectorXd& init) {
  const double p = region.exponent;
  if (!(p == 1.0 || p == 2.0 || std::isinf(p)))
    throw UnsupportedExponentError("run_apgd: projections exist only for p in {1, 2, inf}");
  if (iterations < 1) throw std::invalid_argument("run_apgd: iterations must be >= 1");
  if (!region.contains(init)) throw InvalidStateError("run_apgd: infeasible init");

  const double alpha = 0.75;
  double eta = region.radius / 4.0;

  const StepSchedule fractions;  // checkpoint placement shared with the FW scheme
  const std::vector<int> checkpoints = checkpoint_iterations(fractions, iterations);
  std::size_t next_checkpoint = 0;

  RunResult result;
  Eigen::VectorXd x = init;
  Eigen::VectorXd x_prev = init;
  double fx = objective.value(x);
  check_finite(fx, 0, "objective");
  result.best_point = x;
  result.best_objective = fx;
  result.trace.push_back({0, fx, 0.0});

  CheckpointMonitor monitor(fractions.rho, eta, fx);

  for (int k = 0; k < iterations; ++k) {
    const Eigen::VectorXd g = objective.gradient(x);
    check_finite(g, k + 1, "gradient");
    const Eigen::VectorXd z = project_box_ball(x + eta * g, region);
    const Eigen::VectorXd x_new =
        project_box_ball(x + alpha * (z - x) + (1.0 - alpha) * (x - x_prev), region);
    const double f_new = objective.value(x_new);
    check_finite(f_new, k + 1, "objective");
    result.trace.push_back({k + 1, f_new, eta});
    monitor.record_step(f_new > fx);
    if (f_new > result.best_objective) {
      result.best_objective = f_new;
      result.best_point = x_new;
    }
    x_prev = x;
    x = x_new;
    fx = f_new;

    if (next_checkpoint < checkpoints.size() && k + 1 == checkpoints[next_checkpoint]) {
      ++next_checkpoint;
      if (monitor.should_decay(k + 1, eta, result.best_objective)) {
        eta *= 0.5;
        x = result.best_point;
        x_prev = result.best_point;
        fx = result.best_objective;
        result.schedule_events.push_back({k + 1, eta});
      }
    }
  }
  result.iterations_used = iterations;
  return result;
}

RestartsResult best_of_restarts(const GradOracle& objective, const FeasibleRegion& region,
                                const Method& method, int iterations, int n_restarts,
                                std::uint64_t seed, int threads) {
  if (n_restarts < 1) throw std::invalid_argument("best_of_restarts: n_restarts must be >= 1");

  const auto run_one = [&](const Eigen::VectorXd& init) {
    switch (method.kind) {
      case MethodKind::Afw:
        return run_frank_wolfe(objective, region, StepSchedule::adaptive(), iterations, init);
      case MethodKind::Apgd:
        return run_apgd(objective, region, iterations, init);
      case MethodKind::FwConstant:
        return run_frank_wolfe(objective, region, StepSchedule::constant(method.gamma0),
                               iterations, init);
      case MethodKind::FwDecaying:
        return run_frank_wolfe(objective, region, StepSchedule::decaying(method.gamma0),
                               iterations, init);
    }
    throw std::invalid_argument("best_of_restarts: unknown method");
  };

  std::vector<RunResult> runs(n_restarts);
  parallel_for(n_restarts, threads, [&](int r) {
    const Eigen::VectorXd init =
        r == 0 ? region.center : sample_feasible(region, seed + static_cast<std::uint64_t>(r));
    runs[r] = run_one(init);
  });

  RestartsResult out;
  out.restart_objectives.reserve(n_restarts);
  int best = 0;
  for (int r = 0; r < n_restarts; ++r) {
    out.restart_objectives.push_back(runs[r].best_objective);
    if (runs[r].best_objective > runs[best].best_objective) best = r;
  }
  out.best_restart = best;
  out.best = std::move(runs[best]);
  return out;
}

}  // namespace lpvce
