#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

#include "lpvce/geometry.hpp"
#include "lpvce/schedule.hpp"

namespace lpvce {

// First-order oracle for a maximization objective. Both callbacks must be
// safe for concurrent read-only evaluation.
struct GradOracle {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

struct TracePoint {
  int iteration = 0;
  double objective = 0.0;
  double step_size = 0.0;
};

struct ScheduleEvent {
  int iteration = 0;
  double new_value = 0.0;  // updated M (Frank-Wolfe) or eta (APGD)
};

struct RunResult {
  Eigen::VectorXd best_point;
  double best_objective = 0.0;
  std::vector<TracePoint> trace;  // entry 0 is the initial point
  int iterations_used = 0;
  std::vector<ScheduleEvent> schedule_events;
};

// Which linear subproblem the Frank-Wolfe vertex solves. BallThenClip is the
// benchmark baseline: LMO over the lp-ball alone, convex combination, then a
// clip back to the box.
enum class FwLmoMode { Intersection, BallThenClip };

// Single Frank-Wolfe update: convex combination of x_k with the LMO vertex
// for the given ascent gradient. Throws InvalidStateError when x_k is
// infeasible.
Eigen::VectorXd fw_step(const Eigen::VectorXd& x_k, const Eigen::VectorXd& gradient,
                        const FeasibleRegion& region, double gamma_k);

RunResult run_frank_wolfe(const GradOracle& objective, const FeasibleRegion& region,
                          const StepSchedule& schedule, int iterations,
                          const Eigen::VectorXd& init,
                          FwLmoMode mode = FwLmoMode::Intersection);

// Momentum projected-gradient ascent with budget-aware step halving.
// Requires an exact projection, hence p in {1, 2, inf}.
RunResult run_apgd(const GradOracle& objective, const FeasibleRegion& region, int iterations,
                   const Eigen::VectorXd& init);

enum class MethodKind { Afw, Apgd, FwConstant, FwDecaying };

struct Method {
  MethodKind kind = MethodKind::Afw;
  double gamma0 = 0.0;  // for FwConstant / FwDecaying

  static Method afw() { return {MethodKind::Afw, 0.0}; }
  static Method apgd() { return {MethodKind::Apgd, 0.0}; }
  static Method fw_constant(double g0) { return {MethodKind::FwConstant, g0}; }
  static Method fw_decaying(double g0) { return {MethodKind::FwDecaying, g0}; }
};

struct RestartsResult {
  RunResult best;
  int best_restart = 0;
  std::vector<double> restart_objectives;
};

// Restart 0 starts at the region center; restart r >= 1 at
// sample_feasible(region, seed + r). Returns the run with the highest best
// objective (ties break toward the lowest restart index). Deterministic in
// the seed regardless of the worker count.
RestartsResult best_of_restarts(const GradOracle& objective, const FeasibleRegion& region,
                                const Method& method, int iterations, int n_restarts,
                                std::uint64_t seed, int threads = 1);

}  // namespace lpvce
