#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "lpvce/geometry.hpp"

namespace lpvce {

// Slow reference solvers, kept independent of the closed-form kernels in
// geometry.cpp. They evaluate the dual residual directly from its definition
// and solve 1-D subproblems numerically instead of reusing the sorted
// breakpoint machinery. Used by the test suites and the oracle-check command.

struct OracleLmoResult {
  Eigen::VectorXd delta;
  double mu = 0.0;
  double objective = 0.0;
};

// Dense bisection on mu for the dual residual f(mu) = sum_i eta_i(mu)^p - eps^p,
// with eta_i(mu) = min(gamma_i, (v_i / (p mu))^(1/(p-1))). Finite p > 1 only.
OracleLmoResult oracle_lmo_bisection(const Eigen::VectorXd& w, const FeasibleRegion& region);

// Projected-gradient ascent on the linear objective over the region. Returns
// a feasible point; its objective is a lower bound on the true optimum.
Eigen::VectorXd oracle_projected_ascent_lmo(const Eigen::VectorXd& w,
                                            const FeasibleRegion& region, int iterations);

// Euclidean projection onto the ball/box intersection via outer bisection on
// the ball multiplier and per-coordinate 1-D minimization. Any finite p >= 1.
Eigen::VectorXd oracle_project_lp_box(const Eigen::VectorXd& z, const FeasibleRegion& region);

struct OracleCheckReport {
  int lmo_trials = 0;
  int lmo_passed = 0;
  int certificate_trials = 0;
  int certificate_passed = 0;
  int projection_trials = 0;
  int projection_passed = 0;
  std::vector<std::string> failures;  // first few failure descriptions

  bool all_passed() const {
    return lmo_passed == lmo_trials && certificate_passed == certificate_trials &&
           projection_passed == projection_trials;
  }
};

// Randomized equivalence suite: closed-form LMO vs mu-bisection (objective
// agreement within 1e-6 * (1 + |opt|)), feasibility, optimality certificates
// against sampled feasible points and projected ascent, and projection checks
// for p in {1, 2}. Deterministic in the seed.
OracleCheckReport run_oracle_check(int trials, std::uint64_t seed,
                                   int certificate_points_per_trial = 100);

}  // namespace lpvce
