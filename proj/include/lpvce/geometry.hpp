#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <vector>

#include "lpvce/common.hpp"

namespace lpvce {

// Exponent sentinel for the sup-norm.
inline constexpr double kInfinityExponent = std::numeric_limits<double>::infinity();

// (sum_i |x_i|^p)^(1/p); max_i |x_i| for the infinity sentinel.
double lp_norm(const Eigen::VectorXd& x, double p);

// The constraint set B_p(center, radius) intersected with the unit box
// [0,1]^d. Box bounds are fixed to 0 and 1 per component.
struct FeasibleRegion {
  Eigen::VectorXd center;
  double radius = 0.0;
  double exponent = 2.0;

  FeasibleRegion() = default;
  FeasibleRegion(Eigen::VectorXd center_, double radius_, double exponent_,
                 const Tolerances& tol = default_tolerances());

  int dim() const { return static_cast<int>(center.size()); }

  // Membership test: ||y - center||_p <= radius * (1 + ball_slack) and y in
  // the box componentwise (up to box_slack).
  bool contains(const Eigen::VectorXd& y,
                const Tolerances& tol = default_tolerances()) const;
};

// Maximizer of <w, delta> over {||delta||_p <= radius, center + delta in box},
// together with the dual multiplier and saturation bookkeeping.
struct OracleSolution {
  Eigen::VectorXd delta;
  double mu_star = 0.0;    // 0 when the box corner lies inside the ball
  double objective = 0.0;  // <w, delta>
  std::vector<int> saturated;  // indices with delta_i == gamma_i * sign(w_i)
};

// Exact linear maximization oracle over the ball/box intersection. Closed
// form via the sorted-breakpoint dual search for finite p > 1, greedy fill
// for p = 1, componentwise clamp for the infinity sentinel. O(d log d).
OracleSolution lmo_box_ball(const Eigen::VectorXd& w, const FeasibleRegion& region,
                            const Tolerances& tol = default_tolerances());

// Euclidean projection onto the intersection for p in {1, 2, inf}. Other
// exponents throw UnsupportedExponentError: the Frank-Wolfe path must be
// used instead.
Eigen::VectorXd project_box_ball(const Eigen::VectorXd& z, const FeasibleRegion& region,
                                 const Tolerances& tol = default_tolerances());

// Deterministic feasible point: center + t * delta with delta the LMO output
// for a seeded isotropic direction and t uniform in [0, 1].
Eigen::VectorXd sample_feasible(const FeasibleRegion& region, std::uint64_t seed);

// Componentwise clamp to [0, 1].
Eigen::VectorXd clamp_to_box(Eigen::VectorXd y);

}  // namespace lpvce
