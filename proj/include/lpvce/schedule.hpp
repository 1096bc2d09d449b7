#pragma once

#include <cmath>
#include <vector>

#include "lpvce/common.hpp"

namespace lpvce {

// Step-size schedule for Frank-Wolfe. The adaptive schedule uses
// gamma_k = M / (2 + sqrt(k)) with M starting at 2 and shrinking by
// m_decay whenever a checkpoint condition fires. Constant uses gamma_0
// throughout; decaying uses gamma_0 / (gamma_0 + k).
struct StepSchedule {
  enum class Kind { Adaptive, Constant, Decaying };

  Kind kind = Kind::Adaptive;
  double gamma0 = 0.0;

  // Adaptive parameters.
  double initial_m = 2.0;
  double m_decay = 0.75;
  double rho = 0.75;  // success-ratio threshold for checkpoint condition 1

  // Checkpoint placement as fractions of the total budget:
  // p_0 = 0, p_1 = first_fraction, p_{j+1} = p_j + max(p_j - p_{j-1} - shrink, min_gap).
  double first_fraction = 0.22;
  double fraction_shrink = 0.03;
  double min_fraction_gap = 0.06;

  static StepSchedule adaptive() { return StepSchedule{}; }

  static StepSchedule constant(double g0) {
    StepSchedule s;
    s.kind = Kind::Constant;
    s.gamma0 = g0;
    return s;
  }

  static StepSchedule decaying(double g0) {
    StepSchedule s;
    s.kind = Kind::Decaying;
    s.gamma0 = g0;
    return s;
  }

  void validate() const {
    switch (kind) {
      case Kind::Adaptive:
        if (!(initial_m > 0.0 && initial_m <= 2.0))
          throw std::invalid_argument("StepSchedule: adaptive M must lie in (0, 2]");
        break;
      case Kind::Constant:
        if (!(gamma0 > 0.0 && gamma0 <= 1.0))
          throw std::invalid_argument("StepSchedule: constant gamma0 must lie in (0, 1]");
        break;
      case Kind::Decaying:
        if (!(gamma0 > 0.0))
          throw std::invalid_argument("StepSchedule: decaying gamma0 must be positive");
        break;
    }
  }

  // Step size at iteration k (0-based) given the current adaptive scale m.
  double step(int k, double m) const {
    switch (kind) {
      case Kind::Adaptive:
        return m / (2.0 + std::sqrt(static_cast<double>(k)));
      case Kind::Constant:
        return gamma0;
      case Kind::Decaying:
        return gamma0 / (gamma0 + static_cast<double>(k));
    }
    return 0.0;
  }
};

// Checkpoint iterations (1-based, strictly inside the budget) at which the
// adaptive schemes evaluate their progress conditions.
std::vector<int> checkpoint_iterations(const StepSchedule& schedule, int total_iterations);

}  // namespace lpvce
