#pragma once

#include <stdexcept>
#include <string>

namespace lpvce {

// Error taxonomy shared across modules.
struct UnsupportedExponentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidStateError : std::logic_error {
  using std::logic_error::logic_error;
};

struct DegenerateDistributionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a run hits a non-finite objective or gradient; carries the
// iteration at which it happened.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& what, int iteration_)
      : std::runtime_error(what), iteration(iteration_) {}
  int iteration = -1;
};

// Numeric tolerances used by the geometry kernels. Library-wide defaults;
// callers may pass adjusted copies.
struct Tolerances {
  double ball_slack = 1e-9;      // membership: ||delta||_p <= eps * (1 + ball_slack)
  double ball_abs_slack = 1e-12;  // absolute representability floor for the ball test
  double box_slack = 1e-12;       // membership: componentwise box slack
  double bracket_rel = 1e-12;  // relative tolerance for f(mu) sign tests
  double min_p_gap = 1e-3;     // closed-form oracle requires p >= 1 + min_p_gap
};

inline const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

}  // namespace lpvce
