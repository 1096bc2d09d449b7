#include "lpvce/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpvce/parallel.hpp"
#include "lpvce/rng.hpp"

namespace lpvce {

namespace {

double sign_of(double w) { return w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0); }

}  // namespace

OracleLmoResult oracle_lmo_bisection(const Eigen::VectorXd& w, const FeasibleRegion& region) {
  const int d = region.dim();
  const double p = region.exponent;
  if (!(p > 1.0) || std::isinf(p))
    throw UnsupportedExponentError("oracle_lmo_bisection: finite p > 1 required");

  const double scale = w.cwiseAbs().maxCoeff();
  OracleLmoResult res;
  res.delta = Eigen::VectorXd::Zero(d);
  if (scale == 0.0) return res;

  std::vector<int> active;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d), gamma = Eigen::VectorXd::Zero(d),
                  s = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) {
    s[i] = sign_of(w[i]);
    if (s[i] == 0.0) continue;
    gamma[i] = std::max(-region.center[i] * s[i], (1.0 - region.center[i]) * s[i]);
    if (gamma[i] <= 0.0) continue;
    v[i] = std::abs(w[i]) / scale;
    active.push_back(i);
  }
  if (active.empty()) return res;

  const double inv_pm1 = 1.0 / (p - 1.0);
  const auto eta_at = [&](double mu, int i) {
    if (mu <= 0.0) return gamma[i];
    return std::min(gamma[i], std::pow(v[i] / (p * mu), inv_pm1));
  };
  const auto residual = [&](double mu) {
    double acc = 0.0;
    for (int i : active) acc += std::pow(eta_at(mu, i), p);
    return acc - std::pow(region.radius, p);
  };

  double mu = 0.0;
  if (residual(0.0) > 0.0) {
    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (residual(hi) > 0.0 && guard++ < 400) {
      lo = hi;
      hi *= 2.0;
    }
    for (int it = 0; it < 300; ++it) {
      const double mid = 0.5 * (lo + hi);
      (residual(mid) > 0.0 ? lo : hi) = mid;
    }
    mu = 0.5 * (lo + hi);
  }
  for (int i : active) res.delta[i] = eta_at(mu, i) * s[i];
  res.mu = mu * scale;
  res.objective = w.dot(res.delta);
  return res;
}

Eigen::VectorXd oracle_project_lp_box(const Eigen::VectorXd& z, const FeasibleRegion& region) {
  const int d = region.dim();
  const double p = region.exponent;
  if (std::isinf(p) || !(p >= 1.0))
    throw UnsupportedExponentError("oracle_project_lp_box: finite p >= 1 required");

  const auto clip01 = [](double t) { return std::min(1.0, std::max(0.0, t)); };

  // Per-coordinate minimizer of (y - z_i)^2 + lambda * |y - x_i|^p over [0, 1].
  const auto coord_min = [&](double lambda, int i) {
    const double x = region.center[i], zi = z[i];
    if (lambda == 0.0) return clip01(zi);
    if (p == 1.0) {
      // Piecewise quadratic: candidate vertices on each side of x plus x itself.
      const double lo = clip01(std::min(x, zi)), hi = clip01(std::max(x, zi));
      const double a = std::min(hi, std::max(lo, zi - 0.5 * lambda));  // y >= x side
      const double b = std::min(hi, std::max(lo, zi + 0.5 * lambda));  // y <= x side
      double best_y = clip01(x);
      double best_h = (best_y - zi) * (best_y - zi);
      for (double y : {a, b}) {
        const double h = (y - zi) * (y - zi) + lambda * std::abs(y - x);
        if (h < best_h) {
          best_h = h;
          best_y = y;
        }
      }
      return best_y;
    }
    // Strictly convex for p > 1: ternary search between x_i and z_i.
    double lo = clip01(std::min(x, zi)), hi = clip01(std::max(x, zi));
    const auto h = [&](double y) {
      return (y - zi) * (y - zi) + lambda * std::pow(std::abs(y - x), p);
    };
    for (int it = 0; it < 70; ++it) {
      const double m1 = lo + (hi - lo) / 3.0;
      const double m2 = hi - (hi - lo) / 3.0;
      if (h(m1) < h(m2))
        hi = m2;
      else
        lo = m1;
    }
    return 0.5 * (lo + hi);
  };

  const auto solve_at = [&](double lambda, Eigen::VectorXd& y) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      y[i] = coord_min(lambda, i);
      acc += std::pow(std::abs(y[i] - region.center[i]), p);
    }
    return acc - std::pow(region.radius, p);
  };

  Eigen::VectorXd y(d);
  if (solve_at(0.0, y) <= 0.0) return y;
  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (solve_at(hi, y) > 0.0 && guard++ < 200) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 70; ++it) {
    const double mid = 0.5 * (lo + hi);
    (solve_at(mid, y) > 0.0 ? lo : hi) = mid;
  }
  solve_at(hi, y);
  return y;
}

Eigen::VectorXd oracle_projected_ascent_lmo(const Eigen::VectorXd& w,
                                            const FeasibleRegion& region, int iterations) {
  const double wmax = w.cwiseAbs().maxCoeff();
  const Eigen::VectorXd g = wmax > 0.0 ? (w / wmax).eval() : w;
  Eigen::VectorXd y = region.center;
  Eigen::VectorXd best = y;
  double best_obj = 0.0;
  for (int k = 0; k < iterations; ++k) {
    const double step = region.radius / std::sqrt(static_cast<double>(k) + 1.0);
    y = oracle_project_lp_box(y + step * g, region);
    const double obj = w.dot(y - region.center);
    if (obj > best_obj) {
      best_obj = obj;
      best = y;
    }
  }
  return best;
}

OracleCheckReport run_oracle_check(int trials, std::uint64_t seed, int certificate_points) {
  struct TrialOutcome {
    bool lmo_ok = false;
    bool cert_ok = false;
    int projection_run = 0;
    bool projection_ok = false;
    std::string failure;
  };
  std::vector<TrialOutcome> outcomes(trials);

  // Trials are pure given their seed stream, so they fan out across workers;
  // the per-trial streams keep the report deterministic either way.
  parallel_for(trials, 8, [&](int t) {
    Rng rng(seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(t + 1)));
    TrialOutcome& outcome = outcomes[t];
    const double exponents[] = {1.1, 1.5, 2.0, 3.0};
    const int d = rng.uniform_int(2, 8);
    const double p = exponents[rng.uniform_int(0, 3)];
    Eigen::VectorXd center(d), w(d);
    for (int i = 0; i < d; ++i) {
      center[i] = rng.uniform();
      // Occasionally pin the center to a face or zero a gradient entry so the
      // gamma_i = 0 and sign(0) = 0 branches get exercised.
      if (rng.uniform() < 0.08) center[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
      w[i] = rng.normal() * std::exp(rng.uniform(-1.0, 3.0));
      if (rng.uniform() < 0.08) w[i] = 0.0;
    }
    const double eps = rng.uniform(0.05, 2.0 * std::pow(static_cast<double>(d), 1.0 / p));
    const FeasibleRegion region(center, eps, p);

    const OracleSolution closed = lmo_box_ball(w, region);
    const OracleLmoResult ref = oracle_lmo_bisection(w, region);
    const Eigen::VectorXd ascent = oracle_projected_ascent_lmo(w, region, 120);
    const double ascent_obj = w.dot(ascent - center);

    const double tol = 1e-6 * (1.0 + std::abs(ref.objective));
    outcome.lmo_ok = region.contains(center + closed.delta) &&
                     std::abs(closed.objective - ref.objective) <= tol &&
                     closed.objective >= ascent_obj - tol;
    if (!outcome.lmo_ok) {
      std::ostringstream msg;
      msg << "lmo trial " << t << ": d=" << d << " p=" << p << " eps=" << eps
          << " closed=" << closed.objective << " bisect=" << ref.objective
          << " ascent=" << ascent_obj;
      outcome.failure = msg.str();
    }

    outcome.cert_ok = true;
    const double bound = closed.objective + 1e-9 * (1.0 + std::abs(closed.objective));
    for (int c = 0; c < certificate_points; ++c) {
      const Eigen::VectorXd point = sample_feasible(region, rng.next_u64());
      if (w.dot(point - center) > bound) {
        outcome.cert_ok = false;
        if (outcome.failure.empty())
          outcome.failure = "certificate failed on trial " + std::to_string(t);
        break;
      }
    }

    const double proj_p = (t % 2 == 0) ? 1.0 : 2.0;
    const FeasibleRegion proj_region(center, eps, proj_p);
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z[i] = center[i] + rng.normal();
    outcome.projection_run = 1;
    const Eigen::VectorXd fast = project_box_ball(z, proj_region);
    const Eigen::VectorXd slow = oracle_project_lp_box(z, proj_region);
    outcome.projection_ok = (fast - slow).cwiseAbs().maxCoeff() <= 1e-6;
    if (!outcome.projection_ok && outcome.failure.empty()) {
      std::ostringstream msg;
      msg << "projection trial " << t << ": p=" << proj_p
          << " max coord gap=" << (fast - slow).cwiseAbs().maxCoeff();
      outcome.failure = msg.str();
    }
  });

  OracleCheckReport report;
  for (const TrialOutcome& outcome : outcomes) {
    ++report.lmo_trials;
    ++report.certificate_trials;
    report.lmo_passed += outcome.lmo_ok ? 1 : 0;
    report.certificate_passed += outcome.cert_ok ? 1 : 0;
    report.projection_trials += outcome.projection_run;
    report.projection_passed += outcome.projection_ok ? 1 : 0;
    if (!outcome.failure.empty() && report.failures.size() < 8)
      report.failures.push_back(outcome.failure);
  }
  return report;
}

}  // namespace lpvce
