#include "lpvce/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lpvce/rng.hpp"

namespace lpvce {

namespace {

double sign_of(double w) { return w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0); }

// Distance from x_i to the box face in the direction sign(w_i):
// gamma_i = max{-x_i * s_i, (1 - x_i) * s_i}. Zero when s_i = 0 or the
// center is pinned at the face the gradient points out of.
double face_gap(double x, double s) { return std::max(-x * s, (1.0 - x) * s); }

}  // namespace

double lp_norm(const Eigen::VectorXd& x, double p) {
  if (!x.allFinite()) throw std::invalid_argument("lp_norm: non-finite input");
  if (std::isinf(p)) return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: exponent must satisfy p >= 1");
  if (x.size() == 0) return 0.0;
  if (p == 1.0) return x.cwiseAbs().sum();
  if (p == 2.0) return x.norm();
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double acc = 0.0;
  for (int i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i]) / m, p);
  return m * std::pow(acc, 1.0 / p);
}

FeasibleRegion::FeasibleRegion(Eigen::VectorXd center_, double radius_, double exponent_,
                               const Tolerances& tol)
    : center(std::move(center_)), radius(radius_), exponent(exponent_) {
  if (center.size() == 0) throw std::invalid_argument("FeasibleRegion: empty center");
  if (!center.allFinite()) throw std::invalid_argument("FeasibleRegion: non-finite center");
  for (int i = 0; i < center.size(); ++i) {
    if (center[i] < -tol.box_slack || center[i] > 1.0 + tol.box_slack)
      throw std::invalid_argument("FeasibleRegion: center outside the unit box");
  }
  if (!(radius > 0.0)) throw std::invalid_argument("FeasibleRegion: radius must be positive");
  if (!(exponent >= 1.0)) throw UnsupportedExponentError("FeasibleRegion: exponent must satisfy p >= 1");
}

bool FeasibleRegion::contains(const Eigen::VectorXd& y, const Tolerances& tol) const {
  if (y.size() != center.size()) return false;
  for (int i = 0; i < y.size(); ++i) {
    if (!(y[i] >= -tol.box_slack && y[i] <= 1.0 + tol.box_slack)) return false;
  }
  return lp_norm(y - center, exponent) <= radius * (1.0 + tol.ball_slack) + tol.ball_abs_slack;
}

Eigen::VectorXd clamp_to_box(Eigen::VectorXd y) {
  for (int i = 0; i < y.size(); ++i) y[i] = std::min(1.0, std::max(0.0, y[i]));
  return y;
}

namespace {

OracleSolution lmo_sup_norm(const Eigen::VectorXd& w, const FeasibleRegion& region) {
  const int d = region.dim();
  OracleSolution sol;
  sol.delta = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) {
    const double s = sign_of(w[i]);
    if (s == 0.0) continue;
    const double g = face_gap(region.center[i], s);
    const double mag = std::min(g, region.radius);
    sol.delta[i] = mag * s;
    if (g > 0.0 && mag == g) sol.saturated.push_back(i);
  }
  sol.objective = w.dot(sol.delta);
  return sol;
}

OracleSolution lmo_l1_greedy(const Eigen::VectorXd& w, const FeasibleRegion& region) {
  const int d = region.dim();
  OracleSolution sol;
  sol.delta = Eigen::VectorXd::Zero(d);
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(w[a]) > std::abs(w[b]); });
  double budget = region.radius;
  for (int i : order) {
    if (budget <= 0.0) break;
    const double s = sign_of(w[i]);
    if (s == 0.0) continue;
    const double g = face_gap(region.center[i], s);
    if (g <= 0.0) continue;
    const double take = std::min(g, budget);
    sol.delta[i] = take * s;
    budget -= take;
    if (take == g) sol.saturated.push_back(i);
  }
  std::sort(sol.saturated.begin(), sol.saturated.end());
  sol.objective = w.dot(sol.delta);
  return sol;
}

}  // namespace

OracleSolution lmo_box_ball(const Eigen::VectorXd& w, const FeasibleRegion& region,
                            const Tolerances& tol) {
  const int d = region.dim();
  if (static_cast<int>(w.size()) != d)
    throw std::invalid_argument("lmo_box_ball: gradient length mismatch");
  if (!w.allFinite()) throw std::invalid_argument("lmo_box_ball: non-finite gradient");

  const double p = region.exponent;
  if (std::isinf(p)) return lmo_sup_norm(w, region);
  if (p == 1.0) return lmo_l1_greedy(w, region);
  if (p < 1.0) throw UnsupportedExponentError("lmo_box_ball: p < 1 unsupported");
  if (p < 1.0 + tol.min_p_gap)
    throw UnsupportedExponentError(
        "lmo_box_ball: closed form requires p >= 1 + 1e-3; use p = 1 greedy");

  OracleSolution sol;
  sol.delta = Eigen::VectorXd::Zero(d);

  // Scale invariance: normalize so that max |w_i| = 1. The maximizer is
  // unchanged; the dual multiplier scales back linearly.
  const double scale = w.cwiseAbs().maxCoeff();
  if (scale == 0.0) return sol;

  struct Coord {
    int index;
    double v;      // |w_i| / scale
    double gpow;   // gamma_i^p
    double vq;     // v_i^q, q = p/(p-1)
    double brk;    // breakpoint v_i / (p * gamma_i^(p-1))
    double gamma;
    double s;
  };
  const double q = p / (p - 1.0);
  const double eps_p = std::pow(region.radius, p);

  std::vector<Coord> active;
  active.reserve(d);
  double sum_gp = 0.0;
  for (int i = 0; i < d; ++i) {
    const double s = sign_of(w[i]);
    if (s == 0.0) continue;
    const double gamma = face_gap(region.center[i], s);
    if (gamma <= 0.0) continue;  // pinned at the face: delta_i = 0
    const double v = std::abs(w[i]) / scale;
    Coord c;
    c.index = i;
    c.v = v;
    c.gamma = gamma;
    c.s = s;
    c.gpow = std::pow(gamma, p);
    c.vq = std::pow(v, q);
    c.brk = v / (p * std::pow(gamma, p - 1.0));
    active.push_back(c);
    sum_gp += c.gpow;
  }
  if (active.empty()) return sol;

  const double f_tol = tol.bracket_rel * (eps_p + sum_gp);

  // f(0) = sum gamma^p - eps^p. Non-positive means the box corner lies
  // inside the ball: mu* = 0 and every active coordinate saturates.
  if (sum_gp - eps_p <= f_tol) {
    for (const Coord& c : active) {
      sol.delta[c.index] = c.gamma * c.s;
      sol.saturated.push_back(c.index);
    }
    std::sort(sol.saturated.begin(), sol.saturated.end());
    sol.mu_star = 0.0;
    sol.objective = w.dot(sol.delta);
    return sol;
  }

  // Sort breakpoints ascending, ties kept in coordinate order (lexicographic
  // on (value, rank) is a stable order). Sorting the 16-byte pairs instead of
  // the Coord records keeps the pass cache-friendly for large d; prefix sums
  // then make each f evaluation O(1), so the oracle stays O(d log d).
  const int n = static_cast<int>(active.size());
  std::vector<std::pair<double, int>> order(n);
  for (int j = 0; j < n; ++j) order[j] = {active[j].brk, j};
  std::sort(order.begin(), order.end());
  std::vector<double> vq_prefix(n), gp_prefix(n);
  double acc_vq = 0.0, acc_gp = 0.0;
  for (int j = 0; j < n; ++j) {
    acc_vq += active[order[j].second].vq;
    acc_gp += active[order[j].second].gpow;
    vq_prefix[j] = acc_vq;
    gp_prefix[j] = acc_gp;
  }

  // f at a breakpoint b[j] (evaluated at the end of its tie group):
  // I+ = ranks 0..j, I- = ranks j+1..n-1.
  const auto f_at = [&](int j) {
    const double inner = sum_gp - gp_prefix[j];
    const double pm = p * order[j].first;
    return inner + vq_prefix[j] * std::pow(pm, -q) - eps_p;
  };

  // Scan tie-group ends left to right for the first f < 0; the crossing
  // bracket starts at the previous tie-group end (mu = 0 before the first).
  int left_end = -1;  // tie-group end with f >= 0
  int cross_end = -1;
  for (int j = 0; j < n; ++j) {
    if (j + 1 < n && order[j + 1].first == order[j].first) continue;  // inside tie group
    if (f_at(j) < -f_tol) {
      cross_end = j;
      break;
    }
    left_end = j;
  }

  double sum_vq_plus, denom;
  if (cross_end < 0) {
    // f stays nonnegative through the largest breakpoint: crossing lies in
    // [b_max, inf) where every coordinate is interior.
    sum_vq_plus = vq_prefix[n - 1];
    denom = eps_p;
  } else if (left_end < 0) {
    // f(0) > 0 yet f < 0 at the first breakpoint: only possible as rounding
    // noise since f is constant on [0, b_min]. Treat as corner saturation.
    for (const Coord& c : active) {
      sol.delta[c.index] = c.gamma * c.s;
      sol.saturated.push_back(c.index);
    }
    std::sort(sol.saturated.begin(), sol.saturated.end());
    sol.mu_star = order.front().first * scale;
    sol.objective = w.dot(sol.delta);
    return sol;
  } else {
    sum_vq_plus = vq_prefix[left_end];
    denom = eps_p - (sum_gp - gp_prefix[left_end]);
  }

  // (p mu*)^(p/(p-1)) = sum_{I+} v^q / (eps^p - sum_{I-} gamma^p).
  const double pmu = std::pow(sum_vq_plus / denom, 1.0 / q);
  const double mu_scaled = pmu / p;

  const double inv_pm1 = 1.0 / (p - 1.0);
  for (const Coord& c : active) {
    const double interior = std::pow(c.v / pmu, inv_pm1);
    if (c.gamma <= interior) {
      sol.delta[c.index] = c.gamma * c.s;
      sol.saturated.push_back(c.index);
    } else {
      sol.delta[c.index] = interior * c.s;
    }
  }
  std::sort(sol.saturated.begin(), sol.saturated.end());
  sol.mu_star = mu_scaled * scale;
  sol.objective = w.dot(sol.delta);
  return sol;
}

namespace {

Eigen::VectorXd project_sup_norm(const Eigen::VectorXd& z, const FeasibleRegion& region) {
  Eigen::VectorXd y(z.size());
  for (int i = 0; i < z.size(); ++i) {
    const double lo = std::max(0.0, region.center[i] - region.radius);
    const double hi = std::min(1.0, region.center[i] + region.radius);
    y[i] = std::min(hi, std::max(lo, z[i]));
  }
  return y;
}

Eigen::VectorXd project_l2(const Eigen::VectorXd& z, const FeasibleRegion& region) {
  const Eigen::VectorXd clipped = clamp_to_box(z);
  if ((clipped - region.center).norm() <= region.radius) return clipped;
  // y(lambda) = clip_box((z + lambda*center) / (1 + lambda)); the ball
  // residual is decreasing in lambda, so bisect.
  const auto residual = [&](double lambda) {
    Eigen::VectorXd y = (z + lambda * region.center) / (1.0 + lambda);
    y = clamp_to_box(std::move(y));
    return (y - region.center).norm() - region.radius;
  };
  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (residual(hi) > 0.0 && guard++ < 200) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) > 0.0 ? lo : hi) = mid;
  }
  Eigen::VectorXd y = (z + hi * region.center) / (1.0 + hi);
  return clamp_to_box(std::move(y));
}

Eigen::VectorXd project_l1(const Eigen::VectorXd& z, const FeasibleRegion& region) {
  const int d = region.dim();
  const Eigen::VectorXd c = z - region.center;
  Eigen::VectorXd lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    lo[i] = -region.center[i];
    hi[i] = 1.0 - region.center[i];
  }
  const auto shrink_clip = [&](double lambda, Eigen::VectorXd& u) {
    for (int i = 0; i < d; ++i) {
      const double t = std::abs(c[i]) - 0.5 * lambda;
      const double s = t > 0.0 ? (c[i] > 0.0 ? t : -t) : 0.0;
      u[i] = std::min(hi[i], std::max(lo[i], s));
    }
  };
  Eigen::VectorXd u(d);
  shrink_clip(0.0, u);
  if (u.cwiseAbs().sum() <= region.radius) return region.center + u;
  double lam_lo = 0.0, lam_hi = 2.0 * c.cwiseAbs().maxCoeff() + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lam_lo + lam_hi);
    shrink_clip(mid, u);
    (u.cwiseAbs().sum() > region.radius ? lam_lo : lam_hi) = mid;
  }
  shrink_clip(lam_hi, u);
  return region.center + u;
}

}  // namespace

Eigen::VectorXd project_box_ball(const Eigen::VectorXd& z, const FeasibleRegion& region,
                                 const Tolerances& tol) {
  if (static_cast<int>(z.size()) != region.dim())
    throw std::invalid_argument("project_box_ball: length mismatch");
  if (!z.allFinite()) throw std::invalid_argument("project_box_ball: non-finite input");
  if (region.contains(z, tol)) return z;
  const double p = region.exponent;
  if (std::isinf(p)) return project_sup_norm(z, region);
  if (p == 2.0) return project_l2(z, region);
  if (p == 1.0) return project_l1(z, region);
  throw UnsupportedExponentError("project_box_ball: only p in {1, 2, inf}; use Frank-Wolfe");
}

Eigen::VectorXd sample_feasible(const FeasibleRegion& region, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd direction(region.dim());
  for (int i = 0; i < direction.size(); ++i) direction[i] = rng.normal();
  if (direction.cwiseAbs().maxCoeff() == 0.0) direction[0] = 1.0;
  const OracleSolution vertex = lmo_box_ball(direction, region);
  const double t = rng.uniform();
  return clamp_to_box(region.center + t * vertex.delta);
}

}  // namespace lpvce
