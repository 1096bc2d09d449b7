#include "lpvce/vce.hpp"

#include <algorithm>
#include <cmath>

namespace lpvce {

void VceRequest::validate(const MlpClassifier& model) const {
  if (static_cast<int>(image.size()) != model.input_dim())
    throw std::invalid_argument("VceRequest: image size does not match the model");
  for (int i = 0; i < image.size(); ++i)
    if (!(image[i] >= 0.0 && image[i] <= 1.0))
      throw std::invalid_argument("VceRequest: image values must lie in [0, 1]");
  if (target < 0 || target >= model.class_count())
    throw std::invalid_argument("VceRequest: target class out of range");
  if (!(radius > 0.0)) throw std::invalid_argument("VceRequest: radius must be positive");
  if (iterations < 1 || restarts < 1)
    throw std::invalid_argument("VceRequest: iterations and restarts must be >= 1");
  if (method.kind == MethodKind::Apgd &&
      !(exponent == 1.0 || exponent == 2.0 || std::isinf(exponent)))
    throw UnsupportedExponentError("VceRequest: APGD requires p in {1, 2, inf}");
}

VceResult generate_vce(const MlpClassifier& model, const VceRequest& request) {
  request.validate(model);
  const FeasibleRegion region(request.image, request.radius, request.exponent);

  GradOracle objective;
  objective.value = [&model, k = request.target](const Eigen::VectorXd& x) {
    return log_prob(model, k, x);
  };
  objective.gradient = [&model, k = request.target](const Eigen::VectorXd& x) {
    return grad_log_prob(model, k, x);
  };

  const RestartsResult runs = best_of_restarts(objective, region, request.method,
                                               request.iterations, request.restarts,
                                               request.seed, request.threads);

  VceResult result;
  result.counterfactual = runs.best.best_point;
  result.best_objective = runs.best.best_objective;
  result.restart_objectives = runs.restart_objectives;
  result.p_initial = std::exp(log_prob(model, request.target, request.image));
  result.p_end = std::exp(result.best_objective);
  result.valid = model.predict(result.counterfactual) == request.target;
  return result;
}

std::vector<VceResult> radius_sweep(const MlpClassifier& model, const VceRequest& base,
                                    const std::vector<double>& radii) {
  if (radii.empty()) throw std::invalid_argument("radius_sweep: empty radius list");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw std::invalid_argument("radius_sweep: radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1]))
      throw std::invalid_argument("radius_sweep: radii must be strictly ascending");
  }
  std::vector<VceResult> out;
  out.reserve(radii.size());
  for (double eps : radii) {
    VceRequest request = base;
    request.radius = eps;
    out.push_back(generate_vce(model, request));
  }
  return out;
}

Image difference_map(const Image& original, const Image& counterfactual) {
  if (original.height != counterfactual.height || original.width != counterfactual.width ||
      original.channels != counterfactual.channels)
    throw std::invalid_argument("difference_map: shape mismatch");

  Image map;
  map.height = original.height;
  map.width = original.width;
  map.channels = 1;
  map.data.assign(static_cast<std::size_t>(map.pixel_count()), 0.0);

  double max_value = 0.0;
  for (int y = 0; y < original.height; ++y) {
    for (int x = 0; x < original.width; ++x) {
      double acc = 0.0;
      for (int c = 0; c < original.channels; ++c)
        acc += std::abs(original.at(y, x, c) - counterfactual.at(y, x, c));
      map.at(y, x) = acc;
      max_value = std::max(max_value, acc);
    }
  }
  if (max_value > 0.0)
    for (double& v : map.data) v /= max_value;
  return map;
}

std::pair<double, Eigen::VectorXd> penalized_objective(const MlpClassifier& model, int k,
                                                       const Eigen::VectorXd& x0,
                                                       const Eigen::VectorXd& x, double lambda,
                                                       double p) {
  if (x.size() != x0.size()) throw std::invalid_argument("penalized_objective: size mismatch");
  for (int i = 0; i < x.size(); ++i)
    if (!(x[i] >= 0.0 && x[i] <= 1.0))
      throw std::invalid_argument("penalized_objective: x must lie in [0, 1]");
  if (!(lambda >= 0.0)) throw std::invalid_argument("penalized_objective: lambda must be >= 0");
  if (!(p > 1.0))
    throw UnsupportedExponentError("penalized_objective: gradient path requires p > 1");

  const Eigen::VectorXd u = x - x0;
  const double dist = lp_norm(u, p);
  const double value = -log_prob(model, k, x) + lambda * dist;

  Eigen::VectorXd grad = -grad_log_prob(model, k, x);
  if (lambda > 0.0 && dist > 0.0) {
    const double denom = std::pow(dist, p - 1.0);
    for (int i = 0; i < u.size(); ++i) {
      const double s = u[i] > 0.0 ? 1.0 : (u[i] < 0.0 ? -1.0 : 0.0);
      if (s != 0.0) grad[i] += lambda * s * std::pow(std::abs(u[i]), p - 1.0) / denom;
    }
  }
  return {value, std::move(grad)};
}

Eigen::VectorXd minimize_penalized(const MlpClassifier& model, int k,
                                   const Eigen::VectorXd& x0, double lambda, double p,
                                   int iterations, double step) {
  Eigen::VectorXd x = x0;
  Eigen::VectorXd best = x;
  double best_value = penalized_objective(model, k, x0, x, lambda, p).first;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd grad = penalized_objective(model, k, x0, x, lambda, p).second;
    x = clamp_to_box(x - step * grad);
    const double v = penalized_objective(model, k, x0, x, lambda, p).first;
    if (v < best_value) {
      best_value = v;
      best = x;
    }
  }
  return best;
}

}  // namespace lpvce
