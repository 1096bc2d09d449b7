#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <utility>
#include <vector>

#include "lpvce/image.hpp"
#include "lpvce/mlp.hpp"
#include "lpvce/optim.hpp"

namespace lpvce {

// Defaults and reference radii for the generation protocol.
namespace presets {
inline constexpr double kDefaultExponent = 1.5;
inline constexpr int kDefaultIterations = 75;
inline constexpr int kDefaultRestarts = 5;
// Reference radii for full-scale image pipelines (224x224x3 inputs).
inline constexpr double kImageNetRadiusL1 = 400.0;
inline constexpr double kImageNetRadiusL15 = 50.0;
inline constexpr double kImageNetRadiusL2 = 12.0;
// 32x32x3 inputs.
inline constexpr double kCifarRadiusL15 = 6.0;
// Panel radii for l1.5 sweeps at full scale.
inline constexpr double kPanelRadiiL15[3] = {50.0, 75.0, 100.0};
}  // namespace presets

struct VceRequest {
  Eigen::VectorXd image;  // flattened H x W x C, values in [0, 1]
  int target = 0;
  double exponent = presets::kDefaultExponent;
  double radius = 0.0;
  Method method = Method::afw();
  int iterations = presets::kDefaultIterations;
  int restarts = presets::kDefaultRestarts;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate(const MlpClassifier& model) const;
};

struct VceResult {
  Eigen::VectorXd counterfactual;
  double p_initial = 0.0;  // target-class probability at the original image
  double p_end = 0.0;      // target-class probability at the counterfactual
  bool valid = false;      // argmax at the counterfactual equals the target
  double best_objective = 0.0;
  std::vector<double> restart_objectives;
};

// Maximizes log p(target | x) over B_p(image, radius) ∩ [0,1]^d with the
// requested method and best-of-restarts selection.
VceResult generate_vce(const MlpClassifier& model, const VceRequest& request);

// One result per radius, sharing the request seed. Radii must be strictly
// ascending and positive.
std::vector<VceResult> radius_sweep(const MlpClassifier& model, const VceRequest& base,
                                    const std::vector<double>& radii);

// Per-pixel channel-summed absolute difference, normalized by its maximum
// (all zeros when the images are identical).
Image difference_map(const Image& original, const Image& counterfactual);

// Penalized objective -log p(k | x) + lambda * ||x - x0||_p and its analytic
// gradient. The distance gradient at x = x0 is defined as zero; p <= 1 throws
// UnsupportedExponentError (no smooth gradient path).
std::pair<double, Eigen::VectorXd> penalized_objective(const MlpClassifier& model, int k,
                                                       const Eigen::VectorXd& x0,
                                                       const Eigen::VectorXd& x, double lambda,
                                                       double p);

// Plain projected gradient descent on the penalized objective (box only).
Eigen::VectorXd minimize_penalized(const MlpClassifier& model, int k,
                                   const Eigen::VectorXd& x0, double lambda, double p,
                                   int iterations, double step);

}  // namespace lpvce
