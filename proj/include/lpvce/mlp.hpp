#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "lpvce/common.hpp"
#include "lpvce/dataset.hpp"

namespace lpvce {

// Dense softmax classifier with softplus hidden activations and a calibration
// temperature dividing the logits. Smooth everywhere, so finite-difference
// gradient checks are clean.
struct MlpClassifier {
  std::vector<Eigen::MatrixXd> weights;  // layer l maps in -> out, stored out x in
  std::vector<Eigen::VectorXd> biases;
  double temperature = 1.0;

  // Image shape carried along for the pipeline; zero when not applicable.
  int image_height = 0;
  int image_width = 0;
  int image_channels = 0;

  int input_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
  int class_count() const { return weights.empty() ? 0 : static_cast<int>(weights.back().rows()); }

  Eigen::VectorXd logits(const Eigen::VectorXd& x) const;
  Eigen::VectorXd probabilities(const Eigen::VectorXd& x) const;  // softmax(logits / T)
  int predict(const Eigen::VectorXd& x) const;                    // argmax, ties -> lowest index
};

// log p(k | x) with the temperature applied, computed via log-sum-exp.
double log_prob(const MlpClassifier& model, int k, const Eigen::VectorXd& x);

// Analytic input gradient of log p(k | x) by backpropagation.
Eigen::VectorXd grad_log_prob(const MlpClassifier& model, int k, const Eigen::VectorXd& x);

// Class with the second-largest probability; ties break toward the lowest
// index. Requires at least two classes.
int pick_target_second(const MlpClassifier& model, const Eigen::VectorXd& x);

struct TrainConfig {
  std::vector<int> hidden{32};
  int epochs = 30;
  double learning_rate = 0.05;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> epoch_mean_loss;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

// Mini-batch gradient descent on cross-entropy. Deterministic in the seed.
// Aborts with DivergenceError if the loss turns non-finite.
MlpClassifier train_mlp(const TrainConfig& config, const Dataset& data,
                        TrainReport* report = nullptr);

// Versioned binary model format: magic, header, little-endian float64 blobs,
// temperature. Documented in the README.
void save_model(const MlpClassifier& model, const std::string& path);
MlpClassifier load_model(const std::string& path);

}  // namespace lpvce
