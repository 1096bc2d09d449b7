#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lpvce/calibration.hpp"
#include "lpvce/mlp.hpp"
#include "lpvce/rng.hpp"

using namespace lpvce;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

MlpClassifier linear_model(const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
  MlpClassifier model;
  model.weights.push_back(w);
  model.biases.push_back(b);
  return model;
}

MlpClassifier random_model(Rng& rng, int input_dim, int classes, int hidden_layers) {
  MlpClassifier model;
  int in = input_dim;
  for (int l = 0; l < hidden_layers; ++l) {
    const int out = rng.uniform_int(4, 12);
    Eigen::MatrixXd w(out, in);
    Eigen::VectorXd b(out);
    for (int r = 0; r < out; ++r) {
      b[r] = rng.normal() * 0.3;
      for (int c = 0; c < in; ++c) w(r, c) = rng.normal() * 0.7;
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
    in = out;
  }
  Eigen::MatrixXd w(classes, in);
  Eigen::VectorXd b(classes);
  for (int r = 0; r < classes; ++r) {
    b[r] = rng.normal() * 0.3;
    for (int c = 0; c < in; ++c) w(r, c) = rng.normal() * 0.7;
  }
  model.weights.push_back(std::move(w));
  model.biases.push_back(std::move(b));
  return model;
}

Eigen::VectorXd random_input(Rng& rng, int dim) {
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = rng.uniform();
  return x;
}

BlobsConfig separable_blobs() {
  BlobsConfig config;
  config.classes = 4;
  config.image_size = 12;
  config.per_class = 300;
  config.noise = 0.02;
  config.ring_fraction = 0.28;
  config.jitter = 0.3;
  config.seed = 5;
  return config;
}

}  // namespace

TEST_CASE("log_prob uniform and temperature-flattening cases") {
  const MlpClassifier model = linear_model(Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4));
  CHECK(log_prob(model, 2, vec({0.1, 0.5, 0.9})) == doctest::Approx(std::log(0.25)).epsilon(1e-12));

  Rng rng(3);
  MlpClassifier hot = random_model(rng, 5, 6, 1);
  hot.temperature = 1e6;
  const Eigen::VectorXd x = random_input(rng, 5);
  for (int k = 0; k < 6; ++k)
    CHECK(std::abs(log_prob(hot, k, x) - std::log(1.0 / 6.0)) <= 1e-4);

  CHECK_THROWS_AS(log_prob(model, 7, vec({0.1, 0.5, 0.9})), std::invalid_argument);
}

TEST_CASE("log_prob normalization and shift invariance") {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    MlpClassifier model = random_model(rng, 6, 5, t % 3);
    model.temperature = std::exp(rng.uniform(-1.0, 1.0));
    const Eigen::VectorXd x = random_input(rng, 6);

    double total = 0.0;
    for (int k = 0; k < 5; ++k) total += std::exp(log_prob(model, k, x));
    REQUIRE(std::abs(total - 1.0) <= 1e-9);

    const double before = log_prob(model, 2, x);
    MlpClassifier shifted = model;
    shifted.biases.back().array() += 13.7;  // constant logit shift
    REQUIRE(std::abs(log_prob(shifted, 2, x) - before) <= 1e-9);
  }
}

TEST_CASE("grad_log_prob matches the two-class closed form") {
  Rng rng(14);
  for (int t = 0; t < 10; ++t) {
    Eigen::MatrixXd w(2, 4);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 4; ++c) w(r, c) = rng.normal();
    MlpClassifier model = linear_model(w, vec({0.2, -0.1}));
    model.temperature = std::exp(rng.uniform(-0.7, 0.7));
    const Eigen::VectorXd x = random_input(rng, 4);
    const int k = t % 2;
    const double p_k = std::exp(log_prob(model, k, x));
    const Eigen::VectorXd expected =
        (1.0 - p_k) * (w.row(k) - w.row(1 - k)).transpose() / model.temperature;
    REQUIRE((grad_log_prob(model, k, x) - expected).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("grad_log_prob agrees with central finite differences") {
  Rng rng(15);
  const double h = 1e-5;
  for (int t = 0; t < 30; ++t) {
    MlpClassifier model = random_model(rng, 5, 4, t % 3);  // 0..2 hidden layers
    model.temperature = std::exp(rng.uniform(-0.7, 0.7));
    const Eigen::VectorXd x = random_input(rng, 5);
    const int k = rng.uniform_int(0, 3);
    const Eigen::VectorXd g = grad_log_prob(model, k, x);
    Eigen::VectorXd fd(5);
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd hi = x, lo = x;
      hi[i] += h;
      lo[i] -= h;
      fd[i] = (log_prob(model, k, hi) - log_prob(model, k, lo)) / (2.0 * h);
    }
    REQUIRE((g - fd).norm() <= 1e-4 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("constant-logit model has zero input gradient") {
  const MlpClassifier model =
      linear_model(Eigen::MatrixXd::Zero(3, 4), vec({0.3, -0.7, 1.1}));
  const Eigen::VectorXd g = grad_log_prob(model, 1, vec({0.2, 0.4, 0.6, 0.8}));
  CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("training reaches high accuracy on separable blobs, deterministically") {
  const Dataset data = make_blobs_dataset(separable_blobs());
  data.validate();

  TrainConfig config;
  config.hidden = {32};
  config.epochs = 10;
  config.seed = 1;
  TrainReport report;
  const MlpClassifier model = train_mlp(config, data, &report);

  CHECK(report.train_accuracy >= 0.95);
  REQUIRE(report.epoch_mean_loss.size() >= 3);
  CHECK(report.epoch_mean_loss[1] <= report.epoch_mean_loss[0]);
  CHECK(report.epoch_mean_loss[2] <= report.epoch_mean_loss[1]);

  const MlpClassifier again = train_mlp(config, data, nullptr);
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    CHECK(model.weights[l] == again.weights[l]);
    CHECK(model.biases[l] == again.biases[l]);
  }
}

TEST_CASE("training aborts on divergence") {
  const Dataset data = make_blobs_dataset(separable_blobs());
  TrainConfig config;
  config.hidden = {16};
  config.epochs = 30;
  config.learning_rate = 1e308;
  CHECK_THROWS_AS(train_mlp(config, data), DivergenceError);
}

TEST_CASE("ece analytic cases and recompute oracle") {
  // One-layer model with a huge margin for the true class of every sample.
  Dataset data;
  data.feature_dim = 2;
  data.class_count = 2;
  for (int i = 0; i < 40; ++i) {
    data.features.push_back(vec({i % 2 == 0 ? 1.0 : 0.0, i % 2 == 0 ? 0.0 : 1.0}));
    data.labels.push_back(i % 2);
    data.splits.push_back(Split::Test);
  }
  Eigen::MatrixXd w(2, 2);
  w << 50.0, -50.0, -50.0, 50.0;
  const MlpClassifier confident = linear_model(w, Eigen::VectorXd::Zero(2));
  CHECK(expected_calibration_error(confident, data, Split::Test, 15) <= 1e-9);

  // Same confident model, labels half wrong: confidence 1, accuracy 0.5.
  Dataset half = data;
  for (std::size_t i = 0; i < half.labels.size(); i += 2) half.labels[i] = 1 - half.labels[i];
  CHECK(expected_calibration_error(confident, half, Split::Test, 15) ==
        doctest::Approx(0.5).epsilon(1e-9));

  CHECK_THROWS_AS(expected_calibration_error(confident, data, Split::Train, 15),
                  std::invalid_argument);
  CHECK_THROWS_AS(expected_calibration_error(confident, data, Split::Test, 0),
                  std::invalid_argument);

  // Independent recomputation on a random fixture.
  Rng rng(23);
  MlpClassifier model = random_model(rng, 3, 3, 1);
  Dataset fixture;
  fixture.feature_dim = 3;
  fixture.class_count = 3;
  for (int i = 0; i < 60; ++i) {
    fixture.features.push_back(random_input(rng, 3));
    fixture.labels.push_back(rng.uniform_int(0, 2));
    fixture.splits.push_back(Split::Test);
  }
  const int bins = 15;
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<int> count(bins, 0), hit(bins, 0);
  for (int i = 0; i < 60; ++i) {
    const Eigen::VectorXd probs = model.probabilities(fixture.features[i]);
    int pred = 0;
    for (int k = 1; k < 3; ++k)
      if (probs[k] > probs[pred]) pred = k;
    int b = std::min(bins - 1, static_cast<int>(probs[pred] * bins));
    conf_sum[b] += probs[pred];
    count[b] += 1;
    hit[b] += pred == fixture.labels[i] ? 1 : 0;
  }
  double expected = 0.0;
  for (int b = 0; b < bins; ++b)
    if (count[b] > 0)
      expected += (count[b] / 60.0) * std::abs(hit[b] / double(count[b]) - conf_sum[b] / count[b]);
  CHECK(expected_calibration_error(model, fixture, Split::Test, bins) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("temperature calibration") {
  const Dataset data = make_blobs_dataset([] {
    BlobsConfig config = separable_blobs();
    config.noise = 0.12;
    config.ring_fraction = 0.17;
    config.jitter = 0.9;
    config.per_class = 400;
    return config;
  }());
  TrainConfig train;
  train.hidden = {24};
  train.epochs = 10;
  train.seed = 2;
  MlpClassifier model = train_mlp(train, data);

  const double ece_before = expected_calibration_error(model, data, Split::Calibration);
  const double t_star = calibrate_temperature(model, data);
  MlpClassifier calibrated = model;
  calibrated.temperature = t_star;
  const double ece_after = expected_calibration_error(calibrated, data, Split::Calibration);
  CHECK(ece_after <= ece_before);

  // Re-running from the optimum comes back to (nearly) the same temperature.
  const double t_again = calibrate_temperature(calibrated, data);
  CHECK(std::abs(t_again - t_star) / t_star <= 0.05);

  // Overconfident variant: logits scaled by 10 need T > 1 to cool down.
  MlpClassifier overconfident = calibrated;
  overconfident.weights.back() *= 10.0;
  overconfident.biases.back() *= 10.0;
  overconfident.temperature = 1.0;
  const double t_hot = calibrate_temperature(overconfident, data);
  CHECK(t_hot > 1.0);

  // Predictions are unchanged on every calibration point.
  MlpClassifier cooled = overconfident;
  cooled.temperature = t_hot;
  for (int i : data.indices(Split::Calibration))
    REQUIRE(cooled.predict(data.features[i]) == overconfident.predict(data.features[i]));
}

TEST_CASE("pick_target_second") {
  const MlpClassifier model = linear_model(Eigen::MatrixXd::Zero(3, 2), vec({3.0, 2.0, 1.0}));
  CHECK(pick_target_second(model, vec({0.5, 0.5})) == 1);

  const MlpClassifier tie = linear_model(Eigen::MatrixXd::Zero(3, 2), vec({2.0, 5.0, 2.0}));
  CHECK(pick_target_second(tie, vec({0.5, 0.5})) == 0);  // tie for second -> lowest index

  const MlpClassifier one = linear_model(Eigen::MatrixXd::Zero(1, 2), vec({1.0}));
  CHECK_THROWS_AS(pick_target_second(one, vec({0.5, 0.5})), std::invalid_argument);

  Rng rng(31);
  const MlpClassifier random = random_model(rng, 4, 5, 1);
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd x = random_input(rng, 4);
    REQUIRE(pick_target_second(random, x) != random.predict(x));
  }
}

TEST_CASE("model save/load round-trip") {
  Rng rng(77);
  MlpClassifier model = random_model(rng, 6, 3, 2);
  model.temperature = 0.73;
  model.image_height = 2;
  model.image_width = 3;
  model.image_channels = 1;

  const std::string path =
      (std::filesystem::temp_directory_path() / "lpvce_model_roundtrip.bin").string();
  save_model(model, path);
  const MlpClassifier loaded = load_model(path);

  REQUIRE(loaded.weights.size() == model.weights.size());
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    CHECK(loaded.weights[l] == model.weights[l]);
    CHECK(loaded.biases[l] == model.biases[l]);
  }
  CHECK(loaded.temperature == model.temperature);
  CHECK(loaded.image_height == 2);
  CHECK(loaded.image_width == 3);
  CHECK(loaded.image_channels == 1);
  std::filesystem::remove(path);
}

TEST_CASE("idx ingestion") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "lpvce_idx";
  fs::create_directories(dir);
  const std::string images = (dir / "images.idx").string();
  const std::string labels = (dir / "labels.idx").string();

  {
    std::ofstream out(images, std::ios::binary);
    const unsigned char header[] = {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 3};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (int v = 0; v < 12; ++v) {
      const unsigned char byte = static_cast<unsigned char>(v * 20);
      out.write(reinterpret_cast<const char*>(&byte), 1);
    }
  }
  {
    std::ofstream out(labels, std::ios::binary);
    const unsigned char header[] = {0, 0, 8, 1, 0, 0, 0, 2};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    const unsigned char payload[] = {1, 0};
    out.write(reinterpret_cast<const char*>(payload), 2);
  }

  const Dataset data = load_idx_dataset(images, labels);
  CHECK(data.size() == 2);
  CHECK(data.feature_dim == 6);
  CHECK(data.image_height == 2);
  CHECK(data.image_width == 3);
  CHECK(data.labels == std::vector<int>{1, 0});
  CHECK(data.features[0][0] == 0.0);
  CHECK(data.features[0][1] == doctest::Approx(20.0 / 255.0));
  CHECK(data.features[1][5] == doctest::Approx(220.0 / 255.0));

  {
    std::ofstream out(images, std::ios::binary);
    out << "not an idx file";
  }
  CHECK_THROWS(load_idx_dataset(images, labels));
  fs::remove_all(dir);
}
