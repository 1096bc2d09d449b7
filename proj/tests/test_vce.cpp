#include <doctest.h>

#include <cmath>

#include "lpvce/rng.hpp"
#include "lpvce/vce.hpp"

using namespace lpvce;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

MlpClassifier tiny_trained_model(Dataset* out_data = nullptr) {
  BlobsConfig blobs;
  blobs.classes = 3;
  blobs.image_size = 8;
  blobs.per_class = 250;
  blobs.seed = 11;
  const Dataset data = make_blobs_dataset(blobs);
  TrainConfig train;
  train.hidden = {16};
  train.epochs = 8;
  train.seed = 4;
  MlpClassifier model = train_mlp(train, data);
  if (out_data) *out_data = data;
  return model;
}

}  // namespace

TEST_CASE("documented defaults match the generation protocol") {
  CHECK(presets::kDefaultExponent == 1.5);
  CHECK(presets::kDefaultIterations == 75);
  CHECK(presets::kDefaultRestarts == 5);
  CHECK(presets::kImageNetRadiusL1 == 400.0);
  CHECK(presets::kImageNetRadiusL15 == 50.0);
  CHECK(presets::kImageNetRadiusL2 == 12.0);
  CHECK(presets::kCifarRadiusL15 == 6.0);
  CHECK(presets::kPanelRadiiL15[0] == 50.0);
  CHECK(presets::kPanelRadiiL15[1] == 75.0);
  CHECK(presets::kPanelRadiiL15[2] == 100.0);

  const VceRequest defaults;
  CHECK(defaults.exponent == 1.5);
  CHECK(defaults.iterations == 75);
  CHECK(defaults.restarts == 5);
  CHECK(defaults.method.kind == MethodKind::Afw);
}

TEST_CASE("degenerate budget leaves the image unchanged") {
  Dataset data;
  const MlpClassifier model = tiny_trained_model(&data);
  VceRequest request;
  request.image = data.features[0];
  request.target = pick_target_second(model, request.image);
  request.radius = 1e-9;
  request.iterations = 20;
  request.restarts = 2;
  const VceResult result = generate_vce(model, request);
  CHECK(std::abs(result.p_end - result.p_initial) <= 1e-6);
  CHECK((result.counterfactual - request.image).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("two-pixel linear model: optimizer finds the closed-form optimum") {
  // Linear two-class model; log p(k|x) is monotone in <w_k - w_other, x>, so
  // the exact optimum is the LMO vertex for that direction.
  MlpClassifier model;
  Eigen::MatrixXd w(2, 2);
  w << 4.0, -1.0, -4.0, 1.0;
  model.weights.push_back(w);
  model.biases.push_back(vec({0.0, 0.5}));
  model.temperature = 0.8;

  const Eigen::VectorXd x0 = vec({0.25, 0.75});
  const int k = 1;
  const FeasibleRegion region(x0, 0.6, 1.5);
  const Eigen::VectorXd direction = (w.row(k) - w.row(0)).transpose();
  const Eigen::VectorXd x_star = region.center + lmo_box_ball(direction, region).delta;
  const double expected = log_prob(model, k, x_star);

  VceRequest request;
  request.image = x0;
  request.target = k;
  request.radius = 0.6;
  request.iterations = 300;
  request.restarts = 3;
  const VceResult result = generate_vce(model, request);

  CHECK(std::abs(result.best_objective - expected) <= 1e-5);
  CHECK(result.p_end > 0.5);
  CHECK(result.valid);
  CHECK(result.p_end == doctest::Approx(std::exp(result.best_objective)));
}

TEST_CASE("pipeline invariants on a small batch") {
  Dataset data;
  const MlpClassifier model = tiny_trained_model(&data);
  const std::vector<int> test_idx = data.indices(Split::Test);
  for (int t = 0; t < 10; ++t) {
    VceRequest request;
    request.image = data.features[test_idx[t]];
    request.target = pick_target_second(model, request.image);
    request.radius = 1.2;
    request.iterations = 40;
    request.restarts = 3;
    request.seed = 100 + t;
    const VceResult result = generate_vce(model, request);

    const FeasibleRegion region(request.image, request.radius, request.exponent);
    REQUIRE(region.contains(result.counterfactual));
    REQUIRE(result.p_end >= result.p_initial - 1e-9);
    REQUIRE(result.valid == (model.predict(result.counterfactual) == request.target));
    REQUIRE(result.restart_objectives.size() == 3);

    const VceResult again = generate_vce(model, request);
    REQUIRE(again.counterfactual == result.counterfactual);
    REQUIRE(again.best_objective == result.best_objective);
  }
}

TEST_CASE("apgd method requires a projectable exponent") {
  Dataset data;
  const MlpClassifier model = tiny_trained_model(&data);
  VceRequest request;
  request.image = data.features[0];
  request.target = 0;
  request.radius = 1.0;
  request.method = Method::apgd();
  request.exponent = 1.5;
  CHECK_THROWS_AS(generate_vce(model, request), UnsupportedExponentError);
  request.exponent = 2.0;
  request.iterations = 10;
  request.restarts = 1;
  CHECK_NOTHROW(generate_vce(model, request));
}

TEST_CASE("radius sweep: singleton equals generate_vce, objectives non-decreasing") {
  Dataset data;
  const MlpClassifier model = tiny_trained_model(&data);
  VceRequest base;
  base.image = data.features[data.indices(Split::Test)[0]];
  base.target = pick_target_second(model, base.image);
  base.radius = 0.7;
  base.iterations = 40;
  base.restarts = 3;
  base.seed = 5;

  const std::vector<VceResult> single = radius_sweep(model, base, {0.7});
  const VceResult direct = generate_vce(model, base);
  REQUIRE(single.size() == 1);
  CHECK(single[0].counterfactual == direct.counterfactual);
  CHECK(single[0].best_objective == direct.best_objective);

  const std::vector<VceResult> swept = radius_sweep(model, base, {0.4, 0.8, 1.6, 3.2});
  for (std::size_t i = 1; i < swept.size(); ++i)
    CHECK(swept[i].best_objective >= swept[i - 1].best_objective - 1e-3);

  CHECK_THROWS_AS(radius_sweep(model, base, {0.8, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(radius_sweep(model, base, {}), std::invalid_argument);
}

TEST_CASE("difference map") {
  Image a;
  a.height = 2;
  a.width = 2;
  a.channels = 3;
  a.data = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 0.0, 0.5};
  const Image zero = difference_map(a, a);
  for (double v : zero.data) CHECK(v == 0.0);

  Image b = a;
  b.data[3] += 0.2;  // one channel of pixel (0,1)
  const Image map = difference_map(a, b);
  CHECK(map.at(0, 1) == doctest::Approx(1.0));
  CHECK(map.at(0, 0) == 0.0);
  CHECK(map.at(1, 0) == 0.0);
  CHECK(map.at(1, 1) == 0.0);

  Rng rng(17);
  Image c = a, d = a;
  for (auto& v : d.data) v = rng.uniform();
  const Image random_map = difference_map(c, d);
  double max_acc = 0.0;
  std::vector<double> expected(4, 0.0);
  for (int px = 0; px < 4; ++px) {
    for (int ch = 0; ch < 3; ++ch)
      expected[px] += std::abs(c.data[px * 3 + ch] - d.data[px * 3 + ch]);
    max_acc = std::max(max_acc, expected[px]);
  }
  for (int px = 0; px < 4; ++px)
    CHECK(random_map.data[px] == doctest::Approx(expected[px] / max_acc).epsilon(1e-12));

  Image wrong;
  wrong.height = 1;
  wrong.width = 2;
  wrong.channels = 3;
  wrong.data.assign(6, 0.0);
  CHECK_THROWS_AS(difference_map(a, wrong), std::invalid_argument);
  CHECK_THROWS_AS(hconcat({a, wrong}), std::invalid_argument);
}

TEST_CASE("penalized objective and gradient") {
  Dataset data;
  const MlpClassifier model = tiny_trained_model(&data);
  const Eigen::VectorXd x0 = data.features[0];
  const int k = pick_target_second(model, x0);

  const auto [value_l0, grad_l0] = penalized_objective(model, k, x0, x0, 0.0, 1.5);
  CHECK(value_l0 == doctest::Approx(-log_prob(model, k, x0)).epsilon(1e-12));

  const auto [value_at_x0, grad_at_x0] = penalized_objective(model, k, x0, x0, 2.5, 1.5);
  CHECK(value_at_x0 == doctest::Approx(-log_prob(model, k, x0)).epsilon(1e-12));
  CHECK(grad_at_x0.allFinite());

  CHECK_THROWS_AS(penalized_objective(model, k, x0, x0, 1.0, 1.0), UnsupportedExponentError);

  // Finite-difference check away from x0.
  Rng rng(29);
  const double h = 1e-6;
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd x = x0;
    for (int i = 0; i < x.size(); ++i)
      x[i] = std::min(1.0 - h, std::max(h, x[i] + 0.2 * rng.normal()));
    const double lambda = rng.uniform(0.1, 3.0);
    const auto [value, grad] = penalized_objective(model, k, x0, x, lambda, 1.5);
    Eigen::VectorXd fd(x.size());
    for (int i = 0; i < x.size(); ++i) {
      Eigen::VectorXd hi = x, lo = x;
      hi[i] += h;
      lo[i] -= h;
      fd[i] = (penalized_objective(model, k, x0, hi, lambda, 1.5).first -
               penalized_objective(model, k, x0, lo, lambda, 1.5).first) /
              (2.0 * h);
    }
    REQUIRE((grad - fd).norm() <= 1e-4 * std::max(1.0, grad.norm()));
  }
}
