#include "lpvce/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "lpvce/rng.hpp"

namespace lpvce {

namespace {

double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }
double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

// Forward pass keeping pre-activations for backprop.
struct ForwardState {
  std::vector<Eigen::VectorXd> pre;   // per layer: W z + b
  std::vector<Eigen::VectorXd> post;  // post[0] = x, post[l+1] = activation(pre[l])
};

ForwardState forward(const MlpClassifier& model, const Eigen::VectorXd& x) {
  ForwardState state;
  state.post.push_back(x);
  const std::size_t layers = model.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::VectorXd a = model.weights[l] * state.post.back() + model.biases[l];
    state.pre.push_back(a);
    if (l + 1 < layers) {
      for (int i = 0; i < a.size(); ++i) a[i] = softplus(a[i]);
      state.post.push_back(std::move(a));
    }
  }
  return state;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& u) {
  const double m = u.maxCoeff();
  Eigen::VectorXd e = (u.array() - m).exp();
  return e / e.sum();
}

double log_sum_exp(const Eigen::VectorXd& u) {
  const double m = u.maxCoeff();
  return m + std::log((u.array() - m).exp().sum());
}

void check_input(const MlpClassifier& model, const Eigen::VectorXd& x) {
  if (model.weights.empty()) throw std::invalid_argument("MlpClassifier: empty model");
  if (static_cast<int>(x.size()) != model.input_dim())
    throw std::invalid_argument("MlpClassifier: input dim mismatch");
}

}  // namespace

Eigen::VectorXd MlpClassifier::logits(const Eigen::VectorXd& x) const {
  check_input(*this, x);
  return forward(*this, x).pre.back();
}

Eigen::VectorXd MlpClassifier::probabilities(const Eigen::VectorXd& x) const {
  return softmax(logits(x) / temperature);
}

int MlpClassifier::predict(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = logits(x);
  int best = 0;
  for (int k = 1; k < z.size(); ++k)
    if (z[k] > z[best]) best = k;
  return best;
}

double log_prob(const MlpClassifier& model, int k, const Eigen::VectorXd& x) {
  check_input(model, x);
  if (k < 0 || k >= model.class_count())
    throw std::invalid_argument("log_prob: class index out of range");
  const Eigen::VectorXd u = model.logits(x) / model.temperature;
  return u[k] - log_sum_exp(u);
}

Eigen::VectorXd grad_log_prob(const MlpClassifier& model, int k, const Eigen::VectorXd& x) {
  check_input(model, x);
  if (k < 0 || k >= model.class_count())
    throw std::invalid_argument("grad_log_prob: class index out of range");

  const ForwardState state = forward(model, x);
  const Eigen::VectorXd u = state.pre.back() / model.temperature;
  Eigen::VectorXd delta = -softmax(u);
  delta[k] += 1.0;
  delta /= model.temperature;  // d log p_k / d logits

  const int layers = static_cast<int>(model.weights.size());
  for (int l = layers - 1; l >= 0; --l) {
    Eigen::VectorXd back = model.weights[l].transpose() * delta;
    if (l > 0) {
      const Eigen::VectorXd& a = state.pre[l - 1];
      for (int i = 0; i < back.size(); ++i) back[i] *= sigmoid(a[i]);
    }
    delta = std::move(back);
  }
  return delta;
}

int pick_target_second(const MlpClassifier& model, const Eigen::VectorXd& x) {
  if (model.class_count() < 2)
    throw std::invalid_argument("pick_target_second: need at least two classes");
  const Eigen::VectorXd z = model.logits(x);
  int first = 0;
  for (int k = 1; k < z.size(); ++k)
    if (z[k] > z[first]) first = k;
  int second = -1;
  for (int k = 0; k < z.size(); ++k) {
    if (k == first) continue;
    if (second < 0 || z[k] > z[second]) second = k;
  }
  return second;
}

namespace {

struct BatchGradients {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
};

// Cross-entropy loss and parameter gradients for one example (T = 1).
double backprop_example(const MlpClassifier& model, const Eigen::VectorXd& x, int label,
                        BatchGradients& grads) {
  const ForwardState state = forward(model, x);
  const Eigen::VectorXd& z = state.pre.back();
  const double loss = log_sum_exp(z) - z[label];

  Eigen::VectorXd delta = softmax(z);
  delta[label] -= 1.0;  // d loss / d logits

  const int layers = static_cast<int>(model.weights.size());
  for (int l = layers - 1; l >= 0; --l) {
    grads.dw[l].noalias() += delta * state.post[l].transpose();
    grads.db[l] += delta;
    if (l > 0) {
      Eigen::VectorXd back = model.weights[l].transpose() * delta;
      const Eigen::VectorXd& a = state.pre[l - 1];
      for (int i = 0; i < back.size(); ++i) back[i] *= sigmoid(a[i]);
      delta = std::move(back);
    }
  }
  return loss;
}

}  // namespace

MlpClassifier train_mlp(const TrainConfig& config, const Dataset& data, TrainReport* report) {
  const std::vector<int> train_idx = data.indices(Split::Train);
  if (train_idx.empty()) throw std::invalid_argument("train_mlp: empty train split");
  if (config.epochs < 1 || config.batch_size < 1)
    throw std::invalid_argument("train_mlp: bad epochs/batch size");

  Rng rng(config.seed);
  MlpClassifier model;
  model.image_height = data.image_height;
  model.image_width = data.image_width;
  model.image_channels = data.image_channels;

  std::vector<int> dims;
  dims.push_back(data.feature_dim);
  for (int h : config.hidden) dims.push_back(h);
  dims.push_back(data.class_count);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    Eigen::MatrixXd w(out, in);
    const double scale = std::sqrt(2.0 / in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) w(r, c) = scale * rng.normal();
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(out));
  }

  std::vector<int> order = train_idx;
  BatchGradients grads;
  for (const auto& w : model.weights) {
    grads.dw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    grads.db.push_back(Eigen::VectorXd::Zero(w.rows()));
  }

  if (report) report->epoch_mean_loss.clear();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with the run RNG keeps training deterministic in the seed.
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(0, static_cast<int>(i) - 1)]);

    double epoch_loss = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t end = std::min(order.size(), cursor + config.batch_size);
      for (auto& g : grads.dw) g.setZero();
      for (auto& g : grads.db) g.setZero();
      for (std::size_t i = cursor; i < end; ++i)
        epoch_loss += backprop_example(model, data.features[order[i]], data.labels[order[i]], grads);
      const double scale = config.learning_rate / static_cast<double>(end - cursor);
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        model.weights[l] -= scale * grads.dw[l];
        model.biases[l] -= scale * grads.db[l];
      }
      cursor = end;
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss))
      throw DivergenceError("train_mlp: non-finite loss at epoch " + std::to_string(epoch), epoch);
    if (report) report->epoch_mean_loss.push_back(epoch_loss);
  }

  if (report) {
    const auto accuracy = [&](Split split) {
      const auto idx = data.indices(split);
      if (idx.empty()) return 0.0;
      int hits = 0;
      for (int i : idx) hits += model.predict(data.features[i]) == data.labels[i] ? 1 : 0;
      return static_cast<double>(hits) / static_cast<double>(idx.size());
    };
    report->train_accuracy = accuracy(Split::Train);
    report->test_accuracy = accuracy(Split::Test);
  }
  return model;
}

namespace {

constexpr char kModelMagic[8] = {'L', 'P', 'V', 'C', 'E', 'M', 'D', 'L'};
constexpr std::uint32_t kModelVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("model file: truncated");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

void write_f64(std::ofstream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::ifstream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("model file: truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_model(const MlpClassifier& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out.write(kModelMagic, 8);
  write_u32(out, kModelVersion);
  write_u32(out, static_cast<std::uint32_t>(model.input_dim()));
  write_u32(out, static_cast<std::uint32_t>(model.class_count()));
  write_u32(out, static_cast<std::uint32_t>(model.weights.size()));
  write_u32(out, static_cast<std::uint32_t>(model.image_height));
  write_u32(out, static_cast<std::uint32_t>(model.image_width));
  write_u32(out, static_cast<std::uint32_t>(model.image_channels));
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const Eigen::MatrixXd& w = model.weights[l];
    write_u32(out, static_cast<std::uint32_t>(w.rows()));
    write_u32(out, static_cast<std::uint32_t>(w.cols()));
    for (int r = 0; r < w.rows(); ++r)
      for (int c = 0; c < w.cols(); ++c) write_f64(out, w(r, c));
    for (int r = 0; r < w.rows(); ++r) write_f64(out, model.biases[l][r]);
  }
  write_f64(out, model.temperature);
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

MlpClassifier load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kModelMagic, 8) != 0)
    throw std::runtime_error("load_model: bad magic in " + path);
  if (read_u32(in) != kModelVersion) throw std::runtime_error("load_model: unsupported version");
  read_u32(in);  // input dim, re-derived from the first layer
  read_u32(in);  // class count, re-derived from the last layer
  const std::uint32_t layers = read_u32(in);
  MlpClassifier model;
  model.image_height = static_cast<int>(read_u32(in));
  model.image_width = static_cast<int>(read_u32(in));
  model.image_channels = static_cast<int>(read_u32(in));
  for (std::uint32_t l = 0; l < layers; ++l) {
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    Eigen::MatrixXd w(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) w(r, c) = read_f64(in);
    Eigen::VectorXd b(rows);
    for (std::uint32_t r = 0; r < rows; ++r) b[r] = read_f64(in);
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  model.temperature = read_f64(in);
  if (!(model.temperature > 0.0)) throw std::runtime_error("load_model: bad temperature");
  return model;
}

}  // namespace lpvce
