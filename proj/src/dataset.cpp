#include "lpvce/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "lpvce/rng.hpp"

namespace lpvce {

std::vector<int> Dataset::indices(Split split) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] == split) out.push_back(static_cast<int>(i));
  return out;
}

void Dataset::validate() const {
  if (features.size() != labels.size() || features.size() != splits.size())
    throw std::invalid_argument("Dataset: ragged columns");
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (static_cast<int>(features[i].size()) != feature_dim)
      throw std::invalid_argument("Dataset: feature dim mismatch");
    if (labels[i] < 0 || labels[i] >= class_count)
      throw std::invalid_argument("Dataset: label out of range");
    for (int j = 0; j < features[i].size(); ++j)
      if (!(features[i][j] >= 0.0 && features[i][j] <= 1.0))
        throw std::invalid_argument("Dataset: feature outside [0, 1]");
  }
}

namespace {

// Deterministic striped assignment (period 20), balanced across classes as
// long as samples are appended in class blocks.
Split split_for(std::size_t index, double train_frac, double calib_frac) {
  const double u = static_cast<double>(index % 20) / 20.0;
  if (u < train_frac) return Split::Train;
  if (u < train_frac + calib_frac) return Split::Calibration;
  return Split::Test;
}

}  // namespace

Dataset make_blobs_dataset(const BlobsConfig& config) {
  if (config.classes < 2) throw std::invalid_argument("make_blobs_dataset: need >= 2 classes");
  if (config.image_size < 4) throw std::invalid_argument("make_blobs_dataset: image too small");

  const int n = config.image_size;
  Dataset data;
  data.feature_dim = n * n;
  data.class_count = config.classes;
  data.image_height = n;
  data.image_width = n;
  data.image_channels = 1;

  Rng rng(config.seed);
  const double ring = config.ring_fraction * n;
  for (int k = 0; k < config.classes; ++k) {
    const double angle = 2.0 * 3.14159265358979323846 * k / config.classes;
    const double cx0 = 0.5 * (n - 1) + ring * std::cos(angle);
    const double cy0 = 0.5 * (n - 1) + ring * std::sin(angle);
    const double sx = n * (0.13 + 0.03 * (k % 3));
    const double sy = n * (0.13 + 0.03 * ((k + 1) % 3));
    for (int s = 0; s < config.per_class; ++s) {
      const double cx = cx0 + rng.normal() * config.jitter;
      const double cy = cy0 + rng.normal() * config.jitter;
      const double amp = rng.uniform(0.55, 1.0);
      Eigen::VectorXd img(n * n);
      for (int row = 0; row < n; ++row) {
        for (int col = 0; col < n; ++col) {
          const double dx = (col - cx) / sx;
          const double dy = (row - cy) / sy;
          double value = amp * std::exp(-0.5 * (dx * dx + dy * dy));
          value += config.noise * rng.normal();
          img[row * n + col] = std::min(1.0, std::max(0.0, value));
        }
      }
      data.features.push_back(std::move(img));
      data.labels.push_back(k);
      data.splits.push_back(split_for(data.features.size() - 1, config.train_fraction,
                                      config.calibration_fraction));
    }
  }
  return data;
}

namespace {

std::uint32_t read_u32_be(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error("IDX: truncated header in " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path,
                         double train_fraction, double calibration_fraction) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw std::runtime_error("IDX: cannot open " + images_path);
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw std::runtime_error("IDX: cannot open " + labels_path);

  const std::uint32_t img_magic = read_u32_be(images, images_path);
  if ((img_magic & 0xffffff00u) != 0x00000800u)
    throw std::runtime_error("IDX: bad image magic (expect ubyte data)");
  const int img_dims = static_cast<int>(img_magic & 0xffu);
  if (img_dims < 2 || img_dims > 4) throw std::runtime_error("IDX: unsupported image rank");
  std::vector<std::uint32_t> shape(img_dims);
  for (int i = 0; i < img_dims; ++i) shape[i] = read_u32_be(images, images_path);

  const std::uint32_t lbl_magic = read_u32_be(labels, labels_path);
  if (lbl_magic != 0x00000801u) throw std::runtime_error("IDX: bad label magic");
  const std::uint32_t lbl_count = read_u32_be(labels, labels_path);
  if (lbl_count != shape[0]) throw std::runtime_error("IDX: image/label count mismatch");

  Dataset data;
  const std::uint32_t count = shape[0];
  std::size_t item = 1;
  for (int i = 1; i < img_dims; ++i) item *= shape[i];
  data.feature_dim = static_cast<int>(item);
  if (img_dims >= 3) {
    data.image_height = static_cast<int>(shape[1]);
    data.image_width = static_cast<int>(shape[2]);
    data.image_channels = img_dims == 4 ? static_cast<int>(shape[3]) : 1;
  }

  std::vector<unsigned char> buffer(item);
  int max_label = 0;
  for (std::uint32_t s = 0; s < count; ++s) {
    if (!images.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(item)))
      throw std::runtime_error("IDX: truncated image payload");
    Eigen::VectorXd x(item);
    for (std::size_t j = 0; j < item; ++j) x[static_cast<int>(j)] = buffer[j] / 255.0;
    unsigned char lbl = 0;
    if (!labels.read(reinterpret_cast<char*>(&lbl), 1))
      throw std::runtime_error("IDX: truncated label payload");
    data.features.push_back(std::move(x));
    data.labels.push_back(lbl);
    data.splits.push_back(split_for(s, train_fraction, calibration_fraction));
    max_label = std::max(max_label, static_cast<int>(lbl));
  }
  data.class_count = max_label + 1;
  return data;
}

}  // namespace lpvce
