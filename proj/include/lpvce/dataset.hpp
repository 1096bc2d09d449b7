#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace lpvce {

enum class Split { Train, Calibration, Test };

struct Dataset {
  int feature_dim = 0;
  int class_count = 0;
  int image_height = 0;  // 0 when features are not images
  int image_width = 0;
  int image_channels = 0;

  std::vector<Eigen::VectorXd> features;  // values in [0, 1]
  std::vector<int> labels;
  std::vector<Split> splits;

  std::size_t size() const { return features.size(); }
  std::vector<int> indices(Split split) const;
  void validate() const;
};

// Procedural K-class dataset of small grayscale images: each class renders a
// Gaussian blob at a class-specific position/shape, plus pixel noise. Needs
// no downloads and trains to high accuracy with a small MLP.
struct BlobsConfig {
  int classes = 4;
  int image_size = 12;
  int per_class = 600;
  double noise = 0.12;
  double ring_fraction = 0.17;  // blob-center ring radius as a fraction of the side
  double jitter = 0.9;          // per-sample blob position jitter (pixels)
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  double calibration_fraction = 0.15;
};

Dataset make_blobs_dataset(const BlobsConfig& config);

// IDX ingestion (magic number, big-endian dims, row-major ubyte payload).
// Features are scaled to [0, 1] by /255. Splits are assigned deterministically
// from the fractions in index order.
Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path,
                         double train_fraction = 0.7, double calibration_fraction = 0.15);

}  // namespace lpvce
