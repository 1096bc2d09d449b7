#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace lpvce {

// Row-major H x W x C image with values in [0, 1]; 1 or 3 channels.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  int pixel_count() const { return height * width; }
  int value_count() const { return height * width * channels; }
  double& at(int row, int col, int channel = 0) {
    return data[(row * width + col) * channels + channel];
  }
  double at(int row, int col, int channel = 0) const {
    return data[(row * width + col) * channels + channel];
  }

  Eigen::VectorXd to_vector() const;
  static Image from_vector(const Eigen::VectorXd& v, int height, int width, int channels);
};

// 8-bit PNG I/O. Reading expands palettes, strips alpha, and scales to [0, 1];
// writing quantizes as round(255 * clamp(x)).
Image read_png(const std::string& path);
void write_png(const Image& image, const std::string& path);

// Horizontal concatenation; all parts must share height and channels.
Image hconcat(const std::vector<Image>& parts);

}  // namespace lpvce
