#pragma once

#include <vector>

#include "lpvce/common.hpp"
#include "lpvce/image.hpp"

namespace lpvce {

// Distribution of pixel changes: channel-summed absolute differences
// normalized to sum 1 over the H x W grid.
struct ChangeDistribution {
  int height = 0;
  int width = 0;
  std::vector<double> weights;  // row-major, nonnegative, sums to 1
};

// Throws DegenerateDistributionError when the images are identical.
ChangeDistribution change_distribution(const Image& original, const Image& counterfactual);

struct Mask {
  int height = 0;
  int width = 0;
  std::vector<unsigned char> inside;  // row-major, nonzero = mask

  static Mask from_image(const Image& image);  // nonzero in any channel
  int count() const;
};

struct LocalizationReport {
  double expected_distance = 0.0;  // pixels, Euclidean, 0 inside the mask
  double mass_in_mask = 0.0;       // in [0, 1]
  double iou_at_095 = 0.0;         // in [0, 1]
};

// expected_distance: weighted average of the distance to the nearest mask
// pixel. mass_in_mask: change mass inside the mask. iou_at_095: IOU between
// the mask and the smallest descending-sorted pixel prefix whose cumulative
// mass reaches 0.95 (ties at the cut admitted in stable row-major order).
LocalizationReport localization_metrics(const ChangeDistribution& dist, const Mask& mask);

}  // namespace lpvce
