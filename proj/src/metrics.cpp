#include "lpvce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lpvce {

ChangeDistribution change_distribution(const Image& original, const Image& counterfactual) {
  if (original.height != counterfactual.height || original.width != counterfactual.width ||
      original.channels != counterfactual.channels)
    throw std::invalid_argument("change_distribution: shape mismatch");

  ChangeDistribution dist;
  dist.height = original.height;
  dist.width = original.width;
  dist.weights.assign(static_cast<std::size_t>(original.pixel_count()), 0.0);

  double total = 0.0;
  for (int y = 0; y < original.height; ++y) {
    for (int x = 0; x < original.width; ++x) {
      double acc = 0.0;
      for (int c = 0; c < original.channels; ++c)
        acc += std::abs(original.at(y, x, c) - counterfactual.at(y, x, c));
      dist.weights[static_cast<std::size_t>(y) * original.width + x] = acc;
      total += acc;
    }
  }
  if (total <= 0.0)
    throw DegenerateDistributionError("change_distribution: images are identical");
  for (double& w : dist.weights) w /= total;
  return dist;
}

Mask Mask::from_image(const Image& image) {
  Mask mask;
  mask.height = image.height;
  mask.width = image.width;
  mask.inside.assign(static_cast<std::size_t>(image.pixel_count()), 0);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < image.channels; ++c)
        if (image.at(y, x, c) > 0.0) {
          mask.inside[static_cast<std::size_t>(y) * image.width + x] = 1;
          break;
        }
  return mask;
}

int Mask::count() const {
  int n = 0;
  for (unsigned char v : inside) n += v ? 1 : 0;
  return n;
}

LocalizationReport localization_metrics(const ChangeDistribution& dist, const Mask& mask) {
  if (dist.height != mask.height || dist.width != mask.width)
    throw std::invalid_argument("localization_metrics: shape mismatch");
  const int pixels = dist.height * dist.width;
  if (static_cast<int>(dist.weights.size()) != pixels ||
      static_cast<int>(mask.inside.size()) != pixels)
    throw std::invalid_argument("localization_metrics: ragged inputs");
  if (mask.count() == 0) throw std::invalid_argument("localization_metrics: empty mask");

  std::vector<std::pair<int, int>> mask_pixels;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.inside[static_cast<std::size_t>(y) * mask.width + x])
        mask_pixels.emplace_back(y, x);

  LocalizationReport report;

  // Exact brute-force distance transform; desk-scale images are small.
  for (int y = 0; y < dist.height; ++y) {
    for (int x = 0; x < dist.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * dist.width + x;
      const double w = dist.weights[idx];
      if (mask.inside[idx]) {
        report.mass_in_mask += w;
        continue;
      }
      if (w == 0.0) continue;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [my, mx] : mask_pixels) {
        const double dy = y - my, dx = x - mx;
        best = std::min(best, dy * dy + dx * dx);
      }
      report.expected_distance += w * std::sqrt(best);
    }
  }

  // Discretize the distribution: activate pixels in descending weight order
  // (stable by row-major index) until cumulative mass reaches 0.95.
  std::vector<int> order(pixels);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dist.weights[a] > dist.weights[b]; });
  double cumulative = 0.0;
  int inter = 0, prefix_size = 0;
  for (int idx : order) {
    cumulative += dist.weights[idx];
    ++prefix_size;
    inter += mask.inside[idx] ? 1 : 0;
    if (cumulative >= 0.95) break;
  }
  const int uni = prefix_size + mask.count() - inter;
  report.iou_at_095 = uni > 0 ? static_cast<double>(inter) / uni : 0.0;
  // Normalized weights can overshoot 1 by rounding when summed.
  report.mass_in_mask = std::min(1.0, report.mass_in_mask);
  return report;
}

}  // namespace lpvce
