#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "bevlift/error.hpp"
#include "bevlift/rng.hpp"

namespace bevlift {

enum class MapRole { Context, Fused, Bev };

// Dense C x H x W grid of 32-bit scalars, channel-major row-major.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  MapRole role = MapRole::Context;
  std::vector<float> data;

  static FeatureMap zeros(int channels, int height, int width,
                          MapRole role = MapRole::Context) {
    if (channels <= 0 || height <= 0 || width <= 0)
      throw InvalidSpec("feature map dims must be positive");
    FeatureMap m;
    m.channels = channels;
    m.height = height;
    m.width = width;
    m.role = role;
    m.data.assign(static_cast<std::size_t>(channels) * height * width, 0.0f);
    return m;
  }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height + y) * width + x;
  }
  float& at(int c, int y, int x) { return data[index(c, y, x)]; }
  const float& at(int c, int y, int x) const { return data[index(c, y, x)]; }
};

// Per-pixel distribution over B bins; rows are normalized to sum to 1.
struct DistributionMap {
  int bins = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  static DistributionMap uniform(int bins, int height, int width) {
    if (bins <= 0 || height <= 0 || width <= 0)
      throw InvalidSpec("distribution map dims must be positive");
    DistributionMap m;
    m.bins = bins;
    m.height = height;
    m.width = width;
    m.data.assign(static_cast<std::size_t>(bins) * height * width,
                  1.0f / static_cast<float>(bins));
    return m;
  }

  std::size_t index(int b, int y, int x) const {
    return (static_cast<std::size_t>(b) * height + y) * width + x;
  }
  float& at(int b, int y, int x) { return data[index(b, y, x)]; }
  const float& at(int b, int y, int x) const { return data[index(b, y, x)]; }
};

// Rank-4 tensor for the outer-product lift, C_f x B x H x W.
struct Tensor4 {
  int d0 = 0, d1 = 0, d2 = 0, d3 = 0;
  std::vector<float> data;

  std::size_t index(int a, int b, int c, int d) const {
    return ((static_cast<std::size_t>(a) * d1 + b) * d2 + c) * d3 + d;
  }
  float& at(int a, int b, int c, int d) { return data[index(a, b, c, d)]; }
  const float& at(int a, int b, int c, int d) const {
    return data[index(a, b, c, d)];
  }
};

// Seeded stand-in for backbone features.
inline FeatureMap random_feature_map(int channels, int height, int width,
                                     std::uint64_t seed) {
  FeatureMap m = FeatureMap::zeros(channels, height, width);
  SplitMix64 g(derive_seed(seed, "features"));
  for (auto& v : m.data) v = static_cast<float>(gaussian(g));
  return m;
}

struct NormalizeStats {
  int renormalized_pixels = 0;
  double max_abs_deviation = 0.0;  // max |row sum - 1| seen before fixing

  bool warn(double tol = 1e-4) const { return max_abs_deviation > tol; }
};

// Enforces the per-pixel sum-to-one invariant. Rows already within
// `renorm_tol` of 1 are left bit-identical; others are divided by their sum.
inline NormalizeStats normalize_distribution(DistributionMap& m,
                                             double renorm_tol = 1e-6) {
  NormalizeStats stats;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      double sum = 0.0;
      for (int b = 0; b < m.bins; ++b) {
        const float w = m.at(b, y, x);
        if (w < 0.0f || !std::isfinite(w))
          throw InvalidSpec("distribution weights must be finite and >= 0");
        sum += w;
      }
      const double dev = std::abs(sum - 1.0);
      stats.max_abs_deviation = std::max(stats.max_abs_deviation, dev);
      if (dev <= renorm_tol) continue;
      if (sum <= 0.0)
        throw InvalidSpec("distribution row sums to zero; cannot normalize");
      for (int b = 0; b < m.bins; ++b)
        m.at(b, y, x) = static_cast<float>(m.at(b, y, x) / sum);
      ++stats.renormalized_pixels;
    }
  }
  return stats;
}

}  // namespace bevlift
