#pragma once

// Independent oracles shared by the unit and acceptance suites. These stay
// deliberately naive and never call into the implementation paths they check.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "bevlift/bev_grid.hpp"
#include "bevlift/lifting.hpp"
#include "bevlift/rng.hpp"

namespace testutil {

inline bevlift::WedgeVolume make_volume(std::size_t n_points, int feature_dim,
                                        std::uint64_t seed, double span = 10.0) {
  bevlift::WedgeVolume v;
  v.feature_dim = feature_dim;
  bevlift::SplitMix64 g(seed);
  for (std::size_t i = 0; i < n_points; ++i) {
    v.positions.push_back({bevlift::uniform(g, -1.0, span),
                           bevlift::uniform(g, -1.0, span),
                           bevlift::uniform(g, -1.0, 1.0)});
    v.pixels.push_back({0.0, 0.0});
    v.bins.push_back(0);
    for (int c = 0; c < feature_dim; ++c)
      v.features.push_back(static_cast<float>(bevlift::gaussian(g)));
  }
  return v;
}

// Sequential double loop over points in input order.
inline bevlift::BevGrid brute_force_pool(const bevlift::WedgeVolume& v,
                                         const bevlift::GridSpec& spec) {
  using bevlift::BevGrid;
  using bevlift::Reduction;
  BevGrid g = BevGrid::zeros(spec, std::max(v.feature_dim, 1));
  std::vector<std::vector<std::size_t>> buckets(
      static_cast<std::size_t>(g.size_x) * g.size_y);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& p = v.positions[i];
    if (p[0] < spec.x_min || p[0] >= spec.x_max || p[1] < spec.y_min ||
        p[1] >= spec.y_max) {
      ++g.dropped_points;
      continue;
    }
    const int ix = std::min(static_cast<int>((p[0] - spec.x_min) / spec.resolution),
                            g.size_x - 1);
    const int iy = std::min(static_cast<int>((p[1] - spec.y_min) / spec.resolution),
                            g.size_y - 1);
    buckets[g.cell_index(ix, iy)].push_back(i);
  }
  for (std::size_t cell = 0; cell < buckets.size(); ++cell) {
    g.occupancy[cell] = static_cast<std::uint32_t>(buckets[cell].size());
    if (buckets[cell].empty()) continue;
    double* out = &g.data[cell * g.channels];
    for (int c = 0; c < g.channels; ++c) {
      switch (spec.reduction) {
        case Reduction::Sum:
        case Reduction::Mean: {
          double acc = 0.0;
          for (std::size_t i : buckets[cell]) acc += v.features[i * g.channels + c];
          if (spec.reduction == Reduction::Mean)
            acc /= static_cast<double>(buckets[cell].size());
          out[c] = acc;
          break;
        }
        case Reduction::Max: {
          double acc = v.features[buckets[cell].front() * g.channels + c];
          for (std::size_t i : buckets[cell])
            acc = std::max(acc, static_cast<double>(v.features[i * g.channels + c]));
          out[c] = acc;
          break;
        }
      }
    }
  }
  return g;
}

}  // namespace testutil
