#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bevlift/bev_grid.hpp"
#include "bevlift/error.hpp"
#include "bevlift/feature_map.hpp"
#include "bevlift/parallel.hpp"
#include "bevlift/rng.hpp"

namespace bevlift {

// Channel concatenation of context features and the height distribution;
// values pass through bitwise.
inline FeatureMap image_view_fuse(const FeatureMap& context,
                                  const DistributionMap& height_dist) {
  if (context.height != height_dist.height || context.width != height_dist.width)
    throw ShapeMismatch("image_view_fuse: spatial dims disagree");
  FeatureMap fused = FeatureMap::zeros(context.channels + height_dist.bins,
                                       context.height, context.width, MapRole::Fused);
  std::copy(context.data.begin(), context.data.end(), fused.data.begin());
  std::copy(height_dist.data.begin(), height_dist.data.end(),
            fused.data.begin() + context.data.size());
  return fused;
}

// out[c, b, y, x] = fused[c, y, x] * dist[b, y, x]
inline Tensor4 outer_product(const FeatureMap& fused,
                             const DistributionMap& dist) {
  if (fused.height != dist.height || fused.width != dist.width)
    throw ShapeMismatch("outer_product: spatial dims disagree");
  Tensor4 out;
  out.d0 = fused.channels;
  out.d1 = dist.bins;
  out.d2 = fused.height;
  out.d3 = fused.width;
  out.data.resize(static_cast<std::size_t>(out.d0) * out.d1 * out.d2 * out.d3);
  for (int c = 0; c < out.d0; ++c)
    for (int b = 0; b < out.d1; ++b)
      for (int y = 0; y < out.d2; ++y)
        for (int x = 0; x < out.d3; ++x)
          out.at(c, b, y, x) = fused.at(c, y, x) * dist.at(b, y, x);
  return out;
}

namespace detail {

struct BilinearTaps {
  int x0, x1, y0, y1;
  double w00, w01, w10, w11;  // (y, x) tap weights
};

// Integer coordinates sit at cell centers; out-of-grid locations clamp to
// the border.
inline BilinearTaps bilinear_taps(double x, double y, int width, int height) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double tx = x - fx;
  const double ty = y - fy;
  BilinearTaps t;
  t.x0 = std::clamp(static_cast<int>(fx), 0, width - 1);
  t.x1 = std::clamp(static_cast<int>(fx) + 1, 0, width - 1);
  t.y0 = std::clamp(static_cast<int>(fy), 0, height - 1);
  t.y1 = std::clamp(static_cast<int>(fy) + 1, 0, height - 1);
  t.w00 = (1.0 - ty) * (1.0 - tx);
  t.w01 = (1.0 - ty) * tx;
  t.w10 = ty * (1.0 - tx);
  t.w11 = ty * tx;
  return t;
}

}  // namespace detail

inline std::vector<float> bilinear_sample(const FeatureMap& grid, double x,
                                          double y) {
  const auto t = detail::bilinear_taps(x, y, grid.width, grid.height);
  std::vector<float> out(grid.channels);
  for (int c = 0; c < grid.channels; ++c) {
    const double v = t.w00 * grid.at(c, t.y0, t.x0) + t.w01 * grid.at(c, t.y0, t.x1) +
                     t.w10 * grid.at(c, t.y1, t.x0) + t.w11 * grid.at(c, t.y1, t.x1);
    out[c] = static_cast<float>(v);
  }
  return out;
}

inline std::vector<double> bilinear_sample(const BevGrid& grid, double x,
                                           double y) {
  const auto t = detail::bilinear_taps(x, y, grid.size_x, grid.size_y);
  std::vector<double> out(grid.channels);
  for (int c = 0; c < grid.channels; ++c)
    out[c] = t.w00 * grid.at(t.x0, t.y0, c) + t.w01 * grid.at(t.x1, t.y0, c) +
             t.w10 * grid.at(t.x0, t.y1, c) + t.w11 * grid.at(t.x1, t.y1, c);
  return out;
}

// Forward-only deformable-attention parameters. M heads, K sampled keys per
// head, channel width C divisible by M. value_proj maps a C value sample to
// C/M per head; output_proj maps it back; offset/weight nets are affine in
// the query.
struct DeformAttnWeights {
  int heads = 1;     // M
  int keys = 1;      // K
  int channels = 0;  // C
  std::vector<double> value_proj;     // M x (C/M) x C
  std::vector<double> output_proj;    // M x C x (C/M)
  std::vector<double> offset_net_w;   // (M*K*2) x C
  std::vector<double> offset_net_b;   // M*K*2
  std::vector<double> weight_net_w;   // (M*K) x C
  std::vector<double> weight_net_b;   // M*K
  std::vector<double> query_proj;     // C x 2C, used by bev_fuse queries

  int head_dim() const { return channels / heads; }

  void validate() const {
    if (heads < 1 || keys < 1 || channels < 1)
      throw InvalidSpec("deform_attn: M, K, C must be positive");
    if (channels % heads != 0)
      throw InvalidSpec("deform_attn: C must be divisible by M");
    const std::size_t m = heads, k = keys, c = channels, hd = head_dim();
    if (value_proj.size() != m * hd * c || output_proj.size() != m * c * hd ||
        offset_net_w.size() != m * k * 2 * c || offset_net_b.size() != m * k * 2 ||
        weight_net_w.size() != m * k * c || weight_net_b.size() != m * k ||
        query_proj.size() != c * 2 * c)
      throw ShapeMismatch("deform_attn: parameter tensor sizes disagree with (M, K, C)");
  }
};

inline DeformAttnWeights make_zero_weights(int channels, int heads, int keys) {
  DeformAttnWeights w;
  w.heads = heads;
  w.keys = keys;
  w.channels = channels;
  const std::size_t hd = static_cast<std::size_t>(channels) / heads;
  w.value_proj.assign(static_cast<std::size_t>(heads) * hd * channels, 0.0);
  w.output_proj.assign(static_cast<std::size_t>(heads) * channels * hd, 0.0);
  w.offset_net_w.assign(static_cast<std::size_t>(heads) * keys * 2 * channels, 0.0);
  w.offset_net_b.assign(static_cast<std::size_t>(heads) * keys * 2, 0.0);
  w.weight_net_w.assign(static_cast<std::size_t>(heads) * keys * channels, 0.0);
  w.weight_net_b.assign(static_cast<std::size_t>(heads) * keys, 0.0);
  w.query_proj.assign(static_cast<std::size_t>(channels) * 2 * channels, 0.0);
  w.validate();
  return w;
}

// Nondegenerate weights for property tests; offsets stay within ~1 cell.
inline DeformAttnWeights make_random_weights(int channels, int heads, int keys,
                                             std::uint64_t seed) {
  DeformAttnWeights w = make_zero_weights(channels, heads, keys);
  SplitMix64 g(derive_seed(seed, "deform-attn-weights"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(channels));
  for (auto& v : w.value_proj) v = gaussian(g) * scale;
  for (auto& v : w.output_proj) v = gaussian(g) * scale;
  for (auto& v : w.offset_net_w) v = gaussian(g) * 0.25 * scale;
  for (auto& v : w.offset_net_b) v = uniform(g, -0.75, 0.75);
  for (auto& v : w.weight_net_w) v = gaussian(g) * scale;
  for (auto& v : w.weight_net_b) v = gaussian(g) * 0.5;
  for (auto& v : w.query_proj) v = gaussian(g) * scale;
  return w;
}

namespace detail {

inline void affine_apply(std::span<const double> weight,
                         std::span<const double> bias,
                         std::span<const double> x, std::span<double> out) {
  const std::size_t rows = bias.size();
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = bias[r];
    const double* wr = weight.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    out[r] = acc;
  }
}

inline void softmax_inplace(std::span<double> v) {
  double hi = v[0];
  for (double x : v) hi = std::max(hi, x);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - hi);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

// Shared core: Sampler fills a C-wide buffer with the value field at a
// continuous location.
template <typename Sampler>
std::vector<double> deform_attn_impl(std::span<const double> query, double px,
                                     double py, Sampler&& sample,
                                     const DeformAttnWeights& w) {
  w.validate();
  if (query.size() != static_cast<std::size_t>(w.channels))
    throw ShapeMismatch("deform_attn: query width != C");
  const int m_heads = w.heads;
  const int k_keys = w.keys;
  const int c = w.channels;
  const int hd = w.head_dim();

  std::vector<double> offsets(static_cast<std::size_t>(m_heads) * k_keys * 2);
  std::vector<double> logits(static_cast<std::size_t>(m_heads) * k_keys);
  affine_apply(w.offset_net_w, w.offset_net_b, query, offsets);
  affine_apply(w.weight_net_w, w.weight_net_b, query, logits);

  std::vector<double> out(c, 0.0);
  std::vector<double> value(c);
  std::vector<double> head_acc(hd);
  std::vector<double> projected(hd);
  for (int m = 0; m < m_heads; ++m) {
    std::span<double> attn(logits.data() + static_cast<std::size_t>(m) * k_keys, k_keys);
    softmax_inplace(attn);
    std::fill(head_acc.begin(), head_acc.end(), 0.0);
    const double* vp = w.value_proj.data() + static_cast<std::size_t>(m) * hd * c;
    for (int k = 0; k < k_keys; ++k) {
      const std::size_t o = (static_cast<std::size_t>(m) * k_keys + k) * 2;
      sample(px + offsets[o], py + offsets[o + 1], value);
      for (int r = 0; r < hd; ++r) {
        double acc = 0.0;
        const double* row = vp + static_cast<std::size_t>(r) * c;
        for (int j = 0; j < c; ++j) acc += row[j] * value[j];
        projected[r] = acc;
      }
      for (int r = 0; r < hd; ++r) head_acc[r] += attn[k] * projected[r];
    }
    const double* op = w.output_proj.data() + static_cast<std::size_t>(m) * c * hd;
    for (int r = 0; r < c; ++r) {
      double acc = 0.0;
      const double* row = op + static_cast<std::size_t>(r) * hd;
      for (int j = 0; j < hd; ++j) acc += row[j] * head_acc[j];
      out[r] += acc;
    }
  }
  return out;
}

}  // namespace detail

inline std::vector<double> deform_attn(std::span<const double> query, double px,
                                       double py, const FeatureMap& value,
                                       const DeformAttnWeights& w) {
  if (value.channels != w.channels)
    throw ShapeMismatch("deform_attn: value channels != C");
  return detail::deform_attn_impl(
      query, px, py,
      [&](double x, double y, std::span<double> out) {
        const auto t = detail::bilinear_taps(x, y, value.width, value.height);
        for (int c = 0; c < value.channels; ++c)
          out[c] = t.w00 * value.at(c, t.y0, t.x0) + t.w01 * value.at(c, t.y0, t.x1) +
                   t.w10 * value.at(c, t.y1, t.x0) + t.w11 * value.at(c, t.y1, t.x1);
      },
      w);
}

inline std::vector<double> deform_attn(std::span<const double> query, double px,
                                       double py, const BevGrid& value,
                                       const DeformAttnWeights& w) {
  if (value.channels != w.channels)
    throw ShapeMismatch("deform_attn: value channels != C");
  return detail::deform_attn_impl(
      query, px, py,
      [&](double x, double y, std::span<double> out) {
        const auto t = detail::bilinear_taps(x, y, value.size_x, value.size_y);
        for (int c = 0; c < value.channels; ++c)
          out[c] = t.w00 * value.at(t.x0, t.y0, c) + t.w01 * value.at(t.x1, t.y0, c) +
                   t.w10 * value.at(t.x0, t.y1, c) + t.w11 * value.at(t.x1, t.y1, c);
      },
      w);
}

enum class ResidualSource { HeightBev, DepthBev };

// Per-cell fusion of the two BEV branches: the residual grid's feature plus
// one deformable-attention read of each branch, queried by the projected
// concatenation of both grids at the cell.
inline BevGrid bev_fuse(const BevGrid& height_bev, const BevGrid& depth_bev,
                        const DeformAttnWeights& w, ResidualSource residual_source,
                        int threads = 1) {
  w.validate();
  if (height_bev.size_x != depth_bev.size_x || height_bev.size_y != depth_bev.size_y ||
      height_bev.channels != depth_bev.channels)
    throw SpecMismatch("bev_fuse: grids disagree in shape");
  if (height_bev.spec.x_min != depth_bev.spec.x_min ||
      height_bev.spec.x_max != depth_bev.spec.x_max ||
      height_bev.spec.y_min != depth_bev.spec.y_min ||
      height_bev.spec.y_max != depth_bev.spec.y_max ||
      height_bev.spec.resolution != depth_bev.spec.resolution)
    throw SpecMismatch("bev_fuse: grids disagree in cell geometry");
  const int c = height_bev.channels;
  if (w.channels != c) throw SpecMismatch("bev_fuse: weights C != grid channels");

  const BevGrid& residual =
      residual_source == ResidualSource::HeightBev ? height_bev : depth_bev;
  BevGrid out = BevGrid::zeros(height_bev.spec, c);
  out.occupancy = residual.occupancy;
  out.dropped_points = residual.dropped_points;

  const std::size_t n_cells =
      static_cast<std::size_t>(out.size_x) * out.size_y;
  detail::parallel_chunks(n_cells, threads, [&](std::size_t b, std::size_t e, int) {
    std::vector<double> cat(2 * c);
    std::vector<double> query(c);
    const std::vector<double> zero_bias(c, 0.0);
    for (std::size_t cell = b; cell < e; ++cell) {
      const int ix = static_cast<int>(cell) / out.size_y;
      const int iy = static_cast<int>(cell) % out.size_y;
      for (int j = 0; j < c; ++j) {
        cat[j] = height_bev.at(ix, iy, j);
        cat[c + j] = depth_bev.at(ix, iy, j);
      }
      detail::affine_apply(w.query_proj, zero_bias, cat, query);
      const auto from_height = deform_attn(query, ix, iy, height_bev, w);
      const auto from_depth = deform_attn(query, ix, iy, depth_bev, w);
      for (int j = 0; j < c; ++j)
        out.at(ix, iy, j) = residual.at(ix, iy, j) + from_height[j] + from_depth[j];
    }
  });
  return out;
}

}  // namespace bevlift
