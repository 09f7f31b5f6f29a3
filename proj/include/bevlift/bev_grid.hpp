#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bevlift/error.hpp"
#include "bevlift/lifting.hpp"
#include "bevlift/parallel.hpp"

namespace bevlift {

enum class Reduction { Sum, Mean, Max };

struct GridSpec {
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
  double resolution = 1.0;  // meters per cell
  Reduction reduction = Reduction::Sum;

  void validate() const {
    if (!(x_max > x_min) || !(y_max > y_min))
      throw InvalidSpec("grid: extent must be positive");
    if (!(resolution > 0.0)) throw InvalidSpec("grid: resolution must be > 0");
  }
  int cells_x() const {
    return static_cast<int>(std::ceil((x_max - x_min) / resolution));
  }
  int cells_y() const {
    return static_cast<int>(std::ceil((y_max - y_min) / resolution));
  }
};

// Pooled BEV features over the ego ground plane, X x Y x C, immutable after
// pooling. Features are accumulated and stored in f64 so the mass-conservation
// contract holds at 1e-9 relative.
struct BevGrid {
  GridSpec spec;
  int size_x = 0;
  int size_y = 0;
  int channels = 0;
  std::vector<double> data;            // [x][y][c]
  std::vector<std::uint32_t> occupancy;  // [x][y]
  std::uint64_t dropped_points = 0;

  static BevGrid zeros(const GridSpec& spec, int channels) {
    spec.validate();
    if (channels <= 0) throw InvalidSpec("grid: channels must be positive");
    BevGrid g;
    g.spec = spec;
    g.size_x = spec.cells_x();
    g.size_y = spec.cells_y();
    g.channels = channels;
    g.data.assign(static_cast<std::size_t>(g.size_x) * g.size_y * channels, 0.0);
    g.occupancy.assign(static_cast<std::size_t>(g.size_x) * g.size_y, 0);
    return g;
  }

  std::size_t cell_index(int ix, int iy) const {
    return static_cast<std::size_t>(ix) * size_y + iy;
  }
  double& at(int ix, int iy, int c) {
    return data[cell_index(ix, iy) * channels + c];
  }
  const double& at(int ix, int iy, int c) const {
    return data[cell_index(ix, iy) * channels + c];
  }
};

// Collapses the wedge volume onto the ground grid. Cell assignment is
// floor((x - x_min) / res) with half-open cells; out-of-extent points are
// dropped and counted; z is ignored. Accumulation within a cell follows the
// input point order, and workers partition by cell, so the result is
// bitwise identical for any thread count.
inline BevGrid voxel_pool(const WedgeVolume& volume, const GridSpec& spec,
                          int threads = 1) {
  BevGrid grid = BevGrid::zeros(spec, std::max(volume.feature_dim, 1));
  const int nx = grid.size_x;
  const int ny = grid.size_y;
  const std::size_t n_cells = static_cast<std::size_t>(nx) * ny;
  const std::size_t n_points = volume.size();
  const int cf = volume.feature_dim;

  constexpr std::int64_t kDropped = -1;
  std::vector<std::int64_t> point_cell(n_points, kDropped);
  detail::parallel_chunks(n_points, threads, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& p = volume.positions[i];
      if (!(p[0] >= spec.x_min) || !(p[0] < spec.x_max) ||
          !(p[1] >= spec.y_min) || !(p[1] < spec.y_max))
        continue;  // also drops non-finite coordinates
      const int ix = std::min(
          static_cast<int>(std::floor((p[0] - spec.x_min) / spec.resolution)), nx - 1);
      const int iy = std::min(
          static_cast<int>(std::floor((p[1] - spec.y_min) / spec.resolution)), ny - 1);
      point_cell[i] = static_cast<std::int64_t>(grid.cell_index(ix, iy));
    }
  });

  // Stable counting sort: per-cell point lists in ascending input order.
  std::vector<std::uint32_t>& counts = grid.occupancy;
  for (std::size_t i = 0; i < n_points; ++i) {
    if (point_cell[i] == kDropped)
      ++grid.dropped_points;
    else
      ++counts[static_cast<std::size_t>(point_cell[i])];
  }
  std::vector<std::size_t> cell_start(n_cells + 1, 0);
  for (std::size_t c = 0; c < n_cells; ++c)
    cell_start[c + 1] = cell_start[c] + counts[c];
  std::vector<std::size_t> order(n_points - grid.dropped_points);
  {
    std::vector<std::size_t> fill = cell_start;
    for (std::size_t i = 0; i < n_points; ++i)
      if (point_cell[i] != kDropped)
        order[fill[static_cast<std::size_t>(point_cell[i])]++] = i;
  }

  detail::parallel_chunks(n_cells, threads, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t cell = b; cell < e; ++cell) {
      const std::size_t lo = cell_start[cell];
      const std::size_t hi = cell_start[cell + 1];
      if (lo == hi) continue;
      double* out = &grid.data[cell * cf];
      switch (spec.reduction) {
        case Reduction::Sum:
        case Reduction::Mean:
          for (std::size_t k = lo; k < hi; ++k) {
            const float* f = &volume.features[order[k] * cf];
            for (int c = 0; c < cf; ++c) out[c] += f[c];
          }
          if (spec.reduction == Reduction::Mean) {
            const double n = static_cast<double>(hi - lo);
            for (int c = 0; c < cf; ++c) out[c] /= n;
          }
          break;
        case Reduction::Max:
          for (std::size_t k = lo; k < hi; ++k) {
            const float* f = &volume.features[order[k] * cf];
            if (k == lo)
              for (int c = 0; c < cf; ++c) out[c] = f[c];
            else
              for (int c = 0; c < cf; ++c) out[c] = std::max(out[c], static_cast<double>(f[c]));
          }
          break;
      }
    }
  });
  return grid;
}

struct PoolBenchReport {
  std::uint64_t points_in = 0;
  std::uint64_t points_dropped = 0;
  std::uint64_t cells_touched = 0;
  int repetitions = 0;
  bool empty = false;
  // Timing is diagnostics only; it never lands in file artifacts.
  double wall_ns_per_rep = 0.0;
  double points_per_second = 0.0;
};

inline PoolBenchReport pool_bench(const WedgeVolume& volume,
                                  const GridSpec& spec, int repetitions,
                                  int threads = 1) {
  if (repetitions < 1) throw InvalidSpec("pool_bench: repetitions must be >= 1");
  PoolBenchReport report;
  report.repetitions = repetitions;
  report.points_in = volume.size();
  if (volume.size() == 0) {
    report.empty = true;
    return report;
  }
  const auto t0 = std::chrono::steady_clock::now();
  BevGrid last;
  for (int r = 0; r < repetitions; ++r) last = voxel_pool(volume, spec, threads);
  const auto t1 = std::chrono::steady_clock::now();
  report.points_dropped = last.dropped_points;
  for (auto occ : last.occupancy) report.cells_touched += occ > 0 ? 1 : 0;
  report.wall_ns_per_rep =
      std::chrono::duration<double, std::nano>(t1 - t0).count() / repetitions;
  report.points_per_second =
      report.wall_ns_per_rep > 0.0
          ? static_cast<double>(report.points_in) * 1e9 / report.wall_ns_per_rep
          : 0.0;
  return report;
}

// Emitted-point accounting between two lift configurations of one scene.
struct WorkRatio {
  std::uint64_t points_a = 0;
  std::uint64_t points_b = 0;
  double ratio = 0.0;

  static WorkRatio of(const WedgeVolume& a, const WedgeVolume& b) {
    WorkRatio r;
    r.points_a = a.size();
    r.points_b = b.size();
    r.ratio = b.size() ? static_cast<double>(a.size()) / static_cast<double>(b.size()) : 0.0;
    return r;
  }
};

inline const char* to_string(Reduction r) {
  switch (r) {
    case Reduction::Sum: return "sum";
    case Reduction::Mean: return "mean";
    case Reduction::Max: return "max";
  }
  return "sum";
}

inline Reduction reduction_from_string(const std::string& s) {
  if (s == "sum") return Reduction::Sum;
  if (s == "mean") return Reduction::Mean;
  if (s == "max") return Reduction::Max;
  throw InvalidSpec("unknown reduction '" + s + "'");
}

}  // namespace bevlift
