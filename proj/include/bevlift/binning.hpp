#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bevlift/error.hpp"

namespace bevlift {

// Scalar-range discretization strategies.
//   UD  — uniform bins
//   SID — logarithmically spaced edges (shifted when the range is not positive)
//   LID — linearly increasing bin widths (widths proportional to 1..N)
//   DID — dynamic-increasing: index = floor(N * t^(1/alpha)), t normalized
enum class BinStrategy { UD, SID, LID, DID };

struct BinSpec {
  BinStrategy strategy = BinStrategy::UD;
  double v_min = 0.0;
  double v_max = 1.0;
  int n_bins = 1;
  double alpha = 1.0;       // DID concentration exponent
  double sid_offset = 0.0;  // shift applied before log spacing (SID only)
  std::vector<double> edges;  // n_bins + 1, strictly increasing, precomputed

  static BinSpec make(BinStrategy strategy, double v_min, double v_max,
                      int n_bins, double alpha = 1.0, double sid_offset = 0.0);
};

inline BinSpec BinSpec::make(BinStrategy strategy, double v_min, double v_max,
                             int n_bins, double alpha, double sid_offset) {
  if (!(v_max > v_min)) throw InvalidSpec("bins: v_max must exceed v_min");
  if (n_bins < 1) throw InvalidSpec("bins: n_bins must be >= 1");
  if (!(alpha > 0.0)) throw InvalidSpec("bins: alpha must be positive");

  BinSpec s;
  s.strategy = strategy;
  s.v_min = v_min;
  s.v_max = v_max;
  s.n_bins = n_bins;
  s.alpha = alpha;
  s.sid_offset = sid_offset;
  s.edges.resize(static_cast<std::size_t>(n_bins) + 1);

  const double range = v_max - v_min;
  const double n = static_cast<double>(n_bins);
  switch (strategy) {
    case BinStrategy::UD:
      for (int i = 0; i <= n_bins; ++i)
        s.edges[i] = v_min + range * (static_cast<double>(i) / n);
      break;
    case BinStrategy::DID:
      // Inverse of index = floor(N * t^(1/alpha)). alpha == 1 takes the UD
      // path literally so the two strategies coincide bitwise.
      for (int i = 0; i <= n_bins; ++i) {
        const double t = static_cast<double>(i) / n;
        s.edges[i] = v_min + range * (alpha == 1.0 ? t : std::pow(t, alpha));
      }
      break;
    case BinStrategy::SID: {
      const double lo = v_min + sid_offset;
      const double hi = v_max + sid_offset;
      if (!(lo > 0.0))
        throw InvalidSpec("bins: SID needs a positive shifted minimum");
      const double log_lo = std::log(lo);
      const double log_span = std::log(hi) - log_lo;
      for (int i = 0; i <= n_bins; ++i)
        s.edges[i] =
            std::exp(log_lo + log_span * (static_cast<double>(i) / n)) - sid_offset;
      break;
    }
    case BinStrategy::LID:
      for (int i = 0; i <= n_bins; ++i)
        s.edges[i] = v_min + range * (static_cast<double>(i) * (i + 1.0)) /
                                 (n * (n + 1.0));
      break;
  }
  s.edges.front() = v_min;
  s.edges.back() = v_max;
  for (int i = 0; i < n_bins; ++i)
    if (!(s.edges[i + 1] > s.edges[i]))
      throw InvalidSpec("bins: edges are not strictly increasing");
  return s;
}

// Total function: out-of-range values clamp to the first/last bin.
inline int bin_index(const BinSpec& s, double v) {
  const int n = s.n_bins;
  if (!(v > s.v_min)) return 0;  // also catches NaN
  if (v >= s.v_max) return n - 1;
  int i;
  if (s.strategy == BinStrategy::UD || s.strategy == BinStrategy::DID) {
    const double t = (v - s.v_min) / (s.v_max - s.v_min);
    const double r = (s.strategy == BinStrategy::UD || s.alpha == 1.0)
                         ? t
                         : std::pow(t, 1.0 / s.alpha);
    i = std::clamp(static_cast<int>(std::floor(n * r)), 0, n - 1);
    // The closed form and the edge table can disagree within one ulp of a
    // boundary; the index must name the interval that contains v.
    while (i > 0 && v < s.edges[i]) --i;
    while (i < n - 1 && v >= s.edges[i + 1]) ++i;
  } else {
    const auto it = std::upper_bound(s.edges.begin(), s.edges.end(), v);
    i = std::clamp(static_cast<int>(it - s.edges.begin()) - 1, 0, n - 1);
  }
  return i;
}

inline double bin_center(const BinSpec& s, int index) {
  if (index < 0 || index >= s.n_bins)
    throw IndexOutOfRange("bin_center: index " + std::to_string(index) +
                          " outside [0, " + std::to_string(s.n_bins) + ")");
  return 0.5 * (s.edges[index] + s.edges[index + 1]);
}

inline const std::vector<double>& edge_table(const BinSpec& s) {
  return s.edges;
}

inline const char* to_string(BinStrategy s) {
  switch (s) {
    case BinStrategy::UD: return "ud";
    case BinStrategy::SID: return "sid";
    case BinStrategy::LID: return "lid";
    case BinStrategy::DID: return "did";
  }
  return "ud";
}

inline BinStrategy bin_strategy_from_string(const std::string& s) {
  if (s == "ud") return BinStrategy::UD;
  if (s == "sid") return BinStrategy::SID;
  if (s == "lid") return BinStrategy::LID;
  if (s == "did") return BinStrategy::DID;
  throw InvalidSpec("unknown bin strategy '" + s + "'");
}

}  // namespace bevlift
