#include "bevlift/binning.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "bevlift/rng.hpp"

using namespace bevlift;

TEST(Binning, DidAlphaOneAtMidpoint) {
  // 90 bins over [-1, 1]; alpha = 1 reduces to uniform
  const BinSpec s = BinSpec::make(BinStrategy::DID, -1.0, 1.0, 90, 1.0);
  EXPECT_EQ(bin_index(s, 0.0), 45);
}

TEST(Binning, DidAlphaTwoHandComputed) {
  const BinSpec s = BinSpec::make(BinStrategy::DID, -1.0, 1.0, 90, 2.0);
  // floor(90 * sqrt(0.5)) = floor(63.639...)
  EXPECT_EQ(bin_index(s, 0.0), 63);
  // brute-force scan of the edge table agrees
  int scanned = -1;
  for (int i = 0; i < s.n_bins; ++i)
    if (s.edges[i] <= 0.0 && 0.0 < s.edges[i + 1]) scanned = i;
  EXPECT_EQ(scanned, 63);
}

TEST(Binning, BoundaryClamp) {
  for (auto strategy : {BinStrategy::UD, BinStrategy::SID, BinStrategy::LID, BinStrategy::DID}) {
    const BinSpec s = BinSpec::make(strategy, 1.0, 104.0, 206, 1.7, 0.0);
    EXPECT_EQ(bin_index(s, s.v_min), 0);
    EXPECT_EQ(bin_index(s, s.v_max), s.n_bins - 1);
    EXPECT_EQ(bin_index(s, s.v_min - 10.0), 0);
    EXPECT_EQ(bin_index(s, s.v_max + 10.0), s.n_bins - 1);
  }
}

TEST(Binning, BinCenterMidpointAndRoundTrip) {
  const BinSpec ud = BinSpec::make(BinStrategy::UD, 0.0, 2.0, 2);
  EXPECT_DOUBLE_EQ(bin_center(ud, 0), 0.5);
  EXPECT_DOUBLE_EQ(bin_center(ud, 1), 1.5);
  EXPECT_THROW(bin_center(ud, -1), IndexOutOfRange);
  EXPECT_THROW(bin_center(ud, 2), IndexOutOfRange);

  for (double alpha : {1.5, 2.0}) {
    const BinSpec did = BinSpec::make(BinStrategy::DID, -1.0, 1.0, 90, alpha);
    for (int i = 0; i < did.n_bins; ++i)
      EXPECT_EQ(bin_index(did, bin_center(did, i)), i) << "alpha=" << alpha << " i=" << i;
  }
}

TEST(Binning, LidClosedFormEdges) {
  const BinSpec s = BinSpec::make(BinStrategy::LID, 0.0, 10.0, 4);
  ASSERT_EQ(s.edges.size(), 5u);
  EXPECT_DOUBLE_EQ(s.edges[0], 0.0);
  EXPECT_DOUBLE_EQ(s.edges[1], 1.0);
  EXPECT_DOUBLE_EQ(s.edges[2], 3.0);
  EXPECT_DOUBLE_EQ(s.edges[3], 6.0);
  EXPECT_DOUBLE_EQ(s.edges[4], 10.0);
  EXPECT_DOUBLE_EQ(bin_center(s, 2), 4.5);
}

TEST(Binning, UdUniformHalfMeterDepthBins) {
  // 206 bins over [1, 104]
  const BinSpec s = BinSpec::make(BinStrategy::UD, 1.0, 104.0, 206);
  for (int i = 0; i < s.n_bins; ++i)
    EXPECT_NEAR(s.edges[i + 1] - s.edges[i], 0.5, 1e-12);
}

TEST(Binning, DidAlphaOneEqualsUdBitwise) {
  const BinSpec ud = BinSpec::make(BinStrategy::UD, -1.0, 1.0, 90);
  const BinSpec did = BinSpec::make(BinStrategy::DID, -1.0, 1.0, 90, 1.0);
  for (std::size_t i = 0; i < ud.edges.size(); ++i)
    EXPECT_EQ(ud.edges[i], did.edges[i]);
  const int n = 100000;
  for (int i = 0; i <= n; ++i) {
    const double v = -1.0 + 2.0 * static_cast<double>(i) / n;
    ASSERT_EQ(bin_index(ud, v), bin_index(did, v)) << "v=" << v;
  }
}

TEST(Binning, DidDensityDirection) {
  const BinSpec dense_low = BinSpec::make(BinStrategy::DID, -1.0, 1.0, 90, 2.0);
  for (int i = 0; i + 1 < dense_low.n_bins; ++i) {
    const double w0 = dense_low.edges[i + 1] - dense_low.edges[i];
    const double w1 = dense_low.edges[i + 2] - dense_low.edges[i + 1];
    EXPECT_GE(w1, w0);  // alpha > 1: widths non-decreasing
  }
  EXPECT_LT(dense_low.edges[1] - dense_low.edges[0],
            dense_low.edges[90] - dense_low.edges[89]);

  const BinSpec dense_high = BinSpec::make(BinStrategy::DID, -1.0, 1.0, 90, 0.5);
  for (int i = 0; i + 1 < dense_high.n_bins; ++i) {
    const double w0 = dense_high.edges[i + 1] - dense_high.edges[i];
    const double w1 = dense_high.edges[i + 2] - dense_high.edges[i + 1];
    EXPECT_LE(w1, w0);  // alpha < 1: widths non-increasing
  }
}

TEST(Binning, SidLogSpacingAndNegativeRangeShift) {
  const BinSpec pos = BinSpec::make(BinStrategy::SID, 1.0, 104.0, 206);
  // log-space uniformity: ratios of consecutive edges are constant
  const double r0 = pos.edges[1] / pos.edges[0];
  for (int i = 1; i < pos.n_bins; ++i)
    EXPECT_NEAR(pos.edges[i + 1] / pos.edges[i], r0, 1e-9);

  // negative range requires a positive shifted minimum
  EXPECT_THROW(BinSpec::make(BinStrategy::SID, -1.0, 1.0, 10, 1.0, 0.0), InvalidSpec);
  EXPECT_THROW(BinSpec::make(BinStrategy::SID, -1.0, 1.0, 10, 1.0, 1.0), InvalidSpec);
  const BinSpec shifted = BinSpec::make(BinStrategy::SID, -1.0, 1.0, 10, 1.0, 1.5);
  EXPECT_DOUBLE_EQ(shifted.edges.front(), -1.0);
  EXPECT_DOUBLE_EQ(shifted.edges.back(), 1.0);
}

TEST(Binning, InvalidSpecsRejected) {
  EXPECT_THROW(BinSpec::make(BinStrategy::UD, 1.0, 1.0, 4), InvalidSpec);
  EXPECT_THROW(BinSpec::make(BinStrategy::UD, 2.0, 1.0, 4), InvalidSpec);
  EXPECT_THROW(BinSpec::make(BinStrategy::UD, 0.0, 1.0, 0), InvalidSpec);
  EXPECT_THROW(BinSpec::make(BinStrategy::DID, 0.0, 1.0, 4, 0.0), InvalidSpec);
}

TEST(Binning, EndpointsExactAndStrictlyIncreasing) {
  SplitMix64 g(101);
  for (int trial = 0; trial < 200; ++trial) {
    const double lo = uniform(g, -100.0, 100.0);
    const double hi = lo + uniform(g, 0.5, 200.0);
    const int n = 1 + static_cast<int>(g() % 256);
    const double alpha = uniform(g, 0.3, 4.0);
    for (auto strategy : {BinStrategy::UD, BinStrategy::LID, BinStrategy::DID}) {
      const BinSpec s = BinSpec::make(strategy, lo, hi, n, alpha);
      EXPECT_EQ(s.edges.front(), lo);
      EXPECT_EQ(s.edges.back(), hi);
      for (int i = 0; i < n; ++i) ASSERT_LT(s.edges[i], s.edges[i + 1]);
    }
  }
}

TEST(Binning, MonotonicityProperty) {
  SplitMix64 g(102);
  const BinSpec specs[] = {
      BinSpec::make(BinStrategy::UD, -1.0, 1.0, 90),
      BinSpec::make(BinStrategy::SID, 1.0, 104.0, 206),
      BinSpec::make(BinStrategy::LID, -1.0, 1.0, 90),
      BinSpec::make(BinStrategy::DID, -1.0, 1.0, 90, 2.0),
  };
  for (const BinSpec& s : specs) {
    const double pad = 0.25 * (s.v_max - s.v_min);
    for (int i = 0; i < 100000; ++i) {
      double a = uniform(g, s.v_min - pad, s.v_max + pad);
      double b = uniform(g, s.v_min - pad, s.v_max + pad);
      if (a > b) std::swap(a, b);
      ASSERT_LE(bin_index(s, a), bin_index(s, b));
    }
  }
}

TEST(Binning, CoverageEveryValueFallsInItsInterval) {
  SplitMix64 g(103);
  const BinSpec specs[] = {
      BinSpec::make(BinStrategy::UD, -1.0, 1.0, 90),
      BinSpec::make(BinStrategy::SID, 1.0, 104.0, 206),
      BinSpec::make(BinStrategy::LID, -1.0, 1.0, 90),
      BinSpec::make(BinStrategy::DID, -1.0, 1.0, 90, 1.5),
  };
  for (const BinSpec& s : specs) {
    for (int i = 0; i < 20000; ++i) {
      const double v = uniform(g, s.v_min, s.v_max);
      const int b = bin_index(s, v);
      ASSERT_LE(s.edges[b], v);
      ASSERT_LT(v, s.edges[b + 1]);
    }
    // exact edges land in the bin they open
    for (int e = 0; e < s.n_bins; ++e) {
      const int b = bin_index(s, s.edges[e]);
      ASSERT_LE(s.edges[b], s.edges[e]);
      ASSERT_LT(s.edges[e], s.edges[b + 1]);
    }
  }
}
