#include "bevlift/container.hpp"

#include "bevlift/serialize.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "bevlift/rng.hpp"

using namespace bevlift;
using bevlift::WedgeVolume;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "bevlift_container_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Container, RoundTripBitwiseAllRanksAndDtypes) {
  SplitMix64 g(2024);
  for (std::uint32_t rank = 1; rank <= 4; ++rank) {
    std::vector<std::uint64_t> dims;
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const std::uint64_t d = 1 + g() % 5;
      dims.push_back(d);
      n *= d;
    }
    std::vector<float> f32(n);
    std::vector<double> f64(n);
    for (auto& v : f32) v = static_cast<float>(gaussian(g));
    for (auto& v : f64) v = gaussian(g);

    const auto p32 = temp_file("round32.bvt");
    write_container(p32, TensorContainer::from_f32(dims, f32, "{\"rank\":true}"));
    const TensorContainer r32 = read_container(p32);
    EXPECT_EQ(r32.dims, dims);
    EXPECT_EQ(r32.dtype, DType::F32);
    EXPECT_EQ(r32.f32, f32);
    EXPECT_EQ(r32.metadata, "{\"rank\":true}");

    const auto p64 = temp_file("round64.bvt");
    write_container(p64, TensorContainer::from_f64(dims, f64));
    const TensorContainer r64 = read_container(p64);
    EXPECT_EQ(r64.dims, dims);
    EXPECT_EQ(r64.f64, f64);
  }
}

TEST(Container, WriteReadWriteIsByteIdentical) {
  SplitMix64 g(7);
  std::vector<double> values(64);
  for (auto& v : values) v = gaussian(g);
  const auto p1 = temp_file("id1.bvt");
  const auto p2 = temp_file("id2.bvt");
  write_container(p1, TensorContainer::from_f64({8, 8}, values, "{\"k\":1}"));
  write_container(p2, read_container(p1));

  std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
}

TEST(Container, BadMagicRejected) {
  const auto p = temp_file("magic.bvt");
  std::ofstream os(p, std::ios::binary);
  os << "NOPE" << std::string(64, '\0');
  os.close();
  EXPECT_THROW(read_container(p), ParseError);
}

TEST(Container, TruncationRejected) {
  const auto p = temp_file("trunc.bvt");
  write_container(p, TensorContainer::from_f32({4, 4}, std::vector<float>(16, 1.0f)));
  const auto full = fs::file_size(p);
  fs::resize_file(p, full - 9);
  EXPECT_THROW(read_container(p), ParseError);
  fs::resize_file(p, 11);  // cuts into the dims block
  EXPECT_THROW(read_container(p), ParseError);
}

TEST(Container, PayloadDimsMismatchRejected) {
  EXPECT_THROW(TensorContainer::from_f32({2, 3}, std::vector<float>(5, 0.0f)),
               ShapeMismatch);
}

TEST(Container, MissingFileIsIoError) {
  EXPECT_THROW(read_container("/nonexistent/dir/tensor.bvt"), IoError);
}

TEST(Container, WedgeVolumeRoundTrip) {
  WedgeVolume v;
  v.source = bevlift::LiftSource::Depth;
  v.feature_dim = 3;
  SplitMix64 g(88);
  for (int i = 0; i < 40; ++i) {
    v.positions.push_back({gaussian(g), gaussian(g), gaussian(g)});
    v.pixels.push_back({0.0, 0.0});
    v.bins.push_back(i % 5);
    for (int c = 0; c < 3; ++c) v.features.push_back(static_cast<float>(gaussian(g)));
  }
  v.dropped_rays = 4;
  v.pruned_points = 2;

  const auto prefix = temp_file("wedge");
  bevlift::save_wedge(prefix, v);
  const WedgeVolume r = bevlift::load_wedge(prefix);
  EXPECT_EQ(r.source, v.source);
  EXPECT_EQ(r.feature_dim, v.feature_dim);
  EXPECT_EQ(r.positions, v.positions);
  EXPECT_EQ(r.features, v.features);
  EXPECT_EQ(r.dropped_rays, 4u);
  EXPECT_EQ(r.pruned_points, 2u);
}
