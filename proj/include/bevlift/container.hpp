#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bevlift/error.hpp"

namespace bevlift {

static_assert(std::endian::native == std::endian::little,
              "container payloads are little-endian");

enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

inline std::size_t dtype_size(DType t) {
  return t == DType::F32 ? 4 : 8;
}

// Binary tensor container:
//   magic "BVT1" | rank u32 | dims rank*u64 | dtype u8 | payload | meta
// payload is row-major little-endian; meta is a u64 byte length followed by
// structured text (JSON).
struct TensorContainer {
  DType dtype = DType::F32;
  std::vector<std::uint64_t> dims;
  std::vector<float> f32;
  std::vector<double> f64;
  std::string metadata;

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return dims.empty() ? 0 : n;
  }

  static TensorContainer from_f32(std::vector<std::uint64_t> dims,
                                  std::vector<float> values,
                                  std::string metadata = "{}") {
    TensorContainer t;
    t.dtype = DType::F32;
    t.dims = std::move(dims);
    t.f32 = std::move(values);
    t.metadata = std::move(metadata);
    if (t.element_count() != t.f32.size())
      throw ShapeMismatch("container: payload size does not match dims");
    return t;
  }

  static TensorContainer from_f64(std::vector<std::uint64_t> dims,
                                  std::vector<double> values,
                                  std::string metadata = "{}") {
    TensorContainer t;
    t.dtype = DType::F64;
    t.dims = std::move(dims);
    t.f64 = std::move(values);
    t.metadata = std::move(metadata);
    if (t.element_count() != t.f64.size())
      throw ShapeMismatch("container: payload size does not match dims");
    return t;
  }
};

namespace detail {

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ParseError(std::string("container: truncated ") + what);
  return v;
}

}  // namespace detail

inline void write_container(const std::filesystem::path& path,
                            const TensorContainer& t) {
  const std::uint64_t n = t.element_count();
  if ((t.dtype == DType::F32 && t.f32.size() != n) ||
      (t.dtype == DType::F64 && t.f64.size() != n))
    throw ShapeMismatch("container: payload size does not match dims");

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os.write("BVT1", 4);
  detail::write_raw(os, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) detail::write_raw(os, d);
  detail::write_raw(os, static_cast<std::uint8_t>(t.dtype));
  if (t.dtype == DType::F32)
    os.write(reinterpret_cast<const char*>(t.f32.data()),
             static_cast<std::streamsize>(n * sizeof(float)));
  else
    os.write(reinterpret_cast<const char*>(t.f64.data()),
             static_cast<std::streamsize>(n * sizeof(double)));
  detail::write_raw(os, static_cast<std::uint64_t>(t.metadata.size()));
  os.write(t.metadata.data(), static_cast<std::streamsize>(t.metadata.size()));
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

inline TensorContainer read_container(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "BVT1", 4) != 0)
    throw ParseError("container: bad magic in '" + path.string() + "'");

  TensorContainer t;
  const auto rank = detail::read_raw<std::uint32_t>(is, "rank");
  if (rank > 8) throw ParseError("container: implausible rank");
  t.dims.resize(rank);
  for (auto& d : t.dims) d = detail::read_raw<std::uint64_t>(is, "dims");
  const auto tag = detail::read_raw<std::uint8_t>(is, "dtype");
  if (tag != static_cast<std::uint8_t>(DType::F32) &&
      tag != static_cast<std::uint8_t>(DType::F64))
    throw ParseError("container: unknown dtype tag");
  t.dtype = static_cast<DType>(tag);

  const std::uint64_t n = t.element_count();
  if (t.dtype == DType::F32) {
    t.f32.resize(n);
    is.read(reinterpret_cast<char*>(t.f32.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
  } else {
    t.f64.resize(n);
    is.read(reinterpret_cast<char*>(t.f64.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!is) throw ParseError("container: truncated payload");

  const auto meta_len = detail::read_raw<std::uint64_t>(is, "metadata length");
  t.metadata.resize(meta_len);
  is.read(t.metadata.data(), static_cast<std::streamsize>(meta_len));
  if (!is) throw ParseError("container: truncated metadata");
  return t;
}

}  // namespace bevlift
