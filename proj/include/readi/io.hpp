// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <algorithm>
#include <bit>
#include <cctype>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "readi/dataset.hpp"
#include "readi/error.hpp"
#include "readi/image.hpp"

namespace readi {

enum class DType : std::uint8_t { f32 = 1, f64 = 2, c64 = 3, c128 = 4 };

inline const char* to_string(DType d) {
  switch (d) {
    case DType::f32: return "f32";
    case DType::f64: return "f64";
    case DType::c64: return "c64";
    case DType::c128: return "c128";
  }
  return "unknown";
}

inline std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::c64: return 8;
    case DType::c128: return 16;
  }
  throw error(errc::dtype_mismatch, "unknown dtype tag");
}

template <class Sample>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<Sample, float>) return DType::f32;
  else if constexpr (std::is_same_v<Sample, double>) return DType::f64;
  else if constexpr (std::is_same_v<Sample, std::complex<float>>) return DType::c64;
  else {
    static_assert(std::is_same_v<Sample, std::complex<double>>, "unsupported sample type");
    return DType::c128;
  }
}

// Binary dataset file.
//   0  "READI1"
//   6  u8 dtype, u8 layout
//   8  u32 n_tx (events), u32 n_rx, u32 n_samples, u32 groups S, u32 group size Q
//  28  f64 sample_rate, f64 start_time
//  44  payload, little endian, time fastest, then receive, then transmit/event
struct DatasetContainer {
  static constexpr std::array<char, 6> magic{'R', 'E', 'A', 'D', 'I', '1'};
  static constexpr std::size_t header_bytes = 44;

  DType dtype = DType::f32;
  DataLayout layout = DataLayout::encoded;
  std::uint32_t n_tx = 0, n_rx = 0, n_samples = 0;
  std::uint32_t groups = 0, group_size = 0;  // nonzero for grouped layouts
  double sample_rate = 0.0, start_time = 0.0;
  std::vector<std::uint8_t> payload;  // little endian

  std::size_t expected_payload() const { return std::size_t{n_tx} * n_rx * n_samples * dtype_size(dtype); }
  bool operator==(const DatasetContainer&) const = default;
};

namespace detail {

template <class U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  using Bits = std::conditional_t<sizeof(U) == 8, std::uint64_t, std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint8_t>>;
  const auto bits = std::bit_cast<Bits>(v);
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(bits) >> (8 * b)) & 0xff));
}

template <class U>
U get_le(const std::uint8_t* p) {
  using Bits = std::conditional_t<sizeof(U) == 8, std::uint64_t, std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint8_t>>;
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<U>(static_cast<Bits>(v));
}

}  // namespace detail

template <class Sample, class Kind>
DatasetContainer to_container(const ChannelData<Sample, Kind>& d, std::uint32_t groups = 0, std::uint32_t group_size = 0,
                              DataLayout layout = Kind::layout) {
  DatasetContainer c;
  c.dtype = dtype_of<Sample>();
  c.layout = layout;
  c.n_tx = static_cast<std::uint32_t>(d.n_tx());
  c.n_rx = static_cast<std::uint32_t>(d.n_rx());
  c.n_samples = static_cast<std::uint32_t>(d.n_samples());
  c.groups = groups;
  c.group_size = group_size;
  c.sample_rate = d.sample_rate();
  c.start_time = d.start_time();
  c.payload.reserve(c.expected_payload());
  using R = real_type_t<Sample>;
  for (const auto& s : d.samples()) {
    if constexpr (is_complex_v<Sample>) {
      detail::put_le<R>(c.payload, s.real());
      detail::put_le<R>(c.payload, s.imag());
    } else {
      detail::put_le<R>(c.payload, s);
    }
  }
  return c;
}

template <class Sample, class Kind>
ChannelData<Sample, Kind> from_container(const DatasetContainer& c) {
  if (c.dtype != dtype_of<Sample>())
    throw error(errc::dtype_mismatch, std::string("container holds ") + to_string(c.dtype) + ", requested " + to_string(dtype_of<Sample>()));
  if (c.payload.size() != c.expected_payload()) throw error(errc::truncated, "payload length does not match header dims");
  ChannelData<Sample, Kind> d(c.n_tx, c.n_rx, c.n_samples, c.sample_rate, c.start_time);
  using R = real_type_t<Sample>;
  const std::uint8_t* p = c.payload.data();
  for (auto& s : d.samples()) {
    if constexpr (is_complex_v<Sample>) {
      const R re = detail::get_le<R>(p), im = detail::get_le<R>(p + sizeof(R));
      s = Sample(re, im);
      p += 2 * sizeof(R);
    } else {
      s = detail::get_le<R>(p);
      p += sizeof(R);
    }
  }
  return d;
}

inline std::vector<std::uint8_t> serialize(const DatasetContainer& c) {
  if (c.payload.size() != c.expected_payload()) throw error(errc::truncated, "payload length does not match header dims");
  std::vector<std::uint8_t> out(DatasetContainer::magic.begin(), DatasetContainer::magic.end());
  out.reserve(DatasetContainer::header_bytes + c.payload.size());
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(c.dtype));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(c.layout));
  for (std::uint32_t v : {c.n_tx, c.n_rx, c.n_samples, c.groups, c.group_size}) detail::put_le<std::uint32_t>(out, v);
  detail::put_le<double>(out, c.sample_rate);
  detail::put_le<double>(out, c.start_time);
  out.insert(out.end(), c.payload.begin(), c.payload.end());
  return out;
}

inline DatasetContainer deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < DatasetContainer::magic.size() ||
      !std::equal(DatasetContainer::magic.begin(), DatasetContainer::magic.end(), bytes.begin()))
    throw error(errc::bad_magic, "not a READI1 container");
  if (bytes.size() < DatasetContainer::header_bytes) throw error(errc::truncated, "header cut short");
  const std::uint8_t* p = bytes.data() + 6;
  DatasetContainer c;
  const std::uint8_t dt = p[0], lay = p[1];
  if (dt < 1 || dt > 4) throw error(errc::dtype_mismatch, "unknown dtype tag " + std::to_string(dt));
  if (lay > 3) throw error(errc::bad_magic, "unknown layout tag " + std::to_string(lay));
  c.dtype = static_cast<DType>(dt);
  c.layout = static_cast<DataLayout>(lay);
  p += 2;
  c.n_tx = detail::get_le<std::uint32_t>(p);
  c.n_rx = detail::get_le<std::uint32_t>(p + 4);
  c.n_samples = detail::get_le<std::uint32_t>(p + 8);
  c.groups = detail::get_le<std::uint32_t>(p + 12);
  c.group_size = detail::get_le<std::uint32_t>(p + 16);
  c.sample_rate = detail::get_le<double>(p + 20);
  c.start_time = detail::get_le<double>(p + 28);
  const std::size_t want = c.expected_payload();
  const std::size_t have = bytes.size() - DatasetContainer::header_bytes;
  if (have < want) throw error(errc::truncated, "payload has " + std::to_string(have) + " bytes, header says " + std::to_string(want));
  if (have > want) throw error(errc::truncated, "payload has " + std::to_string(have - want) + " trailing bytes");
  c.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(DatasetContainer::header_bytes), bytes.end());
  return c;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(errc::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error(errc::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw error(errc::io, "short write to " + path.string());
}

inline void write_container(const std::filesystem::path& path, const DatasetContainer& c) { write_bytes(path, serialize(c)); }
inline DatasetContainer read_container(const std::filesystem::path& path) { return deserialize(read_bytes(path)); }

// Binary PGM (P5), 8-bit.
inline std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string head = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

inline GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  if (token() != "P5") throw error(errc::bad_magic, "not a binary PGM");
  GrayImage g;
  try {
    g.width = std::stoi(token());
    g.height = std::stoi(token());
    if (std::stoi(token()) != 255) throw error(errc::dtype_mismatch, "only 8-bit PGM is supported");
  } catch (const std::logic_error&) {
    throw error(errc::truncated, "PGM header cut short");
  }
  ++pos;  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(g.width) * static_cast<std::size_t>(g.height);
  if (bytes.size() < pos + n) throw error(errc::truncated, "PGM raster cut short");
  g.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return g;
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) { write_bytes(path, encode_pgm(img)); }

// metric,scenario,value rows; values printed with %.10g so reruns diff cleanly.
class MetricsTable {
 public:
  void add(std::string metric, std::string scenario, double value) { rows_.push_back({std::move(metric), std::move(scenario), value}); }
  bool empty() const noexcept { return rows_.empty(); }

  std::string csv() const {
    std::string out = "metric,scenario,value\n";
    char buf[64];
    for (const auto& r : rows_) {
      std::snprintf(buf, sizeof buf, "%.10g", r.value);
      out += r.metric + ',' + r.scenario + ',' + buf + '\n';
    }
    return out;
  }

  void write(const std::filesystem::path& path) const {
    const auto s = csv();
    write_bytes(path, std::vector<std::uint8_t>(s.begin(), s.end()));
  }

 private:
  struct Row {
    std::string metric, scenario;
    double value;
  };
  std::vector<Row> rows_;
};

}  // namespace readi
