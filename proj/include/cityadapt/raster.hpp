#pragma once

// CARB1 raster container: a multi-band georeferenced grid of 64-bit floats.
// NaN is the only nodata sentinel; infinities are invalid everywhere.
//
// File layout (all integers and floats little endian):
//   offset 0   magic "CARB1\0"      6 bytes
//   offset 6   u32 width
//   offset 10  u32 height
//   offset 14  f64 cell_size        meters per pixel, > 0
//   offset 22  f64 origin_x
//   offset 30  f64 origin_y
//   offset 38  u32 band_count
//   offset 42  per band: u16 name length, UTF-8 name bytes,
//              then height*width f64 values row-major, top row first.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "cityadapt/errors.hpp"

namespace cityadapt {

struct Grid {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // row-major, top row first

  Grid() = default;
  Grid(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct Band {
  std::string name;
  Grid grid;
};

struct Raster {
  int width = 0;
  int height = 0;
  double cell_size = 1.0;  // meters per pixel
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<Band> bands;

  const Grid& band(std::string_view name) const {
    for (const Band& b : bands) {
      if (b.name == name) return b.grid;
    }
    throw validation_error("unknown band name: " + std::string(name));
  }

  bool has_band(std::string_view name) const {
    for (const Band& b : bands) {
      if (b.name == name) return true;
    }
    return false;
  }
};

inline bool is_nodata(double v) { return std::isnan(v); }

inline void validate_grid(const Grid& g, const std::string& label) {
  require(g.width >= 1 && g.height >= 1, label + ": grid dimensions must be >= 1");
  require(g.values.size() == static_cast<std::size_t>(g.width) * g.height,
          label + ": value count does not match width*height");
  for (double v : g.values) {
    if (std::isinf(v)) throw validation_error(label + ": infinite value in grid");
  }
}

inline void validate_raster(const Raster& r) {
  require(r.width >= 1 && r.height >= 1, "raster dimensions must be >= 1");
  require(r.cell_size > 0.0 && std::isfinite(r.cell_size), "cell_size must be finite and > 0");
  require(std::isfinite(r.origin_x) && std::isfinite(r.origin_y), "origin must be finite");
  require(!r.bands.empty(), "raster must have at least one band");
  for (std::size_t i = 0; i < r.bands.size(); ++i) {
    const Band& b = r.bands[i];
    require(b.grid.width == r.width && b.grid.height == r.height,
            "band '" + b.name + "': grid dimensions do not match raster");
    validate_grid(b.grid, "band '" + b.name + "'");
    for (std::size_t j = i + 1; j < r.bands.size(); ++j) {
      require(b.name != r.bands[j].name, "duplicate band name: " + b.name);
    }
  }
}

namespace detail {

constexpr char kCarbMagic[6] = {'C', 'A', 'R', 'B', '1', '\0'};

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

// Cursor over an in-memory file image; every failure reports the byte offset.
class ByteReader {
 public:
  ByteReader(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  std::uint64_t offset() const { return offset_; }

  void need(std::uint64_t n, const char* what) {
    if (data_.size() - offset_ < n) {
      throw format_error(path_ + ": truncated " + what + " at offset " +
                         std::to_string(offset_));
    }
  }

  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint8_t>(data_[offset_]) |
                      (static_cast<std::uint16_t>(static_cast<std::uint8_t>(data_[offset_ + 1])) << 8);
    offset_ += 2;
    return v;
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[offset_ + i])) << (8 * i);
    }
    offset_ += 4;
    return v;
  }

  double f64(const char* what) {
    need(8, what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[offset_ + i])) << (8 * i);
    }
    offset_ += 8;
    return std::bit_cast<double>(bits);
  }

  std::string bytes(std::uint64_t n, const char* what) {
    need(n, what);
    std::string s = data_.substr(offset_, n);
    offset_ += n;
    return s;
  }

  std::uint64_t remaining() const { return data_.size() - offset_; }

 private:
  const std::string& data_;
  std::string path_;
  std::uint64_t offset_ = 0;
};

}  // namespace detail

inline void save_raster(const Raster& raster, const std::filesystem::path& path) {
  validate_raster(raster);
  for (const Band& b : raster.bands) {
    require(b.name.size() <= 0xffff, "band name longer than 65535 bytes: " + b.name);
  }

  std::string out;
  out.append(detail::kCarbMagic, 6);
  detail::put_u32(out, static_cast<std::uint32_t>(raster.width));
  detail::put_u32(out, static_cast<std::uint32_t>(raster.height));
  detail::put_f64(out, raster.cell_size);
  detail::put_f64(out, raster.origin_x);
  detail::put_f64(out, raster.origin_y);
  detail::put_u32(out, static_cast<std::uint32_t>(raster.bands.size()));
  for (const Band& b : raster.bands) {
    detail::put_u16(out, static_cast<std::uint16_t>(b.name.size()));
    out.append(b.name);
    for (double v : b.grid.values) detail::put_f64(out, v);
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw io_error("cannot open for writing: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw io_error("write failed: " + path.string());
}

inline Raster load_raster(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw io_error("cannot open: " + path.string());
  std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

  detail::ByteReader in(data, path.string());
  const std::string magic = in.bytes(6, "magic");
  if (std::memcmp(magic.data(), detail::kCarbMagic, 6) != 0) {
    throw format_error(path.string() + ": bad magic at offset 0 (expected CARB1)");
  }

  Raster r;
  const std::uint64_t width_offset = in.offset();
  const std::uint32_t width = in.u32("width");
  const std::uint64_t height_offset = in.offset();
  const std::uint32_t height = in.u32("height");
  if (width == 0) {
    throw format_error(path.string() + ": zero width at offset " + std::to_string(width_offset));
  }
  if (height == 0) {
    throw format_error(path.string() + ": zero height at offset " + std::to_string(height_offset));
  }
  const std::uint64_t cells = static_cast<std::uint64_t>(width) * height;
  if (width > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
      height > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
      cells > std::numeric_limits<std::uint64_t>::max() / 8) {
    throw format_error(path.string() + ": dimension overflow at offset " +
                       std::to_string(width_offset));
  }

  r.width = static_cast<int>(width);
  r.height = static_cast<int>(height);
  r.cell_size = in.f64("cell_size");
  r.origin_x = in.f64("origin_x");
  r.origin_y = in.f64("origin_y");
  const std::uint32_t band_count = in.u32("band_count");
  if (band_count == 0) {
    throw validation_error(path.string() + ": zero bands");
  }

  for (std::uint32_t bi = 0; bi < band_count; ++bi) {
    Band band;
    const std::uint16_t name_len = in.u16("band name length");
    band.name = in.bytes(name_len, "band name");
    in.need(cells * 8, "band payload");
    band.grid.width = r.width;
    band.grid.height = r.height;
    band.grid.values.resize(cells);
    for (std::uint64_t i = 0; i < cells; ++i) band.grid.values[i] = in.f64("band payload");
    r.bands.push_back(std::move(band));
  }
  if (in.remaining() != 0) {
    throw format_error(path.string() + ": trailing bytes at offset " +
                       std::to_string(in.offset()));
  }

  validate_raster(r);
  return r;
}

// Per-pixel (a-b)/(a+b). Pixels with a zero denominator or a NaN input are
// nodata; the ratio is clamped into [-1, 1] so mixed-sign inputs cannot
// escape the documented range.
inline Grid normalized_difference(const Raster& raster, std::string_view band_a,
                                  std::string_view band_b) {
  const Grid& a = raster.band(band_a);
  const Grid& b = raster.band(band_b);
  Grid out(raster.width, raster.height);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double va = a.values[i];
    const double vb = b.values[i];
    const double sum = va + vb;
    if (std::isnan(va) || std::isnan(vb) || sum == 0.0) {
      out.values[i] = std::numeric_limits<double>::quiet_NaN();
    } else {
      out.values[i] = std::clamp((va - vb) / sum, -1.0, 1.0);
    }
  }
  return out;
}

inline bool bitwise_equal(const Grid& a, const Grid& b) {
  if (a.width != b.width || a.height != b.height) return false;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.values[i]) != std::bit_cast<std::uint64_t>(b.values[i])) {
      return false;
    }
  }
  return true;
}

inline bool bitwise_equal(const Raster& a, const Raster& b) {
  if (a.width != b.width || a.height != b.height) return false;
  if (std::bit_cast<std::uint64_t>(a.cell_size) != std::bit_cast<std::uint64_t>(b.cell_size) ||
      std::bit_cast<std::uint64_t>(a.origin_x) != std::bit_cast<std::uint64_t>(b.origin_x) ||
      std::bit_cast<std::uint64_t>(a.origin_y) != std::bit_cast<std::uint64_t>(b.origin_y)) {
    return false;
  }
  if (a.bands.size() != b.bands.size()) return false;
  for (std::size_t i = 0; i < a.bands.size(); ++i) {
    if (a.bands[i].name != b.bands[i].name) return false;
    if (!bitwise_equal(a.bands[i].grid, b.bands[i].grid)) return false;
  }
  return true;
}

}  // namespace cityadapt
