#include "terralabel/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "byte_io.hpp"
#include "terralabel/error.hpp"

namespace terralabel {

GridSpec GridSpec::rescaled(double new_pixel_size) const {
  GridSpec out = *this;
  out.pixel_size = new_pixel_size;
  out.width = static_cast<std::uint32_t>(
      std::llround(width * pixel_size / new_pixel_size));
  out.height = static_cast<std::uint32_t>(
      std::llround(height * pixel_size / new_pixel_size));
  return out;
}

void GridSpec::validate() const {
  if (width == 0 || height == 0) {
    throw ArgumentError("grid must be at least 1x1");
  }
  if (!(pixel_size > 0.0) || !std::isfinite(pixel_size)) {
    throw ArgumentError("pixel size must be positive and finite");
  }
  if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
    throw ArgumentError("grid origin must be finite");
  }
}

std::size_t dtype_size(Dtype dtype) {
  switch (dtype) {
    case Dtype::U8:
      return 1;
    case Dtype::U16:
    case Dtype::I16:
      return 2;
    case Dtype::F32:
      return 4;
  }
  throw UnsupportedDtypeError("unknown dtype");
}

const char* dtype_name(Dtype dtype) {
  switch (dtype) {
    case Dtype::U8:
      return "u8";
    case Dtype::U16:
      return "u16";
    case Dtype::I16:
      return "i16";
    case Dtype::F32:
      return "f32";
  }
  return "?";
}

namespace {

bool representable(Dtype dtype, double v) {
  switch (dtype) {
    case Dtype::U8:
      return v >= 0 && v <= 255 && v == std::floor(v);
    case Dtype::U16:
      return v >= 0 && v <= 65535 && v == std::floor(v);
    case Dtype::I16:
      return v >= -32768 && v <= 32767 && v == std::floor(v);
    case Dtype::F32:
      return std::isnan(v) ||
             static_cast<double>(static_cast<float>(v)) == v;
  }
  return false;
}

}  // namespace

RasterGrid::RasterGrid(const GridSpec& spec, Dtype dtype,
                       std::optional<double> nodata)
    : spec_(spec),
      dtype_(dtype),
      nodata_(nodata),
      values_(spec.size(), nodata.value_or(0.0)) {
  spec_.validate();
}

RasterGrid::RasterGrid(const GridSpec& spec, Dtype dtype,
                       std::optional<double> nodata, std::vector<double> values)
    : spec_(spec), dtype_(dtype), nodata_(nodata), values_(std::move(values)) {
  spec_.validate();
  if (values_.size() != spec_.size()) {
    throw ArgumentError("raster values length " +
                        std::to_string(values_.size()) + " != width*height " +
                        std::to_string(spec_.size()));
  }
  if (dtype_ == Dtype::F32) {
    for (double& v : values_) v = static_cast<double>(static_cast<float>(v));
  }
}

bool RasterGrid::is_nodata(double value) const {
  if (!nodata_) return false;
  if (std::isnan(*nodata_)) return std::isnan(value);
  return value == *nodata_;
}

void RasterGrid::validate() const {
  spec_.validate();
  if (values_.size() != spec_.size()) {
    throw ArgumentError("raster values length does not match its grid");
  }
  if (nodata_ && !representable(dtype_, *nodata_)) {
    throw ArgumentError(std::string("nodata value not representable as ") +
                        dtype_name(dtype_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (is_nodata(v)) continue;
    if (!std::isfinite(v) || !representable(dtype_, v)) {
      throw ArgumentError("raster element " + std::to_string(i) +
                          " is not a finite " + dtype_name(dtype_) + " value");
    }
  }
}

bool operator==(const RasterGrid& a, const RasterGrid& b) {
  if (!(a.spec_ == b.spec_) || a.dtype_ != b.dtype_) return false;
  if (a.nodata_.has_value() != b.nodata_.has_value()) return false;
  if (a.nodata_ && std::bit_cast<std::uint64_t>(*a.nodata_) !=
                       std::bit_cast<std::uint64_t>(*b.nodata_)) {
    return false;
  }
  if (a.values_.size() != b.values_.size()) return false;
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.values_[i]) !=
        std::bit_cast<std::uint64_t>(b.values_[i])) {
      return false;
    }
  }
  return true;
}

// --- RBIN -------------------------------------------------------------------

std::vector<std::uint8_t> encode_rbin(const RasterGrid& grid) {
  grid.validate();
  const GridSpec& s = grid.spec();
  detail::ByteWriter w;
  w.bytes("RBN1");
  w.u8(static_cast<std::uint8_t>(grid.dtype()));
  w.u8(grid.nodata() ? 1 : 0);
  w.zeros(2);
  w.u32(s.width);
  w.u32(s.height);
  w.f64(s.origin_x);
  w.f64(s.origin_y);
  w.f64(s.pixel_size);
  w.f64(grid.nodata().value_or(0.0));
  w.zeros(16);

  for (double v : grid.values()) {
    switch (grid.dtype()) {
      case Dtype::U8:
        w.u8(static_cast<std::uint8_t>(v));
        break;
      case Dtype::U16:
        w.u16(static_cast<std::uint16_t>(v));
        break;
      case Dtype::I16:
        w.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
        break;
      case Dtype::F32:
        w.f32(static_cast<float>(v));
        break;
    }
  }
  return std::move(w).take();
}

RasterGrid decode_rbin(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || bytes[0] != 'R' || bytes[1] != 'B' ||
      bytes[2] != 'N' || bytes[3] != '1') {
    throw FormatError("not an RBIN file (bad magic)");
  }
  if (bytes.size() < kRbinHeaderSize) {
    throw LengthError("RBIN header truncated");
  }
  detail::ByteReader r(bytes);
  r.skip(4);
  const std::uint8_t code = r.u8();
  if (code > 3) {
    throw UnsupportedDtypeError("unknown RBIN dtype code " +
                                std::to_string(code));
  }
  const auto dtype = static_cast<Dtype>(code);
  const bool has_nodata = r.u8() != 0;
  r.skip(2);
  GridSpec spec;
  spec.width = r.u32();
  spec.height = r.u32();
  spec.origin_x = r.f64();
  spec.origin_y = r.f64();
  spec.pixel_size = r.f64();
  const double nodata = r.f64();
  r.skip(16);

  const std::size_t payload = spec.size() * dtype_size(dtype);
  if (bytes.size() - kRbinHeaderSize < payload) {
    throw LengthError("RBIN payload truncated: expected " +
                      std::to_string(payload) + " bytes, found " +
                      std::to_string(bytes.size() - kRbinHeaderSize));
  }

  std::vector<double> values(spec.size());
  for (double& v : values) {
    switch (dtype) {
      case Dtype::U8:
        v = r.u8();
        break;
      case Dtype::U16:
        v = r.u16();
        break;
      case Dtype::I16:
        v = static_cast<std::int16_t>(r.u16());
        break;
      case Dtype::F32:
        v = r.f32();
        break;
    }
  }
  return RasterGrid(spec, dtype,
                    has_nodata ? std::optional<double>(nodata) : std::nullopt,
                    std::move(values));
}

std::uint64_t write_rbin(const RasterGrid& grid,
                         const std::filesystem::path& path) {
  const auto bytes = encode_rbin(grid);
  detail::write_file(path, bytes);
  return bytes.size();
}

RasterGrid read_rbin(const std::filesystem::path& path) {
  return decode_rbin(detail::read_file(path));
}

// --- Resampling -------------------------------------------------------------

namespace {

void check_overlap(const GridSpec& src, const GridSpec& target) {
  const bool disjoint = target.origin_x >= src.max_x() ||
                        target.max_x() <= src.origin_x ||
                        target.origin_y <= src.min_y() ||
                        target.min_y() >= src.origin_y;
  if (disjoint) {
    throw ArgumentError("target grid does not overlap source extent");
  }
}

std::uint32_t clamp_index(double idx, std::uint32_t n) {
  if (!(idx >= 0.0)) return 0;
  if (idx >= static_cast<double>(n - 1)) return n - 1;
  return static_cast<std::uint32_t>(idx);
}

}  // namespace

RasterGrid resample_nearest(const RasterGrid& src, const GridSpec& target) {
  if (src.size() == 0) throw ArgumentError("cannot resample an empty raster");
  target.validate();
  const GridSpec& s = src.spec();
  check_overlap(s, target);

  // Column and row lookups are separable; precompute them once.
  std::vector<std::uint32_t> col_of(target.width);
  for (std::uint32_t c = 0; c < target.width; ++c) {
    col_of[c] = clamp_index(
        std::floor((target.center_x(c) - s.origin_x) / s.pixel_size), s.width);
  }
  std::vector<std::uint32_t> row_of(target.height);
  for (std::uint32_t r = 0; r < target.height; ++r) {
    row_of[r] = clamp_index(
        std::floor((s.origin_y - target.center_y(r)) / s.pixel_size),
        s.height);
  }

  RasterGrid out(target, src.dtype(), src.nodata());
  auto dst = out.mutable_values();
  for (std::uint32_t r = 0; r < target.height; ++r) {
    for (std::uint32_t c = 0; c < target.width; ++c) {
      dst[static_cast<std::size_t>(r) * target.width + c] =
          src.at(row_of[r], col_of[c]);
    }
  }
  return out;
}

namespace {

struct Tap {
  std::uint32_t lo;
  std::uint32_t hi;
  double frac;  // weight of `hi`
};

Tap bilinear_tap(double pos, std::uint32_t n) {
  const double clamped = std::clamp(pos, 0.0, static_cast<double>(n - 1));
  const auto lo = static_cast<std::uint32_t>(std::floor(clamped));
  const std::uint32_t hi = std::min(lo + 1, n - 1);
  return {lo, hi, clamped - lo};
}

}  // namespace

RasterGrid resample_bilinear(const RasterGrid& src, const GridSpec& target) {
  if (src.size() == 0) throw ArgumentError("cannot resample an empty raster");
  target.validate();
  const GridSpec& s = src.spec();

  std::vector<Tap> col_tap(target.width);
  for (std::uint32_t c = 0; c < target.width; ++c) {
    col_tap[c] = bilinear_tap(
        (target.center_x(c) - s.origin_x) / s.pixel_size - 0.5, s.width);
  }
  std::vector<Tap> row_tap(target.height);
  for (std::uint32_t r = 0; r < target.height; ++r) {
    row_tap[r] = bilinear_tap(
        (s.origin_y - target.center_y(r)) / s.pixel_size - 0.5, s.height);
  }

  std::optional<double> nodata;
  if (src.nodata()) {
    nodata = static_cast<double>(static_cast<float>(*src.nodata()));
  }
  RasterGrid out(target, Dtype::F32, nodata);
  for (std::uint32_t r = 0; r < target.height; ++r) {
    const Tap& ty = row_tap[r];
    for (std::uint32_t c = 0; c < target.width; ++c) {
      const Tap& tx = col_tap[c];
      const double v00 = src.at(ty.lo, tx.lo);
      const double v01 = src.at(ty.lo, tx.hi);
      const double v10 = src.at(ty.hi, tx.lo);
      const double v11 = src.at(ty.hi, tx.hi);
      const bool use_x = tx.frac > 0.0;
      const bool use_y = ty.frac > 0.0;
      const bool poisoned =
          src.is_nodata(v00) || (use_x && src.is_nodata(v01)) ||
          (use_y && src.is_nodata(v10)) ||
          (use_x && use_y && src.is_nodata(v11));
      if (poisoned) {
        out.set(r, c, *nodata);
        continue;
      }
      // lerp is exact at the endpoints and bounded by them, which keeps
      // constants exact and results inside the source range.
      const double top = std::lerp(v00, v01, tx.frac);
      const double bottom = std::lerp(v10, v11, tx.frac);
      out.set(r, c, std::lerp(top, bottom, ty.frac));
    }
  }
  return out;
}

}  // namespace terralabel
