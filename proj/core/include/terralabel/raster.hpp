#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace terralabel {

// Geometry of a north-up raster. The origin is the top-left corner of pixel
// (0,0); row index grows southward. Pixel (r,c) has its center at
// (origin_x + (c+0.5)*pixel_size, origin_y - (r+0.5)*pixel_size).
struct GridSpec {
  std::uint32_t width = 1;
  std::uint32_t height = 1;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_size = 1.0;

  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(width) * height;
  }
  [[nodiscard]] double center_x(std::uint32_t col) const {
    return origin_x + (col + 0.5) * pixel_size;
  }
  [[nodiscard]] double center_y(std::uint32_t row) const {
    return origin_y - (row + 0.5) * pixel_size;
  }
  [[nodiscard]] double max_x() const { return origin_x + width * pixel_size; }
  [[nodiscard]] double min_y() const { return origin_y - height * pixel_size; }

  // Same grid at a different resolution covering the same extent.
  [[nodiscard]] GridSpec rescaled(double new_pixel_size) const;

  // Throws ArgumentError when width/height are zero or pixel_size is not
  // strictly positive and finite.
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

enum class Dtype : std::uint8_t { U8 = 0, U16 = 1, I16 = 2, F32 = 3 };

std::size_t dtype_size(Dtype dtype);
const char* dtype_name(Dtype dtype);

// Single-band raster. Values are held as double regardless of dtype; every
// dtype supported here is exactly representable in a double, so the
// conversion on I/O is lossless.
class RasterGrid {
 public:
  RasterGrid() = default;
  // Filled with nodata when present, zero otherwise.
  RasterGrid(const GridSpec& spec, Dtype dtype,
             std::optional<double> nodata = std::nullopt);
  RasterGrid(const GridSpec& spec, Dtype dtype, std::optional<double> nodata,
             std::vector<double> values);

  [[nodiscard]] const GridSpec& spec() const { return spec_; }
  [[nodiscard]] Dtype dtype() const { return dtype_; }
  [[nodiscard]] const std::optional<double>& nodata() const { return nodata_; }
  [[nodiscard]] std::uint32_t width() const { return spec_.width; }
  [[nodiscard]] std::uint32_t height() const { return spec_.height; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }

  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<double> mutable_values() { return values_; }

  [[nodiscard]] double at(std::uint32_t row, std::uint32_t col) const {
    return values_[static_cast<std::size_t>(row) * spec_.width + col];
  }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

  // F32 grids round the value through float so the in-memory copy always
  // matches what would be written.
  void set(std::uint32_t row, std::uint32_t col, double value) {
    set(static_cast<std::size_t>(row) * spec_.width + col, value);
  }
  void set(std::size_t i, double value) {
    values_[i] = dtype_ == Dtype::F32
                     ? static_cast<double>(static_cast<float>(value))
                     : value;
  }

  [[nodiscard]] bool is_nodata(double value) const;
  [[nodiscard]] bool is_nodata_at(std::size_t i) const {
    return is_nodata(values_[i]);
  }

  // Checks the grid invariants: spec valid, values length, every element
  // finite-or-nodata and representable in dtype. Throws ArgumentError.
  void validate() const;

  // Bit-exact comparison of spec, dtype, nodata and every value.
  friend bool operator==(const RasterGrid& a, const RasterGrid& b);

 private:
  GridSpec spec_{};
  Dtype dtype_ = Dtype::U8;
  std::optional<double> nodata_;
  std::vector<double> values_;
};

// --- RBIN container --------------------------------------------------------

inline constexpr std::size_t kRbinHeaderSize = 64;

std::vector<std::uint8_t> encode_rbin(const RasterGrid& grid);
RasterGrid decode_rbin(std::span<const std::uint8_t> bytes);

// Returns the number of bytes written (header + payload).
std::uint64_t write_rbin(const RasterGrid& grid,
                         const std::filesystem::path& path);
RasterGrid read_rbin(const std::filesystem::path& path);

// --- Resampling -------------------------------------------------------------

// Each target pixel takes the source pixel whose cell contains the target
// pixel center (indices clamped to the source bounds). dtype and nodata are
// preserved.
RasterGrid resample_nearest(const RasterGrid& src, const GridSpec& target);

// Bilinear blend of the four surrounding source pixel centers, clamped to the
// source center lattice. Output is F32; a nodata source pixel with nonzero
// weight makes the output pixel nodata.
RasterGrid resample_bilinear(const RasterGrid& src, const GridSpec& target);

}  // namespace terralabel
