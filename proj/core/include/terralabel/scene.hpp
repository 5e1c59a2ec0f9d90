#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "terralabel/raster.hpp"

namespace terralabel {

inline constexpr int kNumBands = 10;

// Feature order: the four 10 m bands followed by the six 20 m bands.
inline constexpr std::array<std::string_view, kNumBands> kBandNames = {
    "B02", "B03", "B04", "B08", "B05", "B06", "B07", "B8A", "B11", "B12"};
inline constexpr std::array<int, kNumBands> kBandResolution = {
    10, 10, 10, 10, 20, 20, 20, 20, 20, 20};

// Index of a band name in kBandNames, or -1.
int band_index(std::string_view name);

using FeatureVector = std::array<float, kNumBands>;

struct BandRef {
  std::filesystem::path path;
  int resolution = 10;
};

// One acquisition as described on disk. Paths are stored as written in the
// manifest; relative paths resolve against `base_dir`.
struct SceneManifest {
  std::string scene_id;
  std::string tile_id;
  std::string datetime;  // ISO-8601 UTC, e.g. 2017-07-01T10:30:00Z
  std::map<std::string, BandRef> bands;
  std::filesystem::path scl_path;
  std::filesystem::path cloud_conf_path;
  std::filesystem::path base_dir;

  [[nodiscard]] std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : base_dir / p;
  }

  // Throws ManifestError unless exactly the ten expected bands are present at
  // their native resolutions and the identifiers are non-empty.
  void validate() const;
};

SceneManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const SceneManifest& manifest,
                    const std::filesystem::path& path);

// A scene with every raster on the common 10 m grid.
struct Scene {
  std::string scene_id;
  std::string tile_id;
  std::string datetime;
  GridSpec grid;
  std::array<RasterGrid, kNumBands> bands;
  RasterGrid scl;
  RasterGrid cloud_conf;

  [[nodiscard]] FeatureVector features_at(std::size_t pixel) const {
    FeatureVector f{};
    for (int b = 0; b < kNumBands; ++b) {
      f[b] = static_cast<float>(bands[b][pixel]);
    }
    return f;
  }

  // Throws AlignmentError when any raster is off the common grid.
  void check_alignment() const;
};

// Reads every raster of a manifest: 10 m bands as-is, 20 m bands bilinearly
// resampled, SCL and cloud confidence nearest-neighbour resampled onto the
// B02 grid.
Scene load_scene(const SceneManifest& manifest);

}  // namespace terralabel
