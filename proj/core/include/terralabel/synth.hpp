#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "terralabel/raster.hpp"
#include "terralabel/scene.hpp"
#include "terralabel/taxonomy.hpp"

namespace terralabel {

using ClassSpectra = std::array<std::array<double, kNumBands>, kNumClasses>;

// Parameters of a synthetic tile. Width and height are in 10 m pixels and
// must be multiples of 6 so the 20 m and 30 m grids nest exactly.
struct SynthSpec {
  std::uint32_t width = 384;
  std::uint32_t height = 384;
  std::uint32_t n_sites = 32;
  std::array<double, kNumClasses> class_weights{};
  ClassSpectra class_spectra{};
  double noise_sigma = 0.0;
  double cloud_fraction = 0.1;
  // Optional per-scene cloud targets; entries override cloud_fraction.
  std::vector<double> scene_cloud_fractions;
  double gl30_corruption = 0.2;
  std::uint32_t n_scenes = 12;
  std::uint64_t seed = 42;
  std::string tile_id = "T00SYN";
  double origin_x = 600000.0;
  double origin_y = 5100000.0;
  std::string start_date = "2017-07-01";
  std::uint32_t revisit_days = 30;

  // Throws ConfigError naming the offending field.
  void validate() const;

  [[nodiscard]] double cloud_target(std::uint32_t scene_index) const;
  [[nodiscard]] GridSpec grid10() const;

  // Uniform class weights, the built-in spectra, noise at 0.2x the minimum
  // inter-class spectral distance, 12 scenes at 10% cloud, 20% corruption.
  static SynthSpec reference();
};

// Built-in mean reflectances per class, band order as kBandNames.
const ClassSpectra& default_spectra();

// Smallest Euclidean distance between two class mean vectors.
double min_interclass_distance(const ClassSpectra& spectra);

SynthSpec synth_spec_from_json(std::string_view text);
SynthSpec read_synth_spec(const std::filesystem::path& path);
std::string synth_spec_to_json(const SynthSpec& spec);

// SCL code the generator assigns to a cloud-free block of this class.
int canonical_scl(LcClass cls);

// Voronoi truth map: n_sites points (stream SITES) each carrying a class drawn
// by weight; pixels take the class of the nearest site, ties to the lower
// site index. U8 raster on the 10 m grid.
RasterGrid gen_truth(const SynthSpec& spec);

struct GeneratedScene {
  SceneManifest manifest;
  std::array<RasterGrid, kNumBands> bands;  // native resolution
  RasterGrid scl;                           // 20 m
  RasterGrid cloud_conf;                    // 20 m
  double cloud_fraction = 0.0;              // measured on the 20 m grid
};

// Noisy band stack (stream SCENE, index), 20 m SCL from the modal truth class
// and cloud disks (stream CLOUD, index) until the scene's target is reached.
GeneratedScene gen_scene(const RasterGrid& truth, const SynthSpec& spec,
                         std::uint32_t scene_index);

// Modal truth class per 30 m cell (ties to the lowest code).
RasterGrid modal_classes_30m(const RasterGrid& truth);

// 30 m legacy raster: modal classes with exactly round(rate * cells) cells
// (stream CORRUPT) moved to a different class, encoded as the lowest legacy
// code of each class. U8 with 255 as nodata.
RasterGrid gen_gl30(const RasterGrid& truth, const SynthSpec& spec);

// Writes rasters and manifest.json into `dir`; manifest paths are relative.
void write_generated_scene(const GeneratedScene& scene, const std::filesystem::path& dir);

struct SynthSceneInfo {
  std::string scene_id;
  std::filesystem::path dir;
  double cloud_fraction = 0.0;
};

// Materializes a complete tile: truth.rbin, gl30.rbin, synthspec.json and one
// subdirectory per scene.
std::vector<SynthSceneInfo> synthesize_tile(const SynthSpec& spec,
                                            const std::filesystem::path& out_dir);

}  // namespace terralabel
