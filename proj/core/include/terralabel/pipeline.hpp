#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "terralabel/forest.hpp"
#include "terralabel/metrics.hpp"
#include "terralabel/scene.hpp"
#include "terralabel/taxonomy.hpp"

namespace terralabel {

// Scenes whose mean cloud confidence reaches this fraction are skipped.
inline constexpr double kDefaultCloudThreshold = 0.90;

struct PipelineConfig {
  ForestParams forest;
  double cloud_threshold = kDefaultCloudThreshold;
  Taxonomy taxonomy = Taxonomy::defaults();
  unsigned workers = 1;  // threads used inside one scene (trees, row blocks)
};

struct SceneResult {
  std::string scene_id;
  std::string tile_id;
  std::string datetime;
  double cloud_fraction = 0.0;
  bool skipped = false;
  std::string skip_reason;
  std::optional<Metrics> metrics;             // test-half evaluation
  std::optional<ScenePrediction> prediction;  // empty when skipped
  std::filesystem::path model_path;
  std::array<std::uint64_t, kNumClasses> train_counts{};
  std::array<std::uint64_t, kNumClasses> test_counts{};
  std::uint64_t labeled_pixels = 0;
  std::uint64_t valid_pixels = 0;
};

// Seed used for every stochastic step of one scene; depends only on the
// master seed and the scene id, never on processing order.
std::uint64_t scene_seed(std::uint64_t master_seed, const std::string& scene_id);

// Reads a legacy-code raster and maps it to taxonomy classes. Nodata pixels
// become Unclassified; any other unknown code throws MappingError.
RasterGrid map_gl30_raster(const RasterGrid& gl30_codes, const Taxonomy& taxonomy);

// End-to-end processing of one scene: cloud gate, band loading and
// resampling, label regridding and agreement filtering, stratified sampling,
// training, test-half evaluation and full-raster prediction. When `out_dir`
// is non-empty every artifact is written there.
SceneResult run_scene(const SceneManifest& manifest,
                      const std::filesystem::path& gl30_path,
                      const PipelineConfig& config, std::uint64_t master_seed,
                      const std::filesystem::path& out_dir = {});

// --- Temporal aggregation ---------------------------------------------------

struct AnnualLabel {
  RasterGrid classes;                               // U8, 255 without observations
  std::array<RasterGrid, kNumClasses> summed;       // F32 probability sums
  RasterGrid count;                                 // U16 observations per pixel
  RasterGrid confidence;                            // F32 max sum / count

  [[nodiscard]] const GridSpec& grid() const { return classes.spec(); }

  // Per-pixel mean probabilities as a single prediction, usable where at
  // least one scene observed the pixel.
  [[nodiscard]] ScenePrediction as_prediction(const std::string& id = "annual") const;

  friend bool operator==(const AnnualLabel&, const AnnualLabel&) = default;
};

// Sums probability vectors over the scenes in which a pixel is usable and
// takes the argmax (ties to the lowest code). Each pixel's contributions are
// summed in sorted order, so the result is independent of input order.
// `grid` is required only when `predictions` is empty. Throws AlignmentError
// on mismatched grids.
AnnualLabel aggregate(std::span<const ScenePrediction> predictions,
                      const std::optional<GridSpec>& grid = std::nullopt,
                      unsigned workers = 1);

// --- Artifact I/O -----------------------------------------------------------

// classes.rbin, prob_0..7.rbin, usable.rbin
void write_prediction(const ScenePrediction& prediction, const std::filesystem::path& dir);
ScenePrediction read_prediction(const std::filesystem::path& dir);

// metrics.json for one scene (skipped scenes included).
void write_scene_metrics(const SceneResult& result, const std::filesystem::path& path);

// annual_classes.rbin, annual_conf.rbin, annual_count.rbin
void write_annual(const AnnualLabel& annual, const std::filesystem::path& dir);

}  // namespace terralabel
