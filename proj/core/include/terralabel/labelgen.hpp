#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "terralabel/raster.hpp"
#include "terralabel/scene.hpp"
#include "terralabel/taxonomy.hpp"

namespace terralabel {

// Label rasters are U8 with Unclassified (255) as nodata.
RasterGrid make_label_raster(const GridSpec& grid);

// Side of the square block of 10 m pixels covered by one 30 m label cell.
inline constexpr std::uint32_t kBlockSide = 3;

// SCL codes accepted for training pixels (stricter than the usable set).
inline constexpr std::array<int, 4> kTrainingScl = {4, 5, 6, 11};
inline constexpr double kMaxTrainingCloudConfidence = 50.0;  // exclusive

struct ValidityMask {
  GridSpec grid;
  std::vector<std::uint8_t> valid;

  [[nodiscard]] bool operator[](std::size_t i) const { return valid[i] != 0; }
  [[nodiscard]] std::size_t count() const;
  [[nodiscard]] RasterGrid to_raster() const;
};

// Mean of the non-nodata confidence values divided by 100.
// Throws EmptyInputError when every pixel is nodata.
double scene_cloud_fraction(const RasterGrid& cloud_conf);

// Keeps a legacy class only where the SCL code agrees with it; every other
// pixel becomes Unclassified. Throws AlignmentError when the grids differ.
RasterGrid filter_labels(const RasterGrid& gl30_10m, const RasterGrid& scl_10m,
                         const Taxonomy& taxonomy = Taxonomy::defaults());

// True where all bands hold positive non-nodata reflectance, SCL is one of
// kTrainingScl and cloud confidence is below kMaxTrainingCloudConfidence.
ValidityMask build_validity_mask(const Scene& scene);

struct Candidate {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  std::uint8_t cls = kUnclassified;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// One candidate per 3x3 block whose modal label is trainable: a valid pixel
// carrying that label chosen uniformly from the block's own stream. Blocks
// without such a pixel contribute nothing. Output is in block raster order.
std::vector<Candidate> pick_block_candidates(const RasterGrid& labels,
                                             const ValidityMask& valid,
                                             std::uint64_t seed);

enum class Split : std::uint8_t { Train = 0, Test = 1 };

struct SampleSet {
  std::vector<FeatureVector> features;
  std::vector<std::uint8_t> labels;
  std::vector<Split> split;
  std::vector<std::array<std::uint32_t, 2>> provenance;  // (row, col) at 10 m

  [[nodiscard]] std::size_t size() const { return labels.size(); }
  [[nodiscard]] bool empty() const { return labels.empty(); }
  [[nodiscard]] SampleSet subset(Split which) const;
  [[nodiscard]] std::array<std::uint64_t, kNumClasses> class_counts() const;
  [[nodiscard]] std::array<std::uint64_t, kNumClasses> class_counts(Split which) const;
  void push_back(const FeatureVector& f, std::uint8_t label, Split s,
                 std::uint32_t row = 0, std::uint32_t col = 0);
};

// Per class, shuffles the candidates (stream SPLIT, index = class code) and
// alternates train/test starting with train. Samples keep candidate order.
// Features are left zero. Throws ArgumentError on an empty candidate list.
SampleSet assign_split(std::span<const Candidate> candidates, std::uint64_t seed);

// assign_split followed by gathering each sample's band values from `scene`.
SampleSet stratified_split(std::span<const Candidate> candidates,
                           std::uint64_t seed, const Scene& scene);

// Columnar audit dump: row,col,class,split,B02..B12.
void write_samples_csv(const SampleSet& samples, const std::filesystem::path& path);

}  // namespace terralabel
