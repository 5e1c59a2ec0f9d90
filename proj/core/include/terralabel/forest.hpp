#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "terralabel/labelgen.hpp"
#include "terralabel/raster.hpp"
#include "terralabel/rng.hpp"
#include "terralabel/scene.hpp"
#include "terralabel/taxonomy.hpp"

namespace terralabel {

struct ForestParams {
  std::uint32_t n_trees = 10;
  std::optional<std::uint32_t> max_depth;  // unbounded when empty
  std::uint32_t min_samples_split = 2;
  std::uint32_t features_per_split = 3;  // floor(sqrt(10))
  bool bootstrap = true;

  // Throws ArgumentError on n_trees == 0 or features_per_split outside 1..10.
  void validate() const;

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

using ClassDistribution = std::array<double, kNumClasses>;

// Index of the largest component; ties go to the lowest class code.
template <typename Vec>
int argmax_class(const Vec& v) {
  int best = 0;
  for (int k = 1; k < kNumClasses; ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

// 1 - sum (count_k / total)^2. Throws ArgumentError when total is zero.
double gini(std::span<const std::uint64_t> counts);

// Splits whose impurity decrease does not exceed this are rejected; it only
// filters out floating-point residue from mathematically useless splits.
inline constexpr double kMinImpurityDecrease = 1e-12;

struct SplitChoice {
  int feature = 0;
  float threshold = 0.0f;
  double decrease = 0.0;
};

// Threshold placed between consecutive distinct values a < b. Always satisfies
// a <= t < b so that routing (value <= t goes left) separates them.
float split_midpoint(float a, float b);

// Exact split search over the given rows and feature subset. Candidate
// thresholds are midpoints between consecutive distinct sorted values; the
// winner maximizes weighted Gini decrease, ties broken by lowest feature index
// and then lowest threshold. Empty when no split decreases impurity.
std::optional<SplitChoice> best_split(std::span<const FeatureVector> features,
                                      std::span<const std::uint8_t> labels,
                                      std::span<const std::uint32_t> rows,
                                      std::span<const int> feature_subset,
                                      std::span<const std::uint64_t> parent_counts);

// Convenience overload over every row.
std::optional<SplitChoice> best_split(std::span<const FeatureVector> features,
                                      std::span<const std::uint8_t> labels,
                                      std::span<const int> feature_subset);

struct TreeNode {
  int feature = -1;  // -1 for leaves
  float threshold = 0.0f;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  ClassDistribution distribution{};

  [[nodiscard]] bool is_leaf() const { return feature < 0; }
};

// Nodes are stored in pre-order; nodes[0] is the root.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  [[nodiscard]] const ClassDistribution& leaf_for(const FeatureVector& x) const;
  [[nodiscard]] std::size_t depth() const;
  [[nodiscard]] std::size_t leaf_count() const;
};

// Grows one tree on `rows` (duplicates allowed, as produced by bootstrap).
// Throws ArgumentError when rows is empty.
DecisionTree grow_tree(std::span<const FeatureVector> features,
                       std::span<const std::uint8_t> labels,
                       std::span<const std::uint32_t> rows,
                       const ForestParams& params, Rng64& rng);

struct TrainingMeta {
  std::string scene_id;
  std::uint64_t seed = 0;
  std::array<std::uint64_t, kNumClasses> class_counts{};
};

struct ForestModel {
  ForestParams params;
  std::vector<DecisionTree> trees;
  std::vector<std::uint8_t> classes;     // class codes, ascending
  std::vector<std::string> band_order;   // feature names
  TrainingMeta meta;
};

// Tree i is grown from a bootstrap resample drawn from stream (seed, TREE, i).
// Output is identical for any worker count. Throws TrainingError on empty data.
ForestModel train_forest(const SampleSet& train, const ForestParams& params,
                         std::uint64_t seed, unsigned workers = 1,
                         const std::string& scene_id = {});

// Mean of the leaf distributions reached in each tree.
ClassDistribution predict_proba(const ForestModel& model, const FeatureVector& x);

// argmax of predict_proba after rounding to float, i.e. exactly the class
// predict_raster stores next to its F32 probability planes.
std::uint8_t predict_class(const ForestModel& model, const FeatureVector& x);

struct ScenePrediction {
  std::string scene_id;
  std::string datetime;
  RasterGrid classes;  // U8, 255 where not usable
  std::array<RasterGrid, kNumClasses> probabilities;  // F32, zero where not usable
  RasterGrid usable;   // U8 0/1

  [[nodiscard]] const GridSpec& grid() const { return classes.spec(); }
};

// Predicts every pixel whose SCL code is usable and whose bands all carry
// data. Rows are processed in blocks across `workers` threads.
ScenePrediction predict_raster(const ForestModel& model, const Scene& scene,
                               const Taxonomy& taxonomy = Taxonomy::defaults(),
                               unsigned workers = 1);

// --- RFM model file ---------------------------------------------------------

std::vector<std::uint8_t> encode_model(const ForestModel& model);
ForestModel decode_model(std::span<const std::uint8_t> bytes);
std::uint64_t write_model(const ForestModel& model, const std::filesystem::path& path);
ForestModel read_model(const std::filesystem::path& path);

}  // namespace terralabel
