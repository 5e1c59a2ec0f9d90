#include "terralabel/forest.hpp"

#include <algorithm>
#include <numeric>

#include "terralabel/error.hpp"
#include "terralabel/parallel.hpp"

namespace terralabel {

void ForestParams::validate() const {
  if (n_trees < 1) throw ArgumentError("n_trees must be at least 1");
  if (features_per_split < 1 || features_per_split > kNumBands) {
    throw ArgumentError("features_per_split must be in 1..10");
  }
}

double gini(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw ArgumentError("gini of an empty node");
  const auto t = static_cast<double>(total);
  double sum_sq = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / t;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

float split_midpoint(float a, float b) {
  const auto mid =
      static_cast<float>((static_cast<double>(a) + static_cast<double>(b)) / 2.0);
  return mid < b ? mid : a;
}

std::optional<SplitChoice> best_split(std::span<const FeatureVector> features,
                                      std::span<const std::uint8_t> labels,
                                      std::span<const std::uint32_t> rows,
                                      std::span<const int> feature_subset,
                                      std::span<const std::uint64_t> parent_counts) {
  const std::size_t n = rows.size();
  if (n < 2 || feature_subset.empty()) return std::nullopt;

  std::vector<int> subset(feature_subset.begin(), feature_subset.end());
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());

  const double parent_gini = gini(parent_counts);
  const auto total = static_cast<double>(n);

  std::optional<SplitChoice> best;
  std::vector<std::pair<float, std::uint8_t>> column(n);
  std::array<std::uint64_t, kNumClasses> left{};
  std::array<std::uint64_t, kNumClasses> right{};

  for (const int f : subset) {
    for (std::size_t i = 0; i < n; ++i) {
      column[i] = {features[rows[i]][f], labels[rows[i]]};
    }
    std::sort(column.begin(), column.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    left.fill(0);
    std::copy(parent_counts.begin(), parent_counts.end(), right.begin());

    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left[column[i].second];
      --right[column[i].second];
      if (!(column[i].first < column[i + 1].first)) continue;
      const auto nl = static_cast<double>(i + 1);
      const auto nr = static_cast<double>(n - i - 1);
      const double weighted = (nl / total) * gini(left) + (nr / total) * gini(right);
      const double decrease = parent_gini - weighted;
      if (decrease > kMinImpurityDecrease && (!best || decrease > best->decrease)) {
        best = SplitChoice{f, split_midpoint(column[i].first, column[i + 1].first),
                           decrease};
      }
    }
  }
  return best;
}

std::optional<SplitChoice> best_split(std::span<const FeatureVector> features,
                                      std::span<const std::uint8_t> labels,
                                      std::span<const int> feature_subset) {
  std::vector<std::uint32_t> rows(features.size());
  std::iota(rows.begin(), rows.end(), 0u);
  std::array<std::uint64_t, kNumClasses> counts{};
  for (auto l : labels) ++counts[l];
  if (rows.empty()) return std::nullopt;
  return best_split(features, labels, rows, feature_subset, counts);
}

const ClassDistribution& DecisionTree::leaf_for(const FeatureVector& x) const {
  std::uint32_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& node = nodes[i];
    i = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes[i].distribution;
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::size_t deepest = 0;
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(nodes[i].left, d + 1);
      stack.emplace_back(nodes[i].right, d + 1);
    }
  }
  return deepest;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(std::span<const FeatureVector> features,
              std::span<const std::uint8_t> labels, const ForestParams& params,
              Rng64& rng)
      : features_(features), labels_(labels), params_(params), rng_(rng) {}

  DecisionTree build(std::vector<std::uint32_t> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  std::uint32_t grow(std::vector<std::uint32_t> rows, std::uint32_t depth) {
    std::array<std::uint64_t, kNumClasses> counts{};
    for (auto r : rows) ++counts[labels_[r]];
    const auto index = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    const auto distinct = std::count_if(counts.begin(), counts.end(),
                                        [](auto c) { return c > 0; });
    const bool stop = distinct <= 1 || rows.size() < params_.min_samples_split ||
                      (params_.max_depth && depth >= *params_.max_depth);
    std::optional<SplitChoice> split;
    if (!stop) {
      const auto subset = draw_features();
      split = best_split(features_, labels_, rows, subset, counts);
    }
    if (!split) {
      auto& dist = tree_.nodes[index].distribution;
      const auto n = static_cast<double>(rows.size());
      for (int k = 0; k < kNumClasses; ++k) dist[k] = static_cast<double>(counts[k]) / n;
      return index;
    }

    std::vector<std::uint32_t> left_rows;
    std::vector<std::uint32_t> right_rows;
    for (auto r : rows) {
      (features_[r][split->feature] <= split->threshold ? left_rows : right_rows)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree_.nodes[index].feature = split->feature;
    tree_.nodes[index].threshold = split->threshold;
    const std::uint32_t left = grow(std::move(left_rows), depth + 1);
    const std::uint32_t right = grow(std::move(right_rows), depth + 1);
    tree_.nodes[index].left = left;
    tree_.nodes[index].right = right;
    return index;
  }

  // Partial Fisher-Yates over the band indices.
  std::vector<int> draw_features() {
    std::array<int, kNumBands> perm{};
    std::iota(perm.begin(), perm.end(), 0);
    const std::uint32_t k = params_.features_per_split;
    for (std::uint32_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::uint32_t>(rng_.below(kNumBands - i));
      std::swap(perm[i], perm[j]);
    }
    std::vector<int> subset(perm.begin(), perm.begin() + k);
    std::sort(subset.begin(), subset.end());
    return subset;
  }

  std::span<const FeatureVector> features_;
  std::span<const std::uint8_t> labels_;
  const ForestParams& params_;
  Rng64& rng_;
  DecisionTree tree_;
};

}  // namespace

DecisionTree grow_tree(std::span<const FeatureVector> features,
                       std::span<const std::uint8_t> labels,
                       std::span<const std::uint32_t> rows,
                       const ForestParams& params, Rng64& rng) {
  if (rows.empty()) throw ArgumentError("cannot grow a tree without samples");
  params.validate();
  TreeBuilder builder(features, labels, params, rng);
  return builder.build({rows.begin(), rows.end()});
}

ForestModel train_forest(const SampleSet& train, const ForestParams& params,
                         std::uint64_t seed, unsigned workers,
                         const std::string& scene_id) {
  if (train.empty()) throw TrainingError("no training samples");
  params.validate();

  ForestModel model;
  model.params = params;
  model.trees.resize(params.n_trees);
  for (int k = 0; k < kNumClasses; ++k) model.classes.push_back(static_cast<std::uint8_t>(k));
  for (const auto name : kBandNames) model.band_order.emplace_back(name);
  model.meta = {scene_id, seed, train.class_counts()};

  const auto n = static_cast<std::uint32_t>(train.size());
  parallel_for(params.n_trees, workers, [&](std::size_t t) {
    Rng64 rng = Rng64::stream(seed, StreamTag::kTree, t);
    std::vector<std::uint32_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<std::uint32_t>(rng.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), 0u);
    }
    model.trees[t] = grow_tree(train.features, train.labels, rows, params, rng);
  });
  return model;
}

ClassDistribution predict_proba(const ForestModel& model, const FeatureVector& x) {
  ClassDistribution sum{};
  for (const auto& tree : model.trees) {
    const auto& leaf = tree.leaf_for(x);
    for (int k = 0; k < kNumClasses; ++k) sum[k] += leaf[k];
  }
  const auto n = static_cast<double>(model.trees.size());
  for (auto& p : sum) p /= n;
  return sum;
}

std::uint8_t predict_class(const ForestModel& model, const FeatureVector& x) {
  const ClassDistribution p = predict_proba(model, x);
  std::array<float, kNumClasses> stored{};
  for (int k = 0; k < kNumClasses; ++k) stored[k] = static_cast<float>(p[k]);
  return static_cast<std::uint8_t>(argmax_class(stored));
}

ScenePrediction predict_raster(const ForestModel& model, const Scene& scene,
                               const Taxonomy& taxonomy, unsigned workers) {
  scene.check_alignment();
  ScenePrediction out;
  out.scene_id = scene.scene_id;
  out.datetime = scene.datetime;
  out.classes = make_label_raster(scene.grid);
  for (auto& plane : out.probabilities) plane = RasterGrid(scene.grid, Dtype::F32);
  out.usable = RasterGrid(scene.grid, Dtype::U8);

  constexpr std::uint32_t kRowsPerBlock = 32;
  const std::uint32_t width = scene.grid.width;
  const std::uint32_t blocks = (scene.grid.height + kRowsPerBlock - 1) / kRowsPerBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    const auto row_begin = static_cast<std::uint32_t>(b) * kRowsPerBlock;
    const std::uint32_t row_end = std::min(row_begin + kRowsPerBlock, scene.grid.height);
    for (std::size_t i = static_cast<std::size_t>(row_begin) * width;
         i < static_cast<std::size_t>(row_end) * width; ++i) {
      if (scene.scl.is_nodata_at(i) || !taxonomy.usable_scl(static_cast<int>(scene.scl[i]))) {
        continue;
      }
      const bool has_data = std::none_of(scene.bands.begin(), scene.bands.end(),
                                         [i](const RasterGrid& g) { return g.is_nodata_at(i); });
      if (!has_data) continue;
      const ClassDistribution p = predict_proba(model, scene.features_at(i));
      std::array<float, kNumClasses> stored{};
      for (int k = 0; k < kNumClasses; ++k) {
        stored[k] = static_cast<float>(p[k]);
        out.probabilities[k].set(i, stored[k]);
      }
      out.classes.set(i, argmax_class(stored));
      out.usable.set(i, 1);
    }
  });
  return out;
}

}  // namespace terralabel
