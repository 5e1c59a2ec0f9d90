#include "terralabel/labelgen.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "terralabel/error.hpp"
#include "terralabel/rng.hpp"

namespace terralabel {

RasterGrid make_label_raster(const GridSpec& grid) {
  return RasterGrid(grid, Dtype::U8, static_cast<double>(kUnclassified));
}

std::size_t ValidityMask::count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

RasterGrid ValidityMask::to_raster() const {
  std::vector<double> v(valid.begin(), valid.end());
  return RasterGrid(grid, Dtype::U8, std::nullopt, std::move(v));
}

double scene_cloud_fraction(const RasterGrid& cloud_conf) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < cloud_conf.size(); ++i) {
    if (cloud_conf.is_nodata_at(i)) continue;
    sum += cloud_conf[i];
    ++n;
  }
  if (n == 0) throw EmptyInputError("cloud confidence raster is all nodata");
  return sum / static_cast<double>(n) / 100.0;
}

RasterGrid filter_labels(const RasterGrid& gl30_10m, const RasterGrid& scl_10m,
                         const Taxonomy& taxonomy) {
  if (!(gl30_10m.spec() == scl_10m.spec())) {
    throw AlignmentError("label and SCL rasters are on different grids");
  }
  RasterGrid out = make_label_raster(gl30_10m.spec());
  for (std::size_t i = 0; i < gl30_10m.size(); ++i) {
    const double label = gl30_10m[i];
    if (!is_trainable(static_cast<int>(label)) || gl30_10m.is_nodata_at(i)) continue;
    const double s = scl_10m[i];
    if (scl_10m.is_nodata_at(i)) continue;
    if (taxonomy.scl_compatible(static_cast<LcClass>(label), static_cast<int>(s))) {
      out.set(i, label);
    }
  }
  return out;
}

ValidityMask build_validity_mask(const Scene& scene) {
  scene.check_alignment();
  ValidityMask mask{scene.grid, std::vector<std::uint8_t>(scene.grid.size(), 0)};
  for (std::size_t i = 0; i < mask.valid.size(); ++i) {
    if (scene.scl.is_nodata_at(i) || scene.cloud_conf.is_nodata_at(i)) continue;
    const int s = static_cast<int>(scene.scl[i]);
    if (std::find(kTrainingScl.begin(), kTrainingScl.end(), s) == kTrainingScl.end()) {
      continue;
    }
    if (!(scene.cloud_conf[i] < kMaxTrainingCloudConfidence)) continue;
    bool ok = true;
    for (const auto& band : scene.bands) {
      if (band.is_nodata_at(i) || !(band[i] > 0.0)) {
        ok = false;
        break;
      }
    }
    mask.valid[i] = ok ? 1 : 0;
  }
  return mask;
}

std::vector<Candidate> pick_block_candidates(const RasterGrid& labels,
                                             const ValidityMask& valid,
                                             std::uint64_t seed) {
  if (!(labels.spec() == valid.grid)) {
    throw AlignmentError("labels and validity mask are on different grids");
  }
  const std::uint32_t block_rows = labels.height() / kBlockSide;
  const std::uint32_t block_cols = labels.width() / kBlockSide;
  const std::uint32_t width = labels.width();

  std::vector<Candidate> out;
  std::array<std::uint32_t, kBlockSide * kBlockSide> eligible{};
  for (std::uint32_t br = 0; br < block_rows; ++br) {
    for (std::uint32_t bc = 0; bc < block_cols; ++bc) {
      // Modal label over the 9 pixels; 255 counts as its own value and
      // loses ties to every trainable class.
      std::array<int, kNumClasses + 1> counts{};
      for (std::uint32_t r = br * kBlockSide; r < (br + 1) * kBlockSide; ++r) {
        for (std::uint32_t c = bc * kBlockSide; c < (bc + 1) * kBlockSide; ++c) {
          const int v = static_cast<int>(labels.at(r, c));
          ++counts[is_trainable(v) ? v : kNumClasses];
        }
      }
      const auto mode = static_cast<int>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      if (mode == kNumClasses) continue;

      std::size_t n = 0;
      for (std::uint32_t r = br * kBlockSide; r < (br + 1) * kBlockSide; ++r) {
        for (std::uint32_t c = bc * kBlockSide; c < (bc + 1) * kBlockSide; ++c) {
          const std::size_t i = static_cast<std::size_t>(r) * width + c;
          if (valid[i] && static_cast<int>(labels[i]) == mode) {
            eligible[n++] = static_cast<std::uint32_t>(i);
          }
        }
      }
      if (n == 0) continue;
      const std::uint64_t block_index = static_cast<std::uint64_t>(br) * block_cols + bc;
      Rng64 rng = Rng64::stream(seed, StreamTag::kBlockPick, block_index);
      const std::uint32_t pick = eligible[rng.below(n)];
      out.push_back({pick / width, pick % width, static_cast<std::uint8_t>(mode)});
    }
  }
  return out;
}

SampleSet SampleSet::subset(Split which) const {
  SampleSet out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (split[i] == which) {
      out.push_back(features[i], labels[i], split[i], provenance[i][0], provenance[i][1]);
    }
  }
  return out;
}

std::array<std::uint64_t, kNumClasses> SampleSet::class_counts() const {
  std::array<std::uint64_t, kNumClasses> counts{};
  for (auto l : labels) ++counts[l];
  return counts;
}

std::array<std::uint64_t, kNumClasses> SampleSet::class_counts(Split which) const {
  std::array<std::uint64_t, kNumClasses> counts{};
  for (std::size_t i = 0; i < size(); ++i) {
    if (split[i] == which) ++counts[labels[i]];
  }
  return counts;
}

void SampleSet::push_back(const FeatureVector& f, std::uint8_t label, Split s,
                          std::uint32_t row, std::uint32_t col) {
  features.push_back(f);
  labels.push_back(label);
  split.push_back(s);
  provenance.push_back({row, col});
}

SampleSet assign_split(std::span<const Candidate> candidates, std::uint64_t seed) {
  if (candidates.empty()) throw ArgumentError("no sample candidates");
  std::vector<Split> tags(candidates.size(), Split::Train);
  for (int cls = 0; cls < kNumClasses; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i].cls == cls) members.push_back(i);
    }
    Rng64 rng = Rng64::stream(seed, StreamTag::kSplit, static_cast<std::uint64_t>(cls));
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.below(i)]);
    }
    for (std::size_t k = 0; k < members.size(); ++k) {
      tags[members[k]] = (k % 2 == 0) ? Split::Train : Split::Test;
    }
  }
  SampleSet out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!is_trainable(c.cls)) throw ArgumentError("candidate carries an untrainable class");
    out.push_back(FeatureVector{}, c.cls, tags[i], c.row, c.col);
  }
  return out;
}

SampleSet stratified_split(std::span<const Candidate> candidates,
                           std::uint64_t seed, const Scene& scene) {
  SampleSet out = assign_split(candidates, seed);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto [row, col] = out.provenance[i];
    out.features[i] = scene.features_at(static_cast<std::size_t>(row) * scene.grid.width + col);
  }
  return out;
}

void write_samples_csv(const SampleSet& samples, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw WriteError("cannot write " + path.string());
  out << "row,col,class,split";
  for (const auto name : kBandNames) out << ',' << name;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out << samples.provenance[i][0] << ',' << samples.provenance[i][1] << ','
        << static_cast<int>(samples.labels[i]) << ','
        << (samples.split[i] == Split::Train ? "train" : "test");
    for (float v : samples.features[i]) {
      std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(v));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace terralabel
