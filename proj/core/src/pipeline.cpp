#include "terralabel/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "terralabel/error.hpp"
#include "terralabel/labelgen.hpp"
#include "terralabel/parallel.hpp"
#include "terralabel/rng.hpp"

namespace terralabel {

namespace fs = std::filesystem;

std::uint64_t scene_seed(std::uint64_t master_seed, const std::string& scene_id) {
  return Rng64::stream(master_seed, StreamTag::kSceneRun, fnv1a(scene_id.c_str())).next();
}

RasterGrid map_gl30_raster(const RasterGrid& gl30_codes, const Taxonomy& taxonomy) {
  RasterGrid out = make_label_raster(gl30_codes.spec());
  for (std::size_t i = 0; i < gl30_codes.size(); ++i) {
    if (gl30_codes.is_nodata_at(i)) continue;
    out.set(i, code_of(taxonomy.map_gl30(static_cast<int>(gl30_codes[i]))));
  }
  return out;
}

SceneResult run_scene(const SceneManifest& manifest, const fs::path& gl30_path,
                      const PipelineConfig& config, std::uint64_t master_seed,
                      const fs::path& out_dir) {
  manifest.validate();
  SceneResult res;
  res.scene_id = manifest.scene_id;
  res.tile_id = manifest.tile_id;
  res.datetime = manifest.datetime;

  if (!out_dir.empty()) fs::create_directories(out_dir);

  res.cloud_fraction =
      scene_cloud_fraction(read_rbin(manifest.resolve(manifest.cloud_conf_path)));
  if (!(res.cloud_fraction < config.cloud_threshold)) {
    res.skipped = true;
    res.skip_reason = "cloud";
    if (!out_dir.empty()) write_scene_metrics(res, out_dir / "metrics.json");
    return res;
  }

  const Scene scene = load_scene(manifest);
  const RasterGrid gl30_classes = map_gl30_raster(read_rbin(gl30_path), config.taxonomy);
  const RasterGrid gl30_10m = resample_nearest(gl30_classes, scene.grid);
  const RasterGrid labels = filter_labels(gl30_10m, scene.scl, config.taxonomy);
  const ValidityMask valid = build_validity_mask(scene);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels.is_nodata_at(i)) ++res.labeled_pixels;
  }
  res.valid_pixels = valid.count();

  const std::uint64_t seed = scene_seed(master_seed, manifest.scene_id);
  const auto candidates = pick_block_candidates(labels, valid, seed);
  if (candidates.empty()) {
    throw TrainingError(manifest.scene_id + ": no valid labeled pixels to sample");
  }
  const SampleSet samples = stratified_split(candidates, seed, scene);
  const SampleSet train = samples.subset(Split::Train);
  const SampleSet test = samples.subset(Split::Test);
  res.train_counts = train.class_counts();
  res.test_counts = test.class_counts();
  if (test.empty()) {
    throw TrainingError(manifest.scene_id + ": too few samples for a test half");
  }

  const ForestModel model =
      train_forest(train, config.forest, seed, config.workers, manifest.scene_id);

  std::vector<std::uint8_t> predicted(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    predicted[i] = predict_class(model, test.features[i]);
  }
  res.metrics = evaluate(predicted, test.labels);
  res.prediction = predict_raster(model, scene, config.taxonomy, config.workers);

  if (!out_dir.empty()) {
    res.model_path = out_dir / "model.rfm";
    write_model(model, res.model_path);
    write_prediction(*res.prediction, out_dir);
    write_rbin(labels, out_dir / "labels.rbin");
    write_rbin(valid.to_raster(), out_dir / "validity.rbin");
    write_samples_csv(samples, out_dir / "samples.csv");
    write_scene_metrics(res, out_dir / "metrics.json");
  }
  return res;
}

// --- Aggregation ------------------------------------------------------------

ScenePrediction AnnualLabel::as_prediction(const std::string& id) const {
  ScenePrediction p;
  p.scene_id = id;
  p.classes = classes;
  p.usable = RasterGrid(grid(), Dtype::U8);
  for (auto& plane : p.probabilities) plane = RasterGrid(grid(), Dtype::F32);
  for (std::size_t i = 0; i < count.size(); ++i) {
    const double n = count[i];
    if (n == 0) continue;
    p.usable.set(i, 1);
    for (int k = 0; k < kNumClasses; ++k) p.probabilities[k].set(i, summed[k][i] / n);
  }
  return p;
}

AnnualLabel aggregate(std::span<const ScenePrediction> predictions,
                      const std::optional<GridSpec>& grid, unsigned workers) {
  if (predictions.empty() && !grid) {
    throw ArgumentError("aggregating no predictions requires an explicit grid");
  }
  const GridSpec spec = grid ? *grid : predictions.front().grid();
  for (const auto& p : predictions) {
    const bool aligned = p.classes.spec() == spec && p.usable.spec() == spec &&
                         std::all_of(p.probabilities.begin(), p.probabilities.end(),
                                     [&](const RasterGrid& g) { return g.spec() == spec; });
    if (!aligned) {
      throw AlignmentError("prediction " + p.scene_id + " is not on the aggregation grid");
    }
  }

  AnnualLabel out;
  out.classes = make_label_raster(spec);
  for (auto& plane : out.summed) plane = RasterGrid(spec, Dtype::F32);
  out.count = RasterGrid(spec, Dtype::U16);
  out.confidence = RasterGrid(spec, Dtype::F32);

  constexpr std::uint32_t kRowsPerBlock = 32;
  const std::uint32_t blocks = (spec.height + kRowsPerBlock - 1) / kRowsPerBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    const auto row_begin = static_cast<std::uint32_t>(b) * kRowsPerBlock;
    const std::uint32_t row_end = std::min(row_begin + kRowsPerBlock, spec.height);
    std::vector<double> contributions;
    contributions.reserve(predictions.size());
    for (std::size_t i = static_cast<std::size_t>(row_begin) * spec.width;
         i < static_cast<std::size_t>(row_end) * spec.width; ++i) {
      std::size_t observations = 0;
      for (const auto& p : predictions) {
        if (p.usable[i] != 0) ++observations;
      }
      if (observations == 0) continue;

      std::array<float, kNumClasses> sums{};
      for (int k = 0; k < kNumClasses; ++k) {
        contributions.clear();
        for (const auto& p : predictions) {
          if (p.usable[i] != 0) contributions.push_back(p.probabilities[k][i]);
        }
        std::sort(contributions.begin(), contributions.end());
        double sum = 0.0;
        for (double v : contributions) sum += v;
        sums[k] = static_cast<float>(sum);
        out.summed[k].set(i, sums[k]);
      }
      const int best = argmax_class(sums);
      out.classes.set(i, best);
      out.count.set(i, static_cast<double>(std::min<std::size_t>(observations, 65535)));
      out.confidence.set(i, static_cast<double>(sums[best]) / static_cast<double>(observations));
    }
  });
  return out;
}

// --- Artifact I/O -----------------------------------------------------------

void write_prediction(const ScenePrediction& prediction, const fs::path& dir) {
  fs::create_directories(dir);
  write_rbin(prediction.classes, dir / "classes.rbin");
  for (int k = 0; k < kNumClasses; ++k) {
    write_rbin(prediction.probabilities[k], dir / ("prob_" + std::to_string(k) + ".rbin"));
  }
  write_rbin(prediction.usable, dir / "usable.rbin");
}

ScenePrediction read_prediction(const fs::path& dir) {
  ScenePrediction p;
  std::ifstream in(dir / "metrics.json");
  if (in) {
    const auto doc = nlohmann::json::parse(in);
    p.scene_id = doc.value("scene_id", "");
    p.datetime = doc.value("datetime", "");
  }
  p.classes = read_rbin(dir / "classes.rbin");
  for (int k = 0; k < kNumClasses; ++k) {
    p.probabilities[k] = read_rbin(dir / ("prob_" + std::to_string(k) + ".rbin"));
  }
  p.usable = read_rbin(dir / "usable.rbin");
  return p;
}

namespace {

nlohmann::ordered_json counts_json(const std::array<std::uint64_t, kNumClasses>& counts) {
  auto j = nlohmann::ordered_json::array();
  for (auto c : counts) j.push_back(c);
  return j;
}

}  // namespace

void write_scene_metrics(const SceneResult& r, const fs::path& path) {
  nlohmann::ordered_json doc;
  doc["scene_id"] = r.scene_id;
  doc["tile_id"] = r.tile_id;
  doc["datetime"] = r.datetime;
  doc["cloud_fraction"] = r.cloud_fraction;
  doc["skipped"] = r.skipped;
  doc["skip_reason"] = r.skip_reason;
  if (r.metrics) {
    const Metrics& m = *r.metrics;
    doc["accuracy"] = m.accuracy;
    doc["test_samples"] = m.total;
    auto confusion = nlohmann::ordered_json::array();
    auto normalized = nlohmann::ordered_json::array();
    for (int t = 0; t < kNumClasses; ++t) {
      confusion.push_back(counts_json(m.confusion[t]));
      auto row = nlohmann::ordered_json::array();
      for (double v : m.normalized[t]) row.push_back(v);
      normalized.push_back(std::move(row));
    }
    doc["confusion"] = std::move(confusion);
    doc["normalized_confusion"] = std::move(normalized);
    auto per_class = nlohmann::ordered_json::array();
    for (int k = 0; k < kNumClasses; ++k) {
      const ClassStats& s = m.per_class[k];
      per_class.push_back({{"class", k},
                           {"name", class_name(static_cast<LcClass>(k))},
                           {"support", s.support},
                           {"precision", s.precision},
                           {"precision_defined", s.precision_defined},
                           {"recall", s.recall},
                           {"recall_defined", s.recall_defined}});
    }
    doc["per_class"] = std::move(per_class);
    doc["samples"] = {{"train", counts_json(r.train_counts)},
                      {"test", counts_json(r.test_counts)}};
    doc["labeled_pixels"] = r.labeled_pixels;
    doc["valid_pixels"] = r.valid_pixels;
  }
  std::ofstream out(path);
  if (!out) throw WriteError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

void write_annual(const AnnualLabel& annual, const fs::path& dir) {
  fs::create_directories(dir);
  write_rbin(annual.classes, dir / "annual_classes.rbin");
  write_rbin(annual.confidence, dir / "annual_conf.rbin");
  write_rbin(annual.count, dir / "annual_count.rbin");
}

}  // namespace terralabel
