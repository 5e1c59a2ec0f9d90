#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "terralabel/error.hpp"
#include "terralabel/parallel.hpp"
#include "terralabel/pipeline.hpp"
#include "terralabel/synth.hpp"

namespace terralabel::cli {

namespace fs = std::filesystem;
using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WriteError("cannot write " + path.string());
  out << text;
}

// Per-scene output subdirectories holding a metrics.json, sorted by name.
std::vector<fs::path> scene_output_dirs(const fs::path& dir) {
  std::vector<fs::path> dirs;
  if (!fs::is_directory(dir)) return dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "metrics.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return Json::parse(in);
}

struct AnnualInputs {
  std::string tile_id;
  std::vector<std::string> scenes;
  std::vector<std::string> skipped;
};

void write_annual_outputs(const AnnualLabel& annual, const AnnualInputs& inputs,
                          const std::optional<RasterGrid>& truth, const fs::path& dir) {
  write_annual(annual, dir);
  OrderedJson report;
  report["tile_id"] = inputs.tile_id;
  report["aggregation"] = "unweighted per-pixel probability sum";
  report["scenes"] = inputs.scenes;
  report["skipped"] = inputs.skipped;
  std::array<std::uint64_t, kNumClasses> class_pixels{};
  std::uint64_t observed = 0;
  double confidence_sum = 0.0;
  for (std::size_t i = 0; i < annual.count.size(); ++i) {
    if (annual.count[i] == 0) continue;
    ++observed;
    ++class_pixels[static_cast<int>(annual.classes[i])];
    confidence_sum += annual.confidence[i];
  }
  report["observed_pixels"] = observed;
  report["unobserved_pixels"] = annual.count.size() - observed;
  report["class_pixels"] = class_pixels;
  report["mean_confidence"] = observed ? confidence_sum / static_cast<double>(observed) : 0.0;
  if (truth && truth->spec() == annual.grid() && observed > 0) {
    std::uint64_t agree = 0;
    for (std::size_t i = 0; i < annual.count.size(); ++i) {
      if (annual.count[i] != 0 && annual.classes[i] == (*truth)[i]) ++agree;
    }
    report["truth_accuracy"] = static_cast<double>(agree) / static_cast<double>(observed);
  }
  write_text(dir / "annual_report.json", report.dump(2) + "\n");
}

// Maps library exceptions to the exit-code contract.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

// --- RunConfig --------------------------------------------------------------

RunConfig RunConfig::from_json(std::string_view text, const fs::path& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("run config: expected a JSON object");
  RunConfig c;
  try {
    if (!doc.contains("tile_dir")) throw ConfigError("tile_dir: required");
    if (!doc.contains("output_dir")) throw ConfigError("output_dir: required");
    c.tile_dir = resolve(base_dir, doc.at("tile_dir").get<std::string>());
    c.output_dir = resolve(base_dir, doc.at("output_dir").get<std::string>());
    if (doc.contains("seed") && !doc.at("seed").is_null()) {
      if (!doc.at("seed").is_number_unsigned()) {
        throw ConfigError("seed: must be a non-negative integer");
      }
      c.seed = doc.at("seed").get<std::uint64_t>();
    }
    c.cloud_threshold = doc.value("cloud_threshold", c.cloud_threshold);
    c.workers = doc.value("workers", c.workers);
    if (doc.contains("taxonomy") && !doc.at("taxonomy").is_null()) {
      c.taxonomy = resolve(base_dir, doc.at("taxonomy").get<std::string>());
    }
    if (doc.contains("forest")) {
      const auto& f = doc.at("forest");
      c.forest.n_trees = f.value("n_trees", c.forest.n_trees);
      if (f.contains("max_depth") && !f.at("max_depth").is_null()) {
        c.forest.max_depth = f.at("max_depth").get<std::uint32_t>();
      }
      c.forest.min_samples_split = f.value("min_samples_split", c.forest.min_samples_split);
      c.forest.features_per_split = f.value("features_per_split", c.forest.features_per_split);
      c.forest.bootstrap = f.value("bootstrap", c.forest.bootstrap);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read run config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), path.parent_path());
}

void RunConfig::apply(const Overrides& o) {
  if (o.seed) seed = o.seed;
  if (o.workers) workers = *o.workers;
  if (o.trees) forest.n_trees = *o.trees;
  if (o.cloud_threshold) cloud_threshold = *o.cloud_threshold;
  if (o.taxonomy) taxonomy = o.taxonomy;
}

void RunConfig::validate() const {
  if (!seed) throw ConfigError("seed: required (set it in the config or pass --seed)");
  if (!(cloud_threshold > 0.0 && cloud_threshold <= 1.0)) {
    throw ConfigError("cloud_threshold: must be in (0, 1]");
  }
  if (workers < 1) throw ConfigError("workers: must be at least 1");
  try {
    forest.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("forest: ") + e.what());
  }
}

// --- Commands ---------------------------------------------------------------

int cmd_synth(const fs::path& spec_path, const std::optional<fs::path>& out_dir,
              const Overrides& overrides, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!fs::exists(spec_path)) {
      err << "missing input: " << spec_path.string() << '\n';
      return static_cast<int>(kExitMissingInput);
    }
    SynthSpec spec = read_synth_spec(spec_path);
    if (overrides.seed) spec.seed = *overrides.seed;
    const fs::path dir = out_dir ? *out_dir : spec_path.parent_path() / spec.tile_id;
    const auto scenes = synthesize_tile(spec, dir);
    for (const auto& s : scenes) {
      out << s.scene_id << " cloud=" << fixed4(s.cloud_fraction) << " -> "
          << s.dir.string() << '\n';
    }
    out << "wrote " << scenes.size() << " scenes to " << dir.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_run(const fs::path& config_path, const Overrides& overrides, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (!fs::exists(config_path)) {
      err << "missing input: " << config_path.string() << '\n';
      return kExitMissingInput;
    }
    RunConfig config = RunConfig::from_file(config_path);
    config.apply(overrides);
    config.validate();

    PipelineConfig pipeline;
    pipeline.forest = config.forest;
    pipeline.cloud_threshold = config.cloud_threshold;
    pipeline.workers = 1;
    if (config.taxonomy) {
      if (!fs::exists(*config.taxonomy)) {
        err << "missing input: " << config.taxonomy->string() << '\n';
        return kExitMissingInput;
      }
      pipeline.taxonomy = Taxonomy::from_json_file(*config.taxonomy);
    }

    const fs::path gl30_path = config.tile_dir / "gl30.rbin";
    if (!fs::is_directory(config.tile_dir) || !fs::exists(gl30_path)) {
      err << "missing input: tile directory with gl30.rbin at " << config.tile_dir.string()
          << '\n';
      return kExitMissingInput;
    }
    std::vector<fs::path> manifests;
    for (const auto& entry : fs::directory_iterator(config.tile_dir)) {
      if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
        manifests.push_back(entry.path() / "manifest.json");
      }
    }
    std::sort(manifests.begin(), manifests.end());
    if (manifests.empty()) {
      err << "missing input: no scene manifests under " << config.tile_dir.string() << '\n';
      return kExitMissingInput;
    }

    struct Outcome {
      std::optional<SceneResult> result;
      std::string scene_id;
      std::string error;
    };
    std::vector<Outcome> outcomes(manifests.size());
    const std::uint64_t seed = *config.seed;
    parallel_for(manifests.size(), config.workers, [&](std::size_t i) {
      Outcome& o = outcomes[i];
      o.scene_id = manifests[i].parent_path().filename().string();
      try {
        const SceneManifest manifest = read_manifest(manifests[i]);
        o.scene_id = manifest.scene_id;
        o.result = run_scene(manifest, gl30_path, pipeline, seed,
                             config.output_dir / manifest.scene_id);
      } catch (const std::exception& e) {
        o.error = e.what();
      }
    });

    OrderedJson summary;
    OrderedJson scenes = OrderedJson::array();
    std::vector<std::string> evaluated;
    std::vector<std::string> skipped;
    std::vector<std::string> failed;
    std::vector<double> accuracies;
    std::vector<ScenePrediction> predictions;
    std::string tile_id;
    for (auto& o : outcomes) {
      OrderedJson entry;
      entry["scene_id"] = o.scene_id;
      if (!o.result) {
        entry["status"] = "failed";
        entry["error"] = o.error;
        failed.push_back(o.scene_id);
        err << o.scene_id << ": " << o.error << '\n';
        scenes.push_back(std::move(entry));
        continue;
      }
      SceneResult& r = *o.result;
      if (tile_id.empty()) tile_id = r.tile_id;
      entry["datetime"] = r.datetime;
      entry["cloud_fraction"] = r.cloud_fraction;
      if (r.skipped) {
        entry["status"] = "skipped";
        entry["reason"] = r.skip_reason;
        skipped.push_back(r.scene_id);
        out << r.scene_id << " skipped (" << r.skip_reason << ", cloud "
            << fixed4(r.cloud_fraction) << ")\n";
      } else {
        entry["status"] = "evaluated";
        entry["accuracy"] = r.metrics->accuracy;
        evaluated.push_back(r.scene_id);
        accuracies.push_back(r.metrics->accuracy);
        predictions.push_back(std::move(*r.prediction));
        out << r.scene_id << " accuracy " << fixed4(r.metrics->accuracy) << '\n';
      }
      scenes.push_back(std::move(entry));
    }

    const double average = mean_accuracy(accuracies);
    summary["tile_id"] = tile_id;
    summary["seed"] = seed;
    summary["cloud_threshold"] = config.cloud_threshold;
    summary["n_trees"] = config.forest.n_trees;
    summary["scenes"] = std::move(scenes);
    summary["evaluated"] = evaluated;
    summary["skipped"] = skipped;
    summary["failed"] = failed;
    summary["scene_accuracies"] = accuracies;
    summary["average_accuracy"] = average;
    summary["averaging"] = "unweighted mean of per-scene test-half accuracies";

    fs::create_directories(config.output_dir);
    if (!predictions.empty()) {
      const AnnualLabel annual = aggregate(predictions, std::nullopt, config.workers);
      std::optional<RasterGrid> truth;
      if (fs::exists(config.tile_dir / "truth.rbin")) {
        truth = read_rbin(config.tile_dir / "truth.rbin");
      }
      write_annual_outputs(annual, {tile_id, evaluated, skipped}, truth, config.output_dir);
    }
    write_text(config.output_dir / "summary.json", summary.dump(2) + "\n");
    out << "average accuracy " << fixed4(average) << " over " << evaluated.size()
        << " scenes (" << skipped.size() << " skipped, " << failed.size() << " failed)\n";
    return failed.empty() ? kExitOk : kExitRuntime;
  });
}

int cmd_report(const fs::path& dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const auto dirs = scene_output_dirs(dir);
    if (dirs.empty()) {
      err << "missing input: no metrics.json under " << dir.string() << '\n';
      return kExitMissingInput;
    }

    ConfusionCounts pooled{};
    std::vector<double> accuracies;
    out << std::left << std::setw(28) << "scene" << std::setw(11) << "status"
        << "accuracy\n";
    for (const auto& d : dirs) {
      const Json m = read_json(d / "metrics.json");
      const std::string id = m.value("scene_id", d.filename().string());
      if (m.value("skipped", false)) {
        out << std::setw(28) << id << std::setw(11) << "skipped"
            << m.value("skip_reason", "") << '\n';
        continue;
      }
      const double acc = m.at("accuracy").get<double>();
      accuracies.push_back(acc);
      const auto& confusion = m.at("confusion");
      for (int t = 0; t < kNumClasses; ++t) {
        for (int p = 0; p < kNumClasses; ++p) {
          pooled[t][p] += confusion.at(t).at(p).get<std::uint64_t>();
        }
      }
      out << std::setw(28) << id << std::setw(11) << "evaluated" << fixed4(acc) << '\n';
    }
    out << "tile average accuracy: " << fixed4(mean_accuracy(accuracies)) << " ("
        << accuracies.size() << " scenes, unweighted)\n\n";

    const Metrics pooled_metrics = metrics_from_confusion(pooled);
    out << "per-class statistics (pooled test halves)\n";
    out << std::setw(24) << "class" << std::right << std::setw(9) << "support"
        << std::setw(10) << "recall" << std::setw(11) << "precision" << std::left << '\n';
    for (int k = 0; k < kNumClasses; ++k) {
      const ClassStats& s = pooled_metrics.per_class[k];
      out << std::setw(24) << class_name(static_cast<LcClass>(k)) << std::right
          << std::setw(9) << s.support << std::setw(10)
          << (s.recall_defined ? fixed4(s.recall) : "n/a") << std::setw(11)
          << (s.precision_defined ? fixed4(s.precision) : "n/a") << std::left << '\n';
    }

    out << "\nnormalized confusion matrix (rows: true class, columns: predicted)\n";
    out << std::setw(24) << "";
    for (int p = 0; p < kNumClasses; ++p) out << std::right << std::setw(8) << p;
    out << std::left << '\n';
    for (int t = 0; t < kNumClasses; ++t) {
      out << std::setw(24) << (std::to_string(t) + " " + std::string(class_name(static_cast<LcClass>(t))));
      for (int p = 0; p < kNumClasses; ++p) {
        out << std::right << std::setw(8) << fixed4(pooled_metrics.normalized[t][p]);
      }
      out << std::left << '\n';
    }
    return kExitOk;
  });
}

int cmd_aggregate(const fs::path& dir, const Overrides& overrides, std::ostream& out,
                  std::ostream& err) {
  return guarded(err, [&]() -> int {
    const auto dirs = scene_output_dirs(dir);
    if (dirs.empty()) {
      err << "missing input: no scene outputs under " << dir.string() << '\n';
      return kExitMissingInput;
    }
    std::vector<ScenePrediction> predictions;
    AnnualInputs inputs;
    for (const auto& d : dirs) {
      const Json m = read_json(d / "metrics.json");
      if (inputs.tile_id.empty()) inputs.tile_id = m.value("tile_id", "");
      if (m.value("skipped", false)) {
        inputs.skipped.push_back(m.value("scene_id", ""));
        continue;
      }
      predictions.push_back(read_prediction(d));
      inputs.scenes.push_back(predictions.back().scene_id);
    }
    if (predictions.empty()) {
      err << "missing input: every scene under " << dir.string() << " was skipped\n";
      return kExitMissingInput;
    }
    const AnnualLabel annual = aggregate(predictions, std::nullopt, overrides.workers.value_or(1));
    write_annual_outputs(annual, inputs, std::nullopt, dir);
    out << "aggregated " << predictions.size() << " scenes into " << dir.string() << '\n';
    return kExitOk;
  });
}

// --- Argument parsing -------------------------------------------------------

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"terralabel: land-cover label synthesis from legacy labels and multispectral scenes"};
  app.require_subcommand(1);

  Overrides o;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::uint32_t trees = 10;
  double cloud = 0.9;
  std::string taxonomy;
  auto* seed_opt = app.add_option("--seed", seed, "Master random seed")->check(CLI::NonNegativeNumber);
  auto* workers_opt = app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  auto* trees_opt = app.add_option("--trees", trees, "Trees per forest")->check(CLI::PositiveNumber);
  auto* cloud_opt = app.add_option("--cloud-threshold", cloud, "Skip scenes at or above this cloud fraction");
  auto* tax_opt = app.add_option("--taxonomy", taxonomy, "Taxonomy override JSON");
  for (auto* opt : {seed_opt, workers_opt, trees_opt, cloud_opt, tax_opt}) {
    opt->configurable(false);
  }
  app.fallthrough();

  std::string synth_spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic tile");
  synth->add_option("spec", synth_spec, "Synthetic tile spec (JSON)")->required();
  synth->add_option("-o,--out", synth_out, "Output tile directory");

  std::string run_config;
  auto* run = app.add_subcommand("run", "Process every scene of a tile and aggregate");
  run->add_option("config", run_config, "Run config (JSON)")->required();

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Print accuracy and confusion tables");
  report->add_option("dir", report_dir, "Run output directory")->required();

  std::string aggregate_dir;
  auto* agg = app.add_subcommand("aggregate", "Re-aggregate existing scene predictions");
  agg->add_option("dir", aggregate_dir, "Run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitConfig;
  }

  if (seed_opt->count()) o.seed = seed;
  if (workers_opt->count()) o.workers = workers;
  if (trees_opt->count()) o.trees = trees;
  if (cloud_opt->count()) o.cloud_threshold = cloud;
  if (tax_opt->count()) o.taxonomy = taxonomy;

  if (*synth) {
    return cmd_synth(synth_spec, synth_out.empty() ? std::nullopt : std::optional<fs::path>(synth_out),
                     o, out, err);
  }
  if (*run) return cmd_run(run_config, o, out, err);
  if (*report) return cmd_report(report_dir, out, err);
  return cmd_aggregate(aggregate_dir, o, out, err);
}

}  // namespace terralabel::cli
