// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Tolerances are fixed here, not tuned.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cli.hpp"
#include "golden_fixtures.hpp"
#include "oracles.hpp"
#include "terralabel/labelgen.hpp"
#include "terralabel/pipeline.hpp"
#include "terralabel/synth.hpp"
#include "test_support.hpp"

using namespace terralabel;
namespace fs = std::filesystem;
using terralabel::testing::TempDir;
using terralabel::testing::file_bytes;
using terralabel::testing::grid;
using terralabel::testing::write_text;

namespace {

constexpr double kMinSceneAccuracy = 0.95;
constexpr double kMinTileAccuracy = 0.97;
constexpr double kMaxRunSeconds = 60.0;
constexpr double kProbabilityTolerance = 1e-6;
constexpr double kBilinearTolerance = 1e-6;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

nlohmann::json read_json(const fs::path& p) {
  const auto b = file_bytes(p);
  return nlohmann::json::parse(std::string(b.begin(), b.end()));
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "terralabel");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out;
  std::ostringstream err;
  const int rc = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (rc != 0) std::cerr << err.str();
  return rc;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SampleSet random_samples(std::mt19937_64& gen, std::size_t n, int classes) {
  SampleSet s;
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cls = static_cast<std::uint8_t>(gen() % classes);
    FeatureVector f{};
    for (auto& v : f) v = u(gen) * 0.3f + 0.1f * static_cast<float>(cls % 4);
    s.push_back(f, cls, Split::Train);
  }
  return s;
}

}  // namespace

int main() {
  TempDir work("acceptance");
  const fs::path tile = work / "reference_tile";

  // Shared reference run: the 384x384, 12-scene tile at seed 42, one worker.
  const auto synth_t0 = std::chrono::steady_clock::now();
  synthesize_tile(SynthSpec::reference(), tile);
  const double synth_seconds = seconds_since(synth_t0);
  write_text(work / "run1.json", R"({"tile_dir": "reference_tile", "output_dir": "out1", "seed": 42, "workers": 1})");
  write_text(work / "run4.json", R"({"tile_dir": "reference_tile", "output_dir": "out4", "seed": 42, "workers": 4})");
  const auto run_t0 = std::chrono::steady_clock::now();
  const int run1_rc = run_cli({"run", (work / "run1.json").string()});
  const double run_seconds = seconds_since(run_t0);

  report("reference tile accuracy and runtime", [&] {
    if (run1_rc != 0) return Outcome{false, "run exited with " + std::to_string(run1_rc)};
    const auto summary = read_json(work / "out1" / "summary.json");
    double worst = 1.0;
    for (const auto& a : summary["scene_accuracies"]) worst = std::min(worst, a.get<double>());
    const double avg = summary["average_accuracy"].get<double>();
    const std::size_t evaluated = summary["evaluated"].size();
    const bool ok = evaluated > 0 && worst >= kMinSceneAccuracy && avg >= kMinTileAccuracy &&
                    run_seconds < kMaxRunSeconds;
    return Outcome{ok, std::to_string(evaluated) + " scenes, min scene " + fmt(worst) +
                           " (need >= " + fmt(kMinSceneAccuracy, 2) + "), tile average " +
                           fmt(avg) + " (need >= " + fmt(kMinTileAccuracy, 2) +
                           "), single-worker run " + fmt(run_seconds, 1) + " s (need < " +
                           fmt(kMaxRunSeconds, 0) + " s; synthesis " + fmt(synth_seconds, 1) +
                           " s)"};
  });

  report("split search equals exhaustive enumeration", [] {
    std::mt19937_64 gen(20240601);
    int with_split = 0;
    for (int iter = 0; iter < 1000; ++iter) {
      const std::size_t n = 1 + gen() % 64;
      const int n_features = 1 + static_cast<int>(gen() % 4);
      const int classes = 1 + static_cast<int>(gen() % kNumClasses);
      const bool coarse = gen() % 2 == 0;
      std::vector<FeatureVector> x(n);
      std::vector<std::uint8_t> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : x[i]) {
          v = coarse ? static_cast<float>(gen() % 5)
                     : static_cast<float>(static_cast<double>(gen() % 100000) / 7919.0);
        }
        y[i] = static_cast<std::uint8_t>(gen() % classes);
      }
      std::vector<int> features(kNumBands);
      std::iota(features.begin(), features.end(), 0);
      std::shuffle(features.begin(), features.end(), gen);
      features.resize(n_features);
      const auto got = best_split(x, y, features);
      const auto want = oracle::best_split(x, y, features);
      const bool same = got.has_value() == want.has_value() &&
                        (!got || (got->feature == want->feature &&
                                  got->threshold == want->threshold &&
                                  got->decrease == want->decrease));
      if (!same) return Outcome{false, "mismatch on instance " + std::to_string(iter)};
      with_split += got.has_value();
    }
    return Outcome{true, "1000/1000 instances exact (" + std::to_string(with_split) +
                             " with a split)"};
  });

  report("resampling oracles", [] {
    std::mt19937_64 gen(77);
    const double sizes[] = {10.0, 20.0, 30.0};
    std::size_t pixels = 0;
    for (int iter = 0; iter < 200; ++iter) {
      const GridSpec s = grid(1 + gen() % 16, 1 + gen() % 16, sizes[gen() % 3],
                              10.0 * static_cast<double>(gen() % 20),
                              1000.0 + 10.0 * static_cast<double>(gen() % 20));
      std::vector<double> v(s.size());
      for (auto& x : v) x = static_cast<double>(gen() % 256);
      const RasterGrid src(s, Dtype::U8, std::nullopt, v);
      const auto span_x = static_cast<std::uint64_t>(s.width * s.pixel_size / 10);
      const auto span_y = static_cast<std::uint64_t>(s.height * s.pixel_size / 10);
      const GridSpec t = grid(1 + gen() % 16, 1 + gen() % 16, sizes[gen() % 3],
                              s.origin_x + 10.0 * static_cast<double>(gen() % span_x),
                              s.origin_y - 10.0 * static_cast<double>(gen() % span_y));
      const RasterGrid out = resample_nearest(src, t);
      for (std::uint32_t r = 0; r < t.height; ++r) {
        for (std::uint32_t c = 0; c < t.width; ++c) {
          if (out.at(r, c) != oracle::nearest(src, t.center_x(c), t.center_y(r))) {
            return Outcome{false, "nearest mismatch on grid " + std::to_string(iter)};
          }
          ++pixels;
        }
      }
    }
    const RasterGrid quad(grid(2, 2, 20.0), Dtype::F32, std::nullopt, {0, 2, 4, 6});
    const double p11 = resample_bilinear(quad, grid(4, 4, 10.0)).at(1, 1);
    if (std::abs(p11 - 1.5) > kBilinearTolerance) {
      return Outcome{false, "bilinear (1,1) = " + fmt(p11, 9)};
    }
    const RasterGrid flat(grid(5, 4, 20.0), Dtype::F32, std::nullopt, std::vector<double>(20, 5.0));
    for (const GridSpec& t : {grid(10, 8, 10.0), grid(13, 7, 7.0, 1.0, -3.0), grid(2, 2, 60.0)}) {
      const RasterGrid out = resample_bilinear(flat, t);
      for (double v : out.values()) {
        if (v != 5.0) return Outcome{false, "bilinear constant not preserved"};
      }
    }
    return Outcome{true, "nearest exact on 200 grids (" + std::to_string(pixels) +
                             " pixels); bilinear (1,1) = " + fmt(p11, 6) + "; constants exact"};
  });

  report("probability normalization", [&] {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    double worst = 0.0;
    for (int iter = 0; iter < 30; ++iter) {
      ForestParams p;
      p.n_trees = 1 + static_cast<std::uint32_t>(gen() % 15);
      p.features_per_split = 1 + static_cast<std::uint32_t>(gen() % 10);
      p.bootstrap = gen() % 2 == 0;
      if (gen() % 3 == 0) p.max_depth = static_cast<std::uint32_t>(gen() % 6);
      const ForestModel m = train_forest(random_samples(gen, 20 + gen() % 300, 1 + gen() % 8), p, gen());
      for (int k = 0; k < 300; ++k) {
        FeatureVector x{};
        for (auto& v : x) v = u(gen);
        const auto prob = predict_proba(m, x);
        worst = std::max(worst, std::abs(std::accumulate(prob.begin(), prob.end(), 0.0) - 1.0));
      }
    }
    std::size_t pixels = 0;
    double worst_raster = 0.0;
    for (const auto& entry : fs::directory_iterator(work / "out1")) {
      if (!fs::exists(entry.path() / "classes.rbin")) continue;
      const ScenePrediction pred = read_prediction(entry.path());
      for (std::size_t i = 0; i < pred.usable.size(); ++i) {
        if (pred.usable[i] == 0) continue;
        double sum = 0.0;
        for (const auto& plane : pred.probabilities) sum += plane[i];
        worst_raster = std::max(worst_raster, std::abs(sum - 1.0));
        ++pixels;
      }
    }
    const bool ok = worst <= kProbabilityTolerance && worst_raster <= kProbabilityTolerance && pixels > 0;
    return Outcome{ok, "max |sum-1| " + fmt(worst, 12) + " over 9000 random queries, " +
                           fmt(worst_raster, 9) + " over " + std::to_string(pixels) +
                           " usable scene pixels (tolerance 1e-6)"};
  });

  report("determinism", [&] {
    if (run_cli({"run", (work / "run4.json").string()}) != 0) return Outcome{false, "4-worker run failed"};
    if (file_bytes(work / "out1" / "summary.json") != file_bytes(work / "out4" / "summary.json")) {
      return Outcome{false, "summary.json differs between 1 and 4 workers"};
    }
    const auto summary = read_json(work / "out1" / "summary.json");
    std::size_t compared = 0;
    for (const auto& id : summary["evaluated"]) {
      for (const char* f : {"classes.rbin", "model.rfm"}) {
        const auto a = file_bytes(work / "out1" / id.get<std::string>() / f);
        if (a.empty() || a != file_bytes(work / "out4" / id.get<std::string>() / f)) {
          return Outcome{false, std::string(f) + " differs for " + id.get<std::string>()};
        }
        ++compared;
      }
    }
    Rng64 rng(0);
    if (rng.next() != 0xE220A8397B1DCDAFULL) return Outcome{false, "splitmix64 seed 0 vector"};
    for (std::uint64_t seed : {0ULL, 42ULL, ~0ULL}) {
      oracle::SplitMix ref{seed};
      Rng64 r(seed);
      for (int i = 0; i < 1000; ++i) {
        if (r.next() != ref.next()) return Outcome{false, "splitmix64 diverges from reference"};
      }
    }
    return Outcome{true, "workers 1 vs 4: summary.json and " + std::to_string(compared) +
                             " classes.rbin/model.rfm files byte-identical; splitmix64 seed 0 -> "
                             "0xE220A8397B1DCDAF and 3x1000 draws match the reference"};
  });

  report("filtering contracts", [] {
    std::mt19937_64 gen(5);
    for (int iter = 0; iter < 200; ++iter) {
      const GridSpec g = grid(1 + gen() % 30, 1 + gen() % 30, 10.0);
      RasterGrid labels = make_label_raster(g);
      RasterGrid scl(g, Dtype::U8, 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto v = gen() % 10;
        labels.set(i, v < 8 ? static_cast<double>(v) : 255.0);
        scl.set(i, static_cast<double>(gen() % 12));
      }
      const RasterGrid out = filter_labels(labels, scl);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (out[i] != labels[i] && out[i] != kUnclassified) {
          return Outcome{false, "filter changed a class"};
        }
      }
    }
    const GridSpec g = grid(32, 32, 10.0);
    RasterGrid labels = make_label_raster(g);
    RasterGrid scl(g, Dtype::U8, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      labels.set(i, static_cast<double>(gen() % 8));
      scl.set(i, static_cast<double>(gen() % 12));
    }
    auto labeled = [&](const Taxonomy& t) {
      std::size_t n = 0;
      const RasterGrid out = filter_labels(labels, scl, t);
      for (double v : out.values()) n += v != kUnclassified;
      return n;
    };
    for (int m = 0; m < 50; ++m) {
      Taxonomy t = Taxonomy::defaults();
      for (int k = 0; k < kNumClasses; ++k) {
        t.set_compatible_mask(static_cast<LcClass>(k), static_cast<SclMask>(gen() & 0x0FFF));
      }
      const std::size_t before = labeled(t);
      for (int k = 0; k < kNumClasses; ++k) {
        Taxonomy reduced = t;
        reduced.set_compatible_mask(static_cast<LcClass>(k), 0);
        if (labeled(reduced) > before) return Outcome{false, "row removal added labels"};
      }
    }
    return Outcome{true, "no class changes on 200 random rasters; row removal never increases "
                         "labeled pixels on 50 random matrices x 8 rows"};
  });

  report("cloud gate", [&] {
    SynthSpec s = SynthSpec::reference();
    s.width = 192;
    s.height = 192;
    s.n_scenes = 2;
    s.scene_cloud_fractions = {0.95, 0.85};
    const auto scenes = synthesize_tile(s, work / "gate_tile");
    const PipelineConfig config;
    const auto gl30 = work / "gate_tile" / "gl30.rbin";
    const SceneResult a = run_scene(read_manifest(scenes[0].dir / "manifest.json"), gl30, config, 1);
    const SceneResult b = run_scene(read_manifest(scenes[1].dir / "manifest.json"), gl30, config, 1);
    const bool ok = config.cloud_threshold == 0.90 && a.skipped && a.skip_reason == "cloud" &&
                    !b.skipped && b.metrics.has_value();
    return Outcome{ok, "cloud " + fmt(a.cloud_fraction) + " -> " +
                           (a.skipped ? "skipped (" + a.skip_reason + ")" : "processed") +
                           ", cloud " + fmt(b.cloud_fraction) + " -> " +
                           (b.skipped ? "skipped" : "processed") + ", threshold 0.90 strict"};
  });

  report("aggregation", [&] {
    std::vector<ScenePrediction> preds;
    for (const auto& entry : fs::directory_iterator(work / "out1")) {
      if (fs::exists(entry.path() / "classes.rbin")) preds.push_back(read_prediction(entry.path()));
    }
    if (preds.size() < 2) return Outcome{false, "not enough scene predictions"};
    auto bytes = [](const AnnualLabel& a) {
      std::vector<std::uint8_t> all = encode_rbin(a.classes);
      for (const RasterGrid* g : {&a.count, &a.confidence}) {
        const auto b = encode_rbin(*g);
        all.insert(all.end(), b.begin(), b.end());
      }
      for (const auto& plane : a.summed) {
        const auto b = encode_rbin(plane);
        all.insert(all.end(), b.begin(), b.end());
      }
      return all;
    };
    const auto base = bytes(aggregate(preds));
    std::mt19937_64 gen(8);
    for (int perm = 0; perm < 20; ++perm) {
      std::shuffle(preds.begin(), preds.end(), gen);
      if (bytes(aggregate(preds, std::nullopt, 1 + perm % 4)) != base) {
        return Outcome{false, "ordering " + std::to_string(perm) + " changed the annual label"};
      }
    }
    for (const auto& p : preds) {
      const AnnualLabel single = aggregate(std::vector<ScenePrediction>{p});
      for (std::size_t i = 0; i < p.usable.size(); ++i) {
        if (p.usable[i] != 0 && single.classes[i] != p.classes[i]) {
          return Outcome{false, "single-scene aggregate differs from " + p.scene_id};
        }
      }
    }
    return Outcome{true, "20 orderings of " + std::to_string(preds.size()) +
                             " scenes byte-identical; single-scene aggregates equal each "
                             "scene's class plane on its usable mask"};
  });

  report("format stability", [] {
    const fs::path dir = TERRALABEL_GOLDEN_DIR;
    const std::pair<const char*, RasterGrid> rasters[] = {{"u8_3x2.rbin", golden::u8_grid()},
                                                          {"f32_2x2.rbin", golden::f32_grid()},
                                                          {"i16_4x1.rbin", golden::i16_grid()}};
    for (const auto& [name, expected] : rasters) {
      const auto b = file_bytes(dir / name);
      if (b.empty() || !(read_rbin(dir / name) == expected) || encode_rbin(expected) != b) {
        return Outcome{false, std::string(name) + " does not round-trip"};
      }
    }
    const std::uint8_t header[16] = {0x52, 0x42, 0x4e, 0x31, 0x00, 0x01, 0x00, 0x00,
                                     0x03, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00};
    const auto u8 = file_bytes(dir / "u8_3x2.rbin");
    double ox = 0, oy = 0, ps = 0, nd = 0;
    std::memcpy(&ox, u8.data() + 16, 8);
    std::memcpy(&oy, u8.data() + 24, 8);
    std::memcpy(&ps, u8.data() + 32, 8);
    std::memcpy(&nd, u8.data() + 40, 8);
    const bool header_ok = std::memcmp(u8.data(), header, 16) == 0 && ox == 600000.0 &&
                           oy == 5100000.0 && ps == 30.0 && nd == 255.0 &&
                           std::all_of(u8.begin() + 48, u8.begin() + 64, [](auto c) { return c == 0; });
    if (!header_ok) return Outcome{false, "RBIN header layout changed"};
    const auto rfm = file_bytes(dir / "model_2trees.rfm");
    if (rfm.empty() || encode_model(read_model(dir / "model_2trees.rfm")) != rfm ||
        encode_model(golden::model()) != rfm || std::memcmp(rfm.data(), "RFM1", 4) != 0) {
      return Outcome{false, "RFM golden model does not round-trip"};
    }
    return Outcome{true, "3 RBIN + 1 RFM golden files re-read bit-exactly; header verified byte by byte"};
  });

  std::cout << (failures == 0 ? "all acceptance criteria passed"
                              : std::to_string(failures) + " acceptance criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
