#include "terralabel/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "terralabel/error.hpp"
#include "terralabel/labelgen.hpp"
#include "terralabel/rng.hpp"

namespace terralabel {

namespace fs = std::filesystem;

const ClassSpectra& default_spectra() {
  // Band order B02 B03 B04 B08 B05 B06 B07 B8A B11 B12.
  static const ClassSpectra spectra = {{
      {0.16, 0.15, 0.13, 0.12, 0.13, 0.12, 0.12, 0.12, 0.12, 0.12},  // water
      {0.94, 0.92, 0.89, 0.79, 0.88, 0.84, 0.82, 0.78, 0.19, 0.16},  // snow/ice
      {0.14, 0.16, 0.14, 0.32, 0.18, 0.26, 0.30, 0.32, 0.20, 0.14},  // wetland
      {0.13, 0.17, 0.18, 0.42, 0.23, 0.34, 0.39, 0.42, 0.34, 0.24},  // semi-natural
      {0.12, 0.14, 0.12, 0.49, 0.17, 0.36, 0.46, 0.50, 0.26, 0.16},  // woody
      {0.12, 0.18, 0.13, 0.59, 0.21, 0.46, 0.56, 0.60, 0.32, 0.19},  // cultivated
      {0.26, 0.30, 0.34, 0.40, 0.36, 0.38, 0.39, 0.41, 0.46, 0.40},  // natural bare
      {0.22, 0.24, 0.26, 0.30, 0.27, 0.29, 0.30, 0.31, 0.34, 0.32},  // artificial bare
  }};
  return spectra;
}

double min_interclass_distance(const ClassSpectra& spectra) {
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < kNumClasses; ++a) {
    for (int b = a + 1; b < kNumClasses; ++b) {
      double d2 = 0.0;
      for (int k = 0; k < kNumBands; ++k) {
        const double d = spectra[a][k] - spectra[b][k];
        d2 += d * d;
      }
      best = std::min(best, std::sqrt(d2));
    }
  }
  return best;
}

SynthSpec SynthSpec::reference() {
  SynthSpec s;
  s.class_weights.fill(1.0 / kNumClasses);
  s.class_spectra = default_spectra();
  s.noise_sigma = 0.2 * min_interclass_distance(s.class_spectra);
  return s;
}

void SynthSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError(field + ": " + why);
  };
  if (width < 6 || width % 6 != 0) fail("width", "must be a positive multiple of 6");
  if (height < 6 || height % 6 != 0) fail("height", "must be a positive multiple of 6");
  if (n_sites < 1) fail("n_sites", "must be at least 1");
  double sum = 0.0;
  for (double w : class_weights) {
    if (!(w >= 0.0)) fail("class_weights", "weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail("class_weights", "weights must sum to 1");
  for (const auto& row : class_spectra) {
    for (double v : row) {
      if (!std::isfinite(v)) fail("class_spectra", "values must be finite");
    }
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    fail("noise_sigma", "must be >= 0");
  }
  if (!(cloud_fraction >= 0.0 && cloud_fraction <= 1.0)) {
    fail("cloud_fraction", "must be in [0, 1]");
  }
  for (double c : scene_cloud_fractions) {
    if (!(c >= 0.0 && c <= 1.0)) fail("scene_cloud_fractions", "entries must be in [0, 1]");
  }
  if (!(gl30_corruption >= 0.0 && gl30_corruption <= 1.0)) {
    fail("gl30_corruption", "must be in [0, 1]");
  }
  if (n_scenes < 1) fail("n_scenes", "must be at least 1");
  if (tile_id.empty()) fail("tile_id", "must not be empty");
  if (revisit_days < 1) fail("revisit_days", "must be at least 1");
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (std::sscanf(start_date.c_str(), "%4d-%2u-%2u", &y, &m, &d) != 3 ||
      !std::chrono::year_month_day(std::chrono::year(y), std::chrono::month(m),
                                   std::chrono::day(d))
           .ok()) {
    fail("start_date", "must be YYYY-MM-DD");
  }
}

double SynthSpec::cloud_target(std::uint32_t scene_index) const {
  return scene_index < scene_cloud_fractions.size() ? scene_cloud_fractions[scene_index]
                                                    : cloud_fraction;
}

GridSpec SynthSpec::grid10() const {
  return GridSpec{width, height, origin_x, origin_y, 10.0};
}

// --- JSON -------------------------------------------------------------------

namespace {

template <typename T>
void read_field(const nlohmann::json& doc, const char* name, T& out) {
  if (!doc.contains(name)) return;
  try {
    out = doc.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(name) + ": wrong type");
  }
}

}  // namespace

SynthSpec synth_spec_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("synth spec: expected a JSON object");

  SynthSpec s = SynthSpec::reference();
  read_field(doc, "width", s.width);
  read_field(doc, "height", s.height);
  read_field(doc, "n_sites", s.n_sites);
  if (doc.contains("class_weights")) {
    const auto& w = doc.at("class_weights");
    if (!w.is_array() || w.size() != kNumClasses) {
      throw ConfigError("class_weights: expected 8 numbers");
    }
    read_field(doc, "class_weights", s.class_weights);
  }
  if (doc.contains("class_spectra")) {
    const auto& sp = doc.at("class_spectra");
    if (!sp.is_array() || sp.size() != kNumClasses ||
        !std::all_of(sp.begin(), sp.end(),
                     [](const auto& r) { return r.is_array() && r.size() == kNumBands; })) {
      throw ConfigError("class_spectra: expected 8 lists of 10 reflectances");
    }
    read_field(doc, "class_spectra", s.class_spectra);
    s.noise_sigma = 0.2 * min_interclass_distance(s.class_spectra);
  }
  // A relative noise level is resolved against the spectra actually in use.
  if (doc.contains("noise_sigma_relative")) {
    double rel = 0.0;
    read_field(doc, "noise_sigma_relative", rel);
    s.noise_sigma = rel * min_interclass_distance(s.class_spectra);
  }
  read_field(doc, "noise_sigma", s.noise_sigma);
  read_field(doc, "cloud_fraction", s.cloud_fraction);
  read_field(doc, "scene_cloud_fractions", s.scene_cloud_fractions);
  read_field(doc, "gl30_corruption", s.gl30_corruption);
  read_field(doc, "n_scenes", s.n_scenes);
  read_field(doc, "seed", s.seed);
  read_field(doc, "tile_id", s.tile_id);
  read_field(doc, "origin_x", s.origin_x);
  read_field(doc, "origin_y", s.origin_y);
  read_field(doc, "start_date", s.start_date);
  read_field(doc, "revisit_days", s.revisit_days);
  s.validate();
  return s;
}

SynthSpec read_synth_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read synth spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return synth_spec_from_json(ss.str());
}

std::string synth_spec_to_json(const SynthSpec& s) {
  nlohmann::ordered_json doc;
  doc["width"] = s.width;
  doc["height"] = s.height;
  doc["n_sites"] = s.n_sites;
  doc["class_weights"] = s.class_weights;
  doc["class_spectra"] = s.class_spectra;
  doc["noise_sigma"] = s.noise_sigma;
  doc["cloud_fraction"] = s.cloud_fraction;
  doc["scene_cloud_fractions"] = s.scene_cloud_fractions;
  doc["gl30_corruption"] = s.gl30_corruption;
  doc["n_scenes"] = s.n_scenes;
  doc["seed"] = s.seed;
  doc["tile_id"] = s.tile_id;
  doc["origin_x"] = s.origin_x;
  doc["origin_y"] = s.origin_y;
  doc["start_date"] = s.start_date;
  doc["revisit_days"] = s.revisit_days;
  return doc.dump(2) + "\n";
}

// --- Generation -------------------------------------------------------------

int canonical_scl(LcClass cls) {
  switch (cls) {
    case LcClass::Water:
    case LcClass::Wetland:
      return scl::kWater;
    case LcClass::SnowIce:
      return scl::kSnow;
    case LcClass::SemiNaturalVegetation:
    case LcClass::WoodyVegetation:
    case LcClass::CultivatedVegetation:
      return scl::kVegetation;
    case LcClass::NaturalBareGround:
    case LcClass::ArtificialBareGround:
      return scl::kNotVegetated;
    case LcClass::Unclassified:
      break;
  }
  return scl::kUnclassified;
}

RasterGrid gen_truth(const SynthSpec& spec) {
  if (spec.n_sites < 1) throw ArgumentError("n_sites must be at least 1");
  spec.validate();

  Rng64 rng = Rng64::stream(spec.seed, StreamTag::kSites);
  struct Site {
    double x, y;
    int cls;
  };
  std::vector<Site> sites(spec.n_sites);
  for (auto& site : sites) {
    site.x = rng.uniform() * spec.width;
    site.y = rng.uniform() * spec.height;
    const double u = rng.uniform();
    double cumulative = 0.0;
    site.cls = kNumClasses - 1;
    for (int k = 0; k < kNumClasses; ++k) {
      cumulative += spec.class_weights[k];
      if (u < cumulative) {
        site.cls = k;
        break;
      }
    }
    // Zero-weight classes must never be drawn, even through rounding at the top.
    while (spec.class_weights[site.cls] == 0.0 && site.cls > 0) --site.cls;
  }

  RasterGrid truth(spec.grid10(), Dtype::U8);
  for (std::uint32_t r = 0; r < spec.height; ++r) {
    for (std::uint32_t c = 0; c < spec.width; ++c) {
      const double px = c + 0.5;
      const double py = r + 0.5;
      std::size_t nearest = 0;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < sites.size(); ++i) {
        const double dx = sites[i].x - px;
        const double dy = sites[i].y - py;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best) {
          best = d2;
          nearest = i;
        }
      }
      truth.set(r, c, sites[nearest].cls);
    }
  }
  return truth;
}

namespace {

// Modal value among block pixels (ties to the lowest class code).
int block_mode(const RasterGrid& truth, std::uint32_t r0, std::uint32_t c0,
               std::uint32_t side) {
  std::array<int, kNumClasses> counts{};
  for (std::uint32_t r = r0; r < r0 + side; ++r) {
    for (std::uint32_t c = c0; c < c0 + side; ++c) {
      ++counts[static_cast<int>(truth.at(r, c))];
    }
  }
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::string scene_datetime(const SynthSpec& spec, std::uint32_t index) {
  using namespace std::chrono;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  std::sscanf(spec.start_date.c_str(), "%4d-%2u-%2u", &y, &m, &d);
  const sys_days start{year_month_day{year(y), month(m), day(d)}};
  const year_month_day date{start + days(static_cast<int>(index * spec.revisit_days))};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT10:30:00Z", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

}  // namespace

RasterGrid modal_classes_30m(const RasterGrid& truth) {
  if (truth.width() % kBlockSide != 0 || truth.height() % kBlockSide != 0) {
    throw ArgumentError("truth dimensions must be divisible by 3");
  }
  const GridSpec g30 = truth.spec().rescaled(truth.spec().pixel_size * kBlockSide);
  RasterGrid out(g30, Dtype::U8);
  for (std::uint32_t r = 0; r < g30.height; ++r) {
    for (std::uint32_t c = 0; c < g30.width; ++c) {
      out.set(r, c, block_mode(truth, r * kBlockSide, c * kBlockSide, kBlockSide));
    }
  }
  return out;
}

RasterGrid gen_gl30(const RasterGrid& truth, const SynthSpec& spec) {
  RasterGrid classes = modal_classes_30m(truth);
  const std::size_t n = classes.size();
  const auto n_corrupt = static_cast<std::size_t>(
      std::llround(spec.gl30_corruption * static_cast<double>(n)));

  Rng64 rng = Rng64::stream(spec.seed, StreamTag::kCorrupt);
  std::vector<std::uint32_t> cells(n);
  std::iota(cells.begin(), cells.end(), 0u);
  for (std::size_t i = 0; i < n_corrupt; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(cells[i], cells[j]);
    const int current = static_cast<int>(classes[cells[i]]);
    int replacement = static_cast<int>(rng.below(kNumClasses - 1));
    if (replacement >= current) ++replacement;
    classes.set(cells[i], replacement);
  }

  const Taxonomy taxonomy = Taxonomy::defaults();
  RasterGrid codes(classes.spec(), Dtype::U8, 255.0);
  for (std::size_t i = 0; i < n; ++i) {
    codes.set(i, taxonomy.canonical_gl30(static_cast<LcClass>(classes[i])));
  }
  return codes;
}

GeneratedScene gen_scene(const RasterGrid& truth, const SynthSpec& spec,
                         std::uint32_t scene_index) {
  const GridSpec g10 = truth.spec();
  if (g10.width % 2 != 0 || g10.height % 2 != 0) {
    throw ArgumentError("truth dimensions must be even");
  }
  const GridSpec g20 = g10.rescaled(g10.pixel_size * 2);

  GeneratedScene out;
  Rng64 noise = Rng64::stream(spec.seed, StreamTag::kScene, scene_index);
  for (int b = 0; b < kNumBands; ++b) {
    RasterGrid field(g10, Dtype::F32);
    for (std::size_t i = 0; i < field.size(); ++i) {
      const auto cls = static_cast<int>(truth[i]);
      double v = spec.class_spectra[cls][b];
      if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise.normal();
      field.set(i, v);
    }
    if (kBandResolution[b] == 10) {
      out.bands[b] = std::move(field);
      continue;
    }
    RasterGrid coarse(g20, Dtype::F32);
    for (std::uint32_t r = 0; r < g20.height; ++r) {
      for (std::uint32_t c = 0; c < g20.width; ++c) {
        const double sum = field.at(2 * r, 2 * c) + field.at(2 * r, 2 * c + 1) +
                           field.at(2 * r + 1, 2 * c) + field.at(2 * r + 1, 2 * c + 1);
        coarse.set(r, c, sum / 4.0);
      }
    }
    out.bands[b] = std::move(coarse);
  }

  out.scl = RasterGrid(g20, Dtype::U8, 0.0);
  out.cloud_conf = RasterGrid(g20, Dtype::U8, 255.0);
  for (std::uint32_t r = 0; r < g20.height; ++r) {
    for (std::uint32_t c = 0; c < g20.width; ++c) {
      out.scl.set(r, c, canonical_scl(static_cast<LcClass>(block_mode(truth, 2 * r, 2 * c, 2))));
      out.cloud_conf.set(r, c, 0);
    }
  }

  // Cloud disks until the covered share of the 20 m grid reaches the target.
  const double target = spec.cloud_target(scene_index);
  const std::size_t total = g20.size();
  std::vector<std::uint8_t> covered(total, 0);
  std::size_t n_covered = 0;
  if (target >= 1.0) {
    std::fill(covered.begin(), covered.end(), 1);
    n_covered = total;
  }
  Rng64 clouds = Rng64::stream(spec.seed, StreamTag::kCloud, scene_index);
  while (static_cast<double>(n_covered) < target * static_cast<double>(total)) {
    const double cx = clouds.uniform() * g20.width;
    const double cy = clouds.uniform() * g20.height;
    const double radius = 2.0 + 6.0 * clouds.uniform();
    const auto r0 = static_cast<std::int64_t>(std::floor(cy - radius));
    const auto r1 = static_cast<std::int64_t>(std::ceil(cy + radius));
    const auto c0 = static_cast<std::int64_t>(std::floor(cx - radius));
    const auto c1 = static_cast<std::int64_t>(std::ceil(cx + radius));
    for (std::int64_t r = std::max<std::int64_t>(r0, 0);
         r <= std::min<std::int64_t>(r1, g20.height - 1); ++r) {
      for (std::int64_t c = std::max<std::int64_t>(c0, 0);
           c <= std::min<std::int64_t>(c1, g20.width - 1); ++c) {
        const double dx = c + 0.5 - cx;
        const double dy = r + 0.5 - cy;
        if (dx * dx + dy * dy > radius * radius) continue;
        const std::size_t i = static_cast<std::size_t>(r) * g20.width + c;
        if (!covered[i]) {
          covered[i] = 1;
          ++n_covered;
        }
      }
    }
  }
  for (std::size_t i = 0; i < total; ++i) {
    if (!covered[i]) continue;
    out.scl.set(i, scl::kCloudHigh);
    out.cloud_conf.set(i, 100);
  }
  out.cloud_fraction = static_cast<double>(n_covered) / static_cast<double>(total);

  SceneManifest& m = out.manifest;
  m.datetime = scene_datetime(spec, scene_index);
  std::string compact;
  for (char ch : m.datetime.substr(0, 10)) {
    if (ch != '-') compact += ch;
  }
  m.tile_id = spec.tile_id;
  m.scene_id = spec.tile_id + "_" + compact;
  for (int b = 0; b < kNumBands; ++b) {
    m.bands[std::string(kBandNames[b])] =
        BandRef{std::string(kBandNames[b]) + ".rbin", kBandResolution[b]};
  }
  m.scl_path = "SCL.rbin";
  m.cloud_conf_path = "CLD.rbin";
  return out;
}

void write_generated_scene(const GeneratedScene& scene, const fs::path& dir) {
  fs::create_directories(dir);
  for (int b = 0; b < kNumBands; ++b) {
    write_rbin(scene.bands[b], dir / scene.manifest.bands.at(std::string(kBandNames[b])).path);
  }
  write_rbin(scene.scl, dir / scene.manifest.scl_path);
  write_rbin(scene.cloud_conf, dir / scene.manifest.cloud_conf_path);
  write_manifest(scene.manifest, dir / "manifest.json");
}

std::vector<SynthSceneInfo> synthesize_tile(const SynthSpec& spec, const fs::path& out_dir) {
  spec.validate();
  fs::create_directories(out_dir);
  const RasterGrid truth = gen_truth(spec);
  write_rbin(truth, out_dir / "truth.rbin");
  write_rbin(gen_gl30(truth, spec), out_dir / "gl30.rbin");
  {
    std::ofstream out(out_dir / "synthspec.json");
    if (!out) throw WriteError("cannot write synthspec.json");
    out << synth_spec_to_json(spec);
  }
  std::vector<SynthSceneInfo> info;
  for (std::uint32_t i = 0; i < spec.n_scenes; ++i) {
    const GeneratedScene scene = gen_scene(truth, spec, i);
    const fs::path dir = out_dir / scene.manifest.scene_id;
    write_generated_scene(scene, dir);
    info.push_back({scene.manifest.scene_id, dir, scene.cloud_fraction});
  }
  return info;
}

}  // namespace terralabel
