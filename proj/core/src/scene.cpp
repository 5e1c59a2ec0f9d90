#include "terralabel/scene.hpp"

#include <fstream>

#include <json.hpp>

#include "terralabel/error.hpp"

namespace terralabel {

int band_index(std::string_view name) {
  for (int i = 0; i < kNumBands; ++i) {
    if (kBandNames[i] == name) return i;
  }
  return -1;
}

void SceneManifest::validate() const {
  if (scene_id.empty()) throw ManifestError("manifest: scene_id is empty");
  if (tile_id.empty()) throw ManifestError(scene_id + ": tile_id is empty");
  if (datetime.empty()) throw ManifestError(scene_id + ": datetime is empty");
  for (int i = 0; i < kNumBands; ++i) {
    const std::string name(kBandNames[i]);
    const auto it = bands.find(name);
    if (it == bands.end()) {
      throw ManifestError(scene_id + ": missing band " + name);
    }
    if (it->second.resolution != kBandResolution[i]) {
      throw ManifestError(scene_id + ": band " + name + " must be " +
                          std::to_string(kBandResolution[i]) + " m");
    }
  }
  for (const auto& [name, ref] : bands) {
    if (band_index(name) < 0) {
      throw ManifestError(scene_id + ": unexpected band " + name);
    }
  }
  if (scl_path.empty()) throw ManifestError(scene_id + ": scl_path missing");
  if (cloud_conf_path.empty()) {
    throw ManifestError(scene_id + ": cloud_conf_path missing");
  }
}

SceneManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot read manifest " + path.string());
  SceneManifest m;
  try {
    const auto doc = nlohmann::json::parse(in);
    m.scene_id = doc.at("scene_id").get<std::string>();
    m.tile_id = doc.at("tile_id").get<std::string>();
    m.datetime = doc.at("datetime").get<std::string>();
    for (const auto& [name, ref] : doc.at("bands").items()) {
      m.bands[name] = BandRef{ref.at("path").get<std::string>(),
                              ref.at("resolution").get<int>()};
    }
    m.scl_path = doc.at("scl_path").get<std::string>();
    m.cloud_conf_path = doc.at("cloud_conf_path").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
  m.base_dir = path.parent_path();
  m.validate();
  return m;
}

void write_manifest(const SceneManifest& m, const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["scene_id"] = m.scene_id;
  doc["tile_id"] = m.tile_id;
  doc["datetime"] = m.datetime;
  nlohmann::ordered_json bands = nlohmann::ordered_json::object();
  for (const auto name : kBandNames) {
    const auto& ref = m.bands.at(std::string(name));
    bands[std::string(name)] = {{"path", ref.path.generic_string()},
                                {"resolution", ref.resolution}};
  }
  doc["bands"] = std::move(bands);
  doc["scl_path"] = m.scl_path.generic_string();
  doc["cloud_conf_path"] = m.cloud_conf_path.generic_string();
  std::ofstream out(path);
  if (!out) throw WriteError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

void Scene::check_alignment() const {
  for (int b = 0; b < kNumBands; ++b) {
    if (!(bands[b].spec() == grid)) {
      throw AlignmentError(scene_id + ": band " + std::string(kBandNames[b]) +
                           " is not on the scene grid");
    }
  }
  if (!(scl.spec() == grid)) throw AlignmentError(scene_id + ": SCL off grid");
  if (!(cloud_conf.spec() == grid)) {
    throw AlignmentError(scene_id + ": cloud confidence off grid");
  }
}

Scene load_scene(const SceneManifest& manifest) {
  manifest.validate();
  Scene scene;
  scene.scene_id = manifest.scene_id;
  scene.tile_id = manifest.tile_id;
  scene.datetime = manifest.datetime;

  const auto band_path = [&](int b) {
    return manifest.resolve(manifest.bands.at(std::string(kBandNames[b])).path);
  };
  scene.bands[0] = read_rbin(band_path(0));
  scene.grid = scene.bands[0].spec();
  for (int b = 1; b < kNumBands; ++b) {
    RasterGrid raw = read_rbin(band_path(b));
    if (kBandResolution[b] == 10) {
      if (!(raw.spec() == scene.grid)) {
        throw AlignmentError(manifest.scene_id + ": 10 m band " +
                             std::string(kBandNames[b]) + " differs from B02 grid");
      }
      scene.bands[b] = std::move(raw);
    } else {
      scene.bands[b] = resample_bilinear(raw, scene.grid);
    }
  }
  scene.scl = resample_nearest(read_rbin(manifest.resolve(manifest.scl_path)),
                               scene.grid);
  scene.cloud_conf = resample_nearest(
      read_rbin(manifest.resolve(manifest.cloud_conf_path)), scene.grid);
  return scene;
}

}  // namespace terralabel
