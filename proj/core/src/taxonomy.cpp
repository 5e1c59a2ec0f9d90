#include "terralabel/taxonomy.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "terralabel/error.hpp"

namespace terralabel {

std::string_view class_name(LcClass c) {
  switch (c) {
    case LcClass::Water:
      return "Water";
    case LcClass::SnowIce:
      return "SnowIce";
    case LcClass::Wetland:
      return "Wetland";
    case LcClass::SemiNaturalVegetation:
      return "SemiNaturalVegetation";
    case LcClass::WoodyVegetation:
      return "WoodyVegetation";
    case LcClass::CultivatedVegetation:
      return "CultivatedVegetation";
    case LcClass::NaturalBareGround:
      return "NaturalBareGround";
    case LcClass::ArtificialBareGround:
      return "ArtificialBareGround";
    case LcClass::Unclassified:
      return "Unclassified";
  }
  return "?";
}

bool is_gl30_code(int code) {
  return code >= 10 && code <= 100 && code % 10 == 0;
}

bool is_scl_code(int code) { return code >= 0 && code < scl::kCount; }

namespace {

constexpr SclMask bit(int code) { return static_cast<SclMask>(1u << code); }

}  // namespace

Taxonomy Taxonomy::defaults() {
  Taxonomy t;
  t.gl30_ = {
      {10, LcClass::CultivatedVegetation},  // cultivated land
      {20, LcClass::WoodyVegetation},       // forest
      {30, LcClass::SemiNaturalVegetation}, // grassland
      {40, LcClass::WoodyVegetation},       // shrubland
      {50, LcClass::Wetland},               // wetland
      {60, LcClass::Water},                 // water bodies
      {70, LcClass::SemiNaturalVegetation}, // tundra
      {80, LcClass::ArtificialBareGround},  // artificial surfaces
      {90, LcClass::NaturalBareGround},     // bareland
      {100, LcClass::SnowIce},              // permanent snow and ice
  };
  auto set = [&t](LcClass c, SclMask m) { t.compatible_[code_of(c)] = m; };
  set(LcClass::Water, bit(scl::kWater));
  set(LcClass::SnowIce, bit(scl::kSnow));
  set(LcClass::Wetland, bit(scl::kVegetation) | bit(scl::kWater));
  set(LcClass::SemiNaturalVegetation, bit(scl::kVegetation));
  set(LcClass::WoodyVegetation, bit(scl::kVegetation));
  set(LcClass::CultivatedVegetation, bit(scl::kVegetation));
  set(LcClass::NaturalBareGround, bit(scl::kNotVegetated));
  set(LcClass::ArtificialBareGround, bit(scl::kNotVegetated));
  t.usable_ = bit(scl::kDarkArea) | bit(scl::kCloudShadow) |
              bit(scl::kVegetation) | bit(scl::kNotVegetated) |
              bit(scl::kWater) | bit(scl::kUnclassified) | bit(scl::kSnow);
  return t;
}

LcClass Taxonomy::map_gl30(int code) const {
  const auto it = gl30_.find(code);
  if (it == gl30_.end()) {
    throw MappingError("legacy class code " + std::to_string(code) +
                       " has no taxonomy mapping");
  }
  return it->second;
}

bool Taxonomy::scl_compatible(LcClass cls, int scl_code) const {
  if (!is_trainable(code_of(cls))) {
    throw ArgumentError("agreement is undefined for unclassified pixels");
  }
  if (!is_scl_code(scl_code)) return false;
  return (compatible_[code_of(cls)] & bit(scl_code)) != 0;
}

bool Taxonomy::usable_scl(int scl_code) const {
  return is_scl_code(scl_code) && (usable_ & bit(scl_code)) != 0;
}

int Taxonomy::canonical_gl30(LcClass cls) const {
  for (const auto& [code, c] : gl30_) {
    if (c == cls) return code;  // map iterates in ascending code order
  }
  return -1;
}

SclMask Taxonomy::compatible_mask(LcClass cls) const {
  if (!is_trainable(code_of(cls))) {
    throw ArgumentError("unclassified has no compatibility row");
  }
  return compatible_[code_of(cls)];
}

void Taxonomy::set_compatible_mask(LcClass cls, SclMask mask) {
  if (!is_trainable(code_of(cls))) {
    throw ArgumentError("unclassified has no compatibility row");
  }
  compatible_[code_of(cls)] = mask & static_cast<SclMask>((1u << scl::kCount) - 1);
}

void Taxonomy::set_gl30_table(std::map<int, LcClass> table) {
  for (const auto& [code, cls] : table) {
    if (!is_gl30_code(code) || !is_trainable(code_of(cls))) {
      throw ArgumentError("invalid legacy mapping entry " + std::to_string(code));
    }
  }
  gl30_ = std::move(table);
}

namespace {

int class_code_field(const nlohmann::json& j, const char* what) {
  if (!j.is_number_integer() || !is_trainable(j.get<int>())) {
    throw ConfigError(std::string(what) + ": class code must be an integer in 0..7");
  }
  return j.get<int>();
}

SclMask scl_list(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + ": expected a list of SCL codes");
  SclMask m = 0;
  for (const auto& v : j) {
    if (!v.is_number_integer() || !is_scl_code(v.get<int>())) {
      throw ConfigError(std::string(what) + ": SCL codes must be integers in 0..11");
    }
    m |= bit(v.get<int>());
  }
  return m;
}

}  // namespace

Taxonomy Taxonomy::from_json_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("taxonomy: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("taxonomy: expected a JSON object");

  Taxonomy t = defaults();
  if (doc.contains("gl30_map")) {
    std::map<int, LcClass> table;
    for (const auto& entry : doc.at("gl30_map")) {
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_integer() ||
          !is_gl30_code(entry[0].get<int>())) {
        throw ConfigError("gl30_map: entries must be [legacy code, class code]");
      }
      table[entry[0].get<int>()] =
          static_cast<LcClass>(class_code_field(entry[1], "gl30_map"));
    }
    t.gl30_ = std::move(table);
  }
  if (doc.contains("compatibility")) {
    t.compatible_.fill(0);
    for (const auto& entry : doc.at("compatibility")) {
      if (!entry.is_array() || entry.size() != 2) {
        throw ConfigError("compatibility: entries must be [class code, [scl codes]]");
      }
      const int c = class_code_field(entry[0], "compatibility");
      t.compatible_[c] = scl_list(entry[1], "compatibility");
    }
  }
  if (doc.contains("usable_scl")) {
    t.usable_ = scl_list(doc.at("usable_scl"), "usable_scl");
  }
  return t;
}

Taxonomy Taxonomy::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read taxonomy file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

namespace {
const Taxonomy& default_taxonomy() {
  static const Taxonomy t = Taxonomy::defaults();
  return t;
}
}  // namespace

LcClass map_gl30(int code) { return default_taxonomy().map_gl30(code); }
bool scl_compatible(LcClass cls, int scl_code) {
  return default_taxonomy().scl_compatible(cls, scl_code);
}
bool usable_scl(int scl_code) { return default_taxonomy().usable_scl(scl_code); }

}  // namespace terralabel
