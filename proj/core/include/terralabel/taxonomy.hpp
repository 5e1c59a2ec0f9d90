#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace terralabel {

// Leaf classes of the land-cover taxonomy. Codes 0..7 are trainable;
// Unclassified marks pixels without an accepted label and is never a
// training target or a prediction.
enum class LcClass : std::uint8_t {
  Water = 0,
  SnowIce = 1,
  Wetland = 2,
  SemiNaturalVegetation = 3,
  WoodyVegetation = 4,
  CultivatedVegetation = 5,
  NaturalBareGround = 6,
  ArtificialBareGround = 7,
  Unclassified = 255,
};

inline constexpr int kNumClasses = 8;
inline constexpr std::uint8_t kUnclassified = 255;

constexpr bool is_trainable(int code) { return code >= 0 && code < kNumClasses; }
constexpr std::uint8_t code_of(LcClass c) { return static_cast<std::uint8_t>(c); }

std::string_view class_name(LcClass c);

// Legacy 30 m product codes.
bool is_gl30_code(int code);

// Level-2A scene classification codes.
namespace scl {
inline constexpr int kNoData = 0;
inline constexpr int kSaturated = 1;
inline constexpr int kDarkArea = 2;
inline constexpr int kCloudShadow = 3;
inline constexpr int kVegetation = 4;
inline constexpr int kNotVegetated = 5;
inline constexpr int kWater = 6;
inline constexpr int kUnclassified = 7;
inline constexpr int kCloudMedium = 8;
inline constexpr int kCloudHigh = 9;
inline constexpr int kThinCirrus = 10;
inline constexpr int kSnow = 11;
inline constexpr int kCount = 12;
}  // namespace scl

bool is_scl_code(int code);

// SCL code sets are stored as 12-bit masks (bit k set <=> code k in set).
using SclMask = std::uint16_t;

// Mapping tables used to harmonize legacy labels with a scene:
//   - legacy code -> leaf class,
//   - per-class set of agreeing SCL codes,
//   - the SCL codes on which prediction is attempted.
class Taxonomy {
 public:
  // Built-in tables.
  static Taxonomy defaults();

  // Reads an override file. Each of "gl30_map", "compatibility" and
  // "usable_scl" that is present replaces the corresponding default table:
  //   {"gl30_map": [[10, 5], ...],          // [legacy code, class code]
  //    "compatibility": [[0, [6]], ...],    // [class code, [scl codes]]
  //    "usable_scl": [2, 3, 4, 5, 6, 7, 11]}
  // Throws ConfigError on malformed content.
  static Taxonomy from_json_file(const std::filesystem::path& path);
  static Taxonomy from_json_text(std::string_view text);

  // Throws MappingError for codes outside the table.
  [[nodiscard]] LcClass map_gl30(int code) const;

  // Throws ArgumentError for Unclassified. Invalid SCL codes never agree.
  [[nodiscard]] bool scl_compatible(LcClass cls, int scl_code) const;

  [[nodiscard]] bool usable_scl(int scl_code) const;

  // Lowest legacy code that maps to `cls`, or -1 when none does.
  [[nodiscard]] int canonical_gl30(LcClass cls) const;

  [[nodiscard]] SclMask compatible_mask(LcClass cls) const;
  void set_compatible_mask(LcClass cls, SclMask mask);
  [[nodiscard]] SclMask usable_mask() const { return usable_; }
  void set_usable_mask(SclMask mask) { usable_ = mask; }
  [[nodiscard]] const std::map<int, LcClass>& gl30_table() const { return gl30_; }
  void set_gl30_table(std::map<int, LcClass> table);

 private:
  std::map<int, LcClass> gl30_;
  std::array<SclMask, kNumClasses> compatible_{};
  SclMask usable_ = 0;
};

// Convenience wrappers over Taxonomy::defaults().
LcClass map_gl30(int code);
bool scl_compatible(LcClass cls, int scl_code);
bool usable_scl(int scl_code);

}  // namespace terralabel
