#include <doctest.h>

#include "terralabel/error.hpp"
#include "terralabel/taxonomy.hpp"
#include "test_support.hpp"

using namespace terralabel;

TEST_CASE("legacy codes map through M1") {
  CHECK(map_gl30(60) == LcClass::Water);
  CHECK(map_gl30(100) == LcClass::SnowIce);
  CHECK(map_gl30(10) == LcClass::CultivatedVegetation);
  CHECK(map_gl30(20) == LcClass::WoodyVegetation);
  CHECK(map_gl30(40) == LcClass::WoodyVegetation);
  CHECK(map_gl30(30) == LcClass::SemiNaturalVegetation);
  CHECK(map_gl30(70) == LcClass::SemiNaturalVegetation);
  CHECK(map_gl30(50) == LcClass::Wetland);
  CHECK(map_gl30(80) == LcClass::ArtificialBareGround);
  CHECK(map_gl30(90) == LcClass::NaturalBareGround);
  CHECK_THROWS_AS(map_gl30(45), MappingError);
  CHECK_THROWS_AS(map_gl30(255), MappingError);
}

TEST_CASE("every trainable class has a legacy pre-image") {
  const Taxonomy t = Taxonomy::defaults();
  for (int k = 0; k < kNumClasses; ++k) {
    const auto cls = static_cast<LcClass>(k);
    const int code = t.canonical_gl30(cls);
    CHECK(t.map_gl30(code) == cls);
    // lowest pre-image
    for (const auto& [c, mapped] : t.gl30_table()) {
      if (mapped == cls) CHECK(code <= c);
    }
  }
  CHECK(t.canonical_gl30(LcClass::WoodyVegetation) == 20);
  CHECK(t.canonical_gl30(LcClass::SemiNaturalVegetation) == 30);
}

TEST_CASE("compatibility matrix C1") {
  CHECK(scl_compatible(LcClass::Water, 6));
  CHECK_FALSE(scl_compatible(LcClass::Water, 4));
  CHECK(scl_compatible(LcClass::Wetland, 6));
  CHECK(scl_compatible(LcClass::Wetland, 4));
  CHECK(scl_compatible(LcClass::SnowIce, 11));
  for (auto c : {LcClass::SemiNaturalVegetation, LcClass::WoodyVegetation,
                 LcClass::CultivatedVegetation}) {
    CHECK(scl_compatible(c, 4));
    CHECK_FALSE(scl_compatible(c, 5));
  }
  CHECK(scl_compatible(LcClass::NaturalBareGround, 5));
  CHECK(scl_compatible(LcClass::ArtificialBareGround, 5));
  // Cloud, shadow and no-data codes never agree with any class.
  for (int k = 0; k < kNumClasses; ++k) {
    for (int code : {0, 1, 3, 8, 9, 10}) {
      CHECK_FALSE(scl_compatible(static_cast<LcClass>(k), code));
    }
  }
  CHECK_THROWS_AS(scl_compatible(LcClass::Unclassified, 4), ArgumentError);
}

TEST_CASE("usable scene-classification set U1") {
  CHECK(usable_scl(7));
  CHECK_FALSE(usable_scl(9));
  CHECK_FALSE(usable_scl(0));
  CHECK_FALSE(usable_scl(8));
  CHECK_FALSE(usable_scl(10));
  for (int code : {2, 3, 4, 5, 6, 11}) CHECK(usable_scl(code));
  CHECK_FALSE(usable_scl(12));
  CHECK_FALSE(usable_scl(-1));
}

TEST_CASE("taxonomy override from JSON") {
  const Taxonomy t = Taxonomy::from_json_text(R"({
    "gl30_map": [[60, 0], [50, 2]],
    "compatibility": [[0, [6]], [2, [4, 6]]],
    "usable_scl": [4, 6]
  })");
  CHECK(t.map_gl30(50) == LcClass::Wetland);
  CHECK_THROWS_AS((void)t.map_gl30(10), MappingError);
  CHECK(t.scl_compatible(LcClass::Wetland, 4));
  CHECK_FALSE(t.scl_compatible(LcClass::SnowIce, 11));
  CHECK_FALSE(t.usable_scl(7));
  CHECK(t.usable_scl(6));

  // Sections left out keep their defaults.
  const Taxonomy partial = Taxonomy::from_json_text(R"({"usable_scl": [4]})");
  CHECK(partial.map_gl30(60) == LcClass::Water);
  CHECK(partial.scl_compatible(LcClass::Water, 6));
}

TEST_CASE("taxonomy override errors") {
  CHECK_THROWS_AS(Taxonomy::from_json_text("not json"), ConfigError);
  CHECK_THROWS_AS(Taxonomy::from_json_text(R"({"gl30_map": [[60, 9]]})"), ConfigError);
  CHECK_THROWS_AS(Taxonomy::from_json_text(R"({"usable_scl": [14]})"), ConfigError);
  CHECK_THROWS_AS(Taxonomy::from_json_text(R"({"compatibility": [[0]]})"), ConfigError);
  terralabel::testing::TempDir tmp("tax");
  CHECK_THROWS(Taxonomy::from_json_file(tmp / "missing.json"));
}
