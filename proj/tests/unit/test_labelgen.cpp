#include <doctest.h>

#include <map>
#include <random>

#include "terralabel/error.hpp"
#include "terralabel/labelgen.hpp"
#include "test_support.hpp"

using namespace terralabel;
using terralabel::testing::grid;

namespace {

Scene make_scene(const GridSpec& g, int scl_code = 4, double cloud = 0.0) {
  Scene s;
  s.scene_id = "S";
  s.grid = g;
  for (int b = 0; b < kNumBands; ++b) {
    s.bands[b] = RasterGrid(g, Dtype::F32, -1.0);
    for (std::size_t i = 0; i < g.size(); ++i) s.bands[b].set(i, 0.1 + 0.01 * b + 0.001 * i);
  }
  s.scl = RasterGrid(g, Dtype::U8, 0.0);
  s.cloud_conf = RasterGrid(g, Dtype::U8, 255.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    s.scl.set(i, scl_code);
    s.cloud_conf.set(i, cloud);
  }
  return s;
}

ValidityMask all_valid(const GridSpec& g) {
  return {g, std::vector<std::uint8_t>(g.size(), 1)};
}

// Independent reconstruction of the per-block stream: tag 1, block index.
std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9;
  z = (z ^ (z >> 27)) * 0x94d049bb133111eb;
  return z ^ (z >> 31);
}
std::uint64_t first_draw(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
  const std::uint64_t g = 0x9e3779b97f4a7c15;
  std::uint64_t state = mix(mix(master ^ mix(tag * g)) + index * g);
  return mix(state + g);
}

}  // namespace

TEST_CASE("scene cloud fraction") {
  const GridSpec g = grid(2, 2, 20.0);
  CHECK(scene_cloud_fraction(RasterGrid(g, Dtype::U8, std::nullopt, {0, 0, 0, 0})) == 0.0);
  CHECK(scene_cloud_fraction(RasterGrid(g, Dtype::U8, std::nullopt, {100, 100, 100, 100})) == 1.0);
  CHECK(scene_cloud_fraction(RasterGrid(g, Dtype::U8, std::nullopt, {0, 100, 0, 100})) == 0.5);
  CHECK(scene_cloud_fraction(RasterGrid(g, Dtype::U8, 255.0, {255, 100, 255, 0})) == 0.5);
  CHECK_THROWS_AS(scene_cloud_fraction(RasterGrid(g, Dtype::U8, 255.0, {255, 255, 255, 255})),
                  EmptyInputError);
}

TEST_CASE("agreement filtering examples") {
  const GridSpec g = grid(3, 1, 10.0);
  const RasterGrid labels(g, Dtype::U8, 255.0,
                          {code_of(LcClass::Water), code_of(LcClass::Water),
                           code_of(LcClass::CultivatedVegetation)});
  const RasterGrid scl(g, Dtype::U8, 0.0, {6, 4, 4});
  const RasterGrid out = filter_labels(labels, scl);
  CHECK(out[0] == code_of(LcClass::Water));
  CHECK(out[1] == kUnclassified);
  CHECK(out[2] == code_of(LcClass::CultivatedVegetation));
  CHECK(out.dtype() == Dtype::U8);
  CHECK(*out.nodata() == 255.0);

  CHECK_THROWS_AS(filter_labels(labels, RasterGrid(grid(3, 1, 20.0), Dtype::U8)), AlignmentError);
}

TEST_CASE("filtering keeps or drops labels, never changes them") {
  std::mt19937_64 gen(3);
  for (int iter = 0; iter < 100; ++iter) {
    const GridSpec g = grid(1 + gen() % 20, 1 + gen() % 20, 10.0);
    RasterGrid labels = make_label_raster(g);
    RasterGrid scl(g, Dtype::U8, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto v = gen() % 10;
      labels.set(i, v < 8 ? static_cast<double>(v) : 255.0);
      scl.set(i, static_cast<double>(gen() % 12));
    }
    const RasterGrid out = filter_labels(labels, scl);
    for (std::size_t i = 0; i < g.size(); ++i) {
      REQUIRE((out[i] == labels[i] || out[i] == kUnclassified));
    }
  }
}

TEST_CASE("dropping a compatibility row never adds labels") {
  std::mt19937_64 gen(50);
  const GridSpec g = grid(24, 24, 10.0);
  RasterGrid labels = make_label_raster(g);
  RasterGrid scl(g, Dtype::U8, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    labels.set(i, static_cast<double>(gen() % 8));
    scl.set(i, static_cast<double>(gen() % 12));
  }
  auto labeled = [&](const Taxonomy& t) {
    const RasterGrid out = filter_labels(labels, scl, t);
    std::size_t n = 0;
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
      CHECK(labeled(reduced) <= before);
    }
  }
  // The default matrix too.
  const std::size_t base = labeled(Taxonomy::defaults());
  for (int k = 0; k < kNumClasses; ++k) {
    Taxonomy reduced = Taxonomy::defaults();
    reduced.set_compatible_mask(static_cast<LcClass>(k), 0);
    CHECK(labeled(reduced) <= base);
  }
}

TEST_CASE("validity mask conditions") {
  const GridSpec g = grid(3, 1, 10.0);
  Scene s = make_scene(g);
  s.bands[band_index("B04")].set(0, -1.0);  // nodata
  s.scl.set(1, 9);
  const ValidityMask m = build_validity_mask(s);
  CHECK_FALSE(m[0]);
  CHECK_FALSE(m[1]);
  CHECK(m[2]);
  CHECK(m.count() == 1);

  Scene cloudy = make_scene(g, 4, 50.0);
  CHECK(build_validity_mask(cloudy).count() == 0);
  Scene hazy = make_scene(g, 4, 49.0);
  CHECK(build_validity_mask(hazy).count() == 3);
  for (int code : {0, 1, 2, 3, 7, 8, 9, 10}) {
    CHECK(build_validity_mask(make_scene(g, code)).count() == 0);
  }
  for (int code : {4, 5, 6, 11}) CHECK(build_validity_mask(make_scene(g, code)).count() == 3);
}

TEST_CASE("block candidates") {
  const GridSpec g = grid(6, 3, 10.0);
  RasterGrid labels = make_label_raster(g);
  ValidityMask valid{g, std::vector<std::uint8_t>(g.size(), 0)};
  // Block 0: class 3 everywhere but only one valid pixel.
  // Block 1: class 5 everywhere, nothing valid.
  for (std::uint32_t r = 0; r < 3; ++r) {
    for (std::uint32_t c = 0; c < 3; ++c) labels.set(r, c, 3);
    for (std::uint32_t c = 3; c < 6; ++c) labels.set(r, c, 5);
  }
  valid.valid[2 * 6 + 1] = 1;
  const auto cands = pick_block_candidates(labels, valid, 99);
  REQUIRE(cands.size() == 1);
  CHECK(cands[0] == Candidate{2, 1, 3});
}

TEST_CASE("block pick replays the reference stream") {
  const GridSpec g = grid(9, 6, 10.0);
  RasterGrid labels = make_label_raster(g);
  for (std::size_t i = 0; i < g.size(); ++i) labels.set(i, 4);
  const auto cands = pick_block_candidates(labels, all_valid(g), 1234);
  REQUIRE(cands.size() == 6);
  for (std::size_t b = 0; b < 6; ++b) {
    const std::uint64_t k = first_draw(1234, 1, b) % 9;
    const std::uint32_t br = static_cast<std::uint32_t>(b / 3);
    const std::uint32_t bc = static_cast<std::uint32_t>(b % 3);
    CHECK(cands[b].row == br * 3 + k / 3);
    CHECK(cands[b].col == bc * 3 + k % 3);
  }
  CHECK(pick_block_candidates(labels, all_valid(g), 1234) == cands);
}

TEST_CASE("block mode ignores minority labels and unlabeled majorities") {
  const GridSpec g = grid(6, 3, 10.0);
  RasterGrid labels = make_label_raster(g);
  // Block 0: 5 of class 2, 4 of class 6. Block 1: 5 unlabeled, 4 of class 1.
  for (std::uint32_t i = 0; i < 9; ++i) {
    labels.set(i / 3, i % 3, i < 5 ? 2 : 6);
    if (i >= 5) labels.set(i / 3, 3 + i % 3, 1);
  }
  const auto cands = pick_block_candidates(labels, all_valid(g), 7);
  REQUIRE(cands.size() == 1);
  CHECK(cands[0].cls == 2);
  CHECK(labels.at(cands[0].row, cands[0].col) == 2);
}

TEST_CASE("stratified halves") {
  auto with_counts = [](const std::map<int, int>& per_class) {
    std::vector<Candidate> c;
    std::uint32_t row = 0;
    for (const auto& [cls, n] : per_class) {
      for (int i = 0; i < n; ++i) c.push_back({row++, 0, static_cast<std::uint8_t>(cls)});
    }
    return c;
  };
  {
    const auto s = assign_split(with_counts({{0, 2}}), 1);
    CHECK(s.class_counts(Split::Train)[0] == 1);
    CHECK(s.class_counts(Split::Test)[0] == 1);
  }
  {
    const auto s = assign_split(with_counts({{3, 1}}), 1);
    CHECK(s.class_counts(Split::Train)[3] == 1);
    CHECK(s.class_counts(Split::Test)[3] == 0);
  }
  {
    const auto s = assign_split(with_counts({{5, 100}}), 1);
    CHECK(s.class_counts(Split::Train)[5] == 50);
    CHECK(s.class_counts(Split::Test)[5] == 50);
  }
  std::mt19937_64 gen(8);
  for (int iter = 0; iter < 50; ++iter) {
    std::map<int, int> counts;
    for (int k = 0; k < kNumClasses; ++k) counts[k] = static_cast<int>(gen() % 40);
    if (std::all_of(counts.begin(), counts.end(), [](auto& p) { return p.second == 0; })) continue;
    const auto s = assign_split(with_counts(counts), gen());
    for (int k = 0; k < kNumClasses; ++k) {
      const auto n = static_cast<std::uint64_t>(counts[k]);
      CHECK(s.class_counts(Split::Train)[k] == (n + 1) / 2);
      CHECK(s.class_counts(Split::Test)[k] == n / 2);
    }
  }
  CHECK_THROWS_AS(assign_split({}, 1), ArgumentError);
}

TEST_CASE("stratified split reads features at the candidate pixel") {
  const GridSpec g = grid(6, 6, 10.0);
  const Scene scene = make_scene(g);
  const std::vector<Candidate> c = {{1, 2, 0}, {4, 5, 0}, {3, 3, 1}};
  const SampleSet s = stratified_split(c, 5, scene);
  REQUIRE(s.size() == 3);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.features[i] == scene.features_at(c[i].row * 6 + c[i].col));
    CHECK(s.labels[i] == c[i].cls);
  }
  CHECK(stratified_split(c, 5, scene).split == s.split);
}

TEST_CASE("samples csv") {
  terralabel::testing::TempDir tmp("csv");
  SampleSet s;
  FeatureVector f{};
  f[0] = 0.25f;
  s.push_back(f, 3, Split::Test, 7, 8);
  write_samples_csv(s, tmp / "s.csv");
  const auto bytes = terralabel::testing::file_bytes(tmp / "s.csv");
  const std::string text(bytes.begin(), bytes.end());
  CHECK(text.rfind("row,col,class,split,B02,", 0) == 0);
  CHECK(text.find("\n7,8,3,test,0.25,0,") != std::string::npos);
}
