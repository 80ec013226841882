#include <cmath>
#include <filesystem>

#include "d2c/components.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace d2c;

namespace {

Component text_comp(int id, BBox b, std::string s = "t") {
  Component c;
  c.id = id;
  c.kind = ComponentKind::text;
  c.bbox = b;
  c.text = std::move(s);
  return c;
}

Component visual_comp(int id, BBox b) {
  Component c;
  c.id = id;
  c.bbox = b;
  return c;
}

bool is_black(const Rgb& p) { return p == Rgb{0, 0, 0}; }

}  // namespace

TEST_CASE("iou examples") {
  CHECK(iou({0, 0, 2, 2}, {0, 0, 2, 2}) == 1.0);
  CHECK(iou({0, 0, 1, 1}, {5, 5, 1, 1}) == 0.0);
  CHECK(iou({0, 0, 2, 2}, {1, 0, 2, 2}) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(oracle::pixel_iou({0, 0, 2, 2}, {1, 0, 2, 2}, 16) == doctest::Approx(1.0 / 3));
}

TEST_CASE("iou rejects degenerate boxes") {
  CHECK(oracle::throws_kind(ErrorKind::invalid_geometry, [] { iou({0, 0, 0, 1}, {0, 0, 1, 1}); }));
  CHECK(oracle::throws_kind(ErrorKind::invalid_geometry, [] { iou({0, 0, 1, 1}, {0, 0, 1, -2}); }));
}

TEST_CASE("iou matches pixel counting on random boxes") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    // quarter-pixel aligned boxes, so the grid oracle is exact
    auto q = [&](long lo, long hi) { return static_cast<double>(rng.range(lo, hi)) / 4; };
    BBox a{q(0, 40), q(0, 40), q(1, 40), q(1, 40)};
    BBox b{q(0, 40), q(0, 40), q(1, 40), q(1, 40)};
    const double v = iou(a, b);
    CHECK(v == doctest::Approx(oracle::pixel_iou(a, b)).epsilon(1e-12));
    CHECK(v == iou(b, a));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK((v == 1.0) == (a == b));
    const bool disjoint = a.x + a.w <= b.x || b.x + b.w <= a.x || a.y + a.h <= b.y ||
                          b.y + b.h <= a.y;
    CHECK((v == 0.0) == disjoint);
  }
}

TEST_CASE("mask blackens enumerated pixels") {
  Raster img(4, 4);
  const std::vector<BBox> boxes{{1, 1, 2, 2}};
  Raster out = mask_text_regions(img, boxes);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      const bool inside = (x == 1 || x == 2) && (y == 1 || y == 2);
      CHECK(is_black(out.at(x, y)) == inside);
    }
  CHECK(img == Raster(4, 4));  // input untouched
}

TEST_CASE("mask edge cases") {
  Raster img(5, 3, {0.2, 0.4, 0.6});
  CHECK(mask_text_regions(img, {}) == img);
  const std::vector<BBox> all{{-3, -3, 20, 20}};
  const Raster masked = mask_text_regions(img, all);
  for (const Rgb& p : masked.pixels()) CHECK(is_black(p));
  CHECK(oracle::throws_kind(ErrorKind::invalid_input, [] { mask_text_regions(Raster{}, {}); }));
}

TEST_CASE("mask uses pixel centers for fractional boxes") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Raster img(9, 7, {1, 1, 1});
    std::vector<BBox> boxes;
    for (int k = 0; k < 3; ++k)
      boxes.push_back({rng.uniform(-2, 9), rng.uniform(-2, 7), rng.uniform(0.1, 5),
                       rng.uniform(0.1, 5)});
    Raster once = mask_text_regions(img, boxes);
    CHECK(mask_text_regions(once, boxes) == once);
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 9; ++x) {
        bool inside = false;
        for (const BBox& b : boxes) {
          const double cx = x + 0.5, cy = y + 0.5;
          inside = inside || (cx >= b.x && cx < b.x + b.w && cy >= b.y && cy < b.y + b.h);
        }
        CHECK(is_black(once.at(x, y)) == inside);
      }
  }
}

TEST_CASE("merge drops visual duplicates of text") {
  const std::vector<Component> text{text_comp(0, {0, 0, 10, 2}, "hello")};
  const std::vector<Component> vis{visual_comp(0, {0, 0, 10, 2}), visual_comp(1, {20, 20, 5, 5})};
  auto merged = merge_components(text, vis);
  REQUIRE(merged.size() == 2);
  CHECK(merged[0].text == "hello");
  CHECK(merged[1].bbox == BBox{20, 20, 5, 5});
  CHECK(merged[0].id == 0);
  CHECK(merged[1].id == 1);
}

TEST_CASE("merge pass-through and errors") {
  const std::vector<Component> vis{visual_comp(7, {0, 0, 1, 1}), visual_comp(9, {3, 3, 1, 1})};
  auto only_vis = merge_components({}, vis);
  REQUIRE(only_vis.size() == 2);
  CHECK(only_vis[1].bbox == vis[1].bbox);
  const std::vector<Component> txt{text_comp(4, {0, 0, 1, 1})};
  CHECK(merge_components(txt, {}).size() == 1);
  const std::vector<Component> dup{visual_comp(1, {0, 0, 1, 1}), visual_comp(1, {2, 2, 1, 1})};
  CHECK(oracle::throws_kind(ErrorKind::invalid_input, [&] { merge_components({}, dup); }));
}

TEST_CASE("merge property: no text/visual pair at or above the threshold") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto cs = oracle::random_components(rng, 12);
    std::vector<Component> text, vis;
    for (auto& c : cs) (c.is_text() ? text : vis).push_back(c);
    auto merged = merge_components(text, vis);
    std::size_t expected = text.size();
    for (const auto& v : vis) {
      bool dup = false;
      for (const auto& t : text) dup = dup || oracle::exact_iou(t.bbox, v.bbox) >= 0.8;
      if (!dup) ++expected;
    }
    CHECK(merged.size() == expected);
    for (std::size_t i = 0; i < merged.size(); ++i) {
      CHECK(merged[i].id == static_cast<int>(i));
      for (std::size_t j = 0; j < merged.size(); ++j)
        if (merged[i].is_text() && !merged[j].is_text())
          CHECK(iou(merged[i].bbox, merged[j].bbox) < 0.8);
    }
  }
}

TEST_CASE("featurize examples") {
  Component v = visual_comp(0, {0, 0, 100, 50});
  v.color = Rgb{1, 0, 0};
  const std::vector<double> fv{0.5, 0.5, 1, 1, 0, 1, 1, 0, 0, 0};
  CHECK(featurize(v, 100, 50) == fv);

  Component t = text_comp(1, {0, 0, 10, 10}, "ab");
  auto ft = featurize(t, 100, 100);
  const std::vector<double> expect{0.05, 0.05, 0.1, 0.1, 1, 0, 0, 0, 0, std::log(3.0)};
  REQUIRE(ft.size() == kFeatureDim);
  for (std::size_t i = 0; i < kFeatureDim; ++i) CHECK(ft[i] == doctest::Approx(expect[i]));
  CHECK(featurize(t, 100, 100) == ft);
}

TEST_CASE("featurize ranges and external features") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto cs = oracle::random_components(rng, 5);
    for (auto& c : cs) {
      auto f = featurize(c, 25, 25);
      for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        CHECK(f[i] >= 0.0);
        CHECK(f[i] <= 1.0);
      }
      CHECK(f.back() >= 0.0);
    }
  }
  Component c = visual_comp(0, {0, 0, 1, 1});
  c.features = std::vector<double>{3, 4};
  CHECK(node_features(c, 10, 10) == std::vector<double>{3, 4});
}

TEST_CASE("annotation json round trip") {
  Annotations a;
  a.page = {40, 30};
  Component t = text_comp(2, {1, 2, 3, 4}, "x\"y");
  t.color = Rgb{0.5, 0.25, 0};
  Component v = visual_comp(5, {0, 0, 10, 10});
  v.features = std::vector<double>{1, 2, 3};
  a.components = {t, v};
  Annotations b = annotations_from_json(to_json(a));
  CHECK(b.page.width == 40);
  CHECK(b.page.height == 30);
  CHECK(b.components == a.components);

  nlohmann::json bad = to_json(a);
  bad["components"][1]["text"] = "visual nodes carry no text";
  CHECK(oracle::throws_kind(ErrorKind::invalid_input, [&] { annotations_from_json(bad); }));
}

TEST_CASE("raster io round trips") {
  Raster img(3, 2);
  img.at(0, 0) = {1, 0, 0};
  img.at(2, 1) = {0, 128.0 / 255, 1};
  const auto dir = std::filesystem::temp_directory_path();
  for (const char* ext : {".png", ".ppm"}) {
    const auto path = (dir / (std::string("d2c_raster_test") + ext)).string();
    write_raster(img, path);
    CHECK(read_raster(path) == img);
    std::filesystem::remove(path);
  }
  CHECK(oracle::throws_kind(ErrorKind::io, [] { read_raster("/nonexistent/x.png"); }));
}
