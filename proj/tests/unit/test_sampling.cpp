#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "cropmap/error.hpp"
#include "cropmap/sampling.hpp"

using namespace cropmap;
namespace fs = std::filesystem;

namespace {

// 6x4 grid, 10 m pixels; VV = pixel index + dekad, VH = -VV.
DekadalCube test_cube() {
  const GridGeometry g{6, 4, 10.0, 0.0, 40.0};
  auto c = DekadalCube::empty(g, 2018, {CubeBand::VV_dB, CubeBand::VH_dB});
  for (int d = 0; d < 36; ++d)
    for (std::size_t p = 0; p < g.pixel_count(); ++p) {
      c.set(d, 0, p, static_cast<float>(p + d));
      c.set(d, 1, p, -static_cast<float>(p + d));
    }
  return c;
}

LabeledPolygon rect(std::string id, ClassCode code, double x0, double y0, double x1, double y1,
                    Stratum s = Stratum::Str1) {
  LabeledPolygon p;
  p.id = std::move(id);
  p.code = code;
  p.stratum = s;
  p.ring = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  return p;
}

fs::path scratch(const char* name) {
  auto p = fs::temp_directory_path() / "cropmap_unit" / "sampling";
  fs::create_directories(p);
  return p / name;
}

}  // namespace

TEST_CASE("per-pixel extraction takes pixel centers inside the polygon") {
  const auto cube = test_cube();
  // covers columns 0-1 of rows 0-1
  std::vector<LabeledPolygon> polys{rect("b", 213, 0, 20, 20, 40), rect("a", 211, 40, 0, 60, 10)};
  const FeatureWindow w{0, 2, {CubeBand::VV_dB}};
  const auto s = extract_samples(cube, polys, w);
  REQUIRE(s.size() == 6);
  // sorted by polygon id: "a" first
  CHECK(s.rows[0].polygon_id == "a");
  CHECK(s.rows[0].code == 211);
  CHECK(s.row(0)[0] == 22.0f);  // pixel (4, 3)
  CHECK(s.rows[2].polygon_id == "b");
  CHECK(s.row(2)[2] == 2.0f);  // pixel 0, dekad 2
  CHECK(s.classes() == std::vector<ClassCode>{211, 213});
}

TEST_CASE("polygon-averaged rows carry the pixel count") {
  const auto cube = test_cube();
  std::vector<LabeledPolygon> polys{rect("b", 213, 0, 20, 20, 40)};
  const auto s = extract_samples(cube, polys, FeatureWindow{5, 5, {CubeBand::VV_dB, CubeBand::VH_dB}},
                                 SampleMode::PolygonAveraged);
  REQUIRE(s.size() == 1);
  CHECK(s.rows[0].pixels == 4);
  // pixels 0, 1, 6, 7 at dekad 5
  CHECK(s.row(0)[0] == doctest::Approx((5 + 6 + 11 + 12) / 4.0));
  CHECK(s.row(0)[1] == doctest::Approx(-(5 + 6 + 11 + 12) / 4.0));
}

TEST_CASE("invalid cells drop rows and empty polygons are counted") {
  auto cube = test_cube();
  cube.valid[cube.index(1, 0, 0)] = 0;
  std::vector<LabeledPolygon> polys{rect("b", 213, 0, 20, 20, 40), rect("tiny", 211, 51, 1, 54, 4)};
  const auto s = extract_samples(cube, polys, FeatureWindow{0, 2, {CubeBand::VV_dB}});
  CHECK(s.size() == 3);
  CHECK(s.dropped_polygons == 1);
  polys.push_back(rect("b", 211, 40, 0, 60, 10));
  CHECK_THROWS_AS(extract_samples(cube, polys, FeatureWindow{}), std::invalid_argument);
}

TEST_CASE("extraction does not depend on thread count") {
  const auto cube = test_cube();
  std::vector<LabeledPolygon> polys;
  for (int i = 0; i < 6; ++i) polys.push_back(rect("p" + std::to_string(i), 211, i * 10.0, 0, i * 10.0 + 10, 40));
  const auto a = extract_samples(cube, polys, FeatureWindow{}, SampleMode::PerPixel, 1);
  const auto b = extract_samples(cube, polys, FeatureWindow{}, SampleMode::PerPixel, 4);
  CHECK(a.features == b.features);
  CHECK(a.size() == 24);
}

TEST_CASE("sample files round-trip") {
  const auto cube = test_cube();
  std::vector<LabeledPolygon> polys{rect("b", 213, 0, 20, 20, 40, Stratum::Str2)};
  const auto s = extract_samples(cube, polys, FeatureWindow{}, SampleMode::PolygonAveraged);
  write_samples(scratch("s.csv"), s);
  const auto t = read_samples(scratch("s.csv"));
  CHECK(t.window == s.window);
  CHECK(t.mode == SampleMode::PolygonAveraged);
  CHECK(t.features == s.features);
  CHECK(t.rows[0].stratum == Stratum::Str2);
  CHECK(t.rows[0].pixels == 4);

  std::ofstream(scratch("bad.csv")) << "#window=0-1:VV\npolygon_id,class,stratum,pixels,VV_0,VV_1\na,211,Str1,1,1\n";
  CHECK_THROWS_AS(read_samples(scratch("bad.csv")), FormatError);
  std::ofstream(scratch("nowin.csv")) << "polygon_id,class,stratum,pixels\n";
  CHECK_THROWS_AS(read_samples(scratch("nowin.csv")), FormatError);
  CHECK_THROWS_AS(read_samples(scratch("absent.csv")), MissingInputError);
}

TEST_CASE("select narrows the window") {
  const auto cube = test_cube();
  std::vector<LabeledPolygon> polys{rect("b", 213, 0, 30, 10, 40)};
  const auto s = extract_samples(cube, polys, FeatureWindow{});
  const auto t = s.select(FeatureWindow{3, 4, {CubeBand::VH_dB}});
  CHECK(std::vector<float>(t.row(0).begin(), t.row(0).end()) == std::vector<float>{-3, -4});
}

TEST_CASE("polygon files and validation") {
  std::vector<LabeledPolygon> polys{rect("x", 216, 0, 0, 10, 10, Stratum::Str2)};
  polys[0].in_situ_survey = true;
  write_polygons(scratch("p.csv"), polys);
  const auto back = read_polygons(scratch("p.csv"));
  REQUIRE(back.size() == 1);
  CHECK(back[0].ring == polys[0].ring);
  CHECK(back[0].in_situ_survey);
  CHECK(back[0].area_ha() == doctest::Approx(0.01));

  auto small = rect("s", 216, 0, 0, 8, 8);  // 64 m2
  small.in_situ_survey = true;
  CHECK_THROWS_AS(small.validate(), std::invalid_argument);
  small.in_situ_survey = false;
  CHECK_NOTHROW(small.validate());
  auto bow = small;
  bow.ring = {{0, 0}, {10, 10}, {10, 0}, {0, 10}};
  CHECK_THROWS_AS(bow.validate(), std::invalid_argument);

  std::ofstream(scratch("bad_poly.csv")) << "id,class,stratum,vertices\na,211,Str3,0 0;1 0;1 1\n";
  CHECK_THROWS_AS(read_polygons(scratch("bad_poly.csv")), FormatError);
}

TEST_CASE("stratum assignment uses half-open coarse cells") {
  StratumRaster st;
  st.cells = Raster<std::uint8_t>(GridGeometry{2, 1, 100.0, 0.0, 100.0}, 1);
  st.cells.at(1, 0) = 2;
  CHECK(assign_stratum(st, Point{99.9, 50}) == Stratum::Str1);
  CHECK(assign_stratum(st, Point{100.0, 50}) == Stratum::Str2);
  CHECK_THROWS_AS(assign_stratum(st, Point{200.0, 50}), std::invalid_argument);
  st.cells.at(0, 0) = 0;
  CHECK_THROWS_AS(assign_stratum(st, Point{1, 50}), std::invalid_argument);
  CHECK(assign_stratum(st, rect("r", 211, 120, 10, 180, 90)) == Stratum::Str2);
  write_strata(scratch("strata.manifest"), st);
  CHECK(read_strata(scratch("strata.manifest")).cells.values == st.cells.values);
}

TEST_CASE("polygon split is per class and keeps polygons whole") {
  SampleSet s;
  s.window = FeatureWindow{0, 0, {CubeBand::VV_dB}};
  for (int i = 0; i < 10; ++i)
    for (int k = 0; k < 3; ++k) {
      s.rows.push_back({"a" + std::to_string(i), 211, Stratum::Str1, 1});
      s.features.push_back(static_cast<float>(i));
    }
  for (int i = 0; i < 5; ++i) {
    s.rows.push_back({"b" + std::to_string(i), 213, Stratum::Str1, 1});
    s.features.push_back(0.0f);
  }
  s.rows.push_back({"solo", 216, Stratum::Str1, 1});
  s.features.push_back(0.0f);

  const auto r = split_polygons(s, 0.8, 3);
  CHECK(r.train.size() + r.test.size() == s.size());
  std::set<std::string> train_ids, test_ids;
  for (auto& row : r.train.rows) train_ids.insert(row.polygon_id);
  for (auto& row : r.test.rows) test_ids.insert(row.polygon_id);
  for (auto& id : train_ids) CHECK(test_ids.count(id) == 0);
  CHECK(train_ids.size() == 8 + 4 + 1);
  CHECK(train_ids.count("solo") == 1);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("216") != std::string::npos);

  const auto again = split_polygons(s, 0.8, 3);
  CHECK(again.test.features == r.test.features);
  CHECK_THROWS_AS(split_polygons(s, 1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(split_polygons(s, 0.0, 3), std::invalid_argument);

  const auto c = census(s);
  REQUIRE(c.size() == 3);
  CHECK(c[0].code == 211);
  CHECK(c[0].polygons == 10);
  CHECK(c[0].pixels == 30);
}
