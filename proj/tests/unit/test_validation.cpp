#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "cropmap/error.hpp"
#include "cropmap/validation.hpp"

using namespace cropmap;
namespace fs = std::filesystem;

namespace {

// 6x4 map of 10 m pixels, origin (0, 40): left half 211, right half 213.
ClassifiedMap halves() {
  ClassifiedMap m;
  m.geometry = {6, 4, 10.0, 0.0, 40.0};
  m.codes.resize(24);
  m.reasons.assign(24, MaskReason::None);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 6; ++c) m.codes[m.geometry.index(c, r)] = c < 3 ? 211 : 213;
  return m;
}

LucasPoint point(std::string id, double x, double y, ClassCode code) {
  LucasPoint p;
  p.id = std::move(id);
  p.location = {x, y};
  p.code = code;
  p.parcel_ha = 1.0;
  return p;
}

ParcelRecord parcel(std::string id, std::string region, ClassCode code, double x0, double y0, double x1,
                    double y1) {
  ParcelRecord p;
  p.id = std::move(id);
  p.region = std::move(region);
  p.code = code;
  p.declared = std::to_string(code);
  p.ring = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  return p;
}

fs::path scratch(const char* name) {
  auto d = fs::temp_directory_path() / "cropmap_unit" / "validation";
  fs::create_directories(d);
  return d / name;
}

}  // namespace

TEST_CASE("point filter counts the first failed criterion") {
  std::vector<LucasPoint> pts(6, point("p", 5, 5, 211));
  pts[0].in_situ = false;
  pts[0].direct = false;
  pts[1].direct = false;
  pts[2].parcel_ha = 0.05;
  pts[3].homogeneous = false;
  pts[4].in_training = true;
  const auto r = filter_lucas_points(pts);
  CHECK(r.kept.size() == 1);
  CHECK(r.dropped_not_in_situ == 1);
  CHECK(r.dropped_not_direct == 1);
  CHECK(r.dropped_small_parcel == 1);
  CHECK(r.dropped_heterogeneous == 1);
  CHECK(r.dropped_in_training == 1);
  pts[2].parcel_ha = 0.1;
  CHECK(filter_lucas_points(pts).kept.size() == 2);
  CHECK(filter_lucas_points(pts, {0.5}).kept.size() == 1);
}

TEST_CASE("point confusion skips masked and outside points") {
  auto map = halves();
  map.reasons[map.geometry.index(0, 0)] = MaskReason::Water;
  std::vector<LucasPoint> pts{point("a", 15, 15, 211), point("b", 45, 15, 211), point("c", 55, 35, 213),
                              point("d", 5, 35, 211), point("e", 65, 15, 211), point("f", 25, 5, 500)};
  const auto c = confusion_from_points(map, pts);
  CHECK(c.used == 4);
  CHECK(c.excluded_masked == 1);
  CHECK(c.excluded_outside == 1);
  CHECK(c.matrix.classes == std::vector<ClassCode>{211, 213, 500});
  CHECK(c.matrix.at(0, 0) == 1);
  CHECK(c.matrix.at(1, 0) == 1);
  CHECK(c.matrix.at(0, 2) == 1);
  CHECK_THROWS_AS(confusion_from_points(map, {}), std::invalid_argument);
}

TEST_CASE("point files round-trip") {
  std::vector<LucasPoint> pts{point("a", 1.5, 2.25, 216)};
  pts[0].in_training = true;
  pts[0].parcel_ha = 0.3;
  write_points(scratch("pts.csv"), pts);
  const auto back = read_points(scratch("pts.csv"));
  REQUIRE(back.size() == 1);
  CHECK(back[0].location.y == 2.25);
  CHECK(back[0].in_training);
  CHECK(back[0].parcel_ha == 0.3);
  std::ofstream(scratch("pts_bad.csv")) << "id,x,y,class\na,1,2,211\n";
  CHECK_THROWS_AS(read_points(scratch("pts_bad.csv")), FormatError);
  CHECK_THROWS_AS(read_points(scratch("pts_none.csv")), MissingInputError);
}

TEST_CASE("parcel mode and masked share") {
  auto map = halves();
  // 4x2 pixels straddling the boundary, three columns of 211
  const std::vector<Point> ring{{0, 20}, {40, 20}, {40, 40}, {0, 40}};
  CHECK(parcel_mode(map, ring, 0.5) == ClassCode{211});
  // two columns each: the tie goes to the lower code
  CHECK(parcel_mode(map, {{10, 20}, {50, 20}, {50, 40}, {10, 40}}, 0.5) == ClassCode{211});
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) map.reasons[map.geometry.index(c, r)] = MaskReason::Terrain;
  bool too = false;
  CHECK(parcel_mode(map, ring, 0.5, &too) == ClassCode{211});
  CHECK_FALSE(too);
  CHECK_FALSE(parcel_mode(map, ring, 0.4, &too));
  CHECK(too);
  CHECK_FALSE(parcel_mode(map, {{1, 1}, {4, 1}, {4, 4}}, 0.5));
}

TEST_CASE("parcel majority per region") {
  const auto map = halves();
  std::vector<ParcelRecord> parcels{
      parcel("1", "A", 211, 0, 0, 20, 20), parcel("2", "A", 213, 40, 0, 60, 40),
      parcel("3", "A", 211, 30, 20, 50, 40),  // mode 213
      parcel("4", "A", 290, 0, 39, 1, 40),    // tiny class, below 1 %
      parcel("5", "B", 213, 30, 0, 60, 10), parcel("6", "B", 300, 0, 0, 10, 40)};
  parcels.push_back(parcel("7", "B", 211, 0, 20, 10, 30));
  parcels.back().code.reset();
  const auto r = parcel_majority(map, parcels);
  REQUIRE(r.size() == 2);
  CHECK(r[0].region == "A");
  CHECK(r[0].small_classes == std::vector<ClassCode>{290});
  CHECK(r[0].excluded_small_class == 1);
  CHECK(r[0].matrix.classes == std::vector<ClassCode>{211, 213});
  CHECK(r[0].matrix.at(1, 0) == 1);
  CHECK(r[0].parcels_used == 3);
  CHECK(*r[0].metrics.classes[0].pa == doctest::Approx(0.5));
  // grassland is dropped after the matrix is built
  CHECK(r[1].excluded_unmapped == 1);
  CHECK(r[1].matrix.classes == std::vector<ClassCode>{211, 213});
  CHECK(r[1].parcels_used == 1);
}

TEST_CASE("parcel files map declared codes per region") {
  std::ofstream(scratch("parcels.csv")) << "id,region,declared,vertices\n"
                                        << "1,bevl2018,311,0 0;10 0;10 10;0 10\n"
                                        << "2,bevl2018,zzz,0 0;10 0;10 10;0 10\n"
                                        << "3,own,216,0 0;10 0;10 10;0 10\n";
  const auto cat = LegendCatalog::load_dir(oracle::data_dir() / "legend");
  const auto p = read_parcels(scratch("parcels.csv"), &cat);
  REQUIRE(p.size() == 3);
  CHECK(p[0].code == ClassCode{211});
  CHECK_FALSE(p[1].code);
  CHECK(p[2].code == ClassCode{216});
  CHECK(p[0].area_ha() == doctest::Approx(0.01));
}

TEST_CASE("pearson against the sums form") {
  std::mt19937 gen(2);
  std::uniform_real_distribution<double> u(0, 500);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x, y;
    const int n = 2 + t % 12;
    for (int i = 0; i < n; ++i) {
      x.push_back(u(gen));
      y.push_back(0.7 * x.back() + u(gen) * 0.3);
    }
    const auto a = pearson(x, y);
    const auto b = oracle::pearson_sums(x, y);
    REQUIRE(a.has_value() == b.has_value());
    if (a) CHECK(std::abs(*a - *b) <= 1e-12);
  }
  CHECK_FALSE(pearson({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}));
  CHECK_FALSE(pearson({1.0}, {1.0}));
  CHECK(*pearson({1.0, 2.0, 4.0}, {1.0, 2.0, 4.0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(pearson({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("zonal comparison per region and crop") {
  const auto map = halves();
  Raster<std::uint16_t> regions(map.geometry, 0);
  for (int c = 0; c < 6; ++c) {
    regions.at(c, 0) = regions.at(c, 1) = 1;
    regions.at(c, 2) = 2;
  }
  // 211 has 6 pixels in region 1, 3 in region 2; 213 likewise
  const double px_kha = 0.01 / 1000.0;
  const std::vector<RegionAreaPair> reported{
      {1, 211, 6 * px_kha, 0}, {2, 211, 3 * px_kha, 0}, {1, 213, 0.0, 0}, {2, 213, 6 * px_kha, 0}};
  const auto z = zonal_area_compare(map, regions, reported);
  REQUIRE(z.rows.size() == 4);
  CHECK(z.rows[0].mapped_kha == doctest::Approx(6 * px_kha));
  CHECK(*z.rows[0].relative_difference == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_FALSE(z.rows[2].relative_difference);
  CHECK(*z.rows[3].relative_difference == doctest::Approx(50.0));
  REQUIRE(z.crops.size() == 2);
  CHECK(*z.crops[0].pearson_r == doctest::Approx(1.0));
  CHECK(z.crops[0].regions == 2);

  std::ofstream(scratch("reported.csv")) << "region,class,reported_kha\n1,211,2.5\n1,211,0.5\n";
  const auto back = read_reported_areas(scratch("reported.csv"));
  REQUIRE(back.size() == 1);
  CHECK(back[0].reported_kha == 3.0);
  std::ofstream(scratch("reported_bad.csv")) << "region,class,reported_kha\n1,211,-2\n";
  CHECK_THROWS_AS(read_reported_areas(scratch("reported_bad.csv")), FormatError);
}
