#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "cropmap/error.hpp"
#include "cropmap/legend.hpp"

using namespace cropmap;
namespace fs = std::filesystem;

TEST_CASE("study legend shape") {
  const auto& L = StudyLegend::standard();
  CHECK(L.level1_codes() == std::vector<ClassCode>{100, 200, 300, 500, 600});
  CHECK(L.arable_codes().size() == 19);
  for (auto c : L.arable_codes()) {
    CHECK(L.level1_of(c) == kArable);
    CHECK(L.group_of(c).has_value());
  }
  CHECK(level1_of(216) == 200);
  CHECK(level1_of(500) == 500);
  CHECK(group_of(232) == ClassCode{230});
  CHECK(group_of(290) == ClassCode{290});
  CHECK_FALSE(group_of(300));
  CHECK_THROWS_AS(level1_of(999), std::invalid_argument);
  CHECK(L.label(213) == "Barley");
}

TEST_CASE("mapping is many-to-one only") {
  LegendMapping m("test");
  m.add("B11", "", 211);
  m.add("B11x", "", 211);
  m.add("B11", "", 211);  // same target again is fine
  CHECK(m.size() == 2);
  CHECK_THROWS_AS(m.add("B11", "", 212), std::invalid_argument);
  CHECK_THROWS_AS(m.add("Q", "", 777), std::invalid_argument);
  CHECK(m.study_codes() == std::vector<ClassCode>{211});
  CHECK_FALSE(m.map_code("nope"));
}

TEST_CASE("land-use qualified entries win over the plain one") {
  const auto cat = LegendCatalog::load_dir(oracle::data_dir() / "legend");
  const auto& lucas = cat.scheme("lucas");
  CHECK(lucas.map_code("F40", "U111") == ClassCode{290});
  CHECK(lucas.map_code("F40", "U400") == ClassCode{600});
  CHECK(lucas.map_code("F40") == ClassCode{600});
  CHECK(lucas.map_code("B13") == ClassCode{213});
  CHECK(lucas.map_code("B13", "U111") == ClassCode{213});
}

TEST_CASE("shipped mapping files load and cover the legend") {
  const auto cat = LegendCatalog::load_dir(oracle::data_dir() / "legend");
  const auto names = cat.scheme_names();
  const std::set<std::string> have(names.begin(), names.end());
  for (const char* s : {"lucas", "eurostat", "gsaa:bevl2018", "gsaa:dk2018", "gsaa:nrw2018"})
    CHECK(have.count(s) == 1);
  // every study code but the arable parent is reachable from LUCAS
  const auto codes = cat.scheme("lucas").study_codes();
  for (const auto& c : StudyLegend::standard().classes())
    CHECK(std::count(codes.begin(), codes.end(), c.code) == (c.code == kArable ? 0 : 1));
  CHECK(cat.scheme("gsaa:bevl2018").map_code("311") == ClassCode{211});
  const auto report = coverage_report(cat);
  CHECK(report.rfind("scheme,entries,study_codes,covered,missing\n", 0) == 0);
  CHECK(report.find("lucas,") != std::string::npos);
  CHECK_THROWS_AS(cat.scheme("gsaa:atlantis"), std::invalid_argument);
}

TEST_CASE("mapping file errors") {
  const auto dir = fs::temp_directory_path() / "cropmap_unit" / "legend";
  fs::create_directories(dir);
  auto write = [&](const char* name, const char* text) {
    std::ofstream(dir / name) << text;
    return dir / name;
  };
  LegendCatalog cat;
  CHECK_THROWS_AS(cat.merge_file(write("a.csv", "scheme,code\n")), FormatError);
  CHECK_THROWS_AS(cat.merge_file(write("b.csv", "scheme,source_code,land_use,study_code\nx,1,,2x1\n")),
                  FormatError);
  CHECK_THROWS_AS(
      cat.merge_file(write("c.csv", "scheme,source_code,land_use,study_code\nx,1,,211\nx,1,,212\n")),
      FormatError);
  CHECK_THROWS_AS(cat.merge_file(dir / "missing.csv"), MissingInputError);
  CHECK_THROWS_AS(LegendCatalog::load_dir(dir / "none"), MissingInputError);
}
