#include <map>

#include "doctest.h"
#include "cropmap/hindcast.hpp"
#include "cropmap/synth.hpp"

using namespace cropmap;

namespace {

// Per-pixel samples over the whole year.
const SampleSet& year_samples() {
  static const SampleSet s = [] {
    const auto out = generate(standard_scenario(4));
    return extract_samples(out.cube, out.polygons, FeatureWindow{0, 35, {CubeBand::VV_dB, CubeBand::VH_dB}},
                           SampleMode::PerPixel);
  }();
  return s;
}

Hyperparams small_forest() {
  Hyperparams hp;
  hp.n_estimators = 15;
  return hp;
}

}  // namespace

TEST_CASE("hindcast rows per month") {
  HindcastOptions o;
  o.months = {2, 7};
  o.seed = 1;
  o.hp = small_forest();
  const auto r = hindcast_series(year_samples(), o);
  std::map<int, double> oa;
  std::size_t fscores = 0;
  for (const auto& row : r.rows) {
    CHECK(row.stratum == "all");
    if (row.metric == "oa") oa[row.month] = row.value;
    else ++fscores;
  }
  REQUIRE(oa.size() == 2);
  CHECK(oa[7] > oa[2]);
  CHECK(oa[7] > 0.9);
  CHECK(fscores > 0);
  const auto text = format_hindcast(r.rows);
  CHECK(text.rfind("month,stratum,class,metric,value\n2,all,all,oa,", 0) == 0);
}

TEST_CASE("hindcast per stratum and argument checks") {
  HindcastOptions o;
  o.months = {6};
  o.seed = 2;
  o.per_stratum = true;
  o.hp = small_forest();
  const auto r = hindcast_series(year_samples(), o);
  std::map<std::string, int> strata;
  for (const auto& row : r.rows) strata[row.stratum]++;
  CHECK(strata.size() == 2);
  CHECK(strata.count("Str1") == 1);

  o.months = {13};
  CHECK_THROWS_AS(hindcast_series(year_samples(), o), std::invalid_argument);
  o.months = {8};
  CHECK_THROWS_AS(hindcast_series(year_samples().select(FeatureWindow{0, 20, {CubeBand::VV_dB}}), o),
                  std::invalid_argument);
  CHECK_THROWS_AS(hindcast_series(SampleSet{}, o), std::invalid_argument);
}

TEST_CASE("hindcast is reproducible") {
  HindcastOptions o;
  o.months = {4};
  o.seed = 3;
  o.hp = small_forest();
  const auto a = hindcast_series(year_samples(), o);
  o.threads = 3;
  const auto b = hindcast_series(year_samples(), o);
  CHECK(format_hindcast(a.rows) == format_hindcast(b.rows));
}

TEST_CASE("band-set benchmark") {
  CHECK(standard_band_sets().size() == 5);
  const auto r = benchmark_indices(year_samples(), {{CubeBand::VV_dB}, {CubeBand::VV_dB, CubeBand::VH_dB}}, 0,
                                   21, 0.8, 5, small_forest());
  REQUIRE(r.size() == 2);
  CHECK(r[1].oa >= r[0].oa - 0.05);
  CHECK(format_index_scores(r).find("VV+VH") != std::string::npos);
  CHECK_THROWS_AS(benchmark_indices(year_samples(), {{CubeBand::CR}}, 0, 21, 0.8, 5, small_forest()),
                  std::invalid_argument);
  CHECK_THROWS_AS(benchmark_indices(year_samples(), {}, 0, 21, 0.8, 5, small_forest()), std::invalid_argument);
}
