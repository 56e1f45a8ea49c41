#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "cropmap/tuning.hpp"

using namespace cropmap;

namespace {

// Three classes, 12 polygons each with 3 pixels, separable on feature 0.
SampleSet polygons() {
  SampleSet s;
  s.window = FeatureWindow{0, 1, {CubeBand::VV_dB}};
  std::mt19937 gen(8);
  std::normal_distribution<float> noise(0.0f, 0.3f);
  const ClassCode codes[] = {211, 213, 216};
  for (int k = 0; k < 3; ++k)
    for (int p = 0; p < 12; ++p)
      for (int px = 0; px < 3; ++px) {
        s.rows.push_back({std::to_string(codes[k]) + "_" + std::to_string(p), codes[k], Stratum::Str1, 1});
        s.features.push_back(static_cast<float>(k * 4) + noise(gen));
        s.features.push_back(noise(gen));
      }
  return s;
}

}  // namespace

TEST_CASE("standard grid size and mixed-radix order") {
  const auto g = ParamGrid::standard();
  CHECK(g.size() == 1080);
  CHECK(ParamGrid::core().size() == 20);
  // fastest digit is the last declared list
  CHECK(g.at(0).n_estimators == 300);
  CHECK(g.at(0).bootstrap);
  CHECK_FALSE(g.at(1).bootstrap);
  CHECK(g.at(2).max_depth == 20);
  CHECK(g.at(6).min_samples_split == 3);
  CHECK(g.at(18).min_samples_leaf == 2);
  CHECK(g.at(54).max_features == MaxFeatures::Log2);
  CHECK(g.at(108).n_estimators == 400);
  CHECK(g.at(1079).n_estimators == 1200);
  CHECK_THROWS_AS(g.at(1080), std::out_of_range);

  // every combination appears once
  std::set<std::string> all;
  for (std::size_t i = 0; i < g.size(); ++i) all.insert(g.at(i).describe());
  CHECK(all.size() == 1080);
}

TEST_CASE("grid file parsing") {
  const auto g = ParamGrid::parse("# small\nn_estimators=10:30:10\nmax_features=log2\n");
  CHECK(g.n_estimators == std::vector<int>{10, 20, 30});
  CHECK(g.size() == 3 * 1 * 3 * 3 * 3 * 2);
  CHECK_THROWS_AS(ParamGrid::parse("n_estimators=0"), std::invalid_argument);
  CHECK_THROWS_AS(ParamGrid::parse("learning_rate=1"), std::invalid_argument);
  CHECK_THROWS_AS(ParamGrid::parse("n_estimators=1:5:0"), std::invalid_argument);
  CHECK_THROWS_AS(ParamGrid::parse("max_depth"), std::invalid_argument);
}

TEST_CASE("polygon folds keep polygons whole and balance classes") {
  const auto s = polygons();
  const auto folds = polygon_folds(s, 3, 4);
  CHECK(folds.size() == 36);
  std::map<std::size_t, std::map<char, int>> per_fold;
  for (auto& [id, f] : folds) per_fold[f][id[2]]++;
  for (auto& [f, by_class] : per_fold)
    for (auto& [c, n] : by_class) CHECK(n == 4);
  CHECK(polygon_folds(s, 3, 4) == folds);
  CHECK(polygon_folds(s, 3, 5) != folds);
  CHECK_THROWS_AS(polygon_folds(s, 1, 4), std::invalid_argument);
  CHECK_THROWS_AS(polygon_folds(s, 37, 4), std::invalid_argument);
}

TEST_CASE("random search fits every candidate on every fold") {
  const auto s = polygons();
  std::atomic<std::size_t> counter{0};
  const auto r = random_search_cv(s, ParamGrid::parse("n_estimators=5\nmax_depth=none,3\n"), 7, 3, 1, 1, &counter);
  // 1*2*3*3*2*2 = 72 combinations, 7 drawn
  CHECK(r.candidates.size() == 7);
  CHECK(r.fits == 21);
  CHECK(counter == 21);
  std::set<std::size_t> idx;
  for (auto& c : r.candidates) {
    idx.insert(c.grid_index);
    CHECK(c.fold_accuracy.size() == 3);
  }
  CHECK(idx.size() == 7);
  for (std::size_t i = 1; i < r.candidates.size(); ++i)
    CHECK(r.candidates[i - 1].mean_accuracy >= r.candidates[i].mean_accuracy);
  CHECK(r.best().mean_accuracy > 0.9);
}

TEST_CASE("random search with a grid smaller than the budget") {
  const auto s = polygons();
  ParamGrid g = ParamGrid::core();
  g.n_estimators = {4, 6};
  g.max_features = {MaxFeatures::Sqrt};
  const auto r = random_search_cv(s, g, 100, 2, 3);
  CHECK(r.candidates.size() == 2);
  CHECK(r.fits == 4);
}

TEST_CASE("random search is reproducible and thread independent") {
  const auto s = polygons();
  const auto g = ParamGrid::parse("n_estimators=3,4\nmax_depth=2,none\n");
  const auto a = random_search_cv(s, g, 5, 3, 9, 1);
  const auto b = random_search_cv(s, g, 5, 3, 9, 4);
  REQUIRE(a.candidates.size() == b.candidates.size());
  for (std::size_t i = 0; i < a.candidates.size(); ++i) {
    CHECK(a.candidates[i].grid_index == b.candidates[i].grid_index);
    CHECK(a.candidates[i].fold_accuracy == b.candidates[i].fold_accuracy);
  }
  CHECK_THROWS_AS(random_search_cv(s, g, 0, 3, 9), std::invalid_argument);
}
