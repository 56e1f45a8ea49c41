#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "doctest.h"
#include "cropmap/error.hpp"
#include "cropmap/forest.hpp"

using namespace cropmap;
namespace fs = std::filesystem;

namespace {

struct Table {
  std::vector<float> x;
  std::vector<ClassCode> y;
  std::size_t cols = 0;
  DataView view() const { return {x, y.size(), cols, y}; }
};

// Two Gaussian blobs separated along every axis.
Table separable(std::size_t n, std::size_t cols, unsigned seed) {
  Table t;
  t.cols = cols;
  std::mt19937 gen(seed);
  std::normal_distribution<float> noise(0.0f, 0.5f);
  for (std::size_t i = 0; i < n; ++i) {
    const bool a = i % 2 == 0;
    for (std::size_t c = 0; c < cols; ++c) t.x.push_back((a ? -3.0f : 3.0f) + noise(gen));
    t.y.push_back(a ? 211 : 216);
  }
  return t;
}

Table xor_table(std::size_t n, unsigned seed) {
  Table t;
  t.cols = 2;
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (std::size_t i = 0; i < n; ++i) {
    const float a = u(gen), b = u(gen);
    t.x.push_back(a);
    t.x.push_back(b);
    t.y.push_back((a > 0) != (b > 0) ? 300 : 500);
  }
  return t;
}

// Best weighted-Gini threshold on one feature by trying every midpoint.
double brute_force_threshold(const std::vector<float>& x, const std::vector<ClassCode>& y) {
  std::vector<float> sorted(x);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  double best = 1e300, at = 0;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const double thr = (static_cast<double>(sorted[i]) + sorted[i + 1]) / 2;
    std::map<ClassCode, double> l, r;
    double nl = 0, nr = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (x[k] <= thr) { l[y[k]] += 1; nl += 1; }
      else { r[y[k]] += 1; nr += 1; }
    }
    auto g = [](const std::map<ClassCode, double>& m, double n) {
      double s = 1;
      for (auto& [c, v] : m) s -= (v / n) * (v / n);
      return s;
    };
    const double score = nl * g(l, nl) + nr * g(r, nr);
    if (score < best - 1e-12) { best = score; at = thr; }
  }
  return at;
}

}  // namespace

TEST_CASE("gini impurity") {
  CHECK(gini(std::vector<std::uint32_t>{5, 5}) == doctest::Approx(0.5));
  CHECK(gini(std::vector<std::uint32_t>{7, 0, 0}) == 0.0);
  CHECK(gini(std::vector<double>{1, 1, 1}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(gini(std::vector<std::uint32_t>{0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(gini(std::vector<double>{1, -1}), std::invalid_argument);
}

TEST_CASE("hyperparameters") {
  Hyperparams hp;
  CHECK(hp.describe() ==
        "n_estimators=100;max_features=sqrt;min_samples_leaf=1;min_samples_split=2;max_depth=none;"
        "criterion=gini;bootstrap=true");
  CHECK(Hyperparams::parse(hp.describe()) == hp);
  const auto p = Hyperparams::parse("n_estimators=7,max_depth=20,max_features=log2,bootstrap=false");
  CHECK(p.n_estimators == 7);
  CHECK(p.max_depth == 20);
  CHECK_FALSE(p.bootstrap);
  CHECK_THROWS_AS(Hyperparams::parse("n_estimators=0"), std::invalid_argument);
  CHECK_THROWS_AS(Hyperparams::parse("min_samples_split=1"), std::invalid_argument);
  CHECK_THROWS_AS(Hyperparams::parse("criterion=entropy"), std::invalid_argument);
  CHECK_THROWS_AS(Hyperparams::parse("colour=red"), std::invalid_argument);
  CHECK(hp.features_per_split(44) == 6);
  CHECK(hp.features_per_split(49) == 7);
  CHECK(hp.features_per_split(1) == 1);
  hp.max_features = MaxFeatures::Log2;
  CHECK(hp.features_per_split(44) == 5);
  CHECK(hp.features_per_split(64) == 6);
  CHECK(hp.features_per_split(2) == 1);
}

TEST_CASE("a depth-1 tree picks the brute-force Gini split") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<float> u(0.0f, 10.0f);
  Table t;
  t.cols = 1;
  for (int i = 0; i < 80; ++i) {
    const float v = u(gen);
    t.x.push_back(v);
    // noisy boundary near 6
    t.y.push_back(v + (u(gen) - 5.0f) * 0.3f > 6.0f ? 213 : 211);
  }
  Hyperparams hp;
  hp.n_estimators = 1;
  hp.bootstrap = false;
  hp.max_depth = 1;
  const auto m = train(t.view(), hp, 1);
  REQUIRE(m.trees[0].nodes.size() == 3);
  CHECK(m.trees[0].nodes[0].threshold == doctest::Approx(brute_force_threshold(t.x, t.y)));
  CHECK(m.trees[0].depth() == 1);
  CHECK(m.trees[0].leaf_count() == 2);
}

TEST_CASE("unlimited trees fit the training set") {
  const auto t = xor_table(200, 5);
  Hyperparams hp;
  hp.n_estimators = 1;
  hp.bootstrap = false;
  const auto m = train(t.view(), hp, 2);
  const auto pred = predict_rows(m, t.view());
  CHECK(pred == t.y);
}

TEST_CASE("OOB accuracy on separable and XOR data") {
  const auto s = separable(500, 6, 1);
  Hyperparams hp;
  const auto m = train(s.view(), hp, 42);
  const auto oob = oob_accuracy(m, s.view());
  REQUIRE(oob);
  CHECK(*oob >= 0.99);

  const auto x = xor_table(200, 3);
  const auto mx = train(x.view(), hp, 42);
  REQUIRE(oob_accuracy(mx, x.view()));
  CHECK(*oob_accuracy(mx, x.view()) >= 0.9);

  hp.bootstrap = false;
  CHECK_FALSE(oob_accuracy(train(x.view(), hp, 1), x.view()));
}

TEST_CASE("prediction fractions and ties") {
  Table t;
  t.cols = 1;
  t.x = {0.0f, 0.0f};
  t.y = {216, 211};
  Hyperparams hp;
  hp.n_estimators = 3;
  hp.bootstrap = false;
  const auto m = train(t.view(), hp, 1);
  const auto p = predict(m, std::vector<float>{0.0f});
  // a single leaf with one of each: the lower code wins
  CHECK(p.code == 211);
  CHECK(p.fractions[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(predict(m, std::vector<float>{0.0f, 1.0f}), std::invalid_argument);
}

TEST_CASE("training is independent of thread count") {
  const auto s = separable(300, 10, 9);
  Hyperparams hp;
  hp.n_estimators = 40;
  const auto a = serialize(train(s.view(), hp, 77, 1));
  const auto b = serialize(train(s.view(), hp, 77, 8));
  CHECK(a == b);
  CHECK(a != serialize(train(s.view(), hp, 78, 1)));
}

TEST_CASE("bad training input") {
  Table t;
  t.cols = 1;
  t.x = {1.0f, 2.0f};
  t.y = {211, 211};
  CHECK_THROWS_AS(train(t.view(), Hyperparams{}, 1), std::invalid_argument);
  t.y = {211, 212};
  t.x[0] = std::nanf("");
  CHECK_THROWS_AS(train(t.view(), Hyperparams{}, 1), std::invalid_argument);
  t.x = {1.0f};
  CHECK_THROWS_AS(train(t.view(), Hyperparams{}, 1), std::invalid_argument);
}

TEST_CASE("model files") {
  const auto s = separable(100, 4, 2);
  Hyperparams hp;
  hp.n_estimators = 5;
  hp.max_depth = 3;
  auto m = train(s.view(), hp, 3);
  m.level = 2;
  m.stratum = Stratum::Str2;
  m.feature_descriptor = "0-1:VV,VH";
  const auto bytes = serialize(m);
  const auto back = deserialize(bytes);
  CHECK(serialize(back) == bytes);
  CHECK(back.level == 2);
  CHECK(back.stratum == Stratum::Str2);
  CHECK(back.hp == hp);
  CHECK(predict_rows(back, s.view()) == predict_rows(m, s.view()));

  const auto dir = fs::temp_directory_path() / "cropmap_unit" / "forest";
  save_model(dir / "m.model", m);
  CHECK(serialize(load_model(dir / "m.model")) == bytes);
  CHECK_THROWS_AS(load_model(dir / "absent.model"), MissingInputError);
  CHECK_THROWS_AS(deserialize("nonsense\n"), FormatError);
  CHECK_THROWS_AS(deserialize(bytes.substr(0, bytes.size() - 3)), FormatError);
  CHECK_THROWS_AS(deserialize(bytes + "x"), FormatError);
  auto v2 = bytes;
  v2.replace(v2.find("version=1"), 9, "version=9");
  CHECK_THROWS_AS(deserialize(v2), FormatError);
}

TEST_CASE("bootstrap draws are reproducible per tree") {
  CHECK(bootstrap_sample(5, 3, 50) == bootstrap_sample(5, 3, 50));
  CHECK(bootstrap_sample(5, 3, 50) != bootstrap_sample(5, 4, 50));
}
