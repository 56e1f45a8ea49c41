#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "cropmap/accuracy.hpp"
#include "cropmap/error.hpp"
#include "cropmap/io.hpp"

using namespace cropmap;
namespace fs = std::filesystem;

namespace {

CountMatrix two_by_two() {
  CountMatrix m({211, 500});
  m.at(0, 0) = 40;
  m.at(0, 1) = 10;
  m.at(1, 0) = 5;
  m.at(1, 1) = 45;
  return m;
}

std::optional<double> printed(const std::string& s) {
  if (s.empty() || s == "-" || s == "NaN" || s == "nan") return std::nullopt;
  return parse_double(s);
}

}  // namespace

TEST_CASE("count matrix basics") {
  auto m = two_by_two();
  CHECK(m.total() == 100);
  CHECK(m.diagonal() == 85);
  CHECK(m.row_total(0) == 50);
  CHECK(m.col_total(0) == 45);
  m.add(500, 211, 2);
  CHECK(m.at(1, 0) == 7);
  CHECK_THROWS_AS(m.add(213, 211), std::invalid_argument);
  const ClassCode drop[] = {500};
  const auto w = m.without(drop);
  CHECK(w.classes == std::vector<ClassCode>{211});
  CHECK(w.at(0, 0) == 40);

  const auto text = format_count_matrix(m);
  CHECK(parse_count_matrix(text) == m);
  CHECK_THROWS_AS(parse_count_matrix("map\\ref,211\n211,-1\n"), FormatError);
  CHECK_THROWS_AS(parse_count_matrix("map\\ref,211,212\n211,1,2\n"), FormatError);
  CHECK_THROWS_AS(read_count_matrix("/nonexistent/counts.csv"), MissingInputError);
}

TEST_CASE("count-based metrics and F-score") {
  const auto cm = count_metrics(two_by_two());
  CHECK(*cm.oa == doctest::Approx(0.85));
  CHECK(*cm.classes[0].ua == doctest::Approx(0.8));
  CHECK(*cm.classes[0].pa == doctest::Approx(40.0 / 45.0));
  CHECK(cm.classes[0].fscore == doctest::Approx(2 * 0.8 * (40.0 / 45) / (0.8 + 40.0 / 45)));
  CHECK(fscore(std::nullopt, 0.5) == 0.0);
  CHECK(fscore(0.0, 0.0) == 0.0);
  CHECK_THROWS_AS(fscore(two_by_two(), 999), std::invalid_argument);

  CountMatrix empty_row({211, 212});
  empty_row.at(1, 0) = 3;
  const auto e = count_metrics(empty_row);
  CHECK_FALSE(e.classes[0].ua);
  CHECK(*e.classes[0].pa == 0.0);
  CHECK_FALSE(e.classes[1].pa);
}

TEST_CASE("stratified estimator on a hand-worked matrix") {
  const auto r = stratified_accuracy({two_by_two(), {0.3, 0.7}});
  CHECK(r.oa == doctest::Approx(0.87));
  CHECK(r.at(1, 0) == doctest::Approx(0.07));
  CHECK(*r.ua[0] == doctest::Approx(0.8));
  CHECK(*r.pa[0] == doctest::Approx(0.24 / 0.31));
  CHECK(*r.pa[1] == doctest::Approx(0.63 / 0.69));
  CHECK(*r.oa_var == doctest::Approx(0.0585 / 49));
  CHECK(*r.oa_se == doctest::Approx(1.959964 * std::sqrt(0.0585 / 49)));
  CHECK(*r.ua_var[0] == doctest::Approx(0.16 / 49));
  CHECK(*r.pa_var[0] == doctest::Approx(0.005769224522236094));
  CHECK(r.warnings.empty());

  const auto s = report_summary(r);
  CHECK(s.find("\nua.211=0.8\n") != std::string::npos);
  const auto t = format_report(r);
  CHECK(t.find("OA(%),87.0\n") != std::string::npos);
}

TEST_CASE("normal quantile") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.9599639845400536).epsilon(1e-12));
  CHECK(normal_quantile(0.001) == doctest::Approx(-3.090232306167813).epsilon(1e-12));
  CHECK(normal_quantile(0.9) == doctest::Approx(1.2815515655446008).epsilon(1e-12));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
  CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
  CHECK_THROWS_AS(stratified_accuracy({two_by_two(), {0.5, 0.5}}, 1.0), std::invalid_argument);
}

TEST_CASE("proportional weights reduce to count metrics") {
  std::mt19937 gen(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + trial % 8;
    std::vector<ClassCode> classes;
    for (std::size_t i = 0; i < k; ++i) classes.push_back(static_cast<ClassCode>(211 + i));
    CountMatrix m(classes);
    std::uniform_int_distribution<int> u(0, 40);
    for (auto& c : m.counts) c = u(gen);
    for (std::size_t i = 0; i < k; ++i) m.at(i, i) += 1;
    const auto r = stratified_accuracy({m, proportional_weights(m)});
    const auto c = count_metrics(m);
    CHECK(r.oa == doctest::Approx(*c.oa).epsilon(1e-12));
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(*r.ua[i] == doctest::Approx(*c.classes[i].ua).epsilon(1e-12));
      CHECK(*r.pa[i] == doctest::Approx(*c.classes[i].pa).epsilon(1e-12));
    }
  }
}

TEST_CASE("unsampled map classes lose their weight") {
  CountMatrix m({211, 212, 500});
  m.at(0, 0) = 10;
  m.at(2, 2) = 10;
  m.at(2, 0) = 2;
  const auto r = stratified_accuracy({m, {0.2, 0.3, 0.5}});
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("212") != std::string::npos);
  CHECK(r.weights[0] == doctest::Approx(0.2 / 0.7));
  CHECK(r.weights[1] == 0.0);
  CHECK_FALSE(r.ua[1]);
  CHECK(r.oa_var);

  // a weighted row with one sample leaves the OA variance undefined
  m.at(1, 1) = 1;
  const auto one = stratified_accuracy({m, {0.2, 0.3, 0.5}});
  CHECK_FALSE(one.oa_var);
  CHECK_FALSE(one.oa_se);
  CHECK(one.ua[1]);
  CHECK_FALSE(one.ua_se[1]);

  CHECK_THROWS_AS(stratified_accuracy({m, {0.2, 0.3}}), std::invalid_argument);
  CHECK_THROWS_AS(stratified_accuracy({m, {0.2, 0.3, 0.4}}), std::invalid_argument);
  CHECK_THROWS_AS(stratified_accuracy({m, {-0.2, 0.7, 0.5}}), std::invalid_argument);
}

TEST_CASE("analytic variance tracks a stratified bootstrap") {
  CountMatrix m({211, 213, 500});
  m.counts = {80, 12, 8, 6, 70, 14, 10, 9, 121};
  const std::vector<double> w{0.15, 0.25, 0.6};
  const auto r = stratified_accuracy({m, w});
  const auto b = oracle::bootstrap_se(m, w, 4000, 3);
  CHECK(std::sqrt(*r.oa_var) == doctest::Approx(b.oa).epsilon(0.1));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::sqrt(*r.ua_var[i]) == doctest::Approx(*b.ua[i]).epsilon(0.1));
}

TEST_CASE("area weights and weight files") {
  const std::vector<ClassCode> classes{211, 212, 500};
  const auto w = area_weights(classes, {{211, 30}, {500, 70}, {600, 900}});
  CHECK(w == std::vector<double>{0.3, 0.0, 0.7});
  const auto p = fs::temp_directory_path() / "cropmap_unit" / "weights.csv";
  fs::create_directories(p.parent_path());
  std::ofstream(p) << "class,weight\n211,0.25\n500,0.75\n";
  const auto read = read_weights(p);
  CHECK(read.at(500) == 0.75);
  CHECK_THROWS_AS(read_weights(p.parent_path() / "none.csv"), MissingInputError);
}

TEST_CASE("GSAA golden table for one region") {
  const auto dir = oracle::data_dir() / "golden";
  const auto m = read_count_matrix(dir / "gsaa_bevl2018_counts.csv");
  const auto g = oracle::read_golden(dir / "gsaa_bevl2018_expected.csv");
  const auto c = count_metrics(m);
  REQUIRE(g.rows.size() == m.size());
  for (std::size_t i = 0; i < g.rows.size(); ++i) {
    const auto& row = g.rows[i];
    CHECK(parse_int(row[0]) == m.classes[i]);
    CHECK(parse_int(row[1]) == m.row_total(i));
    CHECK(parse_int(row[2]) == m.col_total(i));
    if (auto ua = printed(row[3])) CHECK(std::abs(*c.classes[i].ua - *ua) <= 1e-4);
    if (auto pa = printed(row[4])) CHECK(std::abs(*c.classes[i].pa - *pa) <= 1e-4);
  }
}

TEST_CASE("LUCAS golden table") {
  const auto dir = oracle::data_dir() / "golden";
  const auto m = read_count_matrix(dir / "lucas_eu28_counts.csv");
  const auto g = oracle::read_golden(dir / "lucas_eu28_expected.csv");
  const auto c = count_metrics(m);
  std::size_t checked = 0;
  for (const auto& row : g.rows) {
    if (row[0] == "oa_pct") {
      CHECK(std::abs(100 * *c.oa - parse_double(row[1])) <= 0.05);
      continue;
    }
    const auto i = *m.index_of(static_cast<ClassCode>(parse_int(row[0])));
    CHECK(parse_int(row[1]) == m.row_total(i));
    CHECK(parse_int(row[2]) == m.col_total(i));
    if (auto ua = printed(row[3])) CHECK(std::abs(100 * *c.classes[i].ua - *ua) <= 0.05);
    if (auto pa = printed(row[4])) CHECK(std::abs(100 * *c.classes[i].pa - *pa) <= 0.05);
    ++checked;
  }
  CHECK(checked == m.size());
  const auto report = format_count_report(m);
  CHECK(report.find("OA(%),74.0") != std::string::npos);
}
