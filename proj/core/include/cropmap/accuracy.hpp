#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cropmap/types.hpp"

namespace cropmap {

/// Square count matrix; rows are map classes, columns reference classes,
/// both over the same ascending-or-given class list.
struct CountMatrix {
  std::vector<ClassCode> classes;
  std::vector<std::int64_t> counts;  // k x k row-major

  CountMatrix() = default;
  explicit CountMatrix(std::vector<ClassCode> classes);

  std::size_t size() const { return classes.size(); }
  std::int64_t& at(std::size_t i, std::size_t j) { return counts[i * size() + j]; }
  std::int64_t at(std::size_t i, std::size_t j) const { return counts[i * size() + j]; }
  std::optional<std::size_t> index_of(ClassCode c) const;
  /// Throws std::invalid_argument for a class outside the list.
  void add(ClassCode map_class, ClassCode reference_class, std::int64_t n = 1);
  std::int64_t row_total(std::size_t i) const;
  std::int64_t col_total(std::size_t j) const;
  std::int64_t total() const;
  std::int64_t diagonal() const;
  /// Same matrix without the listed classes' rows and columns.
  CountMatrix without(std::span<const ClassCode> drop) const;

  bool operator==(const CountMatrix&) const = default;
};

/// CSV: header "map\ref,c1,c2,...", then one row per map class in the same order.
CountMatrix read_count_matrix(const std::filesystem::path& path);
CountMatrix parse_count_matrix(std::string_view text, std::string_view origin = "<text>");
void write_count_matrix(const std::filesystem::path& path, const CountMatrix& m);
std::string format_count_matrix(const CountMatrix& m);

struct ClassMetrics {
  ClassCode code = 0;
  std::optional<double> ua;  // undefined for an empty row
  std::optional<double> pa;  // undefined for an empty column
  double fscore = 0.0;
};

struct CountMetrics {
  std::optional<double> oa;
  std::vector<ClassMetrics> classes;
};

CountMetrics count_metrics(const CountMatrix& m);
/// Harmonic mean; 0 when either side is undefined or both are 0.
double fscore(std::optional<double> precision, std::optional<double> recall);
/// Throws std::invalid_argument when the class is absent.
double fscore(const CountMatrix& m, ClassCode code);

/// Counts plus per-map-class inclusion weights summing to 1.
struct StratifiedConfusion {
  CountMatrix counts;
  std::vector<double> weights;

  /// Throws std::invalid_argument on a size mismatch, negative entries, or
  /// weights not summing to 1 (1e-9).
  void validate() const;
};

struct AccuracyReport {
  std::vector<ClassCode> classes;
  std::vector<double> p;  // k x k estimated area proportions
  std::vector<double> weights;
  double confidence = 0.95;
  double z = 0.0;
  double oa = 0.0;
  std::optional<double> oa_var;
  std::optional<double> oa_se;  // z * sqrt(var)
  std::vector<std::optional<double>> ua, ua_var, ua_se;
  std::vector<std::optional<double>> pa, pa_var, pa_se;
  std::vector<std::string> warnings;

  double at(std::size_t i, std::size_t j) const { return p[i * classes.size() + j]; }
};

/// Stratified estimator with map classes as strata. Map classes that carry
/// weight but no sample are dropped and the remaining weights renormalised
/// (noted in warnings). SEs are undefined for map classes with n <= 1.
AccuracyReport stratified_accuracy(const StratifiedConfusion& conf, double confidence = 0.95);

/// Inverse standard normal CDF, p in (0, 1).
double normal_quantile(double p);

/// W[i] = n[i.] / n.
std::vector<double> proportional_weights(const CountMatrix& m);
/// W[i] from mapped pixel counts per class; classes absent from `pixels`
/// get zero weight.
std::vector<double> area_weights(std::span<const ClassCode> classes,
                                 const std::map<ClassCode, std::size_t>& pixels);
/// Reads "class,weight" lines.
std::map<ClassCode, double> read_weights(const std::filesystem::path& path);

/// Area-proportion table with UA/PA/SE in percent, OA at the end.
std::string format_report(const AccuracyReport& r);
/// key=value lines with fractions (oa, oa_se, ua.<code>, pa.<code>, ...).
std::string report_summary(const AccuracyReport& r);
/// Count table with row/column totals and count-based UA/PA/OA in percent.
std::string format_count_report(const CountMatrix& m);

}  // namespace cropmap
