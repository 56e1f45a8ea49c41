#pragma once

// Reference implementations the library is checked against. They are
// deliberately written differently from the code under test.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cropmap/accuracy.hpp"
#include "cropmap/synth.hpp"

namespace oracle {

/// Dekad bin of every day of `year`, found by walking the calendar one day
/// at a time with a hand-written month table.
std::vector<int> dekad_bins_by_walking(int year);
/// (month, day) of every day of `year`, same walk.
std::vector<std::pair<int, int>> calendar_days(int year);

struct BootstrapSe {
  double oa = 0.0;
  std::vector<std::optional<double>> ua;  // empty for map classes with n < 2
};

/// Standard deviation of OA and UA over `resamples` stratified bootstrap
/// replicates: each map-class row is resampled with replacement from its own
/// observed reference labels, weights held fixed.
BootstrapSe bootstrap_se(const cropmap::CountMatrix& m, const std::vector<double>& weights,
                         int resamples, std::uint64_t seed);

/// n*Sxy - Sx*Sy over the square roots of the matching variance terms,
/// accumulated in long double.
std::optional<double> pearson_sums(const std::vector<double>& x, const std::vector<double>& y);

/// Dekads at which two signatures differ by at least `gap_db` in VV or VH.
std::vector<int> separating_dekads(const cropmap::CropSignature& a, const cropmap::CropSignature& b,
                                   cropmap::Stratum s, double gap_db, int last_dekad = 35);

/// First dekad d such that, for every other crop, some dekad <= d separates
/// the pair by gap_db. Empty when that never happens within the year.
std::optional<int> separability_onset(const std::vector<cropmap::CropSignature>& crops,
                                      cropmap::ClassCode code, cropmap::Stratum s, double gap_db);

/// Golden CSV: header line, optional
/// '#' comment lines, then rows of raw text fields.
struct GoldenTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
GoldenTable read_golden(const std::filesystem::path& path);

/// Directory holding data/ (golden, legend, scenarios).
std::filesystem::path data_dir();

}  // namespace oracle
