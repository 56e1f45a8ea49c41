#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cropmap/cube.hpp"
#include "cropmap/forest.hpp"
#include "cropmap/sampling.hpp"

namespace cropmap {

struct HindcastOptions {
  std::vector<int> months{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool per_stratum = false;
  Hyperparams hp{};
  unsigned threads = 1;
};

/// Long-format row. `stratum` is "all", "Str1" or "Str2"; `class_code` is 0
/// for the overall accuracy row.
struct HindcastRow {
  int month;
  std::string stratum;
  ClassCode class_code;
  std::string metric;  // "oa" or "fscore"
  double value;
};

struct HindcastResult {
  std::vector<HindcastRow> rows;
  std::vector<std::string> warnings;
};

/// For each month m, trains on dekads [0, 3m-1] of the sample bands and
/// scores the held-out polygons. One polygon split is drawn up front and
/// reused for every month.
HindcastResult hindcast_series(const SampleSet& samples, const HindcastOptions& options);

std::string format_hindcast(const std::vector<HindcastRow>& rows);

struct IndexScore {
  std::vector<CubeBand> bands;
  double oa;
};

/// OA per band set on one shared split, dekads [start, end] of the window.
/// Throws std::invalid_argument when a band is missing from the samples.
std::vector<IndexScore> benchmark_indices(const SampleSet& samples,
                                          const std::vector<std::vector<CubeBand>>& band_sets,
                                          int start_dekad, int end_dekad, double train_fraction,
                                          std::uint64_t seed, const Hyperparams& hp,
                                          unsigned threads = 1);

/// {VV}, {VH}, {CR}, {VV,VH}, {VV,VH,CR}
std::vector<std::vector<CubeBand>> standard_band_sets();

std::string format_index_scores(const std::vector<IndexScore>& scores);

}  // namespace cropmap
