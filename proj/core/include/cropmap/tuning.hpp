#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cropmap/forest.hpp"
#include "cropmap/sampling.hpp"

namespace cropmap {

/// Value lists per hyperparameter; combinations are enumerated in
/// mixed radix with n_estimators varying slowest.
struct ParamGrid {
  std::vector<int> n_estimators;
  std::vector<MaxFeatures> max_features;
  std::vector<int> min_samples_leaf;
  std::vector<int> min_samples_split;
  std::vector<std::optional<int>> max_depth;
  std::vector<bool> bootstrap;
  std::vector<Criterion> criterion;

  std::size_t size() const;
  Hyperparams at(std::size_t index) const;
  /// Throws std::invalid_argument when any list is empty or holds an
  /// invalid value.
  void validate() const;

  /// Seven-parameter default: n_estimators 300..1200 step 100, sqrt/log2,
  /// leaf {1,2,4}, split {2,3,5}, depth {none,20,40}, bootstrap {true,false}, gini.
  static ParamGrid standard();
  /// n_estimators x max_features only (20 combinations).
  static ParamGrid core();
  /// Reads "key=v1,v2,..." lines; unspecified keys keep the standard() lists.
  static ParamGrid parse(std::string_view text);
};

struct CandidateScore {
  std::size_t grid_index = 0;
  Hyperparams hp;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

struct CVResult {
  std::vector<CandidateScore> candidates;  // ranked: mean desc, grid index asc
  std::size_t k_folds = 0;
  std::size_t fits = 0;
  const CandidateScore& best() const { return candidates.front(); }
};

/// Fold per polygon id: within each class (ascending) the ids are shuffled
/// and dealt round-robin, continuing the rotation across classes.
/// Throws std::invalid_argument when there are fewer polygons than folds.
std::vector<std::pair<std::string, std::size_t>> polygon_folds(const SampleSet& samples,
                                                               std::size_t k, std::uint64_t seed);

/// Randomized search: n_candidates grid points drawn without replacement
/// (all of them when the grid is smaller), each scored by k-fold overall
/// accuracy on polygon-grouped folds. `fit_counter`, when given, is
/// incremented once per model fit.
CVResult random_search_cv(const SampleSet& samples, const ParamGrid& grid,
                          std::size_t n_candidates = 100, std::size_t k_folds = 3,
                          std::uint64_t seed = 0, unsigned threads = 1,
                          std::atomic<std::size_t>* fit_counter = nullptr);

}  // namespace cropmap
