#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cropmap/sampling.hpp"
#include "cropmap/types.hpp"

namespace cropmap {

enum class MaxFeatures : std::uint8_t { Sqrt, Log2 };
enum class Criterion : std::uint8_t { Gini };

std::string_view max_features_name(MaxFeatures m);
MaxFeatures parse_max_features(std::string_view text);

struct Hyperparams {
  int n_estimators = 100;
  MaxFeatures max_features = MaxFeatures::Sqrt;
  int min_samples_leaf = 1;
  int min_samples_split = 2;
  std::optional<int> max_depth;  // unlimited when empty
  Criterion criterion = Criterion::Gini;
  bool bootstrap = true;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
  /// "n_estimators=100;max_features=sqrt;...". parse() accepts ';' or ','
  /// separators and any subset of keys (others keep their defaults).
  std::string describe() const;
  static Hyperparams parse(std::string_view text);
  /// floor(sqrt(p)) or floor(log2(p)), at least 1.
  std::size_t features_per_split(std::size_t n_features) const;

  bool operator==(const Hyperparams&) const = default;
};

/// 1 - sum (c_i / n)^2. Throws std::invalid_argument on a zero total.
double gini(std::span<const std::uint32_t> counts);
double gini(std::span<const double> counts);

/// Row-major training matrix with one label per row.
struct DataView {
  std::span<const float> features;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<const ClassCode> labels;

  std::span<const float> row(std::size_t i) const {
    return features.subspan(i * cols, cols);
  }
};

/// Binary tree stored in pre-order: the left child of an internal node is
/// the next node, `right` points past the left subtree. Samples with
/// x[feature] <= threshold go left.
struct DecisionTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t right = 0;
    std::uint32_t leaf = 0;  // leaf slot into counts
  };
  std::vector<Node> nodes;
  std::vector<std::uint32_t> counts;  // leaf slots x n_classes

  /// Leaf reached by x.
  const Node& descend(std::span<const float> x) const;
  std::size_t leaf_count() const;
  std::size_t depth() const;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::vector<ClassCode> classes;  // ascending
  std::string feature_descriptor;
  std::size_t n_features = 0;
  std::size_t n_train = 0;
  Hyperparams hp;
  std::uint64_t seed = 0;
  int level = 0;  // 1 or 2 when tagged
  std::optional<Stratum> stratum;

  std::size_t class_index(ClassCode c) const;
  std::span<const std::uint32_t> leaf_counts(const DecisionTree& t,
                                              const DecisionTree::Node& n) const {
    return {t.counts.data() + n.leaf * classes.size(), classes.size()};
  }
};

/// Per-tree random stream: the bootstrap draws come first, then the
/// per-node feature draws. Serial and parallel training give identical forests.
ForestModel train(const DataView& data, const Hyperparams& hp, std::uint64_t seed,
                  unsigned threads = 1);
/// Tags the feature descriptor from the sample window.
ForestModel train(const SampleSet& samples, const Hyperparams& hp, std::uint64_t seed,
                  unsigned threads = 1);

/// Bootstrap row indices drawn for tree `tree` (n draws with replacement).
std::vector<std::uint32_t> bootstrap_sample(std::uint64_t seed, std::size_t tree,
                                            std::size_t n);

struct Prediction {
  ClassCode code = 0;
  std::vector<double> fractions;  // aligned with model.classes, sums to 1
};

/// Argmax of summed leaf class proportions; ties go to the lowest code.
Prediction predict(const ForestModel& model, std::span<const float> x);
ClassCode predict_code(const ForestModel& model, std::span<const float> x,
                       std::vector<double>& scratch);
std::vector<ClassCode> predict_rows(const ForestModel& model, const DataView& data,
                                    unsigned threads = 1);

/// Out-of-bag accuracy over rows with at least one out-of-bag tree. `data`
/// must be the training data. Empty when bootstrap is off or no row is OOB.
std::optional<double> oob_accuracy(const ForestModel& model, const DataView& data);

/// Rows of a sample set as a DataView (borrowing; labels go to `labels`).
DataView view_of(const SampleSet& samples, std::vector<ClassCode>& labels);

std::string serialize(const ForestModel& model);
ForestModel deserialize(std::string_view bytes);
void save_model(const std::filesystem::path& path, const ForestModel& model);
ForestModel load_model(const std::filesystem::path& path);

}  // namespace cropmap
