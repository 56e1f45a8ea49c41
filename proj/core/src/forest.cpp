#include "cropmap/forest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "cropmap/error.hpp"
#include "cropmap/io.hpp"
#include "cropmap/parallel.hpp"
#include "cropmap/random.hpp"

namespace cropmap {

std::string_view max_features_name(MaxFeatures m) {
  return m == MaxFeatures::Sqrt ? "sqrt" : "log2";
}

MaxFeatures parse_max_features(std::string_view text) {
  if (text == "sqrt") return MaxFeatures::Sqrt;
  if (text == "log2") return MaxFeatures::Log2;
  throw std::invalid_argument("max_features must be sqrt or log2, got '" +
                              std::string(text) + "'");
}

void Hyperparams::validate() const {
  if (n_estimators < 1) throw std::invalid_argument("n_estimators must be >= 1");
  if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
  if (max_depth && *max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
}

std::string Hyperparams::describe() const {
  std::ostringstream os;
  os << "n_estimators=" << n_estimators << ";max_features=" << max_features_name(max_features)
     << ";min_samples_leaf=" << min_samples_leaf << ";min_samples_split=" << min_samples_split
     << ";max_depth=" << (max_depth ? std::to_string(*max_depth) : std::string("none"))
     << ";criterion=gini;bootstrap=" << (bootstrap ? "true" : "false");
  return os.str();
}

static bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "True") return true;
  if (v == "false" || v == "0" || v == "False") return false;
  throw std::invalid_argument("expected true/false, got '" + std::string(v) + "'");
}

Hyperparams Hyperparams::parse(std::string_view text) {
  Hyperparams hp;
  std::string s(text);
  std::replace(s.begin(), s.end(), ',', ';');
  for (const auto& item : split_fields(s, ';')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected key=value in '" + item + "'");
    const auto key = std::string(trim(std::string_view(item).substr(0, eq)));
    const auto val = trim(std::string_view(item).substr(eq + 1));
    if (key == "n_estimators") hp.n_estimators = static_cast<int>(parse_int(val));
    else if (key == "max_features") hp.max_features = parse_max_features(val);
    else if (key == "min_samples_leaf") hp.min_samples_leaf = static_cast<int>(parse_int(val));
    else if (key == "min_samples_split") hp.min_samples_split = static_cast<int>(parse_int(val));
    else if (key == "max_depth") {
      if (val == "none" || val == "None") hp.max_depth.reset();
      else hp.max_depth = static_cast<int>(parse_int(val));
    } else if (key == "criterion") {
      if (val != "gini") throw std::invalid_argument("only criterion=gini is supported");
    } else if (key == "bootstrap") hp.bootstrap = parse_bool(val);
    else throw std::invalid_argument("unknown hyperparameter '" + key + "'");
  }
  hp.validate();
  return hp;
}

std::size_t Hyperparams::features_per_split(std::size_t p) const {
  if (p == 0) throw std::invalid_argument("no features");
  std::size_t k;
  if (max_features == MaxFeatures::Sqrt) {
    k = static_cast<std::size_t>(std::sqrt(static_cast<double>(p)));
    while (k * k > p) --k;
    while ((k + 1) * (k + 1) <= p) ++k;
  } else {
    k = static_cast<std::size_t>(std::bit_width(p)) - 1;
  }
  return std::max<std::size_t>(1, k);
}

template <class T>
static double gini_of(std::span<const T> counts) {
  double n = 0;
  for (auto c : counts) {
    if (c < 0) throw std::invalid_argument("gini: negative count");
    n += static_cast<double>(c);
  }
  if (!(n > 0)) throw std::invalid_argument("gini: zero total");
  double s = 0;
  for (auto c : counts) s += (c / n) * (c / n);
  return 1.0 - s;
}

double gini(std::span<const std::uint32_t> counts) { return gini_of(counts); }
double gini(std::span<const double> counts) { return gini_of(counts); }

const DecisionTree::Node& DecisionTree::descend(std::span<const float> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<double>(x[static_cast<std::size_t>(n.feature)]) <= n.threshold ? i + 1 : n.right;
  }
  return nodes[i];
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.feature < 0; }));
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::size_t best = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes[i].feature >= 0) {
      stack.push_back({i + 1, d + 1});
      stack.push_back({nodes[i].right, d + 1});
    }
  }
  return best;
}

std::size_t ForestModel::class_index(ClassCode c) const {
  auto it = std::lower_bound(classes.begin(), classes.end(), c);
  if (it == classes.end() || *it != c)
    throw std::invalid_argument("class " + std::to_string(c) + " not in model");
  return static_cast<std::size_t>(it - classes.begin());
}

static std::vector<std::uint32_t> draw_bootstrap(Rng& rng, std::size_t n) {
  std::vector<std::uint32_t> rows(n);
  for (auto& r : rows) r = static_cast<std::uint32_t>(rng.below(n));
  return rows;
}

std::vector<std::uint32_t> bootstrap_sample(std::uint64_t seed, std::size_t tree, std::size_t n) {
  Rng rng(derive_seed(seed, tree));
  return draw_bootstrap(rng, n);
}

namespace {

struct TreeBuilder {
  const DataView& data;
  const std::vector<std::uint16_t>& y;  // class index per row
  std::size_t n_classes;
  const Hyperparams& hp;
  std::size_t mtry;

  struct Candidate {
    double score = std::numeric_limits<double>::infinity();
    std::int32_t feature = -1;
    double threshold = 0.0;
  };

  std::vector<std::pair<float, std::uint16_t>> vals;
  std::vector<std::int64_t> left, right;

  // Weighted impurity times node size: n - sum(c^2)/n, per side.
  static double side_score(std::int64_t n, std::int64_t sumsq) {
    return static_cast<double>(n) - static_cast<double>(sumsq) / static_cast<double>(n);
  }

  void evaluate(std::span<const std::uint32_t> rows, std::size_t f,
                const std::vector<std::int64_t>& total, Candidate& best, bool& constant) {
    vals.clear();
    for (auto r : rows) vals.emplace_back(data.features[r * data.cols + f], y[r]);
    std::sort(vals.begin(), vals.end());
    constant = vals.front().first == vals.back().first;
    if (constant) return;
    const auto n = static_cast<std::int64_t>(vals.size());
    const auto msl = static_cast<std::int64_t>(hp.min_samples_leaf);
    std::fill(left.begin(), left.end(), 0);
    right = total;
    std::int64_t sl = 0, sr = 0;
    for (auto c : total) sr += c * c;
    for (std::int64_t i = 0; i + 1 < n; ++i) {
      const auto c = vals[static_cast<std::size_t>(i)].second;
      sl += 2 * left[c] + 1;
      ++left[c];
      sr -= 2 * right[c] - 1;
      --right[c];
      const std::int64_t nl = i + 1, nr = n - nl;
      if (nl < msl) continue;
      if (nr < msl) break;
      const float a = vals[static_cast<std::size_t>(i)].first;
      const float b = vals[static_cast<std::size_t>(i + 1)].first;
      if (!(a < b)) continue;
      const double score = side_score(nl, sl) + side_score(nr, sr);
      // Lower score wins; equal scores keep the lower feature, then the lower threshold.
      if (score < best.score ||
          (score == best.score && static_cast<std::int32_t>(f) < best.feature)) {
        best.score = score;
        best.feature = static_cast<std::int32_t>(f);
        best.threshold = (static_cast<double>(a) + static_cast<double>(b)) / 2.0;
      }
    }
  }

  DecisionTree build(std::vector<std::uint32_t> rows, Rng& rng) {
    DecisionTree tree;
    left.assign(n_classes, 0);
    right.assign(n_classes, 0);
    std::vector<std::size_t> features(data.cols);
    for (std::size_t f = 0; f < data.cols; ++f) features[f] = f;

    struct Task {
      std::size_t begin, end, depth;
      std::int64_t parent;  // set parent's right child when >= 0
    };
    std::vector<Task> stack{{0, rows.size(), 0, -1}};
    std::vector<std::int64_t> total(n_classes);
    while (!stack.empty()) {
      const Task t = stack.back();
      stack.pop_back();
      const auto index = static_cast<std::uint32_t>(tree.nodes.size());
      if (t.parent >= 0) tree.nodes[static_cast<std::size_t>(t.parent)].right = index;
      tree.nodes.emplace_back();

      std::span<std::uint32_t> node_rows(rows.data() + t.begin, t.end - t.begin);
      std::fill(total.begin(), total.end(), 0);
      for (auto r : node_rows) ++total[y[r]];
      const auto n = static_cast<std::int64_t>(node_rows.size());
      std::int64_t sumsq = 0, nonzero = 0;
      for (auto c : total) {
        sumsq += c * c;
        nonzero += c > 0;
      }

      Candidate best;
      const bool stop = nonzero <= 1 || n < hp.min_samples_split ||
                        n < 2 * static_cast<std::int64_t>(hp.min_samples_leaf) ||
                        (hp.max_depth && t.depth >= static_cast<std::size_t>(*hp.max_depth));
      if (!stop) {
        // Partial Fisher-Yates over features; constant features do not count
        // towards mtry, so the search continues until mtry informative ones
        // have been evaluated or the features run out.
        std::size_t informative = 0;
        for (std::size_t i = 0; i < features.size() && informative < mtry; ++i) {
          const std::size_t j = i + static_cast<std::size_t>(rng.below(features.size() - i));
          std::swap(features[i], features[j]);
          bool constant = false;
          evaluate(node_rows, features[i], total, best, constant);
          if (!constant) ++informative;
        }
      }
      const double parent_score = side_score(n, sumsq);
      if (best.feature < 0 || !(best.score < parent_score - 1e-9)) {
        auto& node = tree.nodes[index];
        node.feature = -1;
        node.leaf = static_cast<std::uint32_t>(tree.counts.size() / n_classes);
        for (auto c : total) tree.counts.push_back(static_cast<std::uint32_t>(c));
        continue;
      }
      auto& node = tree.nodes[index];
      node.feature = best.feature;
      node.threshold = best.threshold;
      const auto f = static_cast<std::size_t>(best.feature);
      auto mid = std::partition(node_rows.begin(), node_rows.end(), [&](std::uint32_t r) {
        return static_cast<double>(data.features[r * data.cols + f]) <= best.threshold;
      });
      const std::size_t split = t.begin + static_cast<std::size_t>(mid - node_rows.begin());
      stack.push_back({split, t.end, t.depth + 1, static_cast<std::int64_t>(index)});
      stack.push_back({t.begin, split, t.depth + 1, -1});
    }
    return tree;
  }
};

void check_data(const DataView& d) {
  if (d.rows == 0) throw std::invalid_argument("train: empty input");
  if (d.cols == 0) throw std::invalid_argument("train: no features");
  if (d.features.size() != d.rows * d.cols || d.labels.size() != d.rows)
    throw std::invalid_argument("train: feature/label sizes do not match");
  for (float v : d.features)
    if (!std::isfinite(v)) throw std::invalid_argument("train: non-finite feature value");
}

}  // namespace

ForestModel train(const DataView& data, const Hyperparams& hp, std::uint64_t seed,
                  unsigned threads) {
  hp.validate();
  check_data(data);
  ForestModel model;
  model.classes.assign(data.labels.begin(), data.labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() < 2) throw std::invalid_argument("train: single-class input");
  if (data.rows > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("train: too many rows");
  model.n_features = data.cols;
  model.n_train = data.rows;
  model.hp = hp;
  model.seed = seed;

  std::vector<std::uint16_t> y(data.rows);
  for (std::size_t i = 0; i < data.rows; ++i)
    y[i] = static_cast<std::uint16_t>(model.class_index(data.labels[i]));

  const std::size_t mtry = hp.features_per_split(data.cols);
  model.trees.resize(static_cast<std::size_t>(hp.n_estimators));
  parallel_for(model.trees.size(), threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::uint32_t> rows;
    if (hp.bootstrap) {
      rows = draw_bootstrap(rng, data.rows);
    } else {
      rows.resize(data.rows);
      for (std::size_t i = 0; i < data.rows; ++i) rows[i] = static_cast<std::uint32_t>(i);
    }
    TreeBuilder b{data, y, model.classes.size(), hp, mtry, {}, {}, {}};
    model.trees[t] = b.build(std::move(rows), rng);
  });
  return model;
}

DataView view_of(const SampleSet& samples, std::vector<ClassCode>& labels) {
  labels = samples.labels();
  return DataView{samples.features, samples.size(), samples.feature_count(), labels};
}

ForestModel train(const SampleSet& samples, const Hyperparams& hp, std::uint64_t seed,
                  unsigned threads) {
  std::vector<ClassCode> labels;
  auto model = train(view_of(samples, labels), hp, seed, threads);
  model.feature_descriptor = samples.window.descriptor();
  return model;
}

static void accumulate(const ForestModel& m, const DecisionTree& t, std::span<const float> x,
                       double* acc) {
  const auto& leaf = t.descend(x);
  const auto counts = m.leaf_counts(t, leaf);
  double n = 0;
  for (auto c : counts) n += c;
  for (std::size_t k = 0; k < counts.size(); ++k) acc[k] += counts[k] / n;
}

static std::size_t argmax_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

ClassCode predict_code(const ForestModel& model, std::span<const float> x,
                       std::vector<double>& scratch) {
  if (x.size() != model.n_features)
    throw std::invalid_argument("predict: feature length " + std::to_string(x.size()) +
                                " does not match model (" + std::to_string(model.n_features) + ")");
  scratch.assign(model.classes.size(), 0.0);
  for (const auto& t : model.trees) accumulate(model, t, x, scratch.data());
  return model.classes[argmax_lowest(scratch)];
}

Prediction predict(const ForestModel& model, std::span<const float> x) {
  Prediction p;
  p.code = predict_code(model, x, p.fractions);
  for (auto& f : p.fractions) f /= static_cast<double>(model.trees.size());
  return p;
}

std::vector<ClassCode> predict_rows(const ForestModel& model, const DataView& data,
                                    unsigned threads) {
  std::vector<ClassCode> out(data.rows);
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (data.rows + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::vector<double> scratch;
    const std::size_t end = std::min(data.rows, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) out[i] = predict_code(model, data.row(i), scratch);
  });
  return out;
}

std::optional<double> oob_accuracy(const ForestModel& model, const DataView& data) {
  if (!model.hp.bootstrap) return std::nullopt;
  if (data.rows != model.n_train || data.cols != model.n_features)
    throw std::invalid_argument("oob_accuracy: data is not the training set");
  const std::size_t k = model.classes.size();
  std::vector<double> acc(data.rows * k, 0.0);
  std::vector<std::uint8_t> any(data.rows, 0), in_bag(data.rows);
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (auto r : bootstrap_sample(model.seed, t, data.rows)) in_bag[r] = 1;
    for (std::size_t i = 0; i < data.rows; ++i) {
      if (in_bag[i]) continue;
      any[i] = 1;
      accumulate(model, model.trees[t], data.row(i), acc.data() + i * k);
    }
  }
  std::size_t used = 0, correct = 0;
  std::vector<double> v(k);
  for (std::size_t i = 0; i < data.rows; ++i) {
    if (!any[i]) continue;
    std::copy_n(acc.begin() + static_cast<std::ptrdiff_t>(i * k), k, v.begin());
    ++used;
    correct += model.classes[argmax_lowest(v)] == data.labels[i];
  }
  if (used == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(used);
}

// ---- serialization ----

namespace {

constexpr std::string_view kMagic = "cropmap-forest";
constexpr int kVersion = 1;

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct Reader {
  std::string_view data;
  std::size_t pos = 0;
  std::uint64_t get(int bytes) {
    if (pos + static_cast<std::size_t>(bytes) > data.size())
      throw FormatError("model body truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += static_cast<std::size_t>(bytes);
    return v;
  }
};

}  // namespace

std::string serialize(const ForestModel& m) {
  std::ostringstream h;
  h << kMagic << '\n'
    << "version=" << kVersion << '\n'
    << "level=" << m.level << '\n'
    << "stratum=" << (m.stratum ? std::string(stratum_name(*m.stratum)) : std::string("none")) << '\n'
    << "seed=" << m.seed << '\n'
    << "hyperparams=" << m.hp.describe() << '\n'
    << "classes=";
  for (std::size_t i = 0; i < m.classes.size(); ++i) h << (i ? "," : "") << m.classes[i];
  h << '\n'
    << "features=" << m.feature_descriptor << '\n'
    << "n_features=" << m.n_features << '\n'
    << "n_train=" << m.n_train << '\n'
    << "trees=" << m.trees.size() << '\n'
    << "byte_order=little\n"
    << "end\n";
  std::string out = h.str();
  const std::size_t k = m.classes.size();
  for (const auto& t : m.trees) {
    put_le(out, t.nodes.size(), 4);
    for (const auto& n : t.nodes) {
      if (n.feature < 0) {
        out.push_back('\1');
        for (std::size_t c = 0; c < k; ++c) put_le(out, t.counts[n.leaf * k + c], 4);
      } else {
        out.push_back('\0');
        put_le(out, static_cast<std::uint32_t>(n.feature), 4);
        put_le(out, std::bit_cast<std::uint64_t>(n.threshold), 8);
      }
    }
  }
  return out;
}

ForestModel deserialize(std::string_view bytes) {
  ForestModel m;
  std::size_t pos = 0;
  auto next_line = [&]() {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) throw FormatError("model header truncated");
    auto line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  if (next_line() != kMagic) throw FormatError("not a cropmap forest file");
  std::size_t n_trees = 0;
  bool have_version = false;
  try {
    for (;;) {
      const auto line = next_line();
      if (line == "end") break;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw FormatError("malformed header line");
      const auto key = line.substr(0, eq);
      const auto val = line.substr(eq + 1);
      if (key == "version") {
        if (parse_int(val) != kVersion)
          throw FormatError("unsupported model version " + std::string(val));
        have_version = true;
      } else if (key == "level") m.level = static_cast<int>(parse_int(val));
      else if (key == "stratum") {
        if (val != "none") m.stratum = parse_stratum(val);
      } else if (key == "seed") m.seed = std::stoull(std::string(val));
      else if (key == "hyperparams") m.hp = Hyperparams::parse(val);
      else if (key == "classes") {
        for (const auto& c : split_fields(val, ','))
          m.classes.push_back(static_cast<ClassCode>(parse_int(c)));
      } else if (key == "features") m.feature_descriptor = std::string(val);
      else if (key == "n_features") m.n_features = static_cast<std::size_t>(parse_int(val));
      else if (key == "n_train") m.n_train = static_cast<std::size_t>(parse_int(val));
      else if (key == "trees") n_trees = static_cast<std::size_t>(parse_int(val));
      else if (key == "byte_order") {
        if (val != "little") throw FormatError("unsupported byte order");
      }
    }
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("model header: ") + e.what());
  }
  if (!have_version) throw FormatError("model header lacks a version");
  if (m.classes.size() < 2 || !std::is_sorted(m.classes.begin(), m.classes.end()))
    throw FormatError("model class list must hold >= 2 ascending codes");
  if (m.n_features == 0) throw FormatError("model has no features");

  Reader r{bytes, pos};
  const std::size_t k = m.classes.size();
  m.trees.resize(n_trees);
  for (auto& t : m.trees) {
    const auto count = r.get(4);
    if (count == 0 || count > bytes.size()) throw FormatError("implausible node count");
    t.nodes.resize(count);
    std::vector<std::uint32_t> awaiting_right;
    bool prev_leaf = false;
    for (std::size_t i = 0; i < count; ++i) {
      if (i > 0 && prev_leaf) {
        if (awaiting_right.empty()) throw FormatError("tree structure corrupt");
        t.nodes[awaiting_right.back()].right = static_cast<std::uint32_t>(i);
        awaiting_right.pop_back();
      }
      auto& n = t.nodes[i];
      const auto tag = r.get(1);
      if (tag == 1) {
        n.feature = -1;
        n.leaf = static_cast<std::uint32_t>(t.counts.size() / k);
        for (std::size_t c = 0; c < k; ++c) t.counts.push_back(static_cast<std::uint32_t>(r.get(4)));
        prev_leaf = true;
      } else if (tag == 0) {
        const auto f = r.get(4);
        if (f >= m.n_features) throw FormatError("feature index out of range");
        n.feature = static_cast<std::int32_t>(f);
        n.threshold = std::bit_cast<double>(r.get(8));
        awaiting_right.push_back(static_cast<std::uint32_t>(i));
        prev_leaf = false;
      } else {
        throw FormatError("bad node tag");
      }
    }
    if (!prev_leaf || !awaiting_right.empty()) throw FormatError("tree structure corrupt");
  }
  if (r.pos != bytes.size()) throw FormatError("trailing bytes after model body");
  return m;
}

void save_model(const std::filesystem::path& path, const ForestModel& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model " + path.string());
  const auto bytes = serialize(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ForestModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open model " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace cropmap
