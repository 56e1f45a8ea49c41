#include "cropmap/tuning.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "cropmap/io.hpp"
#include "cropmap/parallel.hpp"
#include "cropmap/random.hpp"

namespace cropmap {

std::size_t ParamGrid::size() const {
  return n_estimators.size() * max_features.size() * min_samples_leaf.size() *
         min_samples_split.size() * max_depth.size() * bootstrap.size() * criterion.size();
}

Hyperparams ParamGrid::at(std::size_t index) const {
  if (index >= size()) throw std::out_of_range("grid index out of range");
  Hyperparams hp;
  auto take = [&index](std::size_t radix) {
    const std::size_t d = index % radix;
    index /= radix;
    return d;
  };
  // Fastest digit last in the declaration order.
  hp.criterion = criterion[take(criterion.size())];
  hp.bootstrap = bootstrap[take(bootstrap.size())];
  hp.max_depth = max_depth[take(max_depth.size())];
  hp.min_samples_split = min_samples_split[take(min_samples_split.size())];
  hp.min_samples_leaf = min_samples_leaf[take(min_samples_leaf.size())];
  hp.max_features = max_features[take(max_features.size())];
  hp.n_estimators = n_estimators[take(n_estimators.size())];
  return hp;
}

void ParamGrid::validate() const {
  if (size() == 0) throw std::invalid_argument("parameter grid is empty");
  for (std::size_t i = 0; i < size(); ++i) at(i).validate();
}

ParamGrid ParamGrid::standard() {
  ParamGrid g = core();
  g.min_samples_leaf = {1, 2, 4};
  g.min_samples_split = {2, 3, 5};
  g.max_depth = {std::nullopt, 20, 40};
  g.bootstrap = {true, false};
  return g;
}

ParamGrid ParamGrid::core() {
  ParamGrid g;
  for (int n = 300; n <= 1200; n += 100) g.n_estimators.push_back(n);
  g.max_features = {MaxFeatures::Sqrt, MaxFeatures::Log2};
  g.min_samples_leaf = {1};
  g.min_samples_split = {2};
  g.max_depth = {std::nullopt};
  g.bootstrap = {true};
  g.criterion = {Criterion::Gini};
  return g;
}

ParamGrid ParamGrid::parse(std::string_view text) {
  ParamGrid g = standard();
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("grid line needs key=values");
    const auto key = std::string(trim(t.substr(0, eq)));
    const auto values = split_fields(t.substr(eq + 1), ',');
    auto ints = [&] {
      std::vector<int> v;
      for (const auto& s : values) v.push_back(static_cast<int>(parse_int(s)));
      return v;
    };
    // n_estimators also accepts "start:stop:step".
    if (key == "n_estimators") {
      if (values.size() == 1 && values[0].find(':') != std::string::npos) {
        const auto r = split_fields(values[0], ':');
        if (r.size() != 3) throw std::invalid_argument("range must be start:stop:step");
        const auto a = parse_int(r[0]), b = parse_int(r[1]), s = parse_int(r[2]);
        if (s <= 0) throw std::invalid_argument("range step must be positive");
        g.n_estimators.clear();
        for (auto n = a; n <= b; n += s) g.n_estimators.push_back(static_cast<int>(n));
      } else {
        g.n_estimators = ints();
      }
    } else if (key == "max_features") {
      g.max_features.clear();
      for (const auto& s : values) g.max_features.push_back(parse_max_features(s));
    } else if (key == "min_samples_leaf") g.min_samples_leaf = ints();
    else if (key == "min_samples_split") g.min_samples_split = ints();
    else if (key == "max_depth") {
      g.max_depth.clear();
      for (const auto& s : values)
        g.max_depth.push_back(s == "none" ? std::nullopt
                                          : std::optional<int>(static_cast<int>(parse_int(s))));
    } else if (key == "bootstrap") {
      g.bootstrap.clear();
      for (const auto& s : values) g.bootstrap.push_back(s == "true" || s == "1");
    } else if (key == "criterion") {
      for (const auto& s : values)
        if (s != "gini") throw std::invalid_argument("only criterion=gini is supported");
    } else {
      throw std::invalid_argument("unknown grid key '" + key + "'");
    }
  }
  g.validate();
  return g;
}

std::vector<std::pair<std::string, std::size_t>> polygon_folds(const SampleSet& samples,
                                                               std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k_folds must be >= 2");
  std::map<ClassCode, std::vector<std::string>> by_class;
  {
    std::map<std::string, ClassCode> seen;
    for (const auto& r : samples.rows)
      if (seen.emplace(r.polygon_id, r.code).second) by_class[r.code].push_back(r.polygon_id);
    if (seen.size() < k)
      throw std::invalid_argument("fewer polygons (" + std::to_string(seen.size()) +
                                  ") than folds (" + std::to_string(k) + ")");
  }
  std::vector<std::pair<std::string, std::size_t>> out;
  std::size_t turn = 0;
  for (auto& [code, ids] : by_class) {
    std::sort(ids.begin(), ids.end());
    Rng rng(derive_seed(seed, code));
    rng.shuffle(std::span<std::string>(ids));
    for (const auto& id : ids) out.emplace_back(id, turn++ % k);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Partial Fisher-Yates over [0, n) with a sparse swap table.
static std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m, Rng& rng) {
  std::unordered_map<std::size_t, std::size_t> swapped;
  auto value = [&](std::size_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  std::vector<std::size_t> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    const std::size_t vi = value(i), vj = value(j);
    out.push_back(vj);
    swapped[j] = vi;
  }
  return out;
}

CVResult random_search_cv(const SampleSet& samples, const ParamGrid& grid,
                          std::size_t n_candidates, std::size_t k_folds, std::uint64_t seed,
                          unsigned threads, std::atomic<std::size_t>* fit_counter) {
  grid.validate();
  if (n_candidates == 0) throw std::invalid_argument("n_candidates must be >= 1");
  const auto folds = polygon_folds(samples, k_folds, seed);
  std::map<std::string, std::size_t> fold_of(folds.begin(), folds.end());
  std::vector<std::size_t> row_fold(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) row_fold[i] = fold_of.at(samples.rows[i].polygon_id);

  std::vector<SampleSet> train_sets, test_sets;
  for (std::size_t f = 0; f < k_folds; ++f) {
    SampleSet tr = samples.empty_like(), te = samples.empty_like();
    for (std::size_t i = 0; i < samples.size(); ++i) (row_fold[i] == f ? te : tr).append(samples, i);
    if (te.size() == 0) throw std::invalid_argument("fold " + std::to_string(f) + " is empty");
    if (tr.classes().size() < 2)
      throw std::invalid_argument("fold " + std::to_string(f) + " leaves a single training class");
    train_sets.push_back(std::move(tr));
    test_sets.push_back(std::move(te));
  }

  Rng rng(derive_seed(seed, 0x7475'6e65ULL));
  const auto picks = sample_without_replacement(grid.size(), std::min(n_candidates, grid.size()), rng);

  CVResult result;
  result.k_folds = k_folds;
  result.candidates.resize(picks.size());
  std::vector<double> acc(picks.size() * k_folds);
  std::atomic<std::size_t> fits{0};
  parallel_for(acc.size(), threads, [&](std::size_t job) {
    const std::size_t c = job / k_folds, f = job % k_folds;
    const Hyperparams hp = grid.at(picks[c]);
    const auto model = train(train_sets[f], hp, derive_seed(seed, 1 + f));
    ++fits;
    if (fit_counter) ++*fit_counter;
    std::vector<ClassCode> labels;
    const auto view = view_of(test_sets[f], labels);
    const auto pred = predict_rows(model, view);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
    acc[job] = static_cast<double>(correct) / static_cast<double>(pred.size());
  });
  for (std::size_t c = 0; c < picks.size(); ++c) {
    auto& cand = result.candidates[c];
    cand.grid_index = picks[c];
    cand.hp = grid.at(picks[c]);
    cand.fold_accuracy.assign(acc.begin() + static_cast<std::ptrdiff_t>(c * k_folds),
                              acc.begin() + static_cast<std::ptrdiff_t>((c + 1) * k_folds));
    cand.mean_accuracy = std::accumulate(cand.fold_accuracy.begin(), cand.fold_accuracy.end(), 0.0) /
                         static_cast<double>(k_folds);
  }
  std::sort(result.candidates.begin(), result.candidates.end(), [](const auto& a, const auto& b) {
    if (a.mean_accuracy != b.mean_accuracy) return a.mean_accuracy > b.mean_accuracy;
    return a.grid_index < b.grid_index;
  });
  result.fits = fits.load();
  return result;
}

}  // namespace cropmap
