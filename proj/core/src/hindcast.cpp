#include "cropmap/hindcast.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cropmap/accuracy.hpp"
#include "cropmap/dekad.hpp"
#include "cropmap/io.hpp"

namespace cropmap {

namespace {

CountMatrix evaluate(const SampleSet& train_set, const SampleSet& test_set, const Hyperparams& hp,
                     std::uint64_t seed, unsigned threads) {
  const auto model = train(train_set, hp, seed, threads);
  std::vector<ClassCode> labels;
  const auto view = view_of(test_set, labels);
  const auto pred = predict_rows(model, view, threads);
  std::set<ClassCode> cls(labels.begin(), labels.end());
  cls.insert(pred.begin(), pred.end());
  CountMatrix m(std::vector<ClassCode>(cls.begin(), cls.end()));
  for (std::size_t i = 0; i < pred.size(); ++i) m.add(pred[i], labels[i]);
  return m;
}

}  // namespace

HindcastResult hindcast_series(const SampleSet& samples, const HindcastOptions& options) {
  if (samples.size() == 0) throw std::invalid_argument("hindcast: no samples");
  const auto split = split_polygons(samples, options.train_fraction, options.seed);
  HindcastResult result;
  result.warnings = split.warnings;
  if (split.test.size() == 0) throw std::invalid_argument("hindcast: empty test split");

  std::vector<std::pair<std::string, std::optional<Stratum>>> groups;
  if (options.per_stratum)
    groups = {{"Str1", Stratum::Str1}, {"Str2", Stratum::Str2}};
  else
    groups = {{"all", std::nullopt}};

  for (int month : options.months) {
    if (month < 1 || month > 12) throw std::invalid_argument("hindcast month must be 1..12");
    FeatureWindow w;
    w.start_dekad = samples.window.start_dekad;
    w.end_dekad = last_dekad_of_month(month);
    w.bands = samples.window.bands;
    if (w.end_dekad > samples.window.end_dekad || w.end_dekad < w.start_dekad)
      throw std::invalid_argument("hindcast: samples do not cover month " + std::to_string(month));
    for (const auto& [name, stratum] : groups) {
      auto in_group = [&](const SampleRow& r) { return !stratum || r.stratum == *stratum; };
      const auto tr = split.train.filter(in_group).select(w);
      const auto te = split.test.filter(in_group).select(w);
      if (tr.size() == 0 || te.size() == 0 || tr.classes().size() < 2) {
        result.warnings.push_back("month " + std::to_string(month) + ", " + name +
                                  ": not enough samples, skipped");
        continue;
      }
      const auto m = evaluate(tr, te, options.hp, options.seed, options.threads);
      const auto metrics = count_metrics(m);
      result.rows.push_back({month, name, 0, "oa", metrics.oa.value_or(0.0)});
      const auto test_classes = te.classes();
      for (const auto& c : metrics.classes)
        if (std::binary_search(test_classes.begin(), test_classes.end(), c.code))
          result.rows.push_back({month, name, c.code, "fscore", c.fscore});
    }
  }
  return result;
}

std::string format_hindcast(const std::vector<HindcastRow>& rows) {
  std::ostringstream os;
  os << "month,stratum,class,metric,value\n";
  for (const auto& r : rows)
    os << r.month << ',' << r.stratum << ',' << (r.class_code ? std::to_string(r.class_code) : "all")
       << ',' << r.metric << ',' << format_double(r.value) << '\n';
  return os.str();
}

std::vector<std::vector<CubeBand>> standard_band_sets() {
  using B = CubeBand;
  return {{B::VV_dB}, {B::VH_dB}, {B::CR}, {B::VV_dB, B::VH_dB}, {B::VV_dB, B::VH_dB, B::CR}};
}

std::vector<IndexScore> benchmark_indices(const SampleSet& samples,
                                          const std::vector<std::vector<CubeBand>>& band_sets,
                                          int start_dekad, int end_dekad, double train_fraction,
                                          std::uint64_t seed, const Hyperparams& hp,
                                          unsigned threads) {
  if (band_sets.empty()) throw std::invalid_argument("no band sets");
  const auto split = split_polygons(samples, train_fraction, seed);
  std::vector<IndexScore> out;
  for (const auto& bands : band_sets) {
    FeatureWindow w{start_dekad, end_dekad, bands};
    w.validate();
    for (auto b : bands) {
      bool found = false;
      for (auto s : samples.window.bands) found |= s == b;
      if (!found)
        throw std::invalid_argument("samples lack band " + std::string(band_name(b)));
    }
    const auto m = evaluate(split.train.select(w), split.test.select(w), hp, seed, threads);
    out.push_back({bands, count_metrics(m).oa.value_or(0.0)});
  }
  return out;
}

std::string format_index_scores(const std::vector<IndexScore>& scores) {
  std::ostringstream os;
  os << "bands,oa\n";
  for (const auto& s : scores) {
    for (std::size_t i = 0; i < s.bands.size(); ++i) os << (i ? "+" : "") << band_name(s.bands[i]);
    os << ',' << format_double(s.oa) << '\n';
  }
  return os.str();
}

}  // namespace cropmap
