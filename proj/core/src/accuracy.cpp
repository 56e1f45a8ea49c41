#include "cropmap/accuracy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cropmap/error.hpp"
#include "cropmap/io.hpp"

namespace cropmap {

namespace fs = std::filesystem;

CountMatrix::CountMatrix(std::vector<ClassCode> cls) : classes(std::move(cls)) {
  std::set<ClassCode> seen(classes.begin(), classes.end());
  if (seen.size() != classes.size()) throw std::invalid_argument("duplicate class in count matrix");
  counts.assign(classes.size() * classes.size(), 0);
}

std::optional<std::size_t> CountMatrix::index_of(ClassCode c) const {
  auto it = std::find(classes.begin(), classes.end(), c);
  if (it == classes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - classes.begin());
}

void CountMatrix::add(ClassCode map_class, ClassCode reference_class, std::int64_t n) {
  auto i = index_of(map_class), j = index_of(reference_class);
  if (!i || !j)
    throw std::invalid_argument("class " + std::to_string(i ? reference_class : map_class) +
                                " not in count matrix");
  at(*i, *j) += n;
}

std::int64_t CountMatrix::row_total(std::size_t i) const {
  std::int64_t s = 0;
  for (std::size_t j = 0; j < size(); ++j) s += at(i, j);
  return s;
}

std::int64_t CountMatrix::col_total(std::size_t j) const {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < size(); ++i) s += at(i, j);
  return s;
}

std::int64_t CountMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t CountMatrix::diagonal() const {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < size(); ++i) s += at(i, i);
  return s;
}

CountMatrix CountMatrix::without(std::span<const ClassCode> drop) const {
  std::vector<std::size_t> keep;
  std::vector<ClassCode> cls;
  for (std::size_t i = 0; i < size(); ++i)
    if (std::find(drop.begin(), drop.end(), classes[i]) == drop.end()) {
      keep.push_back(i);
      cls.push_back(classes[i]);
    }
  CountMatrix out(cls);
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = 0; b < keep.size(); ++b) out.at(a, b) = at(keep[a], keep[b]);
  return out;
}

CountMatrix parse_count_matrix(std::string_view text, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  std::optional<CountMatrix> m;
  std::size_t row = 0;
  auto where = [&] { return std::string(origin) + ":" + std::to_string(lineno) + ": "; };
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = split_fields(t, ',');
    try {
      if (!m) {
        std::vector<ClassCode> cls;
        for (std::size_t i = 1; i < f.size(); ++i) cls.push_back(static_cast<ClassCode>(parse_int(f[i])));
        if (cls.empty()) throw FormatError(where() + "header lists no classes");
        m.emplace(cls);
        continue;
      }
      if (row >= m->size()) throw FormatError(where() + "more rows than classes");
      if (f.size() != m->size() + 1) throw FormatError(where() + "wrong field count");
      if (static_cast<ClassCode>(parse_int(f[0])) != m->classes[row])
        throw FormatError(where() + "row class " + f[0] + " out of header order");
      for (std::size_t j = 0; j < m->size(); ++j) {
        const auto v = parse_int(f[j + 1]);
        if (v < 0) throw FormatError(where() + "negative count");
        m->at(row, j) = v;
      }
      ++row;
    } catch (const std::invalid_argument& e) {
      throw FormatError(where() + e.what());
    }
  }
  if (!m) throw FormatError(std::string(origin) + ": empty count matrix");
  if (row != m->size()) throw FormatError(std::string(origin) + ": fewer rows than classes");
  return *m;
}

CountMatrix read_count_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open count matrix " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_count_matrix(text, path.string());
}

std::string format_count_matrix(const CountMatrix& m) {
  std::ostringstream os;
  os << "map\\ref";
  for (auto c : m.classes) os << ',' << c;
  os << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << m.classes[i];
    for (std::size_t j = 0; j < m.size(); ++j) os << ',' << m.at(i, j);
    os << '\n';
  }
  return os.str();
}

void write_count_matrix(const fs::path& path, const CountMatrix& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::trunc) << format_count_matrix(m);
}

double fscore(std::optional<double> p, std::optional<double> r) {
  if (!p || !r || *p + *r <= 0.0) return 0.0;
  return 2.0 * *p * *r / (*p + *r);
}

CountMetrics count_metrics(const CountMatrix& m) {
  CountMetrics out;
  const auto n = m.total();
  if (n > 0) out.oa = static_cast<double>(m.diagonal()) / static_cast<double>(n);
  for (std::size_t i = 0; i < m.size(); ++i) {
    ClassMetrics c;
    c.code = m.classes[i];
    const auto rt = m.row_total(i), ct = m.col_total(i);
    const auto d = static_cast<double>(m.at(i, i));
    if (rt > 0) c.ua = d / static_cast<double>(rt);
    if (ct > 0) c.pa = d / static_cast<double>(ct);
    c.fscore = fscore(c.ua, c.pa);
    out.classes.push_back(c);
  }
  return out;
}

double fscore(const CountMatrix& m, ClassCode code) {
  const auto i = m.index_of(code);
  if (!i) throw std::invalid_argument("class " + std::to_string(code) + " not in matrix");
  return count_metrics(m).classes[*i].fscore;
}

void StratifiedConfusion::validate() const {
  if (weights.size() != counts.size())
    throw std::invalid_argument("one weight per map class required");
  double s = 0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be >= 0");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("weights must sum to 1");
  for (auto c : counts.counts)
    if (c < 0) throw std::invalid_argument("counts must be >= 0");
}

// Acklam's rational approximation with one Halley step against erfc.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile needs p in (0, 1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double lo = 0.02425, hi = 1 - lo;
  double x;
  if (p < lo) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= hi) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

AccuracyReport stratified_accuracy(const StratifiedConfusion& conf, double confidence) {
  conf.validate();
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("confidence must be in (0, 1)");
  const auto& m = conf.counts;
  const std::size_t k = m.size();
  AccuracyReport r;
  r.classes = m.classes;
  r.confidence = confidence;
  r.z = normal_quantile(1.0 - (1.0 - confidence) / 2.0);

  std::vector<double> n_row(k);
  for (std::size_t i = 0; i < k; ++i) n_row[i] = static_cast<double>(m.row_total(i));
  r.weights = conf.weights;
  double kept = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (n_row[i] == 0.0 && r.weights[i] > 0.0) {
      r.warnings.push_back("map class " + std::to_string(m.classes[i]) +
                           " has weight but no sample; weight dropped");
      r.weights[i] = 0.0;
    }
    kept += r.weights[i];
  }
  if (!(kept > 0.0)) throw std::invalid_argument("no sampled map class carries weight");
  if (kept != 1.0)
    for (auto& w : r.weights) w /= kept;
  const auto& W = r.weights;

  r.p.assign(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    if (n_row[i] > 0)
      for (std::size_t j = 0; j < k; ++j)
        r.p[i * k + j] = W[i] * static_cast<double>(m.at(i, j)) / n_row[i];

  std::vector<double> p_col(k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) p_col[j] += r.p[i * k + j];
  r.oa = 0.0;
  for (std::size_t i = 0; i < k; ++i) r.oa += r.p[i * k + i];

  r.ua.assign(k, std::nullopt);
  r.ua_var = r.ua_se = r.pa = r.pa_var = r.pa_se = r.ua;
  // UA[i] = n_ii / n_i. regardless of the weights.
  std::vector<double> ua_raw(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (n_row[i] == 0) continue;
    ua_raw[i] = static_cast<double>(m.at(i, i)) / n_row[i];
    r.ua[i] = ua_raw[i];
    if (n_row[i] > 1) r.ua_var[i] = ua_raw[i] * (1 - ua_raw[i]) / (n_row[i] - 1);
  }

  bool oa_defined = true;
  double v_oa = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (W[i] == 0.0) continue;
    if (n_row[i] <= 1) {
      oa_defined = false;
      continue;
    }
    v_oa += W[i] * W[i] * ua_raw[i] * (1 - ua_raw[i]) / (n_row[i] - 1);
  }
  if (oa_defined) r.oa_var = v_oa;

  for (std::size_t j = 0; j < k; ++j) {
    if (!(p_col[j] > 0)) continue;
    const double pa = r.p[j * k + j] / p_col[j];
    r.pa[j] = pa;
    if (n_row[j] <= 1) continue;
    const double first = W[j] * W[j] * (1 - pa) * (1 - pa) * ua_raw[j] * (1 - ua_raw[j]) /
                         (n_row[j] - 1);
    double second = 0.0;
    bool defined = true;
    for (std::size_t i = 0; i < k; ++i) {
      if (i == j || W[i] == 0.0) continue;
      const double q = static_cast<double>(m.at(i, j)) / n_row[i];
      const double num = W[i] * W[i] * q * (1 - q);
      if (num == 0.0) continue;
      if (n_row[i] <= 1) {
        defined = false;
        break;
      }
      second += num / (n_row[i] - 1);
    }
    if (defined) r.pa_var[j] = (first + pa * pa * second) / (p_col[j] * p_col[j]);
  }

  auto se = [&](const std::optional<double>& v) -> std::optional<double> {
    if (!v) return std::nullopt;
    return r.z * std::sqrt(*v);
  };
  r.oa_se = se(r.oa_var);
  for (std::size_t i = 0; i < k; ++i) {
    r.ua_se[i] = se(r.ua_var[i]);
    r.pa_se[i] = se(r.pa_var[i]);
  }
  return r;
}

std::vector<double> proportional_weights(const CountMatrix& m) {
  const auto n = static_cast<double>(m.total());
  if (!(n > 0)) throw std::invalid_argument("proportional weights of an empty matrix");
  std::vector<double> w(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) w[i] = static_cast<double>(m.row_total(i)) / n;
  return w;
}

std::vector<double> area_weights(std::span<const ClassCode> classes,
                                 const std::map<ClassCode, std::size_t>& pixels) {
  std::vector<double> w(classes.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    auto it = pixels.find(classes[i]);
    if (it != pixels.end()) w[i] = static_cast<double>(it->second);
    total += w[i];
  }
  if (!(total > 0)) throw std::invalid_argument("no mapped area for the matrix classes");
  for (auto& x : w) x /= total;
  return w;
}

std::map<ClassCode, double> read_weights(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open weights file " + path.string());
  std::map<ClassCode, double> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#' || t.starts_with("class")) continue;
    const auto f = split_fields(t, ',');
    try {
      if (f.size() != 2) throw std::invalid_argument("expected class,weight");
      out[static_cast<ClassCode>(parse_int(f[0]))] = parse_double(f[1]);
    } catch (const std::invalid_argument& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

static std::string pct(const std::optional<double>& v, int digits = 1) {
  if (!v) return "";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << *v * 100.0;
  return os.str();
}

static std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string format_report(const AccuracyReport& r) {
  const std::size_t k = r.classes.size();
  std::ostringstream os;
  os << "map\\ref";
  for (auto c : r.classes) os << ',' << c;
  os << ",W,UA(%),SE(%)\n";
  for (std::size_t i = 0; i < k; ++i) {
    os << r.classes[i];
    for (std::size_t j = 0; j < k; ++j) os << ',' << fixed(r.at(i, j), 4);
    os << ',' << fixed(r.weights[i], 4) << ',' << pct(r.ua[i]) << ',' << pct(r.ua_se[i]) << '\n';
  }
  os << "PA(%)";
  for (std::size_t j = 0; j < k; ++j) os << ',' << pct(r.pa[j]);
  os << ",,,\nSE(%)";
  for (std::size_t j = 0; j < k; ++j) os << ',' << pct(r.pa_se[j]);
  os << ",,,\n";
  os << "OA(%)," << pct(r.oa) << "\nOA SE(%)," << pct(r.oa_se) << '\n';
  os << "confidence," << fixed(r.confidence, 3) << '\n';
  return os.str();
}

std::string report_summary(const AccuracyReport& r) {
  std::ostringstream os;
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("nan"); };
  os << "confidence=" << format_double(r.confidence) << '\n'
     << "z=" << format_double(r.z) << '\n'
     << "oa=" << format_double(r.oa) << '\n'
     << "oa_se=" << opt(r.oa_se) << '\n';
  for (std::size_t i = 0; i < r.classes.size(); ++i) {
    const auto c = std::to_string(r.classes[i]);
    os << "weight." << c << '=' << format_double(r.weights[i]) << '\n'
       << "ua." << c << '=' << opt(r.ua[i]) << '\n'
       << "ua_se." << c << '=' << opt(r.ua_se[i]) << '\n'
       << "pa." << c << '=' << opt(r.pa[i]) << '\n'
       << "pa_se." << c << '=' << opt(r.pa_se[i]) << '\n';
  }
  for (const auto& w : r.warnings) os << "warning=" << w << '\n';
  return os.str();
}

std::string format_count_report(const CountMatrix& m) {
  const auto metrics = count_metrics(m);
  std::ostringstream os;
  os << "map\\ref";
  for (auto c : m.classes) os << ',' << c;
  os << ",total,UA(%)\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << m.classes[i];
    for (std::size_t j = 0; j < m.size(); ++j) os << ',' << m.at(i, j);
    os << ',' << m.row_total(i) << ',' << pct(metrics.classes[i].ua) << '\n';
  }
  os << "total";
  for (std::size_t j = 0; j < m.size(); ++j) os << ',' << m.col_total(j);
  os << ',' << m.total() << ",\nPA(%)";
  for (const auto& c : metrics.classes) os << ',' << pct(c.pa);
  os << ",,\nF-score";
  for (const auto& c : metrics.classes) os << ',' << fixed(c.fscore, 4);
  os << ",,\nOA(%)," << pct(metrics.oa) << '\n';
  return os.str();
}

}  // namespace cropmap
