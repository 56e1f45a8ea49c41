#include "cropmap/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cropmap/error.hpp"

namespace cropmap {

namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const fs::path& path, const std::vector<unsigned char>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

template <class U>
void put_le(std::vector<unsigned char>& bytes, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i)
    bytes.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
}

template <class U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    v |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  return v;
}

void check_size(const fs::path& path, std::size_t got, std::size_t want) {
  if (got != want)
    throw FormatError(path.string() + ": expected " + std::to_string(want) +
                      " bytes, found " + std::to_string(got));
}

}  // namespace

Manifest Manifest::read(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open " + path.string());
  Manifest m;
  m.source_ = path;
  m.base_dir_ = path.parent_path();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected key=value");
    m.set(std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))));
  }
  return m;
}

void Manifest::write(const fs::path& path) const {
  std::ostringstream os;
  for (const auto& [k, v] : entries_) os << k << '=' << v << '\n';
  const std::string s = os.str();
  dump(path, std::vector<unsigned char>(s.begin(), s.end()));
}

void Manifest::set(std::string key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

bool Manifest::has(std::string_view key) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == key; });
}

const std::string& Manifest::get(std::string_view key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  throw FormatError(source_.string() + ": missing key '" + std::string(key) + "'");
}

std::string Manifest::get_or(std::string_view key, std::string fallback) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return fallback;
}

int Manifest::get_int(std::string_view key) const {
  try {
    return static_cast<int>(parse_int(get(key)));
  } catch (const std::invalid_argument&) {
    throw FormatError(source_.string() + ": key '" + std::string(key) +
                      "' is not an integer");
  }
}

double Manifest::get_double(std::string_view key) const {
  try {
    return parse_double(get(key));
  } catch (const std::invalid_argument&) {
    throw FormatError(source_.string() + ": key '" + std::string(key) +
                      "' is not a number");
  }
}

void put_geometry(Manifest& m, const GridGeometry& g) {
  m.set("width", std::to_string(g.width));
  m.set("height", std::to_string(g.height));
  m.set("pixel_size", format_double(g.pixel_size));
  m.set("origin_x", format_double(g.origin_x));
  m.set("origin_y", format_double(g.origin_y));
}

GridGeometry geometry_from(const Manifest& m) {
  GridGeometry g;
  g.width = m.get_int("width");
  g.height = m.get_int("height");
  g.pixel_size = m.get_double("pixel_size");
  g.origin_x = m.get_double("origin_x");
  g.origin_y = m.get_double("origin_y");
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return g;
}

void write_f32(const fs::path& path, std::span<const float> v) {
  std::vector<unsigned char> bytes;
  bytes.reserve(v.size() * 4);
  for (float f : v) put_le(bytes, std::bit_cast<std::uint32_t>(f));
  dump(path, bytes);
}

std::vector<float> read_f32(const fs::path& path, std::size_t count) {
  const auto bytes = slurp(path);
  check_size(path, bytes.size(), count * 4);
  std::vector<float> v(count);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = std::bit_cast<float>(get_le<std::uint32_t>(&bytes[i * 4]));
  return v;
}

void write_u16(const fs::path& path, std::span<const std::uint16_t> v) {
  std::vector<unsigned char> bytes;
  bytes.reserve(v.size() * 2);
  for (auto x : v) put_le(bytes, x);
  dump(path, bytes);
}

std::vector<std::uint16_t> read_u16(const fs::path& path, std::size_t count) {
  const auto bytes = slurp(path);
  check_size(path, bytes.size(), count * 2);
  std::vector<std::uint16_t> v(count);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = get_le<std::uint16_t>(&bytes[i * 2]);
  return v;
}

void write_u8(const fs::path& path, std::span<const std::uint8_t> v) {
  dump(path, std::vector<unsigned char>(v.begin(), v.end()));
}

std::vector<std::uint8_t> read_u8(const fs::path& path, std::size_t count) {
  auto bytes = slurp(path);
  check_size(path, bytes.size(), count);
  return {bytes.begin(), bytes.end()};
}

void write_bitset(const fs::path& path, std::span<const std::uint8_t> flags) {
  std::vector<unsigned char> bytes((flags.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (flags[i]) bytes[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
  dump(path, bytes);
}

std::vector<std::uint8_t> read_bitset(const fs::path& path, std::size_t count) {
  const auto bytes = slurp(path);
  check_size(path, bytes.size(), (count + 7) / 8);
  std::vector<std::uint8_t> flags(count);
  for (std::size_t i = 0; i < count; ++i)
    flags[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  return flags;
}

namespace {

fs::path payload_path(const fs::path& manifest) {
  fs::path p = manifest;
  p.replace_extension(".bin");
  return p;
}

template <class T>
Manifest raster_manifest(const fs::path& manifest, const Raster<T>& r,
                         const char* dtype) {
  r.geometry.validate();
  if (r.values.size() != r.geometry.pixel_count())
    throw std::invalid_argument("raster value count does not match geometry");
  Manifest m;
  put_geometry(m, r.geometry);
  m.set("dtype", dtype);
  m.set("byte_order", "little-endian");
  m.set("data", payload_path(manifest).filename().string());
  return m;
}

Manifest open_raster(const fs::path& manifest, fs::path& data) {
  Manifest m = Manifest::read(manifest);
  if (m.get_or("byte_order", "little-endian") != "little-endian")
    throw FormatError(manifest.string() + ": only little-endian payloads supported");
  data = m.base_dir() / m.get("data");
  return m;
}

}  // namespace

void write_raster(const fs::path& manifest, const Raster<float>& r) {
  auto m = raster_manifest(manifest, r, "f32");
  write_f32(payload_path(manifest), r.values);
  m.write(manifest);
}

void write_raster(const fs::path& manifest, const Raster<std::uint8_t>& r) {
  auto m = raster_manifest(manifest, r, "u8");
  write_u8(payload_path(manifest), r.values);
  m.write(manifest);
}

void write_raster(const fs::path& manifest, const Raster<std::uint16_t>& r) {
  auto m = raster_manifest(manifest, r, "u16");
  write_u16(payload_path(manifest), r.values);
  m.write(manifest);
}

Raster<float> read_raster_f32(const fs::path& manifest) {
  fs::path data;
  Manifest m = open_raster(manifest, data);
  Raster<float> r;
  r.geometry = geometry_from(m);
  const auto n = r.geometry.pixel_count();
  const auto& dtype = m.get("dtype");
  if (dtype == "f32") {
    r.values = read_f32(data, n);
  } else if (dtype == "u16") {
    auto v = read_u16(data, n);
    r.values.assign(v.begin(), v.end());
  } else if (dtype == "u8") {
    auto v = read_u8(data, n);
    r.values.assign(v.begin(), v.end());
  } else {
    throw FormatError(manifest.string() + ": unknown dtype '" + dtype + "'");
  }
  return r;
}

Raster<std::uint16_t> read_raster_u16(const fs::path& manifest) {
  fs::path data;
  Manifest m = open_raster(manifest, data);
  Raster<std::uint16_t> r;
  r.geometry = geometry_from(m);
  const auto n = r.geometry.pixel_count();
  const auto& dtype = m.get("dtype");
  if (dtype == "u16") {
    r.values = read_u16(data, n);
  } else if (dtype == "u8") {
    auto v = read_u8(data, n);
    r.values.assign(v.begin(), v.end());
  } else {
    throw FormatError(manifest.string() + ": integer raster expected, got dtype '" +
                      dtype + "'");
  }
  return r;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.emplace_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

long long parse_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  return v;
}

std::string format_float(float v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string file_checksum(const fs::path& path) {
  const auto bytes = slurp(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cropmap
