#include "cropmap/cube_io.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>

#include "cropmap/error.hpp"
#include "cropmap/io.hpp"

namespace cropmap {

namespace fs = std::filesystem;

namespace {

std::string dekad_tag(int d) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "d%02d", d);
  return buf;
}

std::string format_date(std::chrono::year_month_day d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::chrono::year_month_day parse_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%u", &y, &m, &d) != 3)
    throw FormatError("bad date '" + s + "', expected YYYY-MM-DD");
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                  std::chrono::day{d}};
  if (!ymd.ok()) throw FormatError("invalid calendar date '" + s + "'");
  return ymd;
}

}  // namespace

void write_cube(const DekadalCube& cube, const fs::path& dir) {
  fs::create_directories(dir);
  const auto n = cube.geometry.pixel_count();
  Manifest m;
  put_geometry(m, cube.geometry);
  m.set("year", std::to_string(cube.year));
  m.set("bands", join_bands(cube.bands));
  m.set("dekads", std::to_string(kDekadsPerYear));
  m.set("byte_order", "little-endian");
  for (int d = 0; d < kDekadsPerYear; ++d) {
    const std::size_t base = cube.index(d, 0, 0);
    for (std::size_t b = 0; b < cube.bands.size(); ++b) {
      const float* first = cube.values.data() + cube.index(d, b, 0);
      write_f32(dir / (dekad_tag(d) + "_" + std::string(band_name(cube.bands[b])) + ".f32"),
                std::span<const float>(first, n));
    }
    write_bitset(dir / (dekad_tag(d) + ".valid"),
                 std::span<const std::uint8_t>(cube.valid.data() + base,
                                               n * cube.bands.size()));
  }
  m.write(dir / "cube.manifest");
}

DekadalCube read_cube(const fs::path& dir) {
  const auto manifest_path = dir / "cube.manifest";
  if (!fs::exists(manifest_path))
    throw MissingInputError("no cube manifest in " + dir.string());
  Manifest m = Manifest::read(manifest_path);
  if (m.get_or("byte_order", "little-endian") != "little-endian")
    throw FormatError("cube payloads must be little-endian");
  std::vector<CubeBand> bands;
  try {
    bands = parse_bands(m.get("bands"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  DekadalCube cube = DekadalCube::empty(geometry_from(m), m.get_int("year"), bands);
  const auto n = cube.geometry.pixel_count();
  for (int d = 0; d < kDekadsPerYear; ++d) {
    for (std::size_t b = 0; b < bands.size(); ++b) {
      auto v = read_f32(dir / (dekad_tag(d) + "_" + std::string(band_name(bands[b])) + ".f32"), n);
      std::copy(v.begin(), v.end(), cube.values.begin() + static_cast<std::ptrdiff_t>(cube.index(d, b, 0)));
    }
    auto flags = read_bitset(dir / (dekad_tag(d) + ".valid"), n * bands.size());
    std::copy(flags.begin(), flags.end(),
              cube.valid.begin() + static_cast<std::ptrdiff_t>(cube.index(d, 0, 0)));
  }
  return cube;
}

void write_scene(const SceneGrid& scene, const fs::path& manifest) {
  scene.validate();
  Manifest m;
  put_geometry(m, scene.geometry);
  m.set("date", format_date(scene.acquired));
  m.set("band", std::string(polarization_name(scene.band)));
  m.set("acquisition_id", scene.acquisition_id);
  m.set("byte_order", "little-endian");
  fs::path values = manifest, valid = manifest;
  values.replace_extension(".f32");
  valid.replace_extension(".valid");
  m.set("values", values.filename().string());
  m.set("valid", valid.filename().string());
  write_f32(values, scene.values);
  write_bitset(valid, scene.valid);
  m.write(manifest);
}

SceneGrid read_scene(const fs::path& manifest) {
  Manifest m = Manifest::read(manifest);
  if (m.get_or("byte_order", "little-endian") != "little-endian")
    throw FormatError("scene payloads must be little-endian");
  SceneGrid s;
  s.geometry = geometry_from(m);
  s.acquired = parse_date(m.get("date"));
  try {
    s.band = parse_polarization(m.get("band"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
  s.acquisition_id = m.get_or("acquisition_id", "");
  const auto n = s.geometry.pixel_count();
  s.values = read_f32(m.base_dir() / m.get("values"), n);
  s.valid = read_bitset(m.base_dir() / m.get("valid"), n);
  return s;
}

std::vector<SceneGrid> read_scene_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw MissingInputError("no scene directory " + dir.string());
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".scene") paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  std::vector<SceneGrid> scenes;
  for (const auto& p : paths) scenes.push_back(read_scene(p));
  return scenes;
}

}  // namespace cropmap
