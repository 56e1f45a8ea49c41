#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cropmap/cube.hpp"
#include "cropmap/grid.hpp"
#include "cropmap/polygon.hpp"
#include "cropmap/types.hpp"

namespace cropmap {

/// Smallest area surveyed by the in-situ polygon survey, m^2.
inline constexpr double kInSituMmuM2 = 78.53;

struct LabeledPolygon {
  std::string id;
  std::vector<Point> ring;
  ClassCode code = 0;
  Stratum stratum = Stratum::Str1;
  /// Polygon from the in-situ survey, subject to the minimum mapping unit.
  bool in_situ_survey = false;

  double area_ha() const { return ring_area(ring) / 10000.0; }
  /// Throws std::invalid_argument for degenerate or self-intersecting rings,
  /// zero area, or in-situ polygons below the minimum mapping unit.
  void validate() const;
};

std::vector<LabeledPolygon> read_polygons(const std::filesystem::path& path);
void write_polygons(const std::filesystem::path& path,
                    std::span<const LabeledPolygon> polygons);

enum class SampleMode : std::uint8_t { PerPixel, PolygonAveraged };
std::string_view sample_mode_name(SampleMode m);
SampleMode parse_sample_mode(std::string_view text);

struct SampleRow {
  std::string polygon_id;
  ClassCode code = 0;
  Stratum stratum = Stratum::Str1;
  /// Pixels behind the row: 1 per-pixel, the averaged count otherwise.
  std::uint32_t pixels = 1;
};

/// Labeled feature rows sharing one window. Rows never hold invalid features.
struct SampleSet {
  FeatureWindow window;
  SampleMode mode = SampleMode::PerPixel;
  std::vector<SampleRow> rows;
  std::vector<float> features;  // rows.size() x window.feature_count()
  std::size_t dropped_polygons = 0;

  std::size_t size() const { return rows.size(); }
  std::size_t feature_count() const { return window.feature_count(); }
  std::span<const float> row(std::size_t i) const {
    return {features.data() + i * feature_count(), feature_count()};
  }
  std::vector<ClassCode> labels() const;
  /// Distinct class codes, ascending.
  std::vector<ClassCode> classes() const;

  void append(const SampleSet& other, std::size_t row);
  SampleSet empty_like() const;
  /// Rows whose predicate holds, in order.
  template <class Pred>
  SampleSet filter(Pred&& keep) const {
    SampleSet out = empty_like();
    for (std::size_t i = 0; i < size(); ++i)
      if (keep(rows[i])) out.append(*this, i);
    return out;
  }
  /// Same rows restricted to a sub-window of this set's window.
  SampleSet select(const FeatureWindow& sub) const;
};

SampleSet extract_samples(const DekadalCube& cube,
                          std::span<const LabeledPolygon> polygons,
                          const FeatureWindow& window,
                          SampleMode mode = SampleMode::PerPixel,
                          unsigned threads = 1);

void write_samples(const std::filesystem::path& path, const SampleSet& samples);
SampleSet read_samples(const std::filesystem::path& path);

/// Coarse stratum layer; cells hold 1 (Str1), 2 (Str2) or 0 (no coverage).
struct StratumRaster {
  Raster<std::uint8_t> cells;
};

/// Stratum of the cell containing `p` (half-open cells, see GridGeometry).
/// Throws std::invalid_argument when the raster is empty or does not cover p.
Stratum assign_stratum(const StratumRaster& strata, Point p);
Stratum assign_stratum(const StratumRaster& strata, const LabeledPolygon& polygon);

StratumRaster read_strata(const std::filesystem::path& manifest);
void write_strata(const std::filesystem::path& manifest, const StratumRaster& strata);

struct SplitResult {
  SampleSet train;
  SampleSet test;
  std::vector<std::string> warnings;
};

/// Polygon-level split stratified by class: within each class the polygon
/// ids are shuffled and round(fraction * count) go to train. A class with a
/// single polygon goes to train with a warning.
SplitResult split_polygons(const SampleSet& samples, double fraction,
                           std::uint64_t seed);

struct CensusRow {
  ClassCode code;
  Stratum stratum;
  std::size_t polygons;
  std::size_t pixels;
};
/// Polygon and pixel counts per (class, stratum).
std::vector<CensusRow> census(const SampleSet& samples);

}  // namespace cropmap
