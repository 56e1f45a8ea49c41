#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cropmap/grid.hpp"

namespace cropmap {

enum class Polarization : std::uint8_t { VV, VH, CR };

std::string_view polarization_name(Polarization p);
Polarization parse_polarization(std::string_view text);

/// One acquisition of one band in linear power units (sigma nought), or a
/// per-scene cross-ratio grid when band == CR.
struct SceneGrid {
  std::chrono::year_month_day acquired{};
  /// Distinguishes acquisitions on the same day (e.g. ascending and
  /// descending passes); VV/VH scenes pair on (acquired, acquisition_id).
  std::string acquisition_id;
  Polarization band = Polarization::VV;
  GridGeometry geometry;
  std::vector<float> values;
  std::vector<std::uint8_t> valid;

  static SceneGrid filled(GridGeometry g, std::chrono::year_month_day date,
                          Polarization band, float value);

  bool is_valid(std::size_t i) const { return valid[i] != 0; }

  /// Throws std::invalid_argument on a size mismatch with the geometry or a
  /// valid pixel that is negative or non-finite.
  void validate() const;
};

inline constexpr double kEdgeThresholdDb = -25.0;
inline constexpr std::size_t kEdgeMinGroup = 50;

/// Linear power to decibels. Non-positive input gives -infinity.
double to_db(double linear);
double from_db(double db);

/// Masks scene borders: every 4-connected group of valid VV pixels below
/// `threshold_db` with at least `min_group` members becomes invalid in
/// both bands.
std::pair<SceneGrid, SceneGrid> mask_scene_edges(
    const SceneGrid& vv, const SceneGrid& vh,
    double threshold_db = kEdgeThresholdDb,
    std::size_t min_group = kEdgeMinGroup);

/// Per-pixel linear VH / VV. Invalid where either input is invalid or VV == 0.
SceneGrid compute_cr(const SceneGrid& vv, const SceneGrid& vh);

}  // namespace cropmap
