#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cropmap/dekad.hpp"
#include "cropmap/grid.hpp"
#include "cropmap/scene.hpp"

namespace cropmap {

/// Cube band: VV and VH composites in dB, CR as a linear ratio.
enum class CubeBand : std::uint8_t { VV_dB, VH_dB, CR };

/// Short names used in feature columns and descriptors: "VV", "VH", "CR".
std::string_view band_name(CubeBand b);
CubeBand parse_band(std::string_view text);
std::vector<CubeBand> parse_bands(std::string_view comma_list);
std::string join_bands(std::span<const CubeBand> bands);

/// 36 dekads x bands x pixels of composited backscatter with a validity
/// flag per cell. Invalid cells hold 0.
struct DekadalCube {
  GridGeometry geometry;
  int year = 2018;
  std::vector<CubeBand> bands;
  std::vector<float> values;
  std::vector<std::uint8_t> valid;

  static DekadalCube empty(GridGeometry g, int year, std::vector<CubeBand> bands);

  std::size_t index(int dekad, std::size_t band_slot, std::size_t pixel) const {
    return (static_cast<std::size_t>(dekad) * bands.size() + band_slot) *
               geometry.pixel_count() +
           pixel;
  }
  std::optional<std::size_t> band_slot(CubeBand b) const;
  float value(int dekad, CubeBand b, std::size_t pixel) const;
  bool is_valid(int dekad, CubeBand b, std::size_t pixel) const;
  void set(int dekad, std::size_t slot, std::size_t pixel, float v) {
    values[index(dekad, slot, pixel)] = v;
    valid[index(dekad, slot, pixel)] = 1;
  }
};

/// Contiguous dekad range over an ordered band list. Feature vectors are
/// band-major, dekad-minor.
struct FeatureWindow {
  int start_dekad = 0;
  int end_dekad = 21;
  std::vector<CubeBand> bands{CubeBand::VV_dB, CubeBand::VH_dB};

  std::size_t dekad_count() const {
    return static_cast<std::size_t>(end_dekad - start_dekad + 1);
  }
  std::size_t feature_count() const { return bands.size() * dekad_count(); }
  /// Column names such as "VV_0" ... "VH_21".
  std::vector<std::string> feature_names() const;
  /// "0-21:VV,VH"
  std::string descriptor() const;
  static FeatureWindow parse(std::string_view descriptor);
  /// Throws std::invalid_argument on an out-of-range or empty window.
  void validate() const;
  /// Positions of this window's features inside `source`'s feature vector;
  /// throws when a feature is not covered.
  std::vector<std::size_t> positions_in(const FeatureWindow& source) const;

  bool operator==(const FeatureWindow&) const = default;
};

/// Gathers one pixel's feature vector into `out` (size feature_count()).
/// Returns false when any cell in the window is invalid.
bool gather_features(const DekadalCube& cube, const FeatureWindow& window,
                     std::size_t pixel, std::span<float> out);

/// Dense per-pixel feature matrix with a per-row validity flag.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;
  std::vector<std::uint8_t> row_valid;

  std::span<const float> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }
};

/// Throws std::invalid_argument on an invalid window or a band the cube lacks.
FeatureMatrix slice_window(const DekadalCube& cube, const FeatureWindow& window);

/// Composites scenes into a cube with bands {VV_dB, VH_dB, CR}.
/// Per pixel and dekad the valid linear values are averaged then converted
/// to dB; CR is the mean of per-scene linear ratios. Contributions are summed
/// in (date, acquisition_id) order so the result does not depend on input
/// order. Rows are processed in independent tiles across `threads` workers.
DekadalCube composite_dekads(std::span<const SceneGrid> scenes, int year,
                             const GridGeometry& geometry, unsigned threads = 1);

}  // namespace cropmap
