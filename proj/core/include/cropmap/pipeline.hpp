#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cropmap/cube.hpp"
#include "cropmap/forest.hpp"
#include "cropmap/grid.hpp"
#include "cropmap/sampling.hpp"

namespace cropmap {

/// Why a pixel carries no usable class. Numeric values are the on-disk codes.
enum class MaskReason : std::uint8_t {
  None = 0,
  NoData = 1,  // invalid features
  Terrain = 2,
  Builtup = 3,
  Water = 4,
  Auxiliary = 5,
};
std::string_view mask_reason_name(MaskReason r);
MaskReason parse_mask_reason(std::string_view text);

/// Per-pixel study codes with a mask reason per pixel. Masked pixels keep
/// their class for audit; NoData pixels hold code 0.
struct ClassifiedMap {
  GridGeometry geometry;
  std::vector<ClassCode> codes;
  std::vector<MaskReason> reasons;
  /// Ordered key=value provenance (models, window, masks applied).
  std::vector<std::pair<std::string, std::string>> provenance;

  bool valid(std::size_t pixel) const { return reasons[pixel] == MaskReason::None; }
  /// Throws std::invalid_argument when sizes disagree or a valid pixel holds
  /// a code outside the study legend.
  void validate() const;
};

/// Level-1 classes 100 and 600 are poorly represented in training; they are
/// emitted but flagged.
bool low_confidence(ClassCode code);

struct ClassifyStats {
  std::size_t level1_calls = 0;
  std::size_t level2_calls = 0;
  std::size_t nodata_pixels = 0;
};

/// Per stratum: level-1 broad class; where it says 200 the level-2 model of
/// the same stratum picks the crop. Rows are classified in independent
/// tiles, so the result does not depend on `threads`.
ClassifiedMap classify_two_phase(const DekadalCube& cube,
                                 const std::map<Stratum, ForestModel>& level1,
                                 const std::map<Stratum, ForestModel>& level2,
                                 const StratumRaster& strata, const FeatureWindow& window,
                                 unsigned threads = 1, ClassifyStats* stats = nullptr);

/// Horn 3x3 gradient with clamped borders; degrees. Needs at least 3x3.
Raster<float> compute_slope(const Raster<float>& dem);

enum class MaskKind : std::uint8_t { Elevation, Slope, Builtup, Water, Auxiliary };
std::string_view mask_kind_name(MaskKind k);
MaskKind parse_mask_kind(std::string_view text);

/// Elevation (m) and slope (degrees) layers are compared to limits; the
/// others mask where the value is non-zero.
struct MaskLayer {
  MaskKind kind;
  Raster<float> values;
};

enum class TerrainRule : std::uint8_t { Conjunction, Disjunction };

struct MaskOptions {
  double elevation_limit = 1000.0;
  double slope_limit = 10.0;
  TerrainRule rule = TerrainRule::Conjunction;
};

/// A pixel already masked keeps the reason of highest priority
/// (NoData, Terrain, Builtup, Water, Auxiliary), so the result is idempotent
/// and does not depend on layer order.
ClassifiedMap apply_masks(const ClassifiedMap& map, const std::vector<MaskLayer>& layers,
                          const MaskOptions& options = {});

struct AreaRow {
  ClassCode code;
  std::size_t pixels;
  double hectares;
  bool low_confidence;
};
/// Valid pixels per class, ascending code.
std::vector<AreaRow> area_census(const ClassifiedMap& map);
/// Pixels per mask reason (None included).
std::map<MaskReason, std::size_t> reason_census(const ClassifiedMap& map);

/// Directory with map.manifest, classes.u16 and reasons.u8.
void write_map(const std::filesystem::path& dir, const ClassifiedMap& map);
ClassifiedMap read_map(const std::filesystem::path& dir);

}  // namespace cropmap
