#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cropmap/accuracy.hpp"
#include "cropmap/legend.hpp"
#include "cropmap/pipeline.hpp"
#include "cropmap/polygon.hpp"

namespace cropmap {

/// Reference point with the survey attributes used for filtering.
struct LucasPoint {
  std::string id;
  Point location;
  ClassCode code = 0;
  bool in_situ = true;        // field visit, not photo-interpreted
  bool direct = true;         // observed on the spot, not from a distance
  double parcel_ha = 0.0;     // size of the observed parcel
  bool homogeneous = true;
  bool in_training = false;   // also part of the training survey
};

/// CSV header: id,x,y,class,in_situ,direct,parcel_ha,homogeneous,in_training
/// (any column order). Missing columns are a FormatError.
std::vector<LucasPoint> read_points(const std::filesystem::path& path);
void write_points(const std::filesystem::path& path, const std::vector<LucasPoint>& points);

struct PointFilter {
  double min_parcel_ha = 0.1;
};

struct FilterResult {
  std::vector<LucasPoint> kept;
  // A point is counted under the first criterion it fails.
  std::size_t dropped_not_in_situ = 0;
  std::size_t dropped_not_direct = 0;
  std::size_t dropped_small_parcel = 0;
  std::size_t dropped_heterogeneous = 0;
  std::size_t dropped_in_training = 0;
};

FilterResult filter_lucas_points(const std::vector<LucasPoint>& points,
                                 const PointFilter& filter = {});

struct PointConfusion {
  CountMatrix matrix;  // classes: union of map and reference codes, ascending
  std::size_t used = 0;
  std::size_t excluded_masked = 0;
  std::size_t excluded_outside = 0;
};

/// Throws std::invalid_argument on an empty point list.
PointConfusion confusion_from_points(const ClassifiedMap& map,
                                     const std::vector<LucasPoint>& points);

struct ParcelRecord {
  std::string id;
  std::vector<Point> ring;
  std::string declared;   // source crop code
  std::optional<ClassCode> code;  // study code via the region's legend
  std::string region;
  double area_ha() const { return ring_area(ring) / 10000.0; }
};

/// CSV header: id,region,declared,vertices ("x y;x y;..."). When the
/// catalog has scheme "gsaa:<region>" the declared code is mapped through it,
/// otherwise it is read as a study code.
std::vector<ParcelRecord> read_parcels(const std::filesystem::path& path,
                                       const LegendCatalog* catalog = nullptr);

struct ParcelOptions {
  double min_area_share = 0.01;
  double max_masked_share = 0.5;
  std::vector<ClassCode> drop_classes{kWoodland, kGrassland};
};

struct RegionParcelResult {
  std::string region;
  CountMatrix matrix;  // rows: parcel mode, columns: declared
  CountMetrics metrics;
  std::vector<ClassCode> small_classes;  // below min_area_share
  std::size_t parcels_used = 0;
  std::size_t excluded_unmapped = 0;
  std::size_t excluded_small_class = 0;
  std::size_t excluded_no_pixels = 0;
  std::size_t excluded_masked = 0;
};

/// Modal valid map class per parcel (ties to the lowest code).
std::optional<ClassCode> parcel_mode(const ClassifiedMap& map, const std::vector<Point>& ring,
                                     double max_masked_share, bool* too_masked = nullptr);

/// One result per region, ascending region id.
std::vector<RegionParcelResult> parcel_majority(const ClassifiedMap& map,
                                                const std::vector<ParcelRecord>& parcels,
                                                const ParcelOptions& options = {});

struct RegionAreaPair {
  int region = 0;
  ClassCode code = 0;
  double reported_kha = 0.0;
  double mapped_kha = 0.0;
};

/// CSV "region,class,reported_kha", or "region,source_code,reported_kha"
/// mapped through `mapping` with areas summed per study class.
std::vector<RegionAreaPair> read_reported_areas(const std::filesystem::path& path,
                                                const LegendMapping* mapping = nullptr);

struct ZonalRow {
  int region;
  ClassCode code;
  double reported_kha;
  double mapped_kha;
  std::optional<double> relative_difference;  // percent; empty when reported is 0
};

struct ZonalCrop {
  ClassCode code;
  std::size_t regions;
  std::optional<double> pearson_r;
};

struct ZonalResult {
  std::vector<ZonalRow> rows;
  std::vector<ZonalCrop> crops;
};

/// Pearson r; empty with fewer than 2 points or zero variance.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Mapped area of valid pixels per (region, crop) in 1000 ha against the
/// reported figures. Region raster value 0 means outside every region.
ZonalResult zonal_area_compare(const ClassifiedMap& map, const Raster<std::uint16_t>& regions,
                               const std::vector<RegionAreaPair>& reported);

}  // namespace cropmap
