#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cropmap/cube.hpp"
#include "cropmap/grid.hpp"
#include "cropmap/sampling.hpp"
#include "cropmap/types.hpp"

namespace cropmap {

/// Double-logistic seasonal curve in dB over dekad time t:
///   baseline + amplitude * rise(t) * (1 - fall(t))
/// rise goes from 5% at `onset` to 95% at `peak`; fall is centred on
/// `senescence` with the same steepness. amplitude 0 gives a flat curve.
struct SeasonalCurve {
  double baseline_db = -20.0;
  double amplitude_db = 0.0;
  double onset = 0.0;
  double peak = 1.0;
  double senescence = 2.0;

  double at(double t) const;
  void validate() const;
};

struct CropSignature {
  ClassCode code = 0;
  SeasonalCurve vv;
  SeasonalCurve vh;
  /// Stratum-2 curves are the stratum-1 curves moved by this many dekads.
  double stratum2_shift = -3.0;
  double sigma_db = 1.5;

  /// Noise-free dB value for a band at dekad t in a stratum.
  double value(CubeBand band, double t, Stratum s) const;
  void validate() const;
};

/// Twelve crops plus woodland (300) and grassland (500). Shapes are
/// illustrative only: rape rises first, winter cereals next, summer crops late.
std::vector<CropSignature> default_signatures();

/// CSV: code,shift,sigma,vv_base,vv_amp,vv_onset,vv_peak,vv_senescence,vh_base,...
std::vector<CropSignature> read_signatures(const std::filesystem::path& path);
void write_signatures(const std::filesystem::path& path, const std::vector<CropSignature>& sigs);

struct SynthParcel {
  std::string id;
  ClassCode code = 0;
  Stratum stratum = Stratum::Str1;
  int col = 0, row = 0, width = 1, height = 1;  // pixel rectangle
};

struct SyntheticScenario {
  GridGeometry geometry{64, 64, 10.0, 500000.0, 5000000.0};
  int year = 2018;
  std::uint64_t seed = 0;
  /// Rows above this index are Str1, the rest Str2.
  int stratum_split_row = 32;
  std::vector<CropSignature> signatures;
  std::vector<SynthParcel> parcels;

  /// Throws std::invalid_argument on overlapping or out-of-grid parcels,
  /// unknown classes, or a parcel whose stratum disagrees with its rows.
  void validate() const;
};

/// Key=value lines, then a "[parcels]" section with
/// id,class,stratum,col,row,width,height. `signatures=default` or a path
/// relative to the scenario file; optional `sigma_db=` overrides every
/// signature's noise.
SyntheticScenario read_scenario(const std::filesystem::path& path);
void write_scenario(const std::filesystem::path& path, const SyntheticScenario& s,
                    std::string_view signatures_ref = "default");

/// 64x64 grid, 8 x 10 rectangular parcels, top half Str1, bottom half Str2,
/// every class of default_signatures() in both strata.
SyntheticScenario standard_scenario(std::uint64_t seed = 2018);

struct SyntheticOutput {
  DekadalCube cube;  // bands VV, VH, CR; cells outside parcels invalid
  std::vector<LabeledPolygon> polygons;
  Raster<std::uint16_t> truth;  // 0 outside parcels
  StratumRaster strata;
};

/// Per pixel a private random stream (seed, pixel index) drives the noise,
/// so the output is independent of thread count.
SyntheticOutput generate(const SyntheticScenario& scenario, unsigned threads = 1);

}  // namespace cropmap
