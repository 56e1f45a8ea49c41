#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cropmap/grid.hpp"

namespace cropmap {

/// Ordered key=value text file. Blank lines and lines starting with '#'
/// are ignored on read.
class Manifest {
 public:
  static Manifest read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;

  void set(std::string key, std::string value);
  bool has(std::string_view key) const;
  /// Throws FormatError naming the key when absent.
  const std::string& get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string fallback) const;
  int get_int(std::string_view key) const;
  double get_double(std::string_view key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  /// Directory of the file this manifest was read from.
  const std::filesystem::path& base_dir() const { return base_dir_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::filesystem::path source_;
  std::filesystem::path base_dir_;
};

void put_geometry(Manifest& m, const GridGeometry& g);
GridGeometry geometry_from(const Manifest& m);

// Flat little-endian binary payloads.
void write_f32(const std::filesystem::path& path, std::span<const float> v);
std::vector<float> read_f32(const std::filesystem::path& path, std::size_t count);
void write_u16(const std::filesystem::path& path, std::span<const std::uint16_t> v);
std::vector<std::uint16_t> read_u16(const std::filesystem::path& path,
                                    std::size_t count);
void write_u8(const std::filesystem::path& path, std::span<const std::uint8_t> v);
std::vector<std::uint8_t> read_u8(const std::filesystem::path& path,
                                  std::size_t count);

/// Packs 0/1 flags LSB-first into bytes.
void write_bitset(const std::filesystem::path& path,
                  std::span<const std::uint8_t> flags);
std::vector<std::uint8_t> read_bitset(const std::filesystem::path& path,
                                      std::size_t count);

// Single-band rasters: a manifest (geometry, dtype, byte_order, data) plus a
// payload file next to it.
void write_raster(const std::filesystem::path& manifest, const Raster<float>& r);
void write_raster(const std::filesystem::path& manifest,
                  const Raster<std::uint8_t>& r);
void write_raster(const std::filesystem::path& manifest,
                  const Raster<std::uint16_t>& r);
Raster<float> read_raster_f32(const std::filesystem::path& manifest);
/// Reads u8 or u16 rasters into 16-bit storage.
Raster<std::uint16_t> read_raster_u16(const std::filesystem::path& manifest);

/// Splits on `delim`, keeping empty fields; trims surrounding whitespace.
std::vector<std::string> split_fields(std::string_view line, char delim);
std::string_view trim(std::string_view s);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

/// Shortest decimal text that round-trips a float / double.
std::string format_float(float v);
std::string format_double(double v);

/// FNV-1a 64-bit checksum of a file's bytes (hex).
std::string file_checksum(const std::filesystem::path& path);

}  // namespace cropmap
