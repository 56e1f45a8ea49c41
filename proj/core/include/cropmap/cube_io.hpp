#pragma once

#include <filesystem>
#include <vector>

#include "cropmap/cube.hpp"
#include "cropmap/scene.hpp"

namespace cropmap {

/// Directory layout: cube.manifest, dNN_<band>.f32 per (dekad, band) and a
/// dNN.valid bitset per dekad holding one bit per (band, pixel).
void write_cube(const DekadalCube& cube, const std::filesystem::path& dir);
DekadalCube read_cube(const std::filesystem::path& dir);

/// A scene is a .scene manifest with a .f32 payload and a .valid bitset.
void write_scene(const SceneGrid& scene, const std::filesystem::path& manifest);
SceneGrid read_scene(const std::filesystem::path& manifest);
/// Every *.scene file in `dir`, in filename order.
std::vector<SceneGrid> read_scene_dir(const std::filesystem::path& dir);

}  // namespace cropmap
