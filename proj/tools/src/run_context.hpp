#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace cropmap::cli {

/// Inputs, outputs and timing of the one stage a run executes.
struct RunContext {
  unsigned threads = 1;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
  std::vector<std::filesystem::path> inputs;
  /// File the run manifest is written to.
  std::filesystem::path manifest;

  /// Throws MissingInputError when the path does not exist; records it for
  /// the checksum list otherwise.
  const std::filesystem::path& input(const std::filesystem::path& p, const char* what);
  /// Output directory: created if necessary, manifest goes inside.
  void output_dir(const std::filesystem::path& dir);
  /// Output file: parent created, manifest goes to "<file>.run".
  void output_file(const std::filesystem::path& file);
};

/// Config-file text for the chain of parsed subcommands plus run metadata;
/// it can be handed back through --config to repeat the stage.
std::string run_manifest_text(const CLI::App& root, const RunContext& ctx);

}  // namespace cropmap::cli
