#include "run_context.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <sstream>

#include "cropmap/error.hpp"
#include "cropmap/io.hpp"

namespace fs = std::filesystem;

namespace cropmap::cli {

#ifndef CROPMAP_VERSION
#define CROPMAP_VERSION "unknown"
#endif

const fs::path& RunContext::input(const fs::path& p, const char* what) {
  if (p.empty()) throw MissingInputError(std::string("no ") + what + " given");
  if (!fs::exists(p)) throw MissingInputError(std::string(what) + " not found: " + p.string());
  inputs.push_back(p);
  return p;
}

void RunContext::output_dir(const fs::path& dir) {
  fs::create_directories(dir);
  manifest = dir / "run.manifest";
}

void RunContext::output_file(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  manifest = file;
  manifest += ".run";
}

namespace {

std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

// FNV-1a over the "name:checksum" lines of every file below a directory.
std::string directory_checksum(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "run.manifest" && e.path().extension() != ".run")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : files)
    for (char c : fs::relative(f, dir).generic_string() + ":" + file_checksum(f) + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::pair<std::string, std::string>> checksums(const std::vector<fs::path>& inputs) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& in : inputs)
    out.emplace_back(in.string(), fs::is_directory(in) ? directory_checksum(in) : file_checksum(in));
  return out;
}

void echo_options(const CLI::App& app, std::ostringstream& os) {
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "help-all" ||
        name == "version") continue;
    if (opt->get_lnames().empty()) continue;
    if (opt->get_expected_max() == 0) {
      os << name << '=' << (opt->count() > 0 ? "true" : "false") << '\n';
      continue;
    }
    std::vector<std::string> values = opt->results();
    if (values.empty()) {
      if (opt->get_default_str().empty()) continue;
      values = {opt->get_default_str()};
    }
    if (values.size() == 1 && opt->get_expected_max() <= 1) {
      os << name << '=' << quoted(values[0]) << '\n';
    } else {
      os << name << "=[";
      for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << quoted(values[i]);
      os << "]\n";
    }
  }
}

}  // namespace

std::string run_manifest_text(const CLI::App& root, const RunContext& ctx) {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.started).count();
  std::vector<const CLI::App*> chain;
  for (const CLI::App* a = &root;;) {
    const auto subs = a->get_subcommands();
    if (subs.empty()) break;
    a = subs.front();
    chain.push_back(a);
  }
  std::string section;
  for (const auto* a : chain) section += (section.empty() ? "" : ".") + a->get_name();

  std::ostringstream os;
  os << "# cropmap run manifest; pass back with --config to repeat the stage\n";
  os << "cropmap_version=" << quoted(CROPMAP_VERSION) << '\n';
  os << "stage=" << quoted(section) << '\n';
  os << "wall_time_s=" << format_double(wall) << '\n';
  os << "input_checksums=[";
  bool first = true;
  for (const auto& [path, sum] : checksums(ctx.inputs)) {
    os << (first ? "" : ",") << quoted(path + ":" + sum);
    first = false;
  }
  os << "]\n";
  echo_options(root, os);
  if (!chain.empty()) {
    os << '[' << section << "]\n";
    echo_options(*chain.back(), os);
  }
  return os.str();
}

}  // namespace cropmap::cli
