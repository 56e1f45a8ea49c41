#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "cropmap_unit" / "cli";

struct Run {
  int code;
  std::string output;
};

Run cropmap(const std::string& args) {
  const auto log = kWork / "last.log";
  const std::string cmd = std::string("\"") + CROPMAP_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string w(const char* name) { return "\"" + (kWork / name).string() + "\""; }

// synth -> extract -> train x4 -> classify, into kWork/<tag>_*.
void run_pipeline(const std::string& tag, int threads) {
  const std::string t = " --threads " + std::to_string(threads);
  const std::string syn = (kWork / "syn").string();
  const std::string models = (kWork / (tag + "_models")).string();
  if (!fs::exists(kWork / "syn" / "cube")) REQUIRE(cropmap("synth --seed 21 --out \"" + syn + "\"").code == 0);
  if (!fs::exists(kWork / "samples.csv"))
    REQUIRE(cropmap("extract --cube \"" + syn + "/cube\" --polygons \"" + syn + "/polygons.csv\" --out " +
                    w("samples.csv")).code == 0);
  for (const char* level : {"1", "2"})
    for (const char* st : {"Str1", "Str2"}) {
      const auto r = cropmap("train --samples " + w("samples.csv") + " --level " + level + " --stratum " + st +
                             " --hp n_estimators=20 --seed 5 --out \"" + models + "/l" + level + "_" + st +
                             ".model\"" + t);
      REQUIRE_MESSAGE(r.code == 0, r.output);
    }
  const auto r = cropmap("classify --cube \"" + syn + "/cube\" --models \"" + models + "\" --strata \"" + syn +
                         "/strata.manifest\" --out " + w((tag + "_map").c_str()) + t);
  REQUIRE_MESSAGE(r.code == 0, r.output);
}

}  // namespace

TEST_CASE("full synthetic run produces a report") {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  run_pipeline("a", 1);
  const std::string syn = (kWork / "syn").string();
  const auto r = cropmap("assess points --map " + w("a_map") + " --points \"" + syn +
                         "/points.csv\" --no-filter --out " + w("a_assess"));
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const auto report = slurp(kWork / "a_assess" / "report.txt");
  CHECK(report.find("OA(%)") != std::string::npos);
  CHECK(fs::exists(kWork / "a_assess" / "counts.csv"));
  CHECK(fs::exists(kWork / "a_assess" / "run.manifest"));
  const auto manifest = slurp(kWork / "a_map" / "run.manifest");
  CHECK(manifest.find("stage=\"classify\"") != std::string::npos);
  CHECK(manifest.find("input_checksums=") != std::string::npos);

  const auto rep = cropmap("report --map " + w("a_map") + " --out " + w("a_report"));
  CHECK(rep.code == 0);
  CHECK(slurp(kWork / "a_report" / "areas.csv").rfind("class,", 0) == 0);

  const auto zonal = cropmap("assess zonal --map " + w("a_map") + " --regions \"" + syn +
                             "/regions.manifest\" --reported \"" + syn + "/reported_areas.csv\" --out " +
                             w("a_zonal"));
  CHECK_MESSAGE(zonal.code == 0, zonal.output);
  CHECK(fs::exists(kWork / "a_zonal" / "pearson.csv"));
}

TEST_CASE("reruns are byte-identical across thread counts") {
  run_pipeline("b", 4);
  CHECK(slurp(kWork / "a_map" / "classes.u16") == slurp(kWork / "b_map" / "classes.u16"));
  CHECK(slurp(kWork / "a_models" / "l2_Str1.model") == slurp(kWork / "b_models" / "l2_Str1.model"));
}

TEST_CASE("the run manifest can be replayed as a config") {
  const auto first = cropmap("train --samples " + w("samples.csv") +
                             " --level 1 --stratum Str1 --hp n_estimators=5 --seed 9 --out " + w("cfg.model"));
  REQUIRE(first.code == 0);
  fs::rename(kWork / "cfg.model", kWork / "cfg_first.model");
  const auto again = cropmap("train --config " + w("cfg.model.run"));
  REQUIRE_MESSAGE(again.code == 0, again.output);
  CHECK(slurp(kWork / "cfg.model") == slurp(kWork / "cfg_first.model"));
}

TEST_CASE("exit codes") {
  auto r = cropmap("classify --cube x --strata y --out z");
  CHECK(r.code == 2);
  CHECK(r.output.find("code=missing_argument") != std::string::npos);
  r = cropmap("train --samples " + w("samples.csv") + " --level 3 --seed 1 --out " + w("x.model"));
  CHECK(r.code == 5);
  r = cropmap("report --map " + w("a_map") + " --out " + w("r") + " --colour red");
  CHECK(r.code == 2);
  CHECK(cropmap("").code == 2);
  r = cropmap("report --map " + w("no_such_map") + " --out " + w("r"));
  CHECK(r.code == 3);
  CHECK(r.output.find("error: code=missing_input exit=3") != std::string::npos);
  CHECK(cropmap("train --config " + w("missing.ini")).code == 3);
  std::ofstream(kWork / "bad_counts.csv") << "map\\ref,211\n211,x\n";
  r = cropmap("assess matrix --counts " + w("bad_counts.csv") + " --out " + w("m"));
  CHECK(r.code == 4);
  CHECK(cropmap("--threads 0 report --map " + w("a_map") + " --out " + w("r")).code == 5);
  CHECK(cropmap("--version").code == 0);
  CHECK(cropmap("--help").code == 0);
}
