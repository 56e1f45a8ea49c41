// cropmap: one stage per invocation, artifacts plus a run manifest on disk.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "cropmap/accuracy.hpp"
#include "cropmap/cube_io.hpp"
#include "cropmap/error.hpp"
#include "cropmap/forest.hpp"
#include "cropmap/hindcast.hpp"
#include "cropmap/io.hpp"
#include "cropmap/legend.hpp"
#include "cropmap/pipeline.hpp"
#include "cropmap/sampling.hpp"
#include "cropmap/synth.hpp"
#include "cropmap/tuning.hpp"
#include "cropmap/validation.hpp"
#include "run_context.hpp"

namespace fs = std::filesystem;
using namespace cropmap;
using cropmap::cli::RunContext;

namespace {

enum Exit : int { kOk = 0, kOther = 1, kUsage = 2, kMissingInput = 3, kFormat = 4, kRejected = 5 };

void fail_line(const char* code, int exit, std::string_view message) {
  std::string m;
  for (char c : message) {
    if (c == '"' || c == '\\') m += '\\';
    m += (c == '\n') ? ' ' : c;
  }
  std::fprintf(stderr, "error: code=%s exit=%d message=\"%s\"\n", code, exit, m.c_str());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

FeatureWindow window_of(const std::string& range, const std::string& bands) {
  auto w = FeatureWindow::parse(range + ":" + bands);
  w.validate();
  return w;
}

Hyperparams hp_from(const std::string& text, const std::string& tuned_csv, RunContext& ctx) {
  if (!tuned_csv.empty()) {
    if (!text.empty()) throw std::invalid_argument("--hp and --tuned are exclusive");
    std::ifstream in(ctx.input(tuned_csv, "tuning result"));
    std::string header, first;
    std::getline(in, header);
    if (!std::getline(in, first)) throw FormatError(tuned_csv + ": no candidate rows");
    const auto f = split_fields(first, ',');
    if (f.size() != 5) throw FormatError(tuned_csv + ": expected 5 columns");
    return Hyperparams::parse(f[4]);
  }
  return text.empty() ? Hyperparams{} : Hyperparams::parse(text);
}

/// Rows for a level-1 (broad class) or level-2 (crop) model of one stratum.
SampleSet training_rows(const SampleSet& all, int level, const std::string& stratum) {
  SampleSet s = all;
  if (stratum != "all") {
    const Stratum st = parse_stratum(stratum);
    s = s.filter([&](const SampleRow& r) { return r.stratum == st; });
  }
  if (level == 1) {
    for (auto& r : s.rows) r.code = level1_of(r.code);
  } else if (level == 2) {
    s = s.filter([](const SampleRow& r) { return level1_of(r.code) == kArable && r.code != kArable; });
  }
  if (s.size() == 0) throw std::invalid_argument("no training rows for level " +
                                                 std::to_string(level) + ", stratum " + stratum);
  return s;
}

struct Stage {
  CLI::App* app;
  std::function<void(RunContext&)> run;
};

// ---------------------------------------------------------------- composite

void add_composite(CLI::App& root, std::vector<Stage>& stages) {
  struct O {
    std::string scenes, out;
    int year = 2018;
    double edge_db = kEdgeThresholdDb;
    std::size_t edge_group = kEdgeMinGroup;
    bool no_edge = false;
  };
  auto o = std::make_shared<O>();
  auto* s = root.add_subcommand("composite", "Edge-mask scenes and average them into a dekadal cube");
  s->add_option("--scenes", o->scenes, "Directory of *.scene files")->required();
  s->add_option("--year", o->year, "Calendar year of the cube")->capture_default_str();
  s->add_option("--edge-threshold", o->edge_db, "Edge mask VV threshold (dB)")->capture_default_str();
  s->add_option("--edge-min-group", o->edge_group, "Smallest masked border group (pixels)")
      ->capture_default_str();
  s->add_flag("--no-edge-mask", o->no_edge, "Skip border masking");
  s->add_option("--out", o->out, "Cube directory")->required();
  stages.push_back({s, [o](RunContext& ctx) {
    auto scenes = read_scene_dir(ctx.input(o->scenes, "scene directory"));
    if (scenes.empty()) throw MissingInputError("no *.scene files in " + o->scenes);
    if (!o->no_edge) {
      std::map<std::pair<int, std::string>, std::array<int, 2>> pairs;
      for (std::size_t i = 0; i < scenes.size(); ++i) {
        const auto& sc = scenes[i];
        if (sc.band == Polarization::CR) continue;
        const int day = static_cast<int>(std::chrono::sys_days(sc.acquired).time_since_epoch().count());
        auto& slot = pairs.try_emplace({day, sc.acquisition_id}, std::array<int, 2>{-1, -1}).first->second;
        slot[sc.band == Polarization::VV ? 0 : 1] = static_cast<int>(i);
      }
      for (const auto& [key, ix] : pairs) {
        if (ix[0] < 0 || ix[1] < 0) continue;
        auto [vv, vh] = mask_scene_edges(scenes[ix[0]], scenes[ix[1]], o->edge_db, o->edge_group);
        scenes[ix[0]] = std::move(vv);
        scenes[ix[1]] = std::move(vh);
      }
    }
    const auto cube = composite_dekads(scenes, o->year, scenes.front().geometry, ctx.threads);
    ctx.output_dir(o->out);
    write_cube(cube, o->out);
  }});
}

// ---------------------------------------------------------------- synth

void write_synth_extras(const fs::path& dir, const SyntheticScenario& sc, const SyntheticOutput& out) {
  const auto& g = sc.geometry;
  std::vector<LucasPoint> points;
  for (const auto& p : sc.parcels) {
    const double parcel_ha = p.width * p.height * g.pixel_area_ha();
    for (int r = p.row; r < p.row + p.height; r += 2)
      for (int c = p.col; c < p.col + p.width; c += 2) {
        LucasPoint pt;
        pt.id = p.id + "_" + std::to_string(c) + "_" + std::to_string(r);
        const auto [x, y] = g.pixel_center(c, r);
        pt.location = {x, y};
        pt.code = p.code;
        pt.parcel_ha = parcel_ha;
        points.push_back(std::move(pt));
      }
  }
  write_points(dir / "points.csv", points);

  std::ostringstream parcels;
  parcels << "id,region,declared,vertices\n";
  for (const auto& poly : out.polygons) {
    parcels << poly.id << ',' << stratum_name(poly.stratum) << ',' << poly.code << ',';
    for (std::size_t i = 0; i < poly.ring.size(); ++i)
      parcels << (i ? ";" : "") << format_double(poly.ring[i].x) << ' ' << format_double(poly.ring[i].y);
    parcels << '\n';
  }
  write_text(dir / "parcels.csv", parcels.str());

  // Three column bands as regions, with truth areas as the reported figures.
  Raster<std::uint16_t> regions(g, 0);
  std::map<std::pair<int, ClassCode>, std::size_t> px;
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) {
      const int region = 1 + (3 * c) / g.width;
      regions.at(c, r) = static_cast<std::uint16_t>(region);
      if (const auto code = out.truth.at(c, r)) ++px[{region, code}];
    }
  write_raster(dir / "regions.manifest", regions);
  std::ostringstream areas;
  areas << "region,class,reported_kha\n";
  for (const auto& [key, n] : px)
    areas << key.first << ',' << key.second << ','
          << format_double(static_cast<double>(n) * g.pixel_area_ha() / 1000.0) << '\n';
  write_text(dir / "reported_areas.csv", areas.str());
}

void add_synth(CLI::App& root, std::vector<Stage>& stages) {
  struct O {
    std::string scenario, out;
    std::optional<std::uint64_t> seed;
    std::optional<double> sigma;
  };
  auto o = std::make_shared<O>();
  auto* s = root.add_subcommand("synth", "Generate a synthetic cube, parcels and truth map");
  s->add_option("--scenario", o->scenario, "Scenario file (default: built-in 64x64 layout)");
  s->add_option("--seed", o->seed, "Noise seed (overrides the scenario's)");
  s->add_option("--sigma", o->sigma, "Noise standard deviation in dB for every signature");
  s->add_option("--out", o->out, "Output directory")->required();
  stages.push_back({s, [o](RunContext& ctx) {
    SyntheticScenario sc;
    if (!o->scenario.empty()) {
      sc = read_scenario(ctx.input(o->scenario, "scenario"));
      if (o->seed) sc.seed = *o->seed;
    } else {
      if (!o->seed) throw std::invalid_argument("synth needs --seed when no --scenario is given");
      sc = standard_scenario(*o->seed);
    }
    if (o->sigma) {
      if (!(*o->sigma >= 0)) throw std::invalid_argument("--sigma must be >= 0");
      for (auto& sig : sc.signatures) sig.sigma_db = *o->sigma;
    }
    const auto out = generate(sc, ctx.threads);
    const fs::path dir = o->out;
    ctx.output_dir(dir);
    write_cube(out.cube, dir / "cube");
    write_polygons(dir / "polygons.csv", out.polygons);
    write_raster(dir / "truth.manifest", out.truth);
    write_strata(dir / "strata.manifest", out.strata);
    write_signatures(dir / "signatures.csv", sc.signatures);
    write_scenario(dir / "scenario.txt", sc, "signatures.csv");
    write_synth_extras(dir, sc, out);
  }});
}

// ---------------------------------------------------------------- extract

void add_extract(CLI::App& root, std::vector<Stage>& stages) {
  struct O {
    std::string cube, polygons, strata, out, range = "0-21", bands = "VV,VH", mode = "per-pixel";
  };
  auto o = std::make_shared<O>();
  auto* s = root.add_subcommand("extract", "Pull labeled feature rows from a cube");
  s->add_option("--cube", o->cube, "Cube directory")->required();
  s->add_option("--polygons", o->polygons, "Labeled polygon CSV")->required();
  s->add_option("--strata", o->strata, "Stratum raster; overrides the polygons' stratum column");
  s->add_option("--window", o->range, "Dekad range start-end")->capture_default_str();
  s->add_option("--bands", o->bands, "Comma-separated bands (VV, VH, CR)")->capture_default_str();
  s->add_option("--mode", o->mode, "per-pixel or polygon-averaged")->capture_default_str();
  s->add_option("--out", o->out, "Sample CSV")->required();
  stages.push_back({s, [o](RunContext& ctx) {
    const auto window = window_of(o->range, o->bands);
    const auto mode = parse_sample_mode(o->mode);
    ctx.input(o->cube, "cube");
    auto polygons = read_polygons(ctx.input(o->polygons, "polygon file"));
    if (!o->strata.empty()) {
      const auto strata = read_strata(ctx.input(o->strata, "stratum raster"));
      for (auto& p : polygons) p.stratum = assign_stratum(strata, p);
    }
    const auto cube = read_cube(o->cube);
    const auto samples = extract_samples(cube, polygons, window, mode, ctx.threads);
    ctx.output_file(o->out);
    write_samples(o->out, samples);
    if (samples.dropped_polygons)
      std::fprintf(stderr, "warning: %zu polygons gave no valid rows\n", samples.dropped_polygons);
  }});
}

// ---------------------------------------------------------------- tune / train / predict

struct TrainingSelection {
  int level = 0;
  std::string stratum = "all";
  void add(CLI::App* s) {
    s->add_option("--level", level, "1 = broad classes, 2 = arable crops, 0 = labels as given")
        ->check(CLI::IsMember({0, 1, 2}))
        ->capture_default_str();
    s->add_option("--stratum", stratum, "Str1, Str2 or all")
        ->check(CLI::IsMember({"Str1", "Str2", "all"}))
        ->capture_default_str();
  }
};

void add_tune(CLI::App& root, std::vector<Stage>& stages) {
  struct O {
    std::string samples, grid, out;
    TrainingSelection sel;
    std::size_t candidates = 100, folds = 3;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<O>();
  auto* s = root.add_subcommand("tune", "Randomized grid search with polygon-grouped k-fold CV");
  s->add_option("--samples", o->samples, "Sample CSV")->required();
  o->sel.add(s);
  s->add_option("--grid", o->grid, "Grid file with key=v1,v2 lines (default: seven-parameter grid)");
  s->add_option("--candidates", o->candidates, "Grid points to score")->capture_default_str();
  s->add_option("--folds", o->folds, "Cross-validation folds")->capture_default_str();
  s->add_option("--seed", o->seed, "Search seed")->required();
  s->add_option("--out", o->out, "Ranked candidate CSV")->required();
  stages.push_back({s, [o](RunContext& ctx) {
    ParamGrid grid = ParamGrid::standard();
    if (!o->grid.empty()) {
      std::ifstream in(ctx.input(o->grid, "grid file"));
      std::stringstream ss;
      ss << in.rdbuf();
      grid = ParamGrid::parse(ss.str());
    }
    const auto samples =
        training_rows(read_samples(ctx.input(o->samples, "sample file")), o->sel.level, o->sel.stratum);
    const auto cv = random_search_cv(samples, grid, o->candidates, o->folds, o->seed, ctx.threads);
    std::ostringstream os;
    os << "rank,grid_index,mean_accuracy,fold_accuracy,hyperparams\n";
    for (std::size_t i = 0; i < cv.candidates.size(); ++i) {
      const auto& c = cv.candidates[i];
      os << i + 1 << ',' << c.grid_index << ',' << format_double(c.mean_accuracy) << ',';
      for (std::size_t f = 0; f < c.fold_accuracy.size(); ++f)
        os << (f ? " " : "") << format_double(c.fold_accuracy[f]);
      os << ',' << c.hp.describe() << '\n';
    }
    ctx.output_file(o->out);
    write_text(o->out, os.str());
    std::printf("fits=%zu best_mean_accuracy=%s best=%s\n", cv.fits,
                format_double(cv.best().mean_accuracy).c_str(), cv.best().hp.describe().c_str());
  }});
}

void add_train(CLI::App& root, std::vector<Stage>& stages) {
  struct O {
    std::string samples, hp, tuned, out, window;
    TrainingSelection sel;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<O>();
  auto* s = root.add_subcommand("train", "Fit a Random Forest model");
  s->add_option("--samples", o->samples, "Sample CSV")->required();
  o->sel.add(s);
  s->add_option("--hp", o->hp, "Hyperparameters, e.g. n_estimators=300;max_features=log2");
  s->add_option("--tuned", o->tuned, "Take the best row of a tune result");
  s->add_option("--window", o->window, "Sub-window descriptor such as 0-12:VV,VH");
  s->add_option("--seed", o->seed, "Forest seed")->required();
  s->add_option("--out", o->out, "Model file")->required();
  stages.push_back({s, [o](RunContext& ctx) {
    const Hyperparams hp = hp_from(o->hp, o->tuned, ctx);
    hp.validate();
    auto samples =
        training_rows(read_samples(ctx.input(o->samples, "sample file")), o->sel.level, o->sel.stratum);
    if (!o->window.empty()) samples = samples.select(FeatureWindow::parse(o->window));
    auto model = train(samples, hp, o->seed, ctx.threads);
    model.level = o->sel.level;
    if (o->sel.stratum != "all") model.stratum = parse_stratum(o->sel.stratum);
    ctx.output_file(o->out);
    save_model(o->out, model);
    std::vector<ClassCode> labels;
    if (const auto oob = oob_accuracy(model, view_of(samples, labels)))
      std::printf("oob_accuracy=%s\n", format_double(*oob).c_str());
  }});
}

void add_predict(CLI::App& root, std::vector<Stage>& stages) {
  struct O {
    std::string model, samples, out;
  };
  auto o = std::make_shared<O>();
  auto* s = root.add_subcommand("predict", "Apply a model to sample rows");
  s->add_option("--model", o->model, "Model file")->required();
  s->add_option("--samples", o->samples, "Sample CSV")->required();
  s->add_option("--out", o->out, "Prediction CSV")->required();
  stages.push_back({s, [o](RunContext& ctx) {
    const auto model = load_model(ctx.input(o->model, "model"));
    auto samples = read_samples(ctx.input(o->samples, "sample file"));
    const auto w = FeatureWindow::parse(model.feature_descriptor);
    if (!(w == samples.window)) samples = samples.select(w);
    std::vector<ClassCode> labels;
    const auto pred = predict_rows(model, view_of(samples, labels), ctx.threads);
    std::ostringstream os;
    os << "polygon_id,class,predicted\n";
    for (std::size_t i = 0; i < samples.size(); ++i)
      os << samples.rows[i].polygon_id << ',' << samples.rows[i].code << ',' << pred[i] << '\n';
    ctx.output_file(o->out);
    write_text(o->out, os.str());
  }});
}

// ---------------------------------------------------------------- classify / mask

void add_classify(CLI::App& root, std::vector<Stage>& stages) {
  struct O {
    std::string cube, models, strata, out;
  };
  auto o = std::make_shared<O>();
  auto* s = root.add_subcommand("classify", "Two-phase per-stratum classification of a cube");
  s->add_option("--cube", o->cube, "Cube directory")->required();
  s->add_option("--models", o->models, "Directory of *.model files tagged level 1/2 and stratum")
      ->required();
  s->add_option("--strata", o->strata, "Stratum raster")->required();
  s->add_option("--out", o->out, "Map directory")->required();
  stages.push_back({s, [o](RunContext& ctx) {
    ctx.input(o->cube, "cube");
    const fs::path mdir = ctx.input(o->models, "model directory");
    const auto strata = read_strata(ctx.input(o->strata, "stratum raster"));
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(mdir))
      if (e.path().extension() == ".model") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::map<Stratum, ForestModel> l1, l2;
    for (const auto& f : files) {
      auto m = load_model(f);
      if (!m.stratum || (m.level != 1 && m.level != 2))
        throw std::invalid_argument(f.string() + ": model lacks a level 1/2 and stratum tag");
      auto& slot = m.level == 1 ? l1 : l2;
      if (slot.count(*m.stratum))
        throw std::invalid_argument(f.string() + ": second level-" + std::to_string(m.level) +
                                    " model for " + std::string(stratum_name(*m.stratum)));
      slot.emplace(*m.stratum, std::move(m));
    }
    if (l1.empty()) throw MissingInputError("no level-1 models in " + o->models);
    const auto window = FeatureWindow::parse(l1.begin()->second.feature_descriptor);
    const auto cube = read_cube(o->cube);
    ClassifyStats stats;
    auto map = classify_two_phase(cube, l1, l2, strata, window, ctx.threads, &stats);
    for (const auto& f : files) map.provenance.emplace_back("model." + f.filename().string(), file_checksum(f));
    ctx.output_dir(o->out);
    write_map(o->out, map);
    std::printf("level1_calls=%zu level2_calls=%zu nodata_pixels=%zu\n", stats.level1_calls,
                stats.level2_calls, stats.nodata_pixels);
  }});
}

void add_mask(CLI::App& root, std::vector<Stage>& stages) {
  struct O {
    std::string map, dem, slope, builtup, water, aux, out, rule = "conjunction";
    MaskOptions opt;
  };
  auto o = std::make_shared<O>();
  auto* s = root.add_subcommand("mask", "Apply terrain and auxiliary masks to a map");
  s->add_option("--map", o->map, "Map directory")->required();
  s->add_option("--dem", o->dem, "Elevation raster (m); slope is derived when --slope is absent");
  s->add_option("--slope", o->slope, "Slope raster (degrees)");
  s->add_option("--builtup", o->builtup, "Built-up layer (non-zero masks)");
  s->add_option("--water", o->water, "Water layer (non-zero masks)");
  s->add_option("--auxiliary", o->aux, "Other auxiliary layer (non-zero masks)");
  s->add_option("--elevation-limit", o->opt.elevation_limit, "Elevation limit (m)")->capture_default_str();
  s->add_option("--slope-limit", o->opt.slope_limit, "Slope limit (degrees)")->capture_default_str();
  s->add_option("--terrain-rule", o->rule, "conjunction (both limits) or disjunction (either)")
      ->check(CLI::IsMember({"conjunction", "disjunction"}))
      ->capture_default_str();
  s->add_option("--out", o->out, "Masked map directory")->required();
  stages.push_back({s, [o](RunContext& ctx) {
    const auto map = read_map(ctx.input(o->map, "map"));
    std::vector<MaskLayer> layers;
    auto layer = [&](const std::string& path, MaskKind kind, const char* what) {
      if (path.empty()) return;
      layers.push_back({kind, read_raster_f32(ctx.input(path, what))});
    };
    layer(o->dem, MaskKind::Elevation, "elevation raster");
    layer(o->slope, MaskKind::Slope, "slope raster");
    if (!o->dem.empty() && o->slope.empty())
      layers.push_back({MaskKind::Slope, compute_slope(layers.front().values)});
    layer(o->builtup, MaskKind::Builtup, "built-up layer");
    layer(o->water, MaskKind::Water, "water layer");
    layer(o->aux, MaskKind::Auxiliary, "auxiliary layer");
    if (layers.empty()) throw std::invalid_argument("mask needs at least one layer");
    MaskOptions opt = o->opt;
    opt.rule = o->rule == "disjunction" ? TerrainRule::Disjunction : TerrainRule::Conjunction;
    const auto masked = apply_masks(map, layers, opt);
    ctx.output_dir(o->out);
    write_map(o->out, masked);
    for (const auto& [reason, n] : reason_census(masked))
      std::printf("%s=%zu\n", std::string(mask_reason_name(reason)).c_str(), n);
  }});
}

// ---------------------------------------------------------------- assess

void write_stratified(const fs::path& dir, const StratifiedConfusion& conf, double confidence) {
  const auto report = stratified_accuracy(conf, confidence);
  write_count_matrix(dir / "counts.csv", conf.counts);
  write_text(dir / "report.txt", format_report(report));
  write_text(dir / "summary.txt", report_summary(report));
  write_text(dir / "count_report.txt", format_count_report(conf.counts));
  for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("oa=%s", format_double(report.oa).c_str());
  if (report.oa_se) std::printf(" oa_se=%s", format_double(*report.oa_se).c_str());
  std::printf("\n");
}

std::vector<double> weights_for(const CountMatrix& m, const std::string& mode, const std::string& file,
                                const ClassifiedMap* map, RunContext& ctx) {
  if (!file.empty()) {
    const auto w = read_weights(ctx.input(file, "weight file"));
    std::vector<double> out;
    for (auto c : m.classes) out.push_back(w.count(c) ? w.at(c) : 0.0);
    return out;
  }
  if (mode == "proportional") return proportional_weights(m);
  if (!map) throw std::invalid_argument("area weights need a map; use --weights-file");
  std::map<ClassCode, std::size_t> px;
  for (const auto& row : area_census(*map)) px[row.code] = row.pixels;
  return area_weights(m.classes, px);
}

void add_assess(CLI::App& root, std::vector<Stage>& stages) {
  auto* a = root.add_subcommand("assess", "Accuracy assessment");
  a->require_subcommand(1);

  struct P {
    std::string map, points, weights = "area", weights_file, out;
    double confidence = 0.95;
    PointFilter filter;
    bool no_filter = false;
  };
  auto p = std::make_shared<P>();
  auto* sp = a->add_subcommand("points", "Stratified area-weighted accuracy against reference points");
  sp->add_option("--map", p->map, "Map directory")->required();
  sp->add_option("--points", p->points, "Reference point CSV")->required();
  sp->add_option("--weights", p->weights, "area (mapped pixels) or proportional")
      ->check(CLI::IsMember({"area", "proportional"}))
      ->capture_default_str();
  sp->add_option("--weights-file", p->weights_file, "class,weight CSV");
  sp->add_option("--confidence", p->confidence, "Confidence level of the SEs")->capture_default_str();
  sp->add_option("--min-parcel-ha", p->filter.min_parcel_ha, "Smallest observed parcel kept")
      ->capture_default_str();
  sp->add_flag("--no-filter", p->no_filter, "Keep every point");
  sp->add_option("--out", p->out, "Report directory")->required();
  stages.push_back({sp, [p](RunContext& ctx) {
    const auto map = read_map(ctx.input(p->map, "map"));
    auto points = read_points(ctx.input(p->points, "point file"));
    if (!p->no_filter) {
      const auto f = filter_lucas_points(points, p->filter);
      std::printf("points_kept=%zu dropped_in_situ=%zu dropped_direct=%zu dropped_parcel=%zu "
                  "dropped_heterogeneous=%zu dropped_training=%zu\n",
                  f.kept.size(), f.dropped_not_in_situ, f.dropped_not_direct, f.dropped_small_parcel,
                  f.dropped_heterogeneous, f.dropped_in_training);
      points = f.kept;
    }
    const auto pc = confusion_from_points(map, points);
    StratifiedConfusion conf{pc.matrix, weights_for(pc.matrix, p->weights, p->weights_file, &map, ctx)};
    ctx.output_dir(p->out);
    write_stratified(p->out, conf, p->confidence);
    std::printf("points_used=%zu excluded_masked=%zu excluded_outside=%zu\n", pc.used,
                pc.excluded_masked, pc.excluded_outside);
  }});

  struct M {
    std::string counts, weights_file, out;
    double confidence = 0.95;
  };
  auto m = std::make_shared<M>();
  auto* sm = a->add_subcommand("matrix", "Count and stratified metrics of a count matrix CSV");
  sm->add_option("--counts", m->counts, "Count matrix CSV")->required();
  sm->add_option("--weights-file", m->weights_file, "class,weight CSV (default: proportional)");
  sm->add_option("--confidence", m->confidence, "Confidence level of the SEs")->capture_default_str();
  sm->add_option("--out", m->out, "Report directory")->required();
  stages.push_back({sm, [m](RunContext& ctx) {
    const auto counts = read_count_matrix(ctx.input(m->counts, "count matrix"));
    StratifiedConfusion conf{counts, weights_for(counts, "proportional", m->weights_file, nullptr, ctx)};
    ctx.output_dir(m->out);
    write_stratified(m->out, conf, m->confidence);
  }});

  struct G {
    std::string map, parcels, legend, out;
    ParcelOptions opt;
  };
  auto g = std::make_shared<G>();
  auto* sg = a->add_subcommand("parcels", "Parcel-majority comparison with declared crops");
  sg->add_option("--map", g->map, "Map directory")->required();
  sg->add_option("--parcels", g->parcels, "Parcel CSV (id,region,declared,vertices)")->required();
  sg->add_option("--legend", g->legend, "Legend mapping directory (gsaa:<region> schemes)");
  sg->add_option("--min-class-share", g->opt.min_area_share, "Smallest declared class area share")
      ->capture_default_str();
  sg->add_option("--max-masked-share", g->opt.max_masked_share, "Largest masked pixel share")
      ->capture_default_str();
  sg->add_option("--out", g->out, "Report directory")->required();
  stages.push_back({sg, [g](RunContext& ctx) {
    const auto map = read_map(ctx.input(g->map, "map"));
    std::optional<LegendCatalog> cat;
    if (!g->legend.empty()) cat = LegendCatalog::load_dir(ctx.input(g->legend, "legend directory"));
    const auto parcels = read_parcels(ctx.input(g->parcels, "parcel file"), cat ? &*cat : nullptr);
    const auto results = parcel_majority(map, parcels, g->opt);
    ctx.output_dir(g->out);
    std::ostringstream summary;
    summary << "region,class,ua,pa,fscore\n";
    for (const auto& r : results) {
      write_count_matrix(fs::path(g->out) / ("counts_" + r.region + ".csv"), r.matrix);
      for (const auto& c : r.metrics.classes)
        summary << r.region << ',' << c.code << ',' << (c.ua ? format_double(*c.ua) : "") << ','
                << (c.pa ? format_double(*c.pa) : "") << ',' << format_double(c.fscore) << '\n';
      std::printf("region=%s parcels_used=%zu excluded_unmapped=%zu excluded_small_class=%zu "
                  "excluded_no_pixels=%zu excluded_masked=%zu\n",
                  r.region.c_str(), r.parcels_used, r.excluded_unmapped, r.excluded_small_class,
                  r.excluded_no_pixels, r.excluded_masked);
    }
    write_text(fs::path(g->out) / "metrics.csv", summary.str());
  }});

  struct Z {
    std::string map, regions, reported, legend, scheme, out;
  };
  auto z = std::make_shared<Z>();
  auto* sz = a->add_subcommand("zonal", "Mapped against reported areas per region");
  sz->add_option("--map", z->map, "Map directory")->required();
  sz->add_option("--regions", z->regions, "Region id raster (0 = outside)")->required();
  sz->add_option("--reported", z->reported, "Reported area CSV")->required();
  sz->add_option("--legend", z->legend, "Legend mapping directory for source codes");
  sz->add_option("--scheme", z->scheme, "Scheme used with --legend")->capture_default_str();
  sz->add_option("--out", z->out, "Report directory")->required();
  stages.push_back({sz, [z](RunContext& ctx) {
    const auto map = read_map(ctx.input(z->map, "map"));
    const auto regions = read_raster_u16(ctx.input(z->regions, "region raster"));
    std::optional<LegendCatalog> cat;
    const LegendMapping* mapping = nullptr;
    if (!z->legend.empty()) {
      if (z->scheme.empty()) throw std::invalid_argument("--legend needs --scheme");
      cat = LegendCatalog::load_dir(ctx.input(z->legend, "legend directory"));
      mapping = &cat->scheme(z->scheme);
    }
    const auto reported = read_reported_areas(ctx.input(z->reported, "reported area file"), mapping);
    const auto res = zonal_area_compare(map, regions, reported);
    ctx.output_dir(z->out);
    std::ostringstream rows, crops;
    rows << "region,class,reported_kha,mapped_kha,relative_difference_pct\n";
    for (const auto& r : res.rows)
      rows << r.region << ',' << r.code << ',' << format_double(r.reported_kha) << ','
           << format_double(r.mapped_kha) << ','
           << (r.relative_difference ? format_double(*r.relative_difference) : "") << '\n';
    crops << "class,regions,pearson_r\n";
    for (const auto& c : res.crops)
      crops << c.code << ',' << c.regions << ',' << (c.pearson_r ? format_double(*c.pearson_r) : "")
            << '\n';
    write_text(fs::path(z->out) / "areas.csv", rows.str());
    write_text(fs::path(z->out) / "pearson.csv", crops.str());
  }});
}

// ---------------------------------------------------------------- hindcast / benchmark-indices

void add_hindcast(CLI::App& root, std::vector<Stage>& stages) {
  struct O {
    std::string samples, hp, out;
    HindcastOptions opt;
  };
  auto o = std::make_shared<O>();
  auto* s = root.add_subcommand("hindcast", "Accuracy of models trained on growing windows");
  s->add_option("--samples", o->samples, "Sample CSV covering the months asked for")->required();
  s->add_option("--months", o->opt.months, "Months 1-12")->capture_default_str();
  s->add_option("--fraction", o->opt.train_fraction, "Training share of polygons")->capture_default_str();
  s->add_option("--seed", o->opt.seed, "Split and forest seed")->required();
  s->add_flag("--per-stratum", o->opt.per_stratum, "Score each stratum separately");
  s->add_option("--hp", o->hp, "Hyperparameters");
  s->add_option("--out", o->out, "Long-format CSV")->required();
  stages.push_back({s, [o](RunContext& ctx) {
    auto opt = o->opt;
    opt.threads = ctx.threads;
    if (!o->hp.empty()) opt.hp = Hyperparams::parse(o->hp);
    const auto res = hindcast_series(read_samples(ctx.input(o->samples, "sample file")), opt);
    for (const auto& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    ctx.output_file(o->out);
    write_text(o->out, format_hindcast(res.rows));
  }});
}

void add_benchmark_indices(CLI::App& root, std::vector<Stage>& stages) {
  struct O {
    std::string samples, hp, out;
    int start = 0, end = 21;
    double fraction = 0.8;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<O>();
  auto* s = root.add_subcommand("benchmark-indices", "Overall accuracy per band combination");
  s->add_option("--samples", o->samples, "Sample CSV holding VV, VH and CR")->required();
  s->add_option("--start", o->start, "First dekad")->capture_default_str();
  s->add_option("--end", o->end, "Last dekad")->capture_default_str();
  s->add_option("--fraction", o->fraction, "Training share of polygons")->capture_default_str();
  s->add_option("--seed", o->seed, "Split and forest seed")->required();
  s->add_option("--hp", o->hp, "Hyperparameters");
  s->add_option("--out", o->out, "CSV of band set and OA")->required();
  stages.push_back({s, [o](RunContext& ctx) {
    const Hyperparams hp = o->hp.empty() ? Hyperparams{} : Hyperparams::parse(o->hp);
    const auto scores =
        benchmark_indices(read_samples(ctx.input(o->samples, "sample file")), standard_band_sets(),
                          o->start, o->end, o->fraction, o->seed, hp, ctx.threads);
    ctx.output_file(o->out);
    write_text(o->out, format_index_scores(scores));
  }});
}

// ---------------------------------------------------------------- report / legend

void add_report(CLI::App& root, std::vector<Stage>& stages) {
  struct O {
    std::string map, out;
  };
  auto o = std::make_shared<O>();
  auto* s = root.add_subcommand("report", "Class areas and mask census of a map");
  s->add_option("--map", o->map, "Map directory")->required();
  s->add_option("--out", o->out, "Report directory")->required();
  stages.push_back({s, [o](RunContext& ctx) {
    const auto map = read_map(ctx.input(o->map, "map"));
    std::ostringstream areas, reasons;
    areas << "class,label,pixels,hectares,low_confidence\n";
    for (const auto& r : area_census(map))
      areas << r.code << ',' << StudyLegend::standard().label(r.code) << ',' << r.pixels << ','
            << format_double(r.hectares) << ',' << (r.low_confidence ? "true" : "false") << '\n';
    reasons << "reason,pixels\n";
    for (const auto& [reason, n] : reason_census(map)) reasons << mask_reason_name(reason) << ',' << n << '\n';
    ctx.output_dir(o->out);
    write_text(fs::path(o->out) / "areas.csv", areas.str());
    write_text(fs::path(o->out) / "reasons.csv", reasons.str());
  }});
}

void add_legend(CLI::App& root, std::vector<Stage>& stages) {
  struct O {
    std::string dir, out;
  };
  auto o = std::make_shared<O>();
  auto* s = root.add_subcommand("legend", "Coverage of the legend mapping files");
  s->add_option("--legend", o->dir, "Directory of mapping CSVs")->required();
  s->add_option("--out", o->out, "Coverage report file");
  stages.push_back({s, [o](RunContext& ctx) {
    const auto cat = LegendCatalog::load_dir(ctx.input(o->dir, "legend directory"));
    const auto text = coverage_report(cat);
    if (o->out.empty()) {
      std::fputs(text.c_str(), stdout);
      return;
    }
    ctx.output_file(o->out);
    write_text(o->out, text);
  }});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cropmap: SAR crop-type mapping stages"};
  app.set_version_flag("--version", CROPMAP_VERSION);
  app.set_config("--config", "", "INI/TOML file with option values (flags win)");
  app.require_subcommand(1);
  app.fallthrough();
  RunContext ctx;
  app.add_option("--threads", ctx.threads, "Worker threads; results do not depend on it")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();

  std::vector<Stage> stages;
  add_composite(app, stages);
  add_synth(app, stages);
  add_extract(app, stages);
  add_tune(app, stages);
  add_train(app, stages);
  add_predict(app, stages);
  add_classify(app, stages);
  add_mask(app, stages);
  add_assess(app, stages);
  add_hindcast(app, stages);
  add_benchmark_indices(app, stages);
  add_report(app, stages);
  add_legend(app, stages);
  // Run manifests carry metadata keys next to the option values.
  app.allow_config_extras(CLI::config_extras_mode::ignore);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    fail_line("missing_input", kMissingInput, e.what());
    return kMissingInput;
  } catch (const CLI::RequiredError& e) {
    fail_line("missing_argument", kUsage, e.what());
    return kUsage;
  } catch (const CLI::ExtrasError& e) {
    fail_line("unknown_flag", kUsage, e.what());
    return kUsage;
  } catch (const CLI::ValidationError& e) {
    fail_line("rejected_argument", kRejected, e.what());
    return kRejected;
  } catch (const CLI::ParseError& e) {
    fail_line("usage", kUsage, e.what());
    return kUsage;
  }

  try {
    for (const auto& st : stages) {
      if (!st.app->parsed()) continue;
      st.run(ctx);
      if (!ctx.manifest.empty()) write_text(ctx.manifest, cli::run_manifest_text(app, ctx));
      return kOk;
    }
    fail_line("usage", kUsage, "no stage selected");
    return kUsage;
  } catch (const MissingInputError& e) {
    fail_line("missing_input", kMissingInput, e.what());
    return kMissingInput;
  } catch (const FormatError& e) {
    fail_line("format", kFormat, e.what());
    return kFormat;
  } catch (const std::invalid_argument& e) {
    fail_line("rejected_argument", kRejected, e.what());
    return kRejected;
  } catch (const std::exception& e) {
    fail_line("internal", kOther, e.what());
    return kOther;
  }
}
