// Command-line driver for the pipeline stages.
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uvkit/cli/pipeline.hpp"
#include "uvkit/error.hpp"
#include "uvkit/geomesh.hpp"
#include "uvkit/lossmath.hpp"
#include "uvkit/synthcity/synthcity.hpp"

namespace fs = std::filesystem;
using namespace uvkit;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kBackendError = 2;

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  int jobs = 1;
  std::string format = "table";
};

cli::PipelineConfig make_config(const Globals& g) {
  cli::PipelineConfig cfg = g.config_path.empty() ? cli::PipelineConfig{} : cli::load_config(g.config_path);
  for (const auto& s : g.overrides) cfg.set(s);
  cfg.validate();
  return cfg;
}

std::shared_ptr<const synthcity::Scene> scene_at(const fs::path& dir) {
  return std::make_shared<const synthcity::Scene>(synthcity::load_scene(dir));
}

void emit(const std::string& text, const std::string& out_path) {
  std::cout << text;
  if (!out_path.empty()) geomesh::write_file(out_path, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uvkit: urban village mapping pipeline"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  Globals g;
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "Print the default configuration and exit");
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--set", g.overrides, "Override a config key (key=value)");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "table"}));

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene");
  std::string synth_out, synth_spec;
  std::optional<std::uint64_t> synth_seed;
  std::optional<double> synth_noise;
  std::optional<int> synth_uv, synth_conf;
  synth->add_option("--out", synth_out, "Scene directory")->required();
  synth->add_option("--seed", synth_seed, "Scene seed (default: synth_seed)");
  synth->add_option("--spec", synth_spec, "JSON file of scene parameters");
  synth->add_option("--noise", synth_noise, "Boundary noise fraction");
  synth->add_option("--n-uv", synth_uv, "Planted UV count");
  synth->add_option("--confusers", synth_conf, "Confuser count");

  // tile
  auto* tile = app.add_subcommand("tile", "Cut the scene image into inference tiles");
  std::string scene_dir, work_dir;
  tile->add_option("--scene", scene_dir)->required();
  tile->add_option("--work", work_dir, "Work directory (default: the scene)");

  // infer
  auto* infer = app.add_subcommand("infer", "Segment every tile through the gateway");
  std::string backend;
  infer->add_option("--scene", scene_dir)->required();
  infer->add_option("--work", work_dir);
  infer->add_option("--backend", backend, "oracle, env, exec:<cmd> or http://...");

  // refine
  auto* refine = app.add_subcommand("refine", "Prompt-based refinement of the prediction");
  refine->add_option("--scene", scene_dir)->required();
  refine->add_option("--work", work_dir);
  refine->add_option("--refiner", backend, "oracle, none, env, exec:<cmd> or http://...");

  // assess
  auto* assess_cmd = app.add_subcommand("assess", "Accuracy against ground truth on sampled hex cells");
  std::vector<std::string> scenes, preds;
  std::string truth_override, out_path;
  assess_cmd->add_option("--scene", scenes, "Scene directory, one per city")->required();
  assess_cmd->add_option("--pred", preds, "Predicted regions (.grid or .geojson), one per scene");
  assess_cmd->add_option("--truth", truth_override, "Truth regions replacing the scene's (single scene)");
  assess_cmd->add_option("--out", out_path, "Also write the report here");

  // compare
  auto* compare = app.add_subcommand("compare", "Rank several products on a common area");
  std::vector<std::string> products;
  compare->add_option("--scene", scene_dir)->required();
  compare->add_option("--product", products, "name=path")->required();
  compare->add_option("--out", out_path);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Per-city statistics");
  std::vector<std::string> uv_paths;
  std::string analyze_out;
  analyze->add_option("--scene", scenes)->required();
  analyze->add_option("--uv", uv_paths, "UV regions per scene (default: the scene truth)");
  analyze->add_option("--out", analyze_out, "Output directory")->required();

  // sample-rank
  auto* rank = app.add_subcommand("sample-rank", "Similarity ranking of grid cells");
  std::vector<std::int64_t> anchors;
  bool annotate = false;
  rank->add_option("--scene", scene_dir)->required();
  rank->add_option("--work", work_dir);
  rank->add_option("--anchors", anchors, "Anchor cell ids (default: the cell with most planted UV)");
  rank->add_option("--backend", backend, "Embedding provider");
  rank->add_flag("--annotate", annotate, "Label candidates from the scene truth and write training tiles");

  // loss-check
  auto* loss = app.add_subcommand("loss-check", "Finite-difference check of the loss gradients");
  std::size_t pairs = 100;
  loss->add_option("--pairs", pairs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (print_defaults) {
      std::cout << cli::defaults_text();
      return kOk;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return kInputError;
    }
    cli::PipelineConfig cfg = make_config(g);
    const fs::path work = work_dir.empty() ? fs::path(scene_dir) : fs::path(work_dir);

    if (*synth) {
      synthcity::SceneSpec spec;
      if (!synth_spec.empty()) {
        const auto j = nlohmann::json::parse(geomesh::read_file(synth_spec), nullptr, false);
        if (j.is_discarded()) throw ValidationError(synth_spec + ": not valid JSON");
        spec = synthcity::SceneSpec::from_json(j);
      } else {
        spec.seed = cfg.synth_seed;
      }
      if (synth_seed) spec.seed = *synth_seed;
      if (synth_noise) spec.boundary_noise = *synth_noise;
      if (synth_uv) spec.n_uv = *synth_uv;
      if (synth_conf) spec.confuser_count = *synth_conf;
      const auto scene = synthcity::generate(spec);
      synthcity::write_scene(scene, synth_out);
      cfg.synth_seed = spec.seed;
      cli::write_run_manifest(synth_out, "synth", cfg, {}, {fs::path(synth_out) / synthcity::kManifest},
                              {{"spec", spec.to_json()}});
      std::cout << "scene " << scene.city.city_id << ": " << scene.city.uv_regions.size() << " UVs, "
                << scene.confusers.size() << " confusers, " << scene.buildings.size() << " buildings -> " << synth_out
                << "\n";
      return kOk;
    }

    if (*tile) {
      const auto tiles = cli::run_tile(scene_dir, work, cfg);
      cli::write_run_manifest(work, "tile", cfg, {fs::path(scene_dir) / synthcity::kImage}, {work / cli::kTilesIndex});
      std::cout << tiles.size() << " tiles -> " << (work / cli::kTilesDir).string() << "\n";
      return kOk;
    }

    if (*infer) {
      if (!backend.empty()) cfg.segmentation_backend = backend;
      cfg.validate();
      gateway::Gateway gw(cfg.gateway());
      std::shared_ptr<const synthcity::Scene> scene;
      if (cli::resolve_backend(cfg.segmentation_backend) == "oracle") scene = scene_at(scene_dir);
      cli::attach_segmenter(gw, cfg, scene);
      const auto r = cli::run_infer(scene_dir, work, gw, cfg, g.jobs);
      nlohmann::json routing = gw.routing_counts();
      cli::write_run_manifest(work, "infer", cfg, {fs::path(scene_dir) / synthcity::kImage},
                              {work / cli::kPrediction, work / cli::kPredictionGeo},
                              {{"routing", routing}, {"retries", gw.retry_log().size()}});
      std::cout << r.tiles << " tiles segmented, " << r.prediction.count() << " foreground pixels\n";
      return kOk;
    }

    if (*refine) {
      if (!backend.empty()) cfg.refiner_backend = backend;
      cfg.validate();
      gateway::Gateway gw(cfg.gateway());
      std::shared_ptr<const synthcity::Scene> scene;
      if (cli::resolve_backend(cfg.refiner_backend) == "oracle") scene = scene_at(scene_dir);
      const bool enabled = cli::attach_refiner(gw, cfg, scene, work);
      const auto r = cli::run_refine(work, enabled ? &gw : nullptr, cfg, g.jobs);
      cli::write_run_manifest(work, "refine", cfg, {work / cli::kPrediction},
                              {work / cli::kRefined, work / cli::kRefinedGeo, work / cli::kRefineLog},
                              {{"regions", r.regions}, {"fallbacks", r.fallbacks}, {"backend_calls", r.backend_calls}});
      std::cout << r.regions << " regions, " << r.fallbacks << " fallbacks, " << r.backend_calls
                << " backend calls\n";
      if (!r.within_budget) {
        std::cerr << "error: " << r.fallbacks << " of " << r.regions << " regions fell back, over the budget of "
                  << cfg.fallback_budget << "\n";
        return kBackendError;
      }
      return kOk;
    }

    if (*assess_cmd) {
      if (preds.empty()) {
        for (const auto& s : scenes) preds.push_back((fs::path(s) / cli::kRefinedGeo).string());
      }
      if (preds.size() != scenes.size()) throw ValidationError("assess: give one --pred per --scene");
      if (!truth_override.empty() && scenes.size() != 1) throw ValidationError("assess: --truth needs a single --scene");
      std::vector<cli::CityInput> cities;
      std::vector<fs::path> inputs;
      for (std::size_t i = 0; i < scenes.size(); ++i) {
        auto c = cli::load_city(scenes[i], preds[i]);
        if (!truth_override.empty()) c.truth = cli::read_regions(truth_override);
        cities.push_back(std::move(c));
        inputs.push_back(preds[i]);
        inputs.push_back(fs::path(scenes[i]) / synthcity::kTruth);
      }
      const auto report = cli::run_assess(cities, cfg);
      emit(g.format == "json" ? report.to_json().dump(2) + "\n" : report.to_table(), out_path);
      cli::write_run_manifest(fs::path(scenes.front()), "assess", cfg, inputs,
                              out_path.empty() ? std::vector<fs::path>{} : std::vector<fs::path>{out_path},
                              {{"f1", report.overall.f1}, {"iou", report.overall.iou}});
      return kOk;
    }

    if (*compare) {
      std::vector<cli::NamedPath> named;
      std::vector<fs::path> inputs;
      for (const auto& p : products) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0) throw ValidationError("product '" + p + "' is not name=path");
        named.push_back({p.substr(0, eq), p.substr(eq + 1)});
        inputs.push_back(named.back().path);
      }
      const auto city = cli::load_city(scene_dir, named.front().path);
      const auto rows = cli::run_compare(named, city, cfg);
      emit(g.format == "json" ? assess::comparison_json(rows).dump(2) + "\n" : assess::comparison_table(rows), out_path);
      cli::write_run_manifest(scene_dir, "compare", cfg, inputs,
                              out_path.empty() ? std::vector<fs::path>{} : std::vector<fs::path>{out_path});
      return kOk;
    }

    if (*analyze) {
      if (!uv_paths.empty() && uv_paths.size() != scenes.size())
        throw ValidationError("analyze: give one --uv per --scene");
      std::vector<analytics::CityRecord> records;
      std::vector<std::vector<analytics::Building>> buildings;
      std::vector<fs::path> inputs;
      for (std::size_t i = 0; i < scenes.size(); ++i) {
        auto s = synthcity::load_scene(scenes[i]);
        if (!uv_paths.empty()) {
          s.city.uv_regions = cli::read_regions(uv_paths[i]);
          inputs.push_back(uv_paths[i]);
        }
        inputs.push_back(fs::path(scenes[i]) / synthcity::kManifest);
        records.push_back(s.city);
        buildings.push_back(std::move(s.buildings));
      }
      const auto r = cli::run_analyze(records, buildings);
      fs::create_directories(analyze_out);
      const fs::path csv = fs::path(analyze_out) / cli::kCitiesCsv, summary = fs::path(analyze_out) / cli::kSummary;
      geomesh::write_file(csv, r.csv);
      geomesh::write_file(summary, r.summary.dump(2) + "\n");
      std::cout << (g.format == "json" ? r.summary.dump(2) + "\n" : r.csv);
      cli::write_run_manifest(analyze_out, "analyze", cfg, inputs, {csv, summary});
      return kOk;
    }

    if (*rank) {
      if (!backend.empty()) cfg.embedding_backend = backend;
      cfg.validate();
      const auto scene = scene_at(scene_dir);
      gateway::Gateway gw(cfg.gateway());
      const std::string provider = cli::attach_embedder(gw, cfg, scene);
      if (anchors.empty()) anchors.push_back(cli::pick_anchor(*scene, sampler::make_grid(scene->frame.bounds(), cfg.grid_size_m)));
      auto r = cli::run_sample_rank(scene->frame.bounds(), anchors, gw, provider, cfg, g.jobs);
      fs::create_directories(work);
      geomesh::write_file(work / cli::kRanking, r.ranking.dump(2) + "\n");
      geomesh::write_geojson(work / cli::kCandidates,
                             sampler::candidates_geojson(r.bands, r.grid.cells, scene->spec.crs_epsg));
      std::vector<fs::path> outputs{work / cli::kRanking, work / cli::kCandidates};
      if (annotate) {
        // Candidates become positive when planted UVs cover part of them.
        auto cells = r.grid.cells;
        std::vector<sampler::GridCell> labeled;
        auto label = [&](std::int64_t id) {
          auto c = cells[static_cast<std::size_t>(id)];
          const double cover = geomesh::intersection_area(geomesh::box_polygon(c.clipped), scene->city.uv_regions);
          c.status = cover > 0 ? sampler::CellStatus::AnnotatedPositive : sampler::CellStatus::AnnotatedNegative;
          labeled.push_back(c);
        };
        for (auto id : anchors) labeled.push_back(cells[static_cast<std::size_t>(id)]);
        for (const auto& s : r.bands.confusion) label(s.cell_id);
        for (const auto& s : r.bands.diversity) label(s.cell_id);
        const auto tiles = sampler::crop_training_tiles(labeled, scene->city.uv_regions, scene->spec.resolution_m,
                                                        cfg.train_tile_px);
        const auto index = sampler::write_tile_manifest(tiles, work / "training");
        geomesh::write_file(work / "training" / "index.json", index.dump(2) + "\n");
        outputs.push_back(work / "training" / "index.json");
      }
      cli::write_run_manifest(work, "sample-rank", cfg, {fs::path(scene_dir) / synthcity::kManifest}, outputs);
      std::cout << (g.format == "json" ? r.ranking.dump(2) + "\n"
                                       : std::to_string(r.scores.size()) + " cells ranked, " +
                                             std::to_string(r.bands.confusion.size()) + " confusion, " +
                                             std::to_string(r.bands.diversity.size()) + " diversity\n");
      return kOk;
    }

    if (*loss) {
      const auto rep = lossmath::gradient_check(pairs, 32, 1e-5, 1e-4, 1, cfg.loss());
      const nlohmann::json j = {{"pairs", rep.pairs},
                                {"max_relative_error",
                                 {{"bce", rep.max_relative_error_bce},
                                  {"dice", rep.max_relative_error_dice},
                                  {"combined", rep.max_relative_error_combined}}},
                                {"seconds", rep.seconds},
                                {"passed", rep.passed}};
      if (g.format == "json") {
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "gradient suite " << (rep.passed ? "pass" : "FAIL") << ": " << rep.pairs
                  << " pairs, max relative error bce " << rep.max_relative_error_bce << ", dice "
                  << rep.max_relative_error_dice << ", combined " << rep.max_relative_error_combined << "\n";
      }
      return rep.passed ? kOk : kInputError;
    }
  } catch (const TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBackendError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << "\n";
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kOk;
}
