// facetrace: command-line front end for the planar-map and ray-tracing pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facetrace/config.hpp"
#include "facetrace/correction.hpp"
#include "facetrace/io.hpp"
#include "facetrace/log.hpp"
#include "facetrace/margins.hpp"
#include "facetrace/planar_map.hpp"
#include "facetrace/raytrace.hpp"
#include "facetrace/synth.hpp"

namespace fs = std::filesystem;
using namespace facetrace;

namespace {

// Files written by the current command; removed again unless the command finishes.
class Outputs {
 public:
  ~Outputs() {
    if (committed_) return;
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
  void write(const fs::path& path, const std::string& content) {
    if (path.empty()) return;
    written_.push_back(path);
    io::write_text_atomic(path, content);
  }
  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> written_;
  bool committed_ = false;
};

struct Overrides {
  std::optional<std::string> config_file;
  std::map<std::string, std::string> values;  // config key -> text
};

void add_config_flags(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config_file, "key = value configuration file")->check(CLI::ExistingFile);
  const std::pair<const char*, const char*> keys[] = {
      {"origin", "map origin \"lat,lon,height\""},
      {"k", "neighbors per point"},
      {"min_slice_size", "minimum points per slice"},
      {"center_sigma", "cluster-center flatness threshold in standard deviations"},
      {"consistency_threshold", "robust z-score cutoff for consistent sets"},
      {"merge_angle_deg", "slice merge angle, degrees"},
      {"band_lo", "height band lower bound, m"},
      {"band_hi", "height band upper bound, m"},
      {"street_width", "street width, m"},
      {"elevation_mask_deg", "elevation mask, degrees"},
      {"tolerance_l", "reflection-height tolerance l, m"},
      {"policy", "delay policy for several reflectors: min, max or all"},
      {"seed", "random seed"},
      {"workers", "worker threads"},
  };
  for (const auto& [key, help] : keys) {
    std::string flag = std::string("--") + key;
    for (auto& c : flag) {
      if (c == '_') c = '-';
    }
    app.add_option_function<std::string>(flag, [&o, k = std::string(key)](const std::string& v) { o.values[k] = v; },
                                         help);
  }
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig cfg;
  if (o.config_file) cfg = load_config(*o.config_file);
  for (const auto& [k, v] : o.values) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

frames::FrameOrigin origin_of(const RunConfig& cfg) { return frames::FrameOrigin(cfg.origin); }

std::vector<std::int64_t> slice_labels(std::size_t points, std::span<const segmentation::Slice> slices) {
  std::vector<std::int64_t> labels(points, -1);
  for (std::size_t s = 0; s < slices.size(); ++s) {
    for (PointIndex p : slices[s].members) labels[p] = static_cast<std::int64_t>(s);
  }
  return labels;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar facet maps from point clouds and GNSS signal ray tracing"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides overrides;
  add_config_flags(app, overrides);
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "suppress warnings");
  app.add_flag("-v,--verbose", verbose, "progress messages");

  // segment
  auto* seg = app.add_subcommand("segment", "point cloud -> planar map");
  fs::path seg_cloud, seg_map, seg_spacing, seg_labels;
  bool seg_band = false;
  seg->add_option("--cloud", seg_cloud, "input cloud (.ply or xyz text)")->required()->check(CLI::ExistingFile);
  seg->add_option("--map", seg_map, "output planar map (JSON)")->required();
  seg->add_option("--spacing", seg_spacing, "output spacing statistics (JSON)");
  seg->add_option("--labels", seg_labels, "output per-point slice labels (CSV)");
  seg->add_flag("--height-filter", seg_band, "keep only facets overlapping the height band");

  // trace
  auto* trace = app.add_subcommand("trace", "map + satellites + route -> ray path table");
  fs::path tr_map, tr_sats, tr_route, tr_out;
  bool tr_band = false;
  trace->add_option("--map", tr_map, "planar map (JSON)")->required()->check(CLI::ExistingFile);
  trace->add_option("--sats", tr_sats, "satellites: epoch,prn,x,y,z earth-fixed")->required()->check(CLI::ExistingFile);
  trace->add_option("--route", tr_route, "receiver: epoch,x,y,z local frame")->required()->check(CLI::ExistingFile);
  trace->add_option("--out", tr_out, "output ray path table (CSV)")->required();
  trace->add_flag("--height-filter", tr_band, "trace only facets overlapping the height band");

  // simulate-heights
  auto* heights = app.add_subcommand("simulate-heights", "constellation sweep -> reflection height histogram");
  fs::path sh_out, sh_raw;
  double sh_step = 30.0, sh_duration = 0.0;
  heights->add_option("--out", sh_out, "output histogram (CSV)")->required();
  heights->add_option("--heights", sh_raw, "output raw heights (CSV)");
  heights->add_option("--step", sh_step, "epoch step, s")->check(CLI::PositiveNumber);
  heights->add_option("--duration", sh_duration, "sweep length, s (0 = one orbital period)")->check(CLI::NonNegativeNumber);

  // margins
  auto* marg = app.add_subcommand("margins", "translation and tilt margins over the constellation sweep");
  fs::path mg_out, mg_thist, mg_tilt_hist;
  marg->add_option("--out", mg_out, "output per-sample margins (CSV)")->required();
  marg->add_option("--translation-hist", mg_thist, "output translation histogram (CSV)");
  marg->add_option("--tilt-hist", mg_tilt_hist, "output tilt histogram (CSV)");

  // correct
  auto* corr = app.add_subcommand("correct", "observations + ray paths -> corrected fixes");
  fs::path co_obs, co_paths, co_sats, co_route, co_fixes, co_errors, co_raw_fixes;
  bool co_mixed = false;
  corr->add_option("--obs", co_obs, "observations: epoch,prn,pseudorange_m")->required()->check(CLI::ExistingFile);
  corr->add_option("--paths", co_paths, "ray path table from trace")->required()->check(CLI::ExistingFile);
  corr->add_option("--sats", co_sats, "satellites: epoch,prn,x,y,z earth-fixed")->required()->check(CLI::ExistingFile);
  corr->add_option("--fixes", co_fixes, "output corrected fixes (CSV)")->required();
  corr->add_option("--uncorrected-fixes", co_raw_fixes, "output fixes from raw observations (CSV)");
  corr->add_option("--route", co_route, "truth route for error series")->check(CLI::ExistingFile);
  corr->add_option("--errors", co_errors, "output error series (CSV, needs --route)");
  corr->add_flag("--correct-mixed", co_mixed, "also correct LOS+NLOS signals by their shortest reflection");

  // synth
  auto* syn = app.add_subcommand("synth", "synthetic scene with ground truth");
  std::string sy_kind = "canyon";
  fs::path sy_cloud, sy_truth, sy_map, sy_sats, sy_route, sy_obs;
  int sy_buildings = 6, sy_epochs = 600;
  double sy_noise = 0.05, sy_density = 50.0, sy_range_noise = 0.0;
  syn->add_option("--kind", sy_kind, "canyon, six-plane or nlos")
      ->check(CLI::IsMember({"canyon", "six-plane", "nlos"}));
  syn->add_option("--cloud", sy_cloud, "output cloud (.ply or xyz)");
  syn->add_option("--truth", sy_truth, "output scene truth (JSON)");
  syn->add_option("--map", sy_map, "output truth walls as a planar map (JSON)");
  syn->add_option("--buildings", sy_buildings, "canyon facades")->check(CLI::NonNegativeNumber);
  syn->add_option("--noise", sy_noise, "off-plane point noise sigma, m")->check(CLI::NonNegativeNumber);
  syn->add_option("--density", sy_density, "points per square meter")->check(CLI::PositiveNumber);
  syn->add_option("--sats", sy_sats, "nlos: output satellites (earth-fixed CSV)");
  syn->add_option("--route", sy_route, "nlos: output route (CSV)");
  syn->add_option("--obs", sy_obs, "nlos: output observations (CSV)");
  syn->add_option("--epochs", sy_epochs, "nlos: epochs")->check(CLI::PositiveNumber);
  syn->add_option("--range-noise", sy_range_noise, "nlos: pseudorange noise sigma, m")->check(CLI::NonNegativeNumber);

  // stats
  auto* stats = app.add_subcommand("stats", "cloud + slice labels -> spacing statistics");
  fs::path st_cloud, st_labels, st_out;
  stats->add_option("--cloud", st_cloud, "input cloud")->required()->check(CLI::ExistingFile);
  stats->add_option("--labels", st_labels, "per-point slice labels (CSV)")->required()->check(CLI::ExistingFile);
  stats->add_option("--out", st_out, "output statistics (JSON)");

  CLI11_PARSE(app, argc, argv);
  set_log_level(quiet ? LogLevel::kQuiet : verbose ? LogLevel::kInfo : LogLevel::kWarning);

  Outputs outputs;
  try {
    const RunConfig cfg = resolve_config(overrides);

    if (*seg) {
      const Cloud cloud = io::read_cloud(seg_cloud);
      log_info("segment: " + std::to_string(cloud.size()) + " points");
      auto result = planar::map_from_cloud(cloud, cfg.build_params(), origin_of(cfg));
      PlanarMap map = seg_band ? planar::filter_by_height(result.map, cfg.band_lo, cfg.band_hi)
                               : std::move(result.map);
      map.provenance["points"] = std::to_string(cloud.size());
      map.provenance["k"] = std::to_string(cfg.k);
      map.provenance["min_slice_size"] = std::to_string(cfg.min_slice_size);
      map.provenance["merge_angle_deg"] = io::format_double(cfg.merge_angle_deg);
      outputs.write(seg_map, io::format_map(map));
      if (!seg_labels.empty()) outputs.write(seg_labels, io::format_labels(slice_labels(cloud.size(), result.slices)));
      if (!seg_spacing.empty()) {
        std::vector<IndexList> clusters;
        for (const auto& s : result.slices) clusters.push_back(s.members);
        outputs.write(seg_spacing, io::format_spacing(planar::spacing_stats(cloud, clusters)));
      }
      std::cout << "slices " << result.slices.size() << "\nfacets " << map.facets.size() << '\n';
    } else if (*trace) {
      PlanarMap map = io::read_map(tr_map);
      if (tr_band) map = planar::filter_by_height(map, cfg.band_lo, cfg.band_hi);
      const auto sats = io::sats_to_enu(io::read_sats(tr_sats), map.origin);
      const auto route = io::read_route(tr_route);
      const auto result = raytrace::trace_run(sats, route, map, cfg.policy, cfg.workers);
      outputs.write(tr_out, io::format_paths(result.rows));
      std::size_t counts[4] = {0, 0, 0, 0};
      for (const auto& r : result.rows) ++counts[static_cast<int>(r.classification)];
      std::cout << "rows " << result.rows.size() << "\nskipped " << result.skipped << "\nLOS " << counts[0]
                << "\nBlocked " << counts[1] << "\nNLOS " << counts[2] << "\nLOS+NLOS " << counts[3] << '\n';
    } else if (*heights) {
      margins::ConstellationParams cp;
      cp.receiver = cfg.origin;
      cp.elevation_mask_deg = cfg.elevation_mask_deg;
      cp.step_s = sh_step;
      cp.duration_s = sh_duration;
      const auto sats = margins::synth_constellation(cp);
      const auto sweep = margins::height_histogram(sats, {cfg.street_width, Vec3::Zero()}, cfg.band_lo, cfg.band_hi);
      outputs.write(sh_out, io::format_histogram(sweep.histogram));
      if (!sh_raw.empty()) {
        std::string text = "height\n";
        for (double h : sweep.heights) text += io::format_double(h) + '\n';
        outputs.write(sh_raw, text);
      }
      std::cout << "samples " << sweep.heights.size() << "\nband_fraction " << io::format_double(sweep.band_fraction)
                << '\n';
    } else if (*marg) {
      margins::ConstellationParams cp;
      cp.receiver = cfg.origin;
      cp.elevation_mask_deg = cfg.elevation_mask_deg;
      const auto sats = margins::synth_constellation(cp);
      const auto d = margins::margin_distributions(sats, {cfg.street_width, Vec3::Zero()}, cfg.tolerance_l, cfg.workers);
      outputs.write(mg_out, io::format_margins(d.samples));
      outputs.write(mg_thist, io::format_histogram(d.translation));
      outputs.write(mg_tilt_hist, io::format_histogram(d.tilt));
      std::cout << "samples " << d.samples.size() << "\ntranslation_fraction "
                << io::format_double(d.translation_fraction) << "\ntilt_fraction " << io::format_double(d.tilt_fraction)
                << "\ntranslation_closed_form_mean_abs_diff "
                << io::format_double(d.translation_agreement.mean_abs_difference)
                << "\ntilt_closed_form_mean_abs_diff_rad " << io::format_double(d.tilt_agreement.mean_abs_difference)
                << '\n';
    } else if (*corr) {
      if (!co_errors.empty() && co_route.empty()) throw std::invalid_argument("--errors needs --route");
      const auto obs = io::read_obs(co_obs);
      const auto paths = io::read_paths(co_paths);
      const auto sats = io::sats_to_enu(io::read_sats(co_sats), origin_of(cfg));
      correction::Policy policy;
      policy.correct_mixed = co_mixed;
      const auto corrected = correction::correct_observations(obs, paths, policy);
      const auto fixes = correction::solve_epochs(corrected.observations, sats, {}, cfg.workers);
      outputs.write(co_fixes, io::format_fixes(fixes));
      std::vector<PositionFix> raw;
      if (!co_raw_fixes.empty() || !co_route.empty()) raw = correction::solve_epochs(obs, sats, {}, cfg.workers);
      outputs.write(co_raw_fixes, io::format_fixes(raw));
      std::cout << "fixes " << fixes.size() << "\ncorrected " << corrected.corrected << "\ndropped_blocked "
                << corrected.dropped_blocked << "\nunmatched " << corrected.unmatched << '\n';
      if (!co_route.empty()) {
        const auto route = io::read_route(co_route);
        const auto errs = correction::error_series(fixes, route);
        const auto raw_errs = correction::error_series(raw, route);
        outputs.write(co_errors, io::format_errors(errs));
        std::cout << "rms3d_uncorrected " << io::format_double(raw_errs.summary.rms3d) << "\nrms3d_corrected "
                  << io::format_double(errs.summary.rms3d) << '\n';
      }
    } else if (*syn) {
      const auto origin = origin_of(cfg);
      if (sy_kind == "nlos") {
        synth::NlosScenarioParams np;
        np.epochs = sy_epochs;
        np.street_width = cfg.street_width;
        np.noise_sigma = sy_range_noise;
        np.seed = cfg.seed;
        const auto sc = synth::nlos_scenario(np);
        PlanarMap map = sc.truth.to_map();
        map.origin = origin;
        outputs.write(sy_map, io::format_map(map));
        outputs.write(sy_truth, io::format_truth(sc.truth));
        outputs.write(sy_sats, io::format_sats(io::sats_to_ecef(sc.sats, origin)));
        outputs.write(sy_route, io::format_route(sc.route));
        outputs.write(sy_obs, io::format_obs(sc.observations));
        std::cout << "epochs " << sc.route.size() << "\ninjections " << sc.truth.injections.size() << '\n';
      } else {
        synth::Scene scene;
        if (sy_kind == "six-plane") {
          scene = synth::six_plane_scene(sy_noise, sy_density, cfg.seed);
        } else {
          synth::CanyonParams cp;
          cp.buildings = sy_buildings;
          cp.street_width = cfg.street_width;
          cp.noise_sigma = sy_noise;
          cp.density = sy_density;
          cp.seed = cfg.seed;
          scene = synth::generate_canyon(cp);
        }
        PlanarMap map = scene.truth.to_map();
        map.origin = origin;
        if (!sy_cloud.empty()) {
          outputs.write(sy_cloud, io::format_cloud(scene.cloud, sy_cloud.extension() == ".ply" ? io::CloudFormat::kPly
                                                                                              : io::CloudFormat::kXyz));
        }
        outputs.write(sy_truth, io::format_truth(scene.truth));
        outputs.write(sy_map, io::format_map(map));
        std::cout << "points " << scene.cloud.size() << "\nplanes " << scene.truth.planes.size() << '\n';
      }
    } else if (*stats) {
      const Cloud cloud = io::read_cloud(st_cloud);
      const auto labels = io::parse_labels(io::read_text(st_labels), st_labels.string());
      if (labels.size() != cloud.size()) {
        throw std::invalid_argument("label count " + std::to_string(labels.size()) + " does not match " +
                                    std::to_string(cloud.size()) + " points");
      }
      const auto s = planar::spacing_stats(cloud, io::clusters_from_labels(labels));
      const std::string text = io::format_spacing(s);
      outputs.write(st_out, text);
      std::cout << text;
    }
    outputs.commit();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "facetrace: error: " << e.what() << '\n';
    return 1;
  }
}
