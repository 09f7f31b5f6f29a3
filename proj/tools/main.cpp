// bevlift: height-based camera-to-BEV lifting pipeline and its analyses.
//
// Subcommands: lift | synth | ingest | disturb | analyze | bench | validate.
// stdout carries one JSON summary per run; stderr carries diagnostics.
// Exit codes: 0 ok, 1 internal, 2 config error, 3 shape mismatch, 4 I/O.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bevlift/bevlift.hpp"

namespace fs = std::filesystem;
using namespace bevlift;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitShape = 3;
constexpr int kExitIo = 4;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> bins;
  std::optional<double> alpha;
  std::optional<std::string> strategy;
  std::optional<double> sigma_deg;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_out = true) {
  cmd->add_option("--config", o.config_path, "experiment config file")->required();
  if (needs_out) cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed, "root seed (overrides config)");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--bins", o.bins, "height bin count override");
  cmd->add_option("--alpha", o.alpha, "height DID exponent override");
  cmd->add_option("--strategy", o.strategy, "height bin strategy override")
      ->check(CLI::IsMember({"ud", "sid", "lid", "did"}));
  cmd->add_option("--sigma-deg", o.sigma_deg, "disturbance sigma override (degrees)");
}

ExperimentConfig load_config(const CommonOpts& o) {
  ExperimentConfig cfg = [&] {
    try {
      return load_experiment_config(o.config_path);
    } catch (const InvalidSpec&) {
      throw;
    } catch (const Error& e) {
      // any failure while reading the config or its calibration is a config error
      throw InvalidSpec(e.what());
    }
  }();
  if (o.seed) cfg.seed = *o.seed;
  if (o.sigma_deg) cfg.disturbance_sigma_deg = *o.sigma_deg;
  if (o.bins || o.alpha || o.strategy) {
    const BinSpec& base = cfg.height_bins;
    cfg.height_bins = BinSpec::make(
        o.strategy ? bin_strategy_from_string(*o.strategy) : base.strategy,
        base.v_min, base.v_max, o.bins.value_or(base.n_bins),
        o.alpha.value_or(base.alpha), base.sid_offset);
  }
  if (cfg.rig_height_mismatch)
    std::cerr << "warning: calibration ground_height disagrees with the "
                 "extrinsics-implied camera height by more than 1 cm\n";
  return cfg;
}

fs::path ensure_out_dir(const CommonOpts& o) {
  const fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    throw IoError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << text;
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

void print_summary(const json& j) { std::cout << j.dump(2) << "\n"; }

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---- synth / ingest ---------------------------------------------------------

json write_maps_and_distributions(const ExperimentConfig& cfg, const PixelMaps& maps,
                                  const fs::path& dir) {
  save_pixel_maps(dir, maps, {{"rig_hash", rig_hash(cfg.rig)}});
  const DistributionMap height_dist =
      distribution_from_maps(maps, Quantity::Height, cfg.height_bins);
  const DistributionMap depth_dist =
      distribution_from_maps(maps, Quantity::Depth, cfg.depth_bins);
  save_distribution(dir / "height_dist.bvt", height_dist,
                    {{"bins", bin_spec_to_json(cfg.height_bins)}});
  save_distribution(dir / "depth_dist.bvt", depth_dist,
                    {{"bins", bin_spec_to_json(cfg.depth_bins)}});
  json j;
  j["valid_pixels"] = maps.valid_count();
  j["dropped_behind"] = maps.dropped_behind;
  j["dropped_outside"] = maps.dropped_outside;
  return j;
}

int cmd_synth(const CommonOpts& opts) {
  const ExperimentConfig cfg = load_config(opts);
  const fs::path dir = ensure_out_dir(opts);

  const Scene scene = cfg.scene.build(derive_seed(cfg.seed, "scene"));
  const Vec3 center = cfg.rig.camera_center_ego();
  const auto points = sample_scene_points(scene, {center.x(), center.y(), 0.0},
                                          derive_seed(cfg.seed, "scene"));
  save_points(dir / "points.txt", points);
  const PixelMaps maps = render_points(points, cfg.rig, cfg.maps.width,
                                       cfg.maps.height, cfg.maps.stride, opts.threads);
  json summary = write_maps_and_distributions(cfg, maps, dir);

  const FeatureMap features =
      random_feature_map(cfg.maps.feature_channels, cfg.maps.height, cfg.maps.width,
                         derive_seed(cfg.seed, "features"));
  save_feature_map(dir / "features.bvt", features);

  summary["command"] = "synth";
  summary["boxes"] = scene.boxes.size();
  summary["points"] = points.size();
  summary["out"] = dir.string();
  print_summary(summary);
  return kExitOk;
}

int cmd_ingest(const CommonOpts& opts, const std::string& points_path) {
  const ExperimentConfig cfg = load_config(opts);
  const fs::path dir = ensure_out_dir(opts);
  const auto points = load_points(points_path);
  const PixelMaps maps = render_points(points, cfg.rig, cfg.maps.width,
                                       cfg.maps.height, cfg.maps.stride, opts.threads);
  json summary = write_maps_and_distributions(cfg, maps, dir);
  summary["command"] = "ingest";
  summary["points"] = points.size();
  summary["out"] = dir.string();
  print_summary(summary);
  return kExitOk;
}

// ---- lift -------------------------------------------------------------------

struct LiftInputs {
  std::string features_path;
  std::string height_dist_path;
  std::string depth_dist_path;
  std::string branch = "height";
  bool fuse = false;
  std::string weights_path;
  std::string dump_wedge_prefix;
};

json lift_one_branch(const ExperimentConfig& cfg, const FeatureMap& features,
                     const fs::path& dist_path, LiftSource source,
                     const fs::path& out_file, int threads,
                     const std::string& dump_prefix, BevGrid* grid_out) {
  bool warned = false;
  const DistributionMap dist = load_distribution(dist_path, &warned);
  if (warned)
    std::cerr << "warning: '" << dist_path.string()
              << "' rows deviated from 1 by more than 1e-4; renormalized\n";

  LiftConfig lift_cfg;
  lift_cfg.rig = cfg.rig;
  lift_cfg.bins = source == LiftSource::Height ? cfg.height_bins : cfg.depth_bins;
  lift_cfg.feature_stride = cfg.maps.stride;
  const WedgeVolume volume = lift_map(lift_cfg, features, dist, source, threads);
  if (!dump_prefix.empty()) {
    const std::string tag = source == LiftSource::Height ? "height" : "depth";
    save_wedge(dump_prefix + "." + tag, volume,
               {{"bins", bin_spec_to_json(lift_cfg.bins)}, {"rig_hash", rig_hash(cfg.rig)}});
  }
  BevGrid grid = voxel_pool(volume, cfg.grid, threads);
  json j;
  j["pseudo_points"] = volume.size();
  j["dropped_rays"] = volume.dropped_rays;
  j["dropped_bins"] = volume.dropped_bins;
  j["dropped_points"] = grid.dropped_points;
  j["bev"] = out_file.string();
  save_bev_grid(out_file, grid,
                {{"bins", bin_spec_to_json(lift_cfg.bins)},
                 {"rig_hash", rig_hash(cfg.rig)},
                 {"source", source == LiftSource::Height ? "height" : "depth"}});
  if (grid_out) *grid_out = std::move(grid);
  return j;
}

int cmd_lift(const CommonOpts& opts, const LiftInputs& in) {
  const ExperimentConfig cfg = load_config(opts);
  const fs::path dir = ensure_out_dir(opts);
  const bool want_height = in.branch == "height" || in.branch == "both";
  const bool want_depth = in.branch == "depth" || in.branch == "both";
  if (in.fuse && in.branch != "both")
    throw InvalidSpec("lift: --fuse requires --branch both");
  if (in.fuse && in.weights_path.empty())
    throw InvalidSpec("lift: --fuse requires --weights");
  if (want_height && in.height_dist_path.empty())
    throw InvalidSpec("lift: height branch needs --height-dist");
  if (want_depth && in.depth_dist_path.empty())
    throw InvalidSpec("lift: depth branch needs --depth-dist");

  const FeatureMap features = load_feature_map(in.features_path);
  json summary;
  summary["command"] = "lift";
  summary["branch"] = in.branch;

  BevGrid height_grid, depth_grid;
  if (want_height)
    summary["height"] = lift_one_branch(cfg, features, in.height_dist_path,
                                        LiftSource::Height, dir / "bev_height.bvt",
                                        opts.threads, in.dump_wedge_prefix,
                                        in.fuse ? &height_grid : nullptr);
  if (want_depth)
    summary["depth"] = lift_one_branch(cfg, features, in.depth_dist_path,
                                       LiftSource::Depth, dir / "bev_depth.bvt",
                                       opts.threads, in.dump_wedge_prefix,
                                       in.fuse ? &depth_grid : nullptr);
  if (in.fuse) {
    const DeformAttnWeights weights = load_weights(in.weights_path);
    const BevGrid fused =
        bev_fuse(height_grid, depth_grid, weights, cfg.residual, opts.threads);
    save_bev_grid(dir / "bev_fused.bvt", fused,
                  {{"residual",
                    cfg.residual == ResidualSource::HeightBev ? "height" : "depth"},
                   {"rig_hash", rig_hash(cfg.rig)}});
    summary["fused"] = json{{"bev", (dir / "bev_fused.bvt").string()},
                            {"residual", cfg.residual == ResidualSource::HeightBev
                                             ? "height"
                                             : "depth"}};
  }
  print_summary(summary);
  return kExitOk;
}

// ---- disturb ----------------------------------------------------------------

int cmd_disturb(const CommonOpts& opts) {
  const ExperimentConfig cfg = load_config(opts);
  const fs::path dir = ensure_out_dir(opts);
  const Disturbance d = sample_disturbance(cfg.disturbance_sigma_deg,
                                           derive_seed(cfg.seed, "disturb"));
  const CameraRig noisy = apply_disturbance(cfg.rig, d);
  save_json(dir / "disturbed_calibration.json", rig_to_json(noisy));

  const Mat3 h = warp_homography(cfg.rig, d);
  json jh;
  std::vector<double> values;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) values.push_back(h(r, c));
  jh["matrix_row_major"] = values;
  jh["roll_deg"] = d.roll_deg;
  jh["pitch_deg"] = d.pitch_deg;
  jh["sigma_deg"] = d.sigma_deg;
  save_json(dir / "homography.json", jh);

  json summary;
  summary["command"] = "disturb";
  summary["roll_deg"] = d.roll_deg;
  summary["pitch_deg"] = d.pitch_deg;
  summary["calibration"] = (dir / "disturbed_calibration.json").string();
  summary["homography"] = (dir / "homography.json").string();
  print_summary(summary);
  return kExitOk;
}

// ---- analyze ----------------------------------------------------------------

void write_histogram(const fs::path& path, const BinSpec& bins,
                     const std::vector<std::uint64_t>& counts) {
  std::string text = "# bin_center\tcount\n";
  for (int i = 0; i < bins.n_bins; ++i)
    text += format_g17(bin_center(bins, i)) + "\t" + std::to_string(counts[i]) + "\n";
  write_text(path, text);
}

int analyze_histogram(const ExperimentConfig& cfg, const CommonOpts& opts,
                      const fs::path& dir) {
  const Scene scene = cfg.scene.build(derive_seed(cfg.seed, "scene"));
  const PixelMaps maps = render_maps(scene, cfg.rig, cfg.maps.width, cfg.maps.height,
                                     cfg.maps.stride, derive_seed(cfg.seed, "scene"),
                                     opts.threads);
  const auto h_hist = histogram(maps, Quantity::Height, cfg.histogram_height_bins);
  const auto d_hist = histogram(maps, Quantity::Depth, cfg.histogram_depth_bins);
  write_histogram(dir / "hist_height.tsv", cfg.histogram_height_bins, h_hist);
  write_histogram(dir / "hist_depth.tsv", cfg.histogram_depth_bins, d_hist);

  double h_min = 0.0, h_max = 0.0, d_min = 0.0, d_max = 0.0;
  bool first = true;
  for (std::size_t i = 0; i < maps.valid.size(); ++i) {
    if (!maps.valid[i]) continue;
    if (first) {
      h_min = h_max = maps.heightv[i];
      d_min = d_max = maps.depth[i];
      first = false;
      continue;
    }
    h_min = std::min(h_min, maps.heightv[i]);
    h_max = std::max(h_max, maps.heightv[i]);
    d_min = std::min(d_min, maps.depth[i]);
    d_max = std::max(d_max, maps.depth[i]);
  }
  json summary;
  summary["command"] = "analyze";
  summary["mode"] = "histogram";
  summary["valid_pixels"] = maps.valid_count();
  summary["height_support"] = {h_min, h_max};
  summary["depth_support"] = {d_min, d_max};
  summary["artifacts"] = {(dir / "hist_height.tsv").string(),
                          (dir / "hist_depth.tsv").string()};
  print_summary(summary);
  return kExitOk;
}

int analyze_scatter(const ExperimentConfig& cfg, const fs::path& dir, int seeds) {
  const Scene scene = cfg.scene.build(derive_seed(cfg.seed, "scene"));

  std::string table = "# object_id\tcondition\tv\tdepth\theight\n";
  json per_seed = json::array();
  double mean_w_height = 0.0, mean_w_depth = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const Disturbance d = sample_disturbance(cfg.disturbance_sigma_deg,
                                             derive_seed(cfg.seed, "disturb") + s);
    const auto [set, report] = scatter_analysis(scene, cfg.rig, d);
    if (s == 0) {
      for (const ScatterRecord& r : set.records)
        table += std::to_string(r.object_id) + "\t" +
                 (r.condition == Condition::Clean ? "clean" : "noisy") + "\t" +
                 format_g17(r.v) + "\t" + format_g17(r.depth) + "\t" +
                 format_g17(r.height) + "\n";
    }
    per_seed.push_back({{"seed", s},
                        {"roll_deg", d.roll_deg},
                        {"pitch_deg", d.pitch_deg},
                        {"visible_objects", report.visible_objects},
                        {"mean_shift_v", report.mean_shift_v},
                        {"mean_shift_depth", report.mean_shift_depth},
                        {"mean_shift_height", report.mean_shift_height},
                        {"wasserstein_depth", report.wasserstein_depth},
                        {"wasserstein_height", report.wasserstein_height}});
    mean_w_height += report.wasserstein_height;
    mean_w_depth += report.wasserstein_depth;
  }
  mean_w_height /= seeds;
  mean_w_depth /= seeds;
  write_text(dir / "scatter.tsv", table);

  json overlap;
  overlap["sigma_deg"] = cfg.disturbance_sigma_deg;
  overlap["seeds"] = seeds;
  overlap["mean_wasserstein_height"] = mean_w_height;
  overlap["mean_wasserstein_depth"] = mean_w_depth;
  overlap["per_seed"] = per_seed;
  save_json(dir / "overlap.json", overlap);

  json summary;
  summary["command"] = "analyze";
  summary["mode"] = "scatter";
  summary["mean_wasserstein_height"] = mean_w_height;
  summary["mean_wasserstein_depth"] = mean_w_depth;
  summary["height_more_stable"] = mean_w_height < mean_w_depth;
  summary["artifacts"] = {(dir / "scatter.tsv").string(), (dir / "overlap.json").string()};
  print_summary(summary);
  return kExitOk;
}

int analyze_error_law(const ExperimentConfig& cfg, const fs::path& dir) {
  // same ground point (r_true) observed from cameras at several heights
  const double r_true = 10.0;
  const double delta_h = 0.1;
  const Intrinsics k = cfg.rig.intrinsics;
  std::string table = "# camera_height\tr_true\tdelta_h\trange_error\tclosed_form\n";
  json rows = json::array();
  for (double camera_h : {1.5, 3.0, 5.0, 10.0}) {
    Extrinsics level;
    Mat3 r;
    r << 0, -1, 0, 0, 0, -1, 1, 0, 0;  // level camera looking along ego +x
    level.rotation = r;
    level.translation = -(r * Vec3{0.0, 0.0, camera_h});
    const CameraRig rig = make_rig(k, level, camera_h, cfg.rig.image_size);
    // pixel whose ray meets the ground at range r_true
    const Pixel p{k.cx, k.cy + k.fy * camera_h / r_true};
    const ErrorLawResult res = error_law(rig, p, 0.0, delta_h);
    table += format_g17(camera_h) + "\t" + format_g17(r_true) + "\t" +
             format_g17(delta_h) + "\t" + format_g17(res.range_error) + "\t" +
             format_g17(res.closed_form) + "\n";
    rows.push_back({{"camera_height", camera_h},
                    {"range_error", res.range_error},
                    {"closed_form", res.closed_form}});
  }
  write_text(dir / "error_law.tsv", table);
  json summary;
  summary["command"] = "analyze";
  summary["mode"] = "error-law";
  summary["rows"] = rows;
  summary["artifacts"] = {(dir / "error_law.tsv").string()};
  print_summary(summary);
  return kExitOk;
}

struct BenchOutputs {
  json artifact;  // deterministic accounting only
  json timing;    // stdout only
};

BenchOutputs run_bench(const ExperimentConfig& cfg, int threads, int reps) {
  const FeatureMap features =
      random_feature_map(cfg.maps.feature_channels, cfg.maps.height, cfg.maps.width,
                         derive_seed(cfg.seed, "features"));
  const DistributionMap height_dist =
      DistributionMap::uniform(cfg.height_bins.n_bins, cfg.maps.height, cfg.maps.width);
  const DistributionMap depth_dist =
      DistributionMap::uniform(cfg.depth_bins.n_bins, cfg.maps.height, cfg.maps.width);

  LiftConfig lift_cfg;
  lift_cfg.rig = cfg.rig;
  lift_cfg.feature_stride = cfg.maps.stride;
  lift_cfg.bins = cfg.height_bins;
  const WedgeVolume height_vol =
      lift_map(lift_cfg, features, height_dist, LiftSource::Height, threads);
  lift_cfg.bins = cfg.depth_bins;
  const WedgeVolume depth_vol =
      lift_map(lift_cfg, features, depth_dist, LiftSource::Depth, threads);

  const PoolBenchReport height_report = pool_bench(height_vol, cfg.grid, reps, threads);
  const PoolBenchReport depth_report = pool_bench(depth_vol, cfg.grid, reps, threads);
  const WorkRatio ratio = WorkRatio::of(height_vol, depth_vol);

  const auto account = [](const PoolBenchReport& r, std::uint64_t dropped_rays) {
    return json{{"points_in", r.points_in},
                {"points_dropped", r.points_dropped},
                {"cells_touched", r.cells_touched},
                {"empty", r.empty},
                {"dropped_rays", dropped_rays}};
  };
  BenchOutputs out;
  out.artifact = {{"height", account(height_report, height_vol.dropped_rays)},
                  {"depth", account(depth_report, depth_vol.dropped_rays)},
                  {"height_bins", cfg.height_bins.n_bins},
                  {"depth_bins", cfg.depth_bins.n_bins},
                  {"point_ratio",
                   {{"height_points", ratio.points_a},
                    {"depth_points", ratio.points_b},
                    {"ratio", ratio.ratio}}}};
  const auto timing = [](const PoolBenchReport& r) {
    return json{{"wall_ns_per_rep", r.wall_ns_per_rep},
                {"points_per_second", r.points_per_second},
                {"repetitions", r.repetitions}};
  };
  out.timing = {{"height", timing(height_report)}, {"depth", timing(depth_report)}};
  return out;
}

int cmd_bench(const ExperimentConfig& cfg, const CommonOpts& opts, int reps,
              const char* mode_tag) {
  const fs::path dir = ensure_out_dir(opts);
  const BenchOutputs bench = run_bench(cfg, opts.threads, reps);
  save_json(dir / "bench.json", bench.artifact);
  json summary;
  summary["command"] = mode_tag;
  summary["accounting"] = bench.artifact;
  summary["timing"] = bench.timing;  // never written to artifacts
  summary["artifacts"] = {(dir / "bench.json").string()};
  print_summary(summary);
  return kExitOk;
}

// ---- validate ---------------------------------------------------------------

int cmd_validate(const CommonOpts& opts) {
  const ExperimentConfig cfg = load_config(opts);
  json summary;
  summary["command"] = "validate";
  summary["config"] = opts.config_path;
  summary["calibration"] = cfg.calibration_path.string();
  summary["rig_hash"] = rig_hash(cfg.rig);
  summary["ground_height"] = cfg.rig.ground_height;
  summary["extrinsic_implied_height"] = cfg.rig.extrinsic_implied_height();
  summary["ground_height_consistent"] = !cfg.rig_height_mismatch;
  summary["height_bins"] = bin_spec_to_json(cfg.height_bins);
  summary["depth_bins"] = bin_spec_to_json(cfg.depth_bins);
  summary["grid_cells"] = {cfg.grid.cells_x(), cfg.grid.cells_y()};
  summary["seed"] = cfg.seed;
  print_summary(summary);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"height-based camera-to-BEV lifting pipeline"};
  app.require_subcommand(1);

  CommonOpts synth_opts;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene and its maps");
  add_common(synth, synth_opts);

  CommonOpts ingest_opts;
  std::string ingest_points_path;
  CLI::App* ingest = app.add_subcommand("ingest", "project a point cloud into pixel maps");
  add_common(ingest, ingest_opts);
  ingest->add_option("--points", ingest_points_path, "point file (x,y,z per line)")
      ->required();

  CommonOpts lift_opts;
  LiftInputs lift_in;
  CLI::App* lift = app.add_subcommand("lift", "lift features to BEV grids");
  add_common(lift, lift_opts);
  lift->add_option("--features", lift_in.features_path, "feature map container")
      ->required();
  lift->add_option("--height-dist", lift_in.height_dist_path,
                   "height distribution container");
  lift->add_option("--depth-dist", lift_in.depth_dist_path,
                   "depth distribution container");
  lift->add_option("--branch", lift_in.branch, "height|depth|both")
      ->check(CLI::IsMember({"height", "depth", "both"}));
  lift->add_flag("--fuse", lift_in.fuse, "run BEV fusion (needs --branch both)");
  lift->add_option("--weights", lift_in.weights_path, "fusion weights manifest");
  lift->add_option("--dump-wedge", lift_in.dump_wedge_prefix,
                   "also dump wedge volumes under this path prefix");

  CommonOpts disturb_opts;
  CLI::App* disturb = app.add_subcommand("disturb", "sample and apply extrinsic noise");
  add_common(disturb, disturb_opts);

  CommonOpts analyze_opts;
  std::string analyze_mode;
  int analyze_seeds = 1;
  CLI::App* analyze = app.add_subcommand("analyze", "reproduce the pipeline analyses");
  add_common(analyze, analyze_opts);
  analyze->add_option("--mode", analyze_mode, "histogram|scatter|error-law|bench")
      ->required()
      ->check(CLI::IsMember({"histogram", "scatter", "error-law", "bench"}));
  analyze->add_option("--seeds", analyze_seeds, "disturbance seeds for scatter mode")
      ->check(CLI::PositiveNumber);

  CommonOpts bench_opts;
  int bench_reps = 5;
  CLI::App* bench = app.add_subcommand("bench", "voxel-pooling throughput benchmark");
  add_common(bench, bench_opts);
  bench->add_option("--reps", bench_reps, "pooling repetitions")
      ->check(CLI::PositiveNumber);

  CommonOpts validate_opts;
  CLI::App* validate = app.add_subcommand("validate", "check a config and calibration");
  add_common(validate, validate_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_opts);
    if (ingest->parsed()) return cmd_ingest(ingest_opts, ingest_points_path);
    if (lift->parsed()) return cmd_lift(lift_opts, lift_in);
    if (disturb->parsed()) return cmd_disturb(disturb_opts);
    if (analyze->parsed()) {
      const ExperimentConfig cfg = load_config(analyze_opts);
      const fs::path dir = ensure_out_dir(analyze_opts);
      if (analyze_mode == "histogram") return analyze_histogram(cfg, analyze_opts, dir);
      if (analyze_mode == "scatter") return analyze_scatter(cfg, dir, analyze_seeds);
      if (analyze_mode == "error-law") return analyze_error_law(cfg, dir);
      return cmd_bench(cfg, analyze_opts, 1, "analyze");
    }
    if (bench->parsed()) {
      const ExperimentConfig cfg = load_config(bench_opts);
      return cmd_bench(cfg, bench_opts, bench_reps, "bench");
    }
    if (validate->parsed()) return cmd_validate(validate_opts);
  } catch (const ShapeMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitShape;
  } catch (const SpecMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitShape;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const EmptyCloud& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const InvalidSpec& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
