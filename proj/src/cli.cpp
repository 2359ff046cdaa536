#include "brushgym/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "brushgym/bc.hpp"
#include "brushgym/config.hpp"
#include "brushgym/corpus.hpp"
#include "brushgym/image_io.hpp"
#include "brushgym/objective.hpp"
#include "brushgym/rl.hpp"
#include "brushgym/sim2real.hpp"
#include "brushgym/strokes.hpp"

namespace brushgym {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// One run owns its output directory for its lifetime.
class OutputDirLock {
 public:
  explicit OutputDirLock(const std::string& dir) : lock_path_(fs::path(dir) / ".lock") {
    fs::create_directories(dir);
    std::error_code ec;
    if (fs::exists(lock_path_, ec)) {
      throw UserError("output directory " + dir + " is locked by another run (" +
                      lock_path_.string() + " exists)");
    }
    std::ofstream lock(lock_path_);
    lock << "pid " << ::getpid() << "\n";
    if (!lock) throw UserError("cannot create lock file in " + dir);
  }
  ~OutputDirLock() {
    std::error_code ec;
    fs::remove(lock_path_, ec);
  }
  OutputDirLock(const OutputDirLock&) = delete;
  OutputDirLock& operator=(const OutputDirLock&) = delete;

 private:
  fs::path lock_path_;
};

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string output_dir;
  uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_file, "configuration file (TOML-style)");
  cmd->add_option("--set", args.overrides, "override a config key: section.key=value")
      ->take_all();
  cmd->add_option("--output", args.output_dir, "output directory");
  cmd->add_option("--seed", args.seed, "random seed (falls back to BRUSHGYM_SEED)")
      ->each([&args](const std::string&) { args.seed_given = true; });
}

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg;
  if (const char* env = std::getenv("BRUSHGYM_SEED")) {
    char* end = nullptr;
    cfg.seed = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
      throw UserError("BRUSHGYM_SEED must be an unsigned integer");
    }
  }
  if (!args.config_file.empty()) merge_config_file(cfg, args.config_file);
  for (const std::string& o : args.overrides) apply_config_override(cfg, o);
  if (args.seed_given) cfg.seed = args.seed;
  if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
  validate_config(cfg);
  return cfg;
}

void write_resolved_config(const RunConfig& cfg) {
  std::ofstream out(fs::path(cfg.output_dir) / "resolved.toml");
  out << emit_config(cfg);
}

EnvConfig env_from_config(const RunConfig& cfg) {
  EnvConfig env = EnvConfig::with_window(cfg.canvas_h, cfg.canvas_w, cfg.channels, cfg.window);
  env.brush.l_max = cfg.effective_l_max();
  env.brush.w_max = cfg.effective_w_max();
  env.brush.opacity = cfg.opacity;
  return env;
}

PolicyConfig policy_from_config(const RunConfig& cfg) {
  PolicyConfig pc = cfg.preset == "full"
                        ? PolicyConfig{}
                        : PolicyConfig::desk(cfg.window, cfg.window, cfg.channels);
  pc.obs_h = pc.obs_w = cfg.window;
  pc.image_channels = cfg.channels;
  pc.log_std_init = cfg.log_std_init;
  return pc;
}

TrainRlConfig train_config(const RunConfig& cfg) {
  TrainRlConfig tc;
  tc.env = env_from_config(cfg);
  tc.policy = policy_from_config(cfg);
  tc.update.gamma = cfg.gamma;
  tc.update.clip = cfg.clip;
  tc.update.entropy_coef = cfg.entropy_coef;
  tc.update.value_coef = cfg.value_coef;
  tc.update.mean_reg = cfg.mean_reg;
  tc.update.max_grad_norm = cfg.max_grad_norm;
  tc.curriculum.enabled = cfg.curriculum;
  tc.curriculum.horizon_init = cfg.horizon_init;
  tc.curriculum.horizon_max = cfg.horizon_max;
  tc.curriculum.horizon_grow_every = cfg.horizon_grow_every;
  tc.curriculum.r_thresh_final = cfg.r_thresh_final;
  tc.curriculum.r_thresh_ramp_episodes = cfg.r_thresh_ramp;
  tc.episodes = cfg.episodes;
  tc.batch_episodes = cfg.batch_episodes;
  tc.update_epochs = cfg.update_epochs;
  tc.learning_rate = cfg.learning_rate;
  tc.lr_decay_floor = 0.05;
  tc.strokes_per_canvas = cfg.strokes_per_canvas;
  tc.workers = cfg.workers;
  tc.seed = cfg.seed;
  tc.log_every = cfg.log_every;
  tc.checkpoint_every = cfg.checkpoint_every;
  tc.output_dir = cfg.output_dir;
  tc.log_wall_time = cfg.log_wall_time;
  return tc;
}

std::vector<Canvas> rl_corpus(const RunConfig& cfg) {
  if (cfg.corpus_dir.empty()) {
    return procedural_corpus(cfg.corpus_count, cfg.canvas_h, cfg.canvas_w, cfg.corpus_seed,
                             cfg.channels);
  }
  if (!fs::is_directory(cfg.corpus_dir)) {
    throw UserError("corpus directory not found: " + cfg.corpus_dir);
  }
  std::vector<Canvas> corpus = load_corpus_dir(cfg.corpus_dir);
  if (corpus.empty()) throw UserError("corpus directory has no images: " + cfg.corpus_dir);
  for (const Canvas& c : corpus) {
    if (c.height() != cfg.canvas_h || c.width() != cfg.canvas_w || c.channels() != cfg.channels) {
      throw UserError("corpus image dimensions do not match [env] canvas settings");
    }
  }
  return corpus;
}

// ---------------------------------------------------------------------------

int cmd_train_rl(const CommonArgs& common, const std::string& init_from, int curriculum_flag) {
  RunConfig cfg = resolve_config(common);
  auto corpus = rl_corpus(cfg);

  OutputDirLock lock(cfg.output_dir);
  TrainRlConfig tc = train_config(cfg);
  if (curriculum_flag >= 0) tc.curriculum.enabled = curriculum_flag != 0;
  tc.init_checkpoint = init_from;

  // echo the curriculum arm into the resolved config
  RunConfig resolved = cfg;
  resolved.curriculum = tc.curriculum.enabled;
  write_resolved_config(resolved);

  std::ofstream log(fs::path(cfg.output_dir) / "train_log.csv");
  if (!log) throw std::runtime_error("cannot open training log for writing");

  TrainRlResult result = train_rl(tc, corpus, &log);
  std::printf("trained %ld episodes (%zu references, curriculum %s)\n", result.episodes_run,
              corpus.size(), tc.curriculum.enabled ? "on" : "off");
  std::printf("checkpoint: %s\n",
              (fs::path(cfg.output_dir) / "checkpoint_final.bin").string().c_str());
  if (result.skipped_updates > 0) {
    std::printf("warning: %d updates skipped on non-finite gradients\n", result.skipped_updates);
  }
  return 0;
}

int cmd_train_bc(const CommonArgs& common, const std::string& svg_dir_flag) {
  RunConfig cfg = resolve_config(common);
  std::string svg_dir = svg_dir_flag.empty() ? cfg.svg_dir : svg_dir_flag;
  if (!fs::is_directory(svg_dir)) throw UserError("svg directory not found: " + svg_dir);

  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(svg_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".svg") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UserError("no .svg glyphs in " + svg_dir);

  OutputDirLock lock(cfg.output_dir);
  write_resolved_config(cfg);

  EnvConfig env = env_from_config(cfg);
  DemoOptions demo_opts;
  demo_opts.w_demo = cfg.w_demo;
  demo_opts.ink = cfg.ink;
  demo_opts.margin_frac = cfg.margin_frac;

  std::vector<DemoPair> dataset;
  std::vector<DemoBuild> builds(files.size());
  int warnings = 0;
  for (size_t i = 0; i < files.size(); ++i) {
    try {
      std::ifstream in(files[i]);
      std::string doc((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      auto extent = parse_svg_extent(doc);
      SvgOptions so;
      so.flatten_tolerance = 0.5 * extent[0] / env.canvas_w;
      auto strokes = parse_svg_strokes(doc, so);
      if (strokes.empty()) throw SvgParseError("no strokes", 0);
      auto scaled = scale_strokes_to_canvas(strokes, extent[0], extent[1], env,
                                            demo_opts.margin_frac);
      builds[i] = strokes_to_pairs(scaled, env, demo_opts);
      for (auto& p : builds[i].pairs) {
        p.glyph_id = static_cast<int>(i);
        dataset.push_back(p);
      }
    } catch (const SvgParseError& e) {
      std::fprintf(stderr, "warning: skipping %s: %s\n", files[i].c_str(), e.what());
      ++warnings;
    }
  }
  if (dataset.empty()) throw UserError("no usable glyphs in " + svg_dir);

  std::string dataset_path = (fs::path(cfg.output_dir) / "demos.bin").string();
  write_demo_dataset(dataset, env, demo_opts, dataset_path);
  // train from the serialized dataset so the on-disk format is load-bearing
  EnvConfig env_loaded;
  std::vector<DemoPair> loaded = read_demo_dataset(dataset_path, &env_loaded);

  PolicyNet net(policy_from_config(cfg));
  Rng init_rng(cfg.seed);
  net.init_weights(init_rng);

  BcConfig bc;
  bc.epochs = cfg.bc_epochs;
  bc.batch_size = cfg.bc_batch;
  bc.learning_rate = cfg.bc_learning_rate;
  bc.val_fraction = cfg.bc_val_fraction;
  bc.seed = cfg.seed;
  BcResult result = train_bc(net, loaded, bc);

  {
    std::ofstream log(fs::path(cfg.output_dir) / "bc_log.csv");
    log << "epoch,train_mse,val_mse\n";
    char buf[96];
    for (size_t e = 0; e < result.val_curve.size(); ++e) {
      double train = e == 0 ? result.val_curve[0] : result.train_curve[e - 1];
      std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", e, train, result.val_curve[e]);
      log << buf;
    }
  }
  net.save((fs::path(cfg.output_dir) / "checkpoint_bc.bin").string());

  // replay the held-out glyphs closed-loop with the cloned policy
  json replays = json::array();
  int improved = 0;
  for (int gid : result.held_out_glyphs) {
    const DemoBuild& build = builds[static_cast<size_t>(gid)];
    if (build.pairs.empty()) continue;
    int steps = static_cast<int>(build.pairs.size() + build.pairs.size() / 4) +
                cfg.bc_replay_margin;
    ReplayResult rr =
        replay_policy(net, build.reference, build.strokes.strokes[0].start, steps, env);
    double reduction = rr.initial_loss > 0 ? 1.0 - rr.final_loss / rr.initial_loss : 0.0;
    if (reduction >= 0.5) ++improved;
    replays.push_back({{"glyph", fs::path(files[static_cast<size_t>(gid)]).filename().string()},
                       {"initial_loss", rr.initial_loss},
                       {"final_loss", rr.final_loss},
                       {"reduction", reduction}});
  }
  json report;
  report["val_mse_epoch0"] = result.val_curve.front();
  report["val_mse_best"] = result.val_curve[static_cast<size_t>(result.best_epoch)];
  report["best_epoch"] = result.best_epoch;
  report["held_out_replays"] = replays;
  report["held_out_improved_frac"] =
      result.held_out_glyphs.empty()
          ? 0.0
          : static_cast<double>(improved) / static_cast<double>(result.held_out_glyphs.size());
  report["parse_warnings"] = warnings;
  std::ofstream rep(fs::path(cfg.output_dir) / "bc_report.json");
  rep << report.dump(2) << "\n";

  std::printf("bc: %zu pairs from %zu glyphs, val mse %.5f -> %.5f (best epoch %d)\n",
              loaded.size(), files.size(), result.val_curve.front(),
              report["val_mse_best"].get<double>(), result.best_epoch);
  std::printf("held-out replay >=50%% loss cut: %s\n",
              report["held_out_improved_frac"].dump().c_str());
  if (warnings > 0) std::printf("parse warnings: %d\n", warnings);
  return 0;
}

int cmd_rollout(const CommonArgs& common, const std::string& checkpoint,
                const std::string& reference_path, int max_strokes_flag, bool frames) {
  RunConfig cfg = resolve_config(common);
  PolicyNet net = PolicyNet::load(checkpoint);
  Canvas reference = read_image(reference_path);
  if (reference.channels() != net.config().image_channels) {
    throw UserError("reference channel count does not match the checkpoint");
  }

  OutputDirLock lock(cfg.output_dir);
  write_resolved_config(cfg);

  EnvConfig env = env_from_config(cfg);
  env.canvas_h = reference.height();
  env.canvas_w = reference.width();
  env.channels = reference.channels();
  env.window_h = net.config().obs_h;
  env.window_w = net.config().obs_w;

  RolloutConfig rc;
  rc.thresh_sim = cfg.rollout_thresh;
  rc.max_strokes = max_strokes_flag > 0 ? max_strokes_flag : cfg.rollout_max_strokes;
  rc.max_dabs = cfg.rollout_max_dabs;
  rc.stop_on_value = cfg.rollout_stop_on_value;

  Rng rng(cfg.seed);
  PaintEnv paint_env(env);
  paint_env.set_reference(reference, 0);

  // per-stroke frames reuse the rollout loop so the JSON matches the frames
  RolloutResult result = rollout_image(net, reference, env, rc, rng);
  write_image(result.canvas, (fs::path(cfg.output_dir) / "final.png").string());
  write_stroke_list_json(result.strokes, (fs::path(cfg.output_dir) / "strokes.json").string());
  if (frames) {
    Canvas canvas(env.canvas_h, env.canvas_w, env.channels, 0.0);
    int idx = 0;
    char name[64];
    for (const auto& stroke : result.strokes.strokes) {
      BrushState brush{stroke.start[0], stroke.start[1], false};
      for (const Action& a : stroke.actions) render_action(canvas, brush, a, env.brush);
      std::snprintf(name, sizeof(name), "frame_%03d.png", idx++);
      write_image(canvas, (fs::path(cfg.output_dir) / name).string());
    }
  }

  double blank_loss = loss_half(Canvas(env.canvas_h, env.canvas_w, env.channels, 0.0), reference);
  std::printf("rollout: %zu strokes, %d dabs, loss_half %.5f (blank %.5f)\n",
              result.strokes.strokes.size(), result.total_dabs, result.final_loss, blank_loss);
  return 0;
}

std::vector<Correspondence> load_or_default_correspondences(const RunConfig& cfg) {
  if (!cfg.correspondences_csv.empty()) {
    std::ifstream in(cfg.correspondences_csv);
    if (!in) throw UserError("cannot open correspondences " + cfg.correspondences_csv);
    std::vector<Correspondence> cs;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      double px, py, x, y, z;
      if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &px, &py, &x, &y, &z) != 5) {
        throw UserError("malformed correspondence line: " + line);
      }
      cs.push_back({{px, py}, {x, y, z}});
    }
    if (cs.size() < 3) throw UserError("need at least 3 correspondences");
    return cs;
  }
  // built-in bench rig: painting plane rotated 20 degrees, offset, mild tilt
  ProjectionTransform rig;
  rig.matrix << 0.9397, -0.3420, 60.0,
                0.3420,  0.9397, -15.0,
                0.0600,  0.0250, 40.0;
  std::vector<Correspondence> cs;
  for (double x : {0.0, 32.0, 64.0}) {
    for (double y : {0.0, 32.0, 64.0}) {
      cs.push_back({{x, y}, rig.apply({x, y})});
    }
  }
  return cs;
}

int cmd_calibrate(const CommonArgs& common, double a_step_flag) {
  RunConfig cfg = resolve_config(common);
  if (a_step_flag > 0.0) cfg.a_step = a_step_flag;

  OutputDirLock lock(cfg.output_dir);
  write_resolved_config(cfg);

  BrushSimConfig sim_cfg;
  sim_cfg.p_sat = cfg.sim_p_sat;
  sim_cfg.w_max = cfg.sim_w_max;
  sim_cfg.kappa = cfg.sim_kappa;
  sim_cfg.noise_sigma = cfg.sim_noise;
  sim_cfg.seed = cfg.sim_seed;
  BrushSimulator sim(sim_cfg);

  CalibrationConfig cal;
  cal.a_p_min = cfg.a_p_min;
  cal.a_p_max = cfg.a_p_max;
  cal.a_step = cfg.a_step;
  cal.sweep_samples = cfg.sweep_samples;
  cal.two_sided = cfg.two_sided;
  cal.restrict_to_knee = cfg.restrict_to_knee;
  CalibrationResult result = calibrate_pressure(sim, cal);

  auto correspondences = load_or_default_correspondences(cfg);
  ProjectionTransform transform = fit_projection(correspondences);

  std::string cal_path = (fs::path(cfg.output_dir) / "calibration.json").string();
  write_calibration_json(result, sim_cfg, transform, cal_path);

  // demo trajectory: one bent test stroke through the calibrated mapping
  StrokeList demo;
  demo.canvas_h = cfg.canvas_h;
  demo.canvas_w = cfg.canvas_w;
  demo.channels = cfg.channels;
  demo.brush = env_from_config(cfg).brush;
  StrokeActions s;
  s.start = {cfg.canvas_h * 0.25, cfg.canvas_w * 0.2};
  for (double alpha : {0.2, 0.25, 0.3, 0.35}) {
    Action a;
    a.alpha = alpha;
    a.length = 0.6;
    a.width = 0.5;
    a.color = {1.0, 1.0, 1.0};
    s.actions.push_back(a);
  }
  demo.strokes.push_back(s);
  ExportOptions opts;
  opts.travel_clearance = cfg.travel_clearance;
  opts.pressure_depth_scale = cfg.pressure_depth_scale;
  opts.calibration_checksum = file_checksum(cal_path);
  TrajectoryExport traj = export_trajectory(demo, result.mapping, transform, opts);
  write_trajectory_csv(traj, (fs::path(cfg.output_dir) / "demo_trajectory.csv").string());

  std::printf("calibration: %s, %d width renders, mapping table %zu entries\n",
              result.knee ? "knee found" : "no knee in range", result.width_renders,
              result.mapping.table.size());
  if (result.knee) std::printf("p_sat estimate: %.6f\n", result.knee->p_sat);
  std::printf("projection residual: %.3g\n", transform.rms_residual);
  return 0;
}

int cmd_export(const CommonArgs& common, const std::string& strokes_path,
               const std::string& calibration_path, const std::string& resim_png) {
  RunConfig cfg = resolve_config(common);
  StrokeList strokes = read_stroke_list_json(strokes_path);
  LoadedCalibration cal = read_calibration_json(calibration_path);

  OutputDirLock lock(cfg.output_dir);
  write_resolved_config(cfg);

  ExportOptions opts;
  opts.travel_clearance = cfg.travel_clearance;
  opts.pressure_depth_scale = cfg.pressure_depth_scale;
  opts.use_style = cfg.style_enabled;
  opts.style = StrokeStyle{cfg.style_mean, cfg.style_stddev, cfg.style_clamp_lo,
                           cfg.style_clamp_hi};
  opts.style_seed = cfg.seed;
  opts.calibration_checksum = cal.checksum;
  TrajectoryExport traj = export_trajectory(strokes, cal.result.mapping, cal.projection, opts);
  std::string csv_path = (fs::path(cfg.output_dir) / "trajectory.csv").string();
  write_trajectory_csv(traj, csv_path);
  std::printf("exported %zu waypoints (%d clamp warnings) to %s\n", traj.waypoints.size(),
              traj.clamp_warnings, csv_path.c_str());

  if (!resim_png.empty()) {
    // read back through the file so the re-simulation exercises the format
    std::vector<Waypoint> loaded = read_trajectory_csv(csv_path);
    BrushSimulator sim(cal.sim);
    Canvas canvas = resimulate_trajectory(loaded, cal.projection, sim, strokes.canvas_h,
                                          strokes.canvas_w, strokes.channels, strokes.brush);
    write_image(canvas, (fs::path(cfg.output_dir) / resim_png).string());
    std::printf("re-simulation written to %s\n", resim_png.c_str());
  }
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::vector<std::string>& checkpoints) {
  RunConfig cfg = resolve_config(common);
  if (checkpoints.empty()) throw UserError("eval needs at least one checkpoint");

  OutputDirLock lock(cfg.output_dir);
  write_resolved_config(cfg);

  // reference patches
  std::vector<Canvas> sources;
  if (cfg.corpus_dir.empty()) {
    int src = std::max(cfg.eval_patch_size + cfg.eval_patch_size / 2, cfg.canvas_h);
    sources = procedural_corpus(cfg.corpus_count, src, src, cfg.corpus_seed, cfg.channels);
  } else {
    sources = load_corpus_dir(cfg.corpus_dir);
    if (sources.empty()) throw UserError("corpus directory has no images: " + cfg.corpus_dir);
  }
  Rng patch_rng(cfg.eval_seed);
  std::vector<Canvas> patches;
  for (int i = 0; i < cfg.eval_patches; ++i) {
    const Canvas& src = sources[static_cast<size_t>(i) % sources.size()];
    if (src.height() < cfg.eval_patch_size || src.width() < cfg.eval_patch_size) {
      throw UserError("eval patch size exceeds a corpus image");
    }
    patches.push_back(sample_patch(src, cfg.eval_patch_size, cfg.eval_patch_size, patch_rng));
  }

  EvalProtocol protocol;
  protocol.repeats = 1;
  protocol.rollout.thresh_sim = cfg.eval_thresh;
  protocol.rollout.max_strokes = cfg.eval_max_strokes;
  protocol.rollout.max_dabs = cfg.eval_max_dabs;
  protocol.rollout.stop_on_value = cfg.eval_stop_on_value;
  protocol.seed = cfg.eval_seed;

  json rows = json::array();
  std::printf("%-28s %12s %10s %11s %8s %9s\n", "method", "cum_reward", "l2_loss", "loss_half",
              "strokes", "wall_ms");
  for (const std::string& ck : checkpoints) {
    PolicyNet net = PolicyNet::load(ck);
    EnvConfig env = env_from_config(cfg);
    env.canvas_h = env.canvas_w = cfg.eval_patch_size;
    env.window_h = net.config().obs_h;
    env.window_w = net.config().obs_w;
    env.channels = net.config().image_channels;

    auto t0 = std::chrono::steady_clock::now();
    EvalSummary s = evaluate_policy(net, patches, env, protocol);
    long wall = cfg.log_wall_time
                    ? std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count()
                    : 0;
    std::string name = fs::path(ck).filename().string();
    std::printf("%-28s %12.4f %10.5f %11.5f %8.2f %9ld\n", name.c_str(), s.mean_return, s.mean_l2,
                s.mean_loss_half, s.mean_strokes, wall);
    rows.push_back({{"method", name},
                    {"checkpoint", ck},
                    {"cumulative_reward", s.mean_return},
                    {"l2_loss", s.mean_l2},
                    {"loss_half", s.mean_loss_half},
                    {"strokes", s.mean_strokes},
                    {"wall_ms", wall}});
  }
  // reported at publication scale, for context only; not comparable to the
  // desk-scale corpus above
  std::printf("reference rows (publication scale, display only): "
              "BC 20.15/512  RL 97.74/1920  Combined 98.25/1485\n");

  json report;
  report["rows"] = rows;
  report["corpus"] = {{"patches", cfg.eval_patches},
                      {"patch_size", cfg.eval_patch_size},
                      {"source", cfg.corpus_dir.empty() ? "procedural" : cfg.corpus_dir},
                      {"corpus_seed", cfg.corpus_seed}};
  report["seed"] = cfg.eval_seed;
  report["reference_rows_display_only"] = {{"behavior_cloning", {20.15, 512.0}},
                                           {"reinforcement_learning", {97.74, 1920.0}},
                                           {"combined_scheme", {98.25, 1485.0}}};
  std::ofstream out(fs::path(cfg.output_dir) / "eval_report.json");
  out << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"brushgym: stroke-based painting policies and sim-to-real transfer"};
  app.require_subcommand(1);

  CommonArgs train_rl_args, train_bc_args, rollout_args, calibrate_args, eval_args, export_args;

  auto* train_rl_cmd = app.add_subcommand("train-rl", "train the painting policy");
  add_common(train_rl_cmd, train_rl_args);
  std::string init_from;
  std::string curriculum_str;
  train_rl_cmd->add_option("--init-from", init_from, "warm-start checkpoint");
  train_rl_cmd->add_option("--curriculum", curriculum_str, "on|off (overrides config)");
  long episodes_flag = -1;
  train_rl_cmd->add_option("--episodes", episodes_flag, "episode budget");

  auto* train_bc_cmd = app.add_subcommand("train-bc", "behavior-clone from glyph SVGs");
  add_common(train_bc_cmd, train_bc_args);
  std::string svg_dir_flag;
  train_bc_cmd->add_option("--svg-dir", svg_dir_flag, "glyph directory");
  int bc_epochs_flag = -1;
  train_bc_cmd->add_option("--epochs", bc_epochs_flag, "training epochs");

  auto* rollout_cmd = app.add_subcommand("rollout", "paint a reference image");
  add_common(rollout_cmd, rollout_args);
  std::string checkpoint, reference;
  int max_strokes_flag = -1;
  bool frames = false;
  rollout_cmd->add_option("--checkpoint", checkpoint, "policy checkpoint")->required();
  rollout_cmd->add_option("--reference", reference, "reference image")->required();
  rollout_cmd->add_option("--max-strokes", max_strokes_flag, "stroke budget");
  rollout_cmd->add_flag("--frames", frames, "write per-stroke frames");

  auto* calibrate_cmd = app.add_subcommand("calibrate", "pressure and projection calibration");
  add_common(calibrate_cmd, calibrate_args);
  double a_step_flag = -1.0;
  calibrate_cmd->add_option("--a-step", a_step_flag, "bisection stop interval");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate checkpoints on reference patches");
  add_common(eval_cmd, eval_args);
  std::vector<std::string> checkpoints;
  eval_cmd->add_option("--checkpoints", checkpoints, "checkpoints to compare")->take_all();

  auto* export_cmd = app.add_subcommand("export", "convert strokes to a robot trajectory");
  add_common(export_cmd, export_args);
  std::string strokes_path, calibration_path, resim_png;
  export_cmd->add_option("--strokes", strokes_path, "stroke list JSON")->required();
  export_cmd->add_option("--calibration", calibration_path, "calibration JSON")->required();
  export_cmd->add_option("--resim", resim_png, "also re-simulate to this PNG (in output dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (train_rl_cmd->parsed()) {
      if (episodes_flag >= 0) {
        train_rl_args.overrides.push_back("training.episodes=" + std::to_string(episodes_flag));
      }
      int curriculum_flag = -1;
      if (!curriculum_str.empty()) {
        if (curriculum_str != "on" && curriculum_str != "off") {
          throw UserError("--curriculum must be on or off");
        }
        curriculum_flag = curriculum_str == "on" ? 1 : 0;
      }
      return cmd_train_rl(train_rl_args, init_from, curriculum_flag);
    }
    if (train_bc_cmd->parsed()) {
      if (bc_epochs_flag >= 0) {
        train_bc_args.overrides.push_back("bc.epochs=" + std::to_string(bc_epochs_flag));
      }
      return cmd_train_bc(train_bc_args, svg_dir_flag);
    }
    if (rollout_cmd->parsed()) {
      return cmd_rollout(rollout_args, checkpoint, reference, max_strokes_flag, frames);
    }
    if (calibrate_cmd->parsed()) return cmd_calibrate(calibrate_args, a_step_flag);
    if (eval_cmd->parsed()) return cmd_eval(eval_args, checkpoints);
    if (export_cmd->parsed()) {
      return cmd_export(export_args, strokes_path, calibration_path, resim_png);
    }
    throw UserError("no command given");
  } catch (const UserError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}

}  // namespace brushgym
