#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace brushgym {

// Configuration or usage problems; the CLI maps these to exit code 2.
struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat run configuration backing every CLI command. Loaded from a TOML-style
// plain-text file ([section] headers, key = value lines), with CLI flags
// overriding file values. Unknown keys are rejected. Every run writes its
// resolved configuration next to its outputs.
struct RunConfig {
  // [env]
  int canvas_h = 32;
  int canvas_w = 32;
  int channels = 1;
  int window = 40;
  double l_max = 0.0;  // 0 = window / 2
  double w_max = 0.0;  // 0 = window / 8
  double opacity = 1.0;

  // [training]
  uint64_t seed = 0;
  long episodes = 20000;
  int batch_episodes = 32;
  int update_epochs = 4;
  int workers = 1;
  double learning_rate = 1e-3;
  double gamma = 0.95;
  double clip = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double mean_reg = 1e-3;
  double max_grad_norm = 0.5;
  double log_std_init = -0.5;
  bool curriculum = true;
  int horizon_init = 1;
  int horizon_max = 8;
  long horizon_grow_every = 1000;
  double r_thresh_final = 0.1;
  long r_thresh_ramp = 10000;
  int strokes_per_canvas = 4;
  long log_every = 200;
  long checkpoint_every = 0;
  std::string preset = "desk";  // "desk" or "full"
  bool log_wall_time = true;

  // [bc]
  std::string svg_dir = "data/glyphs";
  int bc_epochs = 40;
  int bc_batch = 64;
  double bc_learning_rate = 1e-3;
  double bc_val_fraction = 0.1;
  double w_demo = 0.5;
  double ink = 1.0;
  double margin_frac = 0.1;
  int bc_replay_margin = 2;  // extra replay steps per demo step count

  // [calibration]
  double a_p_min = 0.0;
  double a_p_max = 1.0;
  double a_step = 0.015625;  // 1/64
  int sweep_samples = 17;
  bool two_sided = true;
  bool restrict_to_knee = true;
  double sim_p_sat = 0.6;
  double sim_w_max = 1.0;
  double sim_kappa = 1.0;
  double sim_noise = 0.0;
  uint64_t sim_seed = 0;
  double travel_clearance = 5.0;
  double pressure_depth_scale = 1.0;
  std::string correspondences_csv;  // empty = built-in tilted-plane rig

  // [style]
  bool style_enabled = false;
  double style_mean = 0.5;
  double style_stddev = 0.3;
  double style_clamp_lo = 0.0;
  double style_clamp_hi = 1.0;

  // [rollout]
  int rollout_max_strokes = 64;
  int rollout_max_dabs = 8;
  double rollout_thresh = 0.02;
  bool rollout_stop_on_value = true;

  // [eval]
  int eval_patches = 100;
  int eval_patch_size = 64;
  int eval_max_strokes = 16;
  int eval_max_dabs = 8;
  double eval_thresh = 0.01;
  bool eval_stop_on_value = true;
  uint64_t eval_seed = 1234;

  // [paths]
  std::string corpus_dir;  // empty = procedural corpus
  int corpus_count = 4;
  uint64_t corpus_seed = 20240901;
  std::string output_dir = "out";

  double effective_l_max() const { return l_max > 0.0 ? l_max : window / 2.0; }
  double effective_w_max() const { return w_max > 0.0 ? w_max : window / 8.0; }
};

// Parses a config file; throws UserError naming the offending line.
RunConfig load_config_file(const std::string& path);

// Parses a config file on top of an existing configuration (file wins).
void merge_config_file(RunConfig& cfg, const std::string& path);

// Applies one "section.key=value" override.
void apply_config_override(RunConfig& cfg, const std::string& assignment);

// Canonical text form; parsing it back yields an identical RunConfig.
std::string emit_config(const RunConfig& cfg);

// Range/consistency checks; throws UserError.
void validate_config(const RunConfig& cfg);

bool config_equal(const RunConfig& a, const RunConfig& b);

}  // namespace brushgym
