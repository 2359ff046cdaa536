#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "brushgym/canvas.hpp"
#include "brushgym/policy.hpp"
#include "brushgym/rl.hpp"
#include "brushgym/strokes.hpp"
#include "brushgym/svg.hpp"

namespace brushgym {

// One supervised example: the egocentric observation during a demo replay
// and the action the demonstrator took there. Color is constant across all
// pairs and width is either 0 (transit) or w_demo.
struct DemoPair {
  std::vector<double> obs;
  Action target;
  int glyph_id = 0;
  bool pen_up = false;
};

struct DemoOptions {
  double w_demo = 0.5;
  double ink = 1.0;              // painted intensity of demo strokes
  double margin_frac = 0.1;      // glyph box margin inside the canvas
  double chord_deviation = 0.4;  // max perpendicular drift of a chord from
                                 // the polyline vertices it spans, in px
};

// viewBox extents of a glyph document; KanjiVG files are 109x109.
std::array<double, 2> parse_svg_extent(std::string_view document);

// Maps glyph coordinates (x right, y down) into canvas (row, col) with a
// uniform margin.
std::vector<StrokePolyline> scale_strokes_to_canvas(std::span<const StrokePolyline> strokes,
                                                    double glyph_w, double glyph_h,
                                                    const EnvConfig& env, double margin_frac);

struct DemoBuild {
  std::vector<DemoPair> pairs;
  Canvas reference;    // final canvas of the demo; also the obs reference
  StrokeList strokes;  // the full demo action sequence
};

// Converts canvas-space polylines into demo pairs: polylines resampled into
// chords no longer than l_max, one pen-down action per chord, pen-up actions
// across inter-stroke gaps. Observations come from replaying the actions
// through the renderer, so each pair sees the partially painted canvas.
DemoBuild strokes_to_pairs(std::span<const StrokePolyline> strokes_canvas, const EnvConfig& env,
                           const DemoOptions& options = {});

// Drift-robustness extras for training: observations taken at positions
// jittered off the demo path (same partially drawn canvas), actions re-aimed
// at the demo's next waypoint. These corrective pairs are generated on top
// of a DemoBuild and are not part of the canonical dataset.
std::vector<DemoPair> augment_demo_pairs(const DemoBuild& build, const EnvConfig& env,
                                         int variants_per_step, double max_jitter_px, Rng& rng);

// Length-prefixed binary records plus a JSON sidecar manifest (bin_path +
// ".json"). Layout documented in the README.
void write_demo_dataset(std::span<const DemoPair> pairs, const EnvConfig& env,
                        const DemoOptions& options, const std::string& bin_path);
std::vector<DemoPair> read_demo_dataset(const std::string& bin_path, EnvConfig* env_out = nullptr);

struct BcConfig {
  int epochs = 40;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double val_fraction = 0.1;
  uint64_t seed = 0;
};

struct BcResult {
  std::vector<double> train_curve;  // mean squared action error per epoch
  std::vector<double> val_curve;    // index 0 is the untrained model
  int best_epoch = 0;
  std::vector<int> held_out_glyphs;
};

// Supervised regression of squash(policy mean) onto the target actions by
// mini-batch gradient descent. The validation split holds out whole glyphs
// when several are present. The network is left at the best-validation
// epoch's parameters.
BcResult train_bc(PolicyNet& net, std::span<const DemoPair> dataset, const BcConfig& cfg);

// Mean squared action error of the squashed policy mean over a set of pairs.
double bc_action_mse(const PolicyNet& net, std::span<const DemoPair> pairs);

// Fresh RL net carrying the behavior-cloned trunk and action head: value
// head re-initialized from the seed, log-std reset to the config default.
PolicyNet init_rl_from_bc(const PolicyNet& bc_net, double log_std_init, uint64_t value_seed);

// Closed-loop replay of the policy's deterministic actions from the demo's
// start position for a fixed number of steps.
struct ReplayResult {
  Canvas canvas;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};
ReplayResult replay_policy(const PolicyNet& net, const Canvas& reference,
                           std::array<double, 2> start, int steps, const EnvConfig& env);

}  // namespace brushgym
