#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "brushgym/canvas.hpp"
#include "brushgym/objective.hpp"
#include "brushgym/policy.hpp"
#include "brushgym/rng.hpp"
#include "brushgym/strokes.hpp"

namespace brushgym {

// ---------------------------------------------------------------------------
// environment

struct EnvConfig {
  int canvas_h = 32;
  int canvas_w = 32;
  int channels = 1;
  int window_h = 40;
  int window_w = 40;
  BrushConfig brush{20.0, 5.0, 1.0};  // reach = window/2, dab radius = window/8

  static EnvConfig with_window(int canvas_h, int canvas_w, int channels, int window) {
    EnvConfig c;
    c.canvas_h = canvas_h;
    c.canvas_w = canvas_w;
    c.channels = channels;
    c.window_h = c.window_w = window;
    c.brush.l_max = window / 2.0;
    c.brush.w_max = window / 8.0;
    return c;
  }
};

// Painting state against one reference. Value-like; one worker per instance.
class PaintEnv {
 public:
  explicit PaintEnv(const EnvConfig& cfg)
      : cfg_(cfg), canvas_(cfg.canvas_h, cfg.canvas_w, cfg.channels, 0.0),
        reference_(cfg.canvas_h, cfg.canvas_w, cfg.channels, 0.0) {}

  const EnvConfig& config() const { return cfg_; }

  void set_reference(const Canvas& ref, int reference_id) {
    if (!ref.same_shape(canvas_)) {
      throw std::invalid_argument("PaintEnv: reference dimensions mismatch");
    }
    reference_ = ref;
    reference_id_ = reference_id;
    reset_canvas();
  }

  void reset_canvas() {
    canvas_.fill(0.0);
    strokes_on_canvas_ = 0;
  }

  void place_brush(double row, double col) { brush_ = BrushState{row, col, false}; }
  void place_brush_uniform(Rng& rng) {
    place_brush(rng.uniform(0.0, cfg_.canvas_h), rng.uniform(0.0, cfg_.canvas_w));
  }

  const Canvas& canvas() const { return canvas_; }
  const Canvas& reference() const { return reference_; }
  const BrushState& brush() const { return brush_; }
  int reference_id() const { return reference_id_; }

  double loss() const { return loss_half(canvas_, reference_); }
  Observation observe() const {
    return extract_observation(canvas_, reference_, brush_, cfg_.window_h, cfg_.window_w);
  }

  void apply(const Action& a) { render_action(canvas_, brush_, a, cfg_.brush); }

  int strokes_on_canvas() const { return strokes_on_canvas_; }
  void count_stroke() { ++strokes_on_canvas_; }

 private:
  EnvConfig cfg_;
  Canvas canvas_;
  Canvas reference_;
  BrushState brush_;
  int reference_id_ = -1;
  int strokes_on_canvas_ = 0;
};

// ---------------------------------------------------------------------------
// episode traces

struct StepRecord {
  std::vector<double> obs;  // policy input tensor at decision time
  Action action;
  Vector6d z;       // pre-squash sample
  double log_prob;  // density at collection time
  double reward;
  double value;     // V(o) at collection time
};

struct EpisodeTrace {
  std::vector<StepRecord> steps;
  std::array<double, 2> start{0.0, 0.0};
  int reference_id = -1;
  double initial_loss = 0.0;

  double total_reward() const {
    double s = 0.0;
    for (const auto& st : steps) s += st.reward;
    return s;
  }
};

// ---------------------------------------------------------------------------
// curriculum and difficulty-based sampling

struct CurriculumConfig {
  bool enabled = true;
  int horizon_init = 1;
  int horizon_max = 8;
  long horizon_grow_every = 1000;  // episodes per +1 step of horizon
  double r_thresh_final = 0.1;
  long r_thresh_ramp_episodes = 10000;
  double difficulty_init = 1.0;  // optimistic score for unseen references
  double difficulty_eps = 0.01;
  double difficulty_cap = 2.0;  // per-episode difficulty samples are clamped to [0, cap]
};

struct CurriculumState {
  CurriculumConfig cfg;
  long episode = 0;
  int horizon = 1;
  double r_thresh = 0.0;
  std::vector<double> difficulty_sum;
  std::vector<long> difficulty_count;

  static CurriculumState init(const CurriculumConfig& cfg, int corpus_size);

  // running mean of (1 - normalized episode return), optimistic for unseen
  double score(int reference_id) const;
};

struct EpisodeStats {
  int reference_id = -1;
  double normalized_return = 0.0;
};

// Advances the episode counter, folds the episode into the difficulty
// scores, and recomputes horizon and r_thresh from the schedule. With the
// curriculum disabled the horizon stays pinned at horizon_max and r_thresh
// at its final value (the baseline arm).
CurriculumState advance_curriculum(CurriculumState state, const EpisodeStats& stats);

// Draws a reference id with probability proportional to (score + eps).
int sample_reference(const CurriculumState& state, int corpus_size, Rng& rng);

// ---------------------------------------------------------------------------
// episode collection and rollout

struct CollectConfig {
  int horizon = 1;
  double r_thresh = 0.0;
};

// Runs one stroke episode from a uniformly sampled start position. Stops at
// the horizon or at the first step whose reward exceeds r_thresh, whichever
// comes first. Returns nothing when the reference is already matched
// (degenerate initial loss).
std::optional<EpisodeTrace> collect_episode(const PolicyNet& policy, PaintEnv& env,
                                            const CollectConfig& cfg, Rng& rng);

struct RolloutConfig {
  double thresh_sim = 0.02;  // outer loop stops once loss_half drops below this
  int max_strokes = 12;
  int max_dabs = 8;
  bool stop_on_value = true;  // inner loop stops when V(o) <= 0
};

struct RolloutResult {
  Canvas canvas;
  StrokeList strokes;
  double final_loss = 0.0;
  int total_dabs = 0;
};

// Deterministic rollout with distribution means: strokes start at random
// positions, the inner loop renders at least one dab and continues while the
// predicted value stays positive, the outer loop runs until the canvas is
// close enough or the stroke budget is spent.
RolloutResult rollout_image(const PolicyNet& policy, const Canvas& reference,
                            const EnvConfig& env_cfg, const RolloutConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// policy update

struct UpdateConfig {
  double gamma = 0.95;
  double clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double mean_reg = 1e-3;  // L2 pull on the pre-squash mean; keeps the
                           // sigmoid from saturating and freezing exploration
  double max_grad_norm = 0.5;
  bool normalize_advantages = true;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  int steps = 0;
  bool skipped = false;  // non-finite gradient, parameters untouched
};

// One clipped-surrogate policy-gradient step over the batch: advantages are
// discounted returns-to-go minus the collected value baseline, plus a value
// regression term and an entropy bonus.
UpdateStats update_policy(PolicyNet& policy, std::span<const EpisodeTrace> batch,
                          const UpdateConfig& cfg, AdamOptimizer& optimizer);

// ---------------------------------------------------------------------------
// training loop

struct TrainRlConfig {
  EnvConfig env;
  PolicyConfig policy;
  UpdateConfig update;
  CurriculumConfig curriculum;
  long episodes = 20000;
  int batch_episodes = 32;
  int update_epochs = 4;
  double learning_rate = 3e-4;
  double lr_decay_floor = 1.0;  // final lr fraction; 1 = constant rate
  int strokes_per_canvas = 4;  // strokes painted on one canvas before reset
  int workers = 1;
  uint64_t seed = 0;
  long log_every = 200;        // episodes per CSV log row
  long checkpoint_every = 0;   // 0 = final checkpoint only
  std::string output_dir;     // empty = no checkpoints written
  bool log_wall_time = true;  // false writes 0 for bit-reproducible logs
  std::string init_checkpoint;  // warm start; topology must match
};

struct TrainLogRow {
  long episode;
  double mean_return;
  double loss_half;
  int horizon;
  double r_thresh;
  long wall_ms;
};

struct TrainRlResult {
  PolicyNet net;
  CurriculumState curriculum;
  std::vector<TrainLogRow> log;
  long episodes_run = 0;
  int skipped_updates = 0;
};

// Trains against the corpus; writes `episode,mean_return,loss_half,horizon,
// r_thresh,wall_ms` rows to log_csv when given.
TrainRlResult train_rl(const TrainRlConfig& cfg, const std::vector<Canvas>& corpus,
                       std::ostream* log_csv);

// Deterministic evaluation: full rollouts per reference, cumulative reward
// measured as the fraction of the initial loss removed.
struct EvalProtocol {
  int repeats = 3;
  RolloutConfig rollout;
  uint64_t seed = 1234;
};

struct EvalSummary {
  double mean_return = 0.0;     // mean (L0 - LT) / L0 over rollouts
  double mean_l2 = 0.0;         // mean final L2 loss
  double mean_loss_half = 0.0;  // mean final loss_half
  double mean_strokes = 0.0;
  int rollouts = 0;
};

EvalSummary evaluate_policy(const PolicyNet& policy, const std::vector<Canvas>& references,
                            const EnvConfig& env_cfg, const EvalProtocol& protocol);

}  // namespace brushgym
