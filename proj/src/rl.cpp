#include "brushgym/rl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <thread>

namespace brushgym {

// ---------------------------------------------------------------------------
// curriculum

CurriculumState CurriculumState::init(const CurriculumConfig& cfg, int corpus_size) {
  CurriculumState s;
  s.cfg = cfg;
  s.horizon = cfg.enabled ? cfg.horizon_init : cfg.horizon_max;
  s.r_thresh = cfg.enabled ? 0.0 : cfg.r_thresh_final;
  s.difficulty_sum.assign(corpus_size, 0.0);
  s.difficulty_count.assign(corpus_size, 0);
  return s;
}

double CurriculumState::score(int reference_id) const {
  if (reference_id < 0 || reference_id >= static_cast<int>(difficulty_sum.size()) ||
      difficulty_count[reference_id] == 0) {
    return cfg.difficulty_init;
  }
  return difficulty_sum[reference_id] / static_cast<double>(difficulty_count[reference_id]);
}

CurriculumState advance_curriculum(CurriculumState state, const EpisodeStats& stats) {
  if (stats.reference_id >= 0 &&
      stats.reference_id < static_cast<int>(state.difficulty_sum.size())) {
    double d = std::clamp(1.0 - stats.normalized_return, 0.0, state.cfg.difficulty_cap);
    state.difficulty_sum[stats.reference_id] += d;
    state.difficulty_count[stats.reference_id] += 1;
  }
  ++state.episode;

  const CurriculumConfig& cfg = state.cfg;
  if (cfg.enabled) {
    long grown = cfg.horizon_grow_every > 0 ? state.episode / cfg.horizon_grow_every : 0;
    state.horizon = static_cast<int>(
        std::min<long>(cfg.horizon_max, cfg.horizon_init + grown));
    double ramp = cfg.r_thresh_ramp_episodes > 0
                      ? std::min(1.0, static_cast<double>(state.episode) /
                                          static_cast<double>(cfg.r_thresh_ramp_episodes))
                      : 1.0;
    state.r_thresh = cfg.r_thresh_final * ramp;
  } else {
    state.horizon = cfg.horizon_max;
    state.r_thresh = cfg.r_thresh_final;
  }
  return state;
}

int sample_reference(const CurriculumState& state, int corpus_size, Rng& rng) {
  if (corpus_size <= 0) throw std::invalid_argument("sample_reference: empty corpus");
  double total = 0.0;
  for (int i = 0; i < corpus_size; ++i) total += state.score(i) + state.cfg.difficulty_eps;
  double u = rng.uniform() * total;
  double acc = 0.0;
  for (int i = 0; i < corpus_size; ++i) {
    acc += state.score(i) + state.cfg.difficulty_eps;
    if (u < acc) return i;
  }
  return corpus_size - 1;
}

// ---------------------------------------------------------------------------
// collection

std::optional<EpisodeTrace> collect_episode(const PolicyNet& policy, PaintEnv& env,
                                            const CollectConfig& cfg, Rng& rng) {
  env.place_brush_uniform(rng);
  double initial = env.loss();
  if (initial <= kInitialLossEpsilon) return std::nullopt;

  EpisodeTrace trace;
  trace.start = {env.brush().row, env.brush().col};
  trace.reference_id = env.reference_id();
  trace.initial_loss = initial;

  ForwardCache cache;
  double prev = initial;
  for (int t = 0; t < cfg.horizon; ++t) {
    StepRecord rec;
    rec.obs = env.observe().to_tensor();
    PolicyNet::Output out = policy.forward(rec.obs, cache);
    SampledAction sample = sample_action(out.dist, rng);
    rec.action = sample.action;
    rec.z = sample.z;
    rec.log_prob = sample.log_prob;
    rec.value = out.value;

    env.apply(rec.action);
    double cur = env.loss();
    rec.reward = step_reward(prev, cur, initial);
    prev = cur;
    trace.steps.push_back(std::move(rec));

    if (trace.steps.back().reward > cfg.r_thresh) break;
  }
  return trace;
}

RolloutResult rollout_image(const PolicyNet& policy, const Canvas& reference,
                            const EnvConfig& env_cfg, const RolloutConfig& cfg, Rng& rng) {
  PaintEnv env(env_cfg);
  env.set_reference(reference, 0);

  RolloutResult result;
  result.strokes.canvas_h = env_cfg.canvas_h;
  result.strokes.canvas_w = env_cfg.canvas_w;
  result.strokes.channels = env_cfg.channels;
  result.strokes.brush = env_cfg.brush;

  ForwardCache cache;
  int strokes = 0;
  while (env.loss() > cfg.thresh_sim && strokes < cfg.max_strokes) {
    env.place_brush_uniform(rng);
    StrokeActions stroke;
    stroke.start = {env.brush().row, env.brush().col};

    double predicted = 1.0;
    int dabs = 0;
    while (predicted > 0.0 && dabs < cfg.max_dabs) {
      Observation obs = env.observe();
      PolicyNet::Output out = policy.forward(obs.to_tensor(), cache);
      Action a = mean_action(out.dist);
      if (cfg.stop_on_value) predicted = out.value;
      env.apply(a);
      stroke.actions.push_back(a);
      ++dabs;
      ++result.total_dabs;
    }
    result.strokes.strokes.push_back(std::move(stroke));
    ++strokes;
  }
  result.canvas = env.canvas();
  result.final_loss = env.loss();
  return result;
}

// ---------------------------------------------------------------------------
// update

UpdateStats update_policy(PolicyNet& policy, std::span<const EpisodeTrace> batch,
                          const UpdateConfig& cfg, AdamOptimizer& optimizer) {
  if (batch.empty()) throw std::invalid_argument("update_policy: empty batch");

  struct FlatStep {
    const StepRecord* rec;
    double ret;  // discounted return-to-go
  };
  std::vector<FlatStep> steps;
  for (const EpisodeTrace& ep : batch) {
    double g = 0.0;
    std::vector<double> ret(ep.steps.size());
    for (int t = static_cast<int>(ep.steps.size()) - 1; t >= 0; --t) {
      g = ep.steps[t].reward + cfg.gamma * g;
      ret[t] = g;
    }
    for (size_t t = 0; t < ep.steps.size(); ++t) steps.push_back({&ep.steps[t], ret[t]});
  }
  const int n = static_cast<int>(steps.size());

  std::vector<double> adv(n);
  for (int i = 0; i < n; ++i) adv[i] = steps[i].ret - steps[i].rec->value;
  if (cfg.normalize_advantages && n > 1) {
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= n;
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    double sd = std::sqrt(var / n);
    if (sd > 1e-8) {
      for (double& a : adv) a = (a - mean) / sd;
    } else {
      for (double& a : adv) a -= mean;
    }
  }

  UpdateStats stats;
  stats.steps = n;
  Eigen::VectorXd grads = Eigen::VectorXd::Zero(policy.parameter_count());
  Eigen::Index log_std_off = 0;
  for (const auto& seg : policy.segments()) {
    if (seg.name == "log_std") log_std_off = seg.offset;
  }

  ForwardCache cache;
  const double inv_n = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    const StepRecord& rec = *steps[i].rec;
    PolicyNet::Output out = policy.forward(rec.obs, cache);
    double logp = squashed_log_prob(out.dist, rec.z);
    double ratio = std::exp(std::clamp(logp - rec.log_prob, -30.0, 30.0));
    double a = adv[i];

    double unclipped = ratio * a;
    double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * a;
    stats.policy_loss += -std::min(unclipped, clipped) * inv_n;
    if (unclipped > clipped) stats.clip_fraction += inv_n;

    // d(-min)/d(logp): active only while the unclipped branch is the minimum
    bool active = unclipped <= clipped;
    double d_logp = active ? -a * ratio : 0.0;

    Vector6d d_mean = Vector6d::Zero();
    for (int k = 0; k < 6; ++k) {
      double sd = out.dist.std_dev(k);
      double u = (rec.z(k) - out.dist.mean(k)) / sd;
      double dlogp_dmean = u / sd;
      double dlogp_dlogstd = u * u - 1.0;
      d_mean(k) = (d_logp * dlogp_dmean + cfg.mean_reg * out.dist.mean(k)) * inv_n;
      grads[log_std_off + k] += (d_logp * dlogp_dlogstd - cfg.entropy_coef) * inv_n;
    }

    double v_err = out.value - steps[i].ret;
    stats.value_loss += 0.5 * v_err * v_err * inv_n;
    double d_value = cfg.value_coef * v_err * inv_n;

    stats.entropy += gaussian_entropy(out.dist) * inv_n;
    policy.backward(rec.obs, cache, d_mean, d_value, grads);
  }

  double norm = grads.norm();
  stats.grad_norm = norm;
  if (!std::isfinite(norm)) {
    stats.skipped = true;
    return stats;
  }
  if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) {
    grads *= cfg.max_grad_norm / norm;
  }
  optimizer.step(policy.parameters(), grads);
  return stats;
}

// ---------------------------------------------------------------------------
// training loop

namespace {

struct WorkerState {
  PaintEnv env;
  Rng rng;
  bool has_reference = false;

  WorkerState(const EnvConfig& cfg, uint64_t seed) : env(cfg), rng(seed) {}
};

// One worker fills its slots of the round; slot order keeps runs
// deterministic for a fixed worker count.
void run_worker_round(const PolicyNet& policy, WorkerState& ws,
                      const std::vector<Canvas>& corpus, const CurriculumState& snapshot,
                      int strokes_per_canvas, int slot_begin, int slot_stride, int batch,
                      std::vector<std::optional<EpisodeTrace>>& out) {
  CollectConfig cc{snapshot.horizon, snapshot.r_thresh};
  for (int slot = slot_begin; slot < batch; slot += slot_stride) {
    std::optional<EpisodeTrace> trace;
    for (int attempt = 0; attempt < 8 && !trace; ++attempt) {
      if (!ws.has_reference || ws.env.strokes_on_canvas() >= strokes_per_canvas) {
        int ref = sample_reference(snapshot, static_cast<int>(corpus.size()), ws.rng);
        ws.env.set_reference(corpus[ref], ref);
        ws.has_reference = true;
      }
      trace = collect_episode(policy, ws.env, cc, ws.rng);
      if (trace) {
        ws.env.count_stroke();
      } else {
        ws.has_reference = false;  // canvas already matches; move on
      }
    }
    out[slot] = std::move(trace);
  }
}

}  // namespace

TrainRlResult train_rl(const TrainRlConfig& cfg, const std::vector<Canvas>& corpus,
                       std::ostream* log_csv) {
  if (corpus.empty()) throw std::invalid_argument("train_rl: empty corpus");
  const int workers = std::max(1, cfg.workers);

  Rng master(cfg.seed);
  PolicyNet net(cfg.policy);
  net.init_weights(master);
  if (!cfg.init_checkpoint.empty()) {
    PolicyNet warm = PolicyNet::load(cfg.init_checkpoint);
    if (!warm.config().same_topology(cfg.policy)) {
      throw std::invalid_argument("train_rl: init checkpoint topology mismatch");
    }
    net.parameters() = warm.parameters();
  }

  AdamOptimizer opt(net.parameter_count(), cfg.learning_rate);
  CurriculumState curriculum = CurriculumState::init(cfg.curriculum, static_cast<int>(corpus.size()));

  std::vector<WorkerState> states;
  states.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    states.emplace_back(cfg.env, Rng::derive_seed(cfg.seed, 1000 + w));
  }

  TrainRlResult result{std::move(net), curriculum, {}, 0, 0};
  if (log_csv) {
    *log_csv << "episode,mean_return,loss_half,horizon,r_thresh,wall_ms\n";
  }

  auto t0 = std::chrono::steady_clock::now();
  double window_return = 0.0;
  double window_loss = 0.0;
  long window_count = 0;
  long next_log = cfg.log_every;
  long next_checkpoint = cfg.checkpoint_every;

  while (result.episodes_run < cfg.episodes) {
    int batch = static_cast<int>(std::min<long>(cfg.batch_episodes,
                                                cfg.episodes - result.episodes_run));
    std::vector<std::optional<EpisodeTrace>> slots(batch);
    const CurriculumState snapshot = curriculum;

    if (workers == 1) {
      run_worker_round(result.net, states[0], corpus, snapshot, cfg.strokes_per_canvas, 0, 1,
                       batch, slots);
    } else {
      std::vector<std::thread> threads;
      for (int w = 0; w < workers; ++w) {
        threads.emplace_back(run_worker_round, std::cref(result.net), std::ref(states[w]),
                             std::cref(corpus), std::cref(snapshot), cfg.strokes_per_canvas, w,
                             workers, batch, std::ref(slots));
      }
      for (auto& t : threads) t.join();
    }

    std::vector<EpisodeTrace> traces;
    traces.reserve(batch);
    for (auto& slot : slots) {
      result.episodes_run += 1;
      if (!slot) {
        curriculum = advance_curriculum(std::move(curriculum), EpisodeStats{-1, 0.0});
        continue;
      }
      double ep_return = slot->total_reward();
      curriculum = advance_curriculum(std::move(curriculum),
                                      EpisodeStats{slot->reference_id, ep_return});
      window_return += ep_return;
      window_loss += slot->initial_loss * (1.0 - ep_return);
      window_count += 1;
      traces.push_back(std::move(*slot));
    }

    if (!traces.empty()) {
      if (cfg.lr_decay_floor < 1.0) {
        double progress = static_cast<double>(result.episodes_run) /
                          static_cast<double>(std::max<long>(1, cfg.episodes));
        double frac = 1.0 - (1.0 - cfg.lr_decay_floor) * std::min(1.0, progress);
        opt.set_learning_rate(cfg.learning_rate * frac);
      }
      for (int e = 0; e < cfg.update_epochs; ++e) {
        UpdateStats us = update_policy(result.net, traces, cfg.update, opt);
        if (us.skipped) result.skipped_updates += 1;
      }
    }

    if (log_csv && result.episodes_run >= next_log) {
      auto now = std::chrono::steady_clock::now();
      long wall =
          cfg.log_wall_time
              ? std::chrono::duration_cast<std::chrono::milliseconds>(now - t0).count()
              : 0;
      TrainLogRow row{result.episodes_run,
                      window_count > 0 ? window_return / window_count : 0.0,
                      window_count > 0 ? window_loss / window_count : 0.0,
                      curriculum.horizon, curriculum.r_thresh, wall};
      result.log.push_back(row);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g,%d,%.9g,%ld\n", row.episode,
                    row.mean_return, row.loss_half, row.horizon, row.r_thresh, row.wall_ms);
      *log_csv << buf;
      window_return = window_loss = 0.0;
      window_count = 0;
      next_log += cfg.log_every;
    }

    if (!cfg.output_dir.empty() && cfg.checkpoint_every > 0 &&
        result.episodes_run >= next_checkpoint) {
      std::filesystem::path dir(cfg.output_dir);
      result.net.save((dir / ("checkpoint_" + std::to_string(result.episodes_run) + ".bin"))
                          .string());
      next_checkpoint += cfg.checkpoint_every;
    }
  }

  result.curriculum = curriculum;
  if (!cfg.output_dir.empty()) {
    std::filesystem::path dir(cfg.output_dir);
    result.net.save((dir / "checkpoint_final.bin").string());
  }
  return result;
}

EvalSummary evaluate_policy(const PolicyNet& policy, const std::vector<Canvas>& references,
                            const EnvConfig& env_cfg, const EvalProtocol& protocol) {
  EvalSummary summary;
  Rng rng(protocol.seed);
  Canvas blank(env_cfg.canvas_h, env_cfg.canvas_w, env_cfg.channels, 0.0);
  for (const Canvas& ref : references) {
    double initial = loss_half(blank, ref);
    if (initial <= kInitialLossEpsilon) continue;
    for (int r = 0; r < protocol.repeats; ++r) {
      RolloutResult roll = rollout_image(policy, ref, env_cfg, protocol.rollout, rng);
      summary.mean_return += (initial - roll.final_loss) / initial;
      summary.mean_l2 += loss_l2(roll.canvas, ref);
      summary.mean_loss_half += roll.final_loss;
      summary.mean_strokes += static_cast<double>(roll.strokes.strokes.size());
      summary.rollouts += 1;
    }
  }
  if (summary.rollouts > 0) {
    summary.mean_return /= summary.rollouts;
    summary.mean_l2 /= summary.rollouts;
    summary.mean_loss_half /= summary.rollouts;
    summary.mean_strokes /= summary.rollouts;
  }
  return summary;
}

}  // namespace brushgym
