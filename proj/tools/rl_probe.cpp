// Scratch experiment driver for training-speed and return measurements.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "brushgym/corpus.hpp"
#include "brushgym/rl.hpp"

using namespace brushgym;

int main(int argc, char** argv) {
  long episodes = argc > 1 ? std::atol(argv[1]) : 20000;
  uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 0;
  bool curriculum = argc > 3 ? std::atoi(argv[3]) != 0 : true;
  int stop_on_value = argc > 4 ? std::atoi(argv[4]) : 1;
  double l_max = argc > 5 ? std::atof(argv[5]) : 20.0;
  double w_max = argc > 6 ? std::atof(argv[6]) : 5.0;
  double entropy = argc > 7 ? std::atof(argv[7]) : 0.01;
  double lr = argc > 8 ? std::atof(argv[8]) : 1e-3;
  double r_thresh_final = argc > 9 ? std::atof(argv[9]) : 0.1;
  int batch = argc > 10 ? std::atoi(argv[10]) : 32;
  int spc = argc > 11 ? std::atoi(argv[11]) : 4;
  double lr_floor = argc > 12 ? std::atof(argv[12]) : 1.0;
  long grow = argc > 13 ? std::atol(argv[13]) : 1000;

  TrainRlConfig cfg;
  cfg.env = EnvConfig::with_window(32, 32, 1, 40);
  cfg.env.brush.l_max = l_max;
  cfg.env.brush.w_max = w_max;
  cfg.policy = PolicyConfig::desk(40, 40, 1);
  cfg.episodes = episodes;
  cfg.batch_episodes = batch;
  cfg.update_epochs = 4;
  cfg.learning_rate = lr;
  cfg.update.entropy_coef = entropy;
  cfg.lr_decay_floor = lr_floor;
  cfg.strokes_per_canvas = spc;
  cfg.workers = 2;
  cfg.seed = seed;
  cfg.log_every = 1000;
  cfg.curriculum.enabled = curriculum;
  cfg.curriculum.horizon_init = 1;
  cfg.curriculum.horizon_max = 8;
  cfg.curriculum.horizon_grow_every = grow;
  cfg.curriculum.r_thresh_final = r_thresh_final;
  cfg.curriculum.r_thresh_ramp_episodes = 10000;

  auto corpus = procedural_corpus(4, 32, 32, 20240901);

  EvalProtocol ep;
  ep.repeats = 5;
  ep.rollout.max_strokes = 8;
  ep.rollout.max_dabs = 8;
  ep.rollout.thresh_sim = 0.01;
  ep.rollout.stop_on_value = stop_on_value != 0;
  ep.seed = 555;

  PolicyNet untrained(cfg.policy);
  {
    Rng r(cfg.seed);
    untrained.init_weights(r);
  }
  EvalSummary before = evaluate_policy(untrained, corpus, cfg.env, ep);
  std::printf("untrained: return=%.4f l2=%.5f strokes=%.1f\n", before.mean_return, before.mean_l2,
              before.mean_strokes);

  auto t0 = std::chrono::steady_clock::now();
  std::ofstream log("/tmp/probe_log_" + std::to_string(seed) + (curriculum ? "_on" : "_off") +
                    ".csv");
  TrainRlResult result = train_rl(cfg, corpus, &log);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  EvalSummary after = evaluate_policy(result.net, corpus, cfg.env, ep);
  std::printf(
      "trained(seed=%llu curriculum=%d): return=%.4f l2=%.5f strokes=%.1f  wall=%.1fs  "
      "eps/s=%.0f skipped=%d\n",
      static_cast<unsigned long long>(seed), curriculum ? 1 : 0, after.mean_return, after.mean_l2,
      after.mean_strokes, secs, episodes / secs, result.skipped_updates);

  for (int budget : {8, 12, 16, 24}) {
    EvalProtocol ep_b = ep;
    ep_b.rollout.max_strokes = budget;
    EvalSummary s_on = evaluate_policy(result.net, corpus, cfg.env, ep_b);
    ep_b.rollout.stop_on_value = false;
    EvalSummary s_off = evaluate_policy(result.net, corpus, cfg.env, ep_b);
    std::printf("budget=%2d: vgate return=%.4f strokes=%.1f | free return=%.4f\n", budget,
                s_on.mean_return, s_on.mean_strokes, s_off.mean_return);
  }

  // behavior probes on the disk reference
  auto probe = [&](const char* tag, double row, double col) {
    PaintEnv env(cfg.env);
    env.set_reference(corpus[0], 0);
    env.place_brush(row, col);
    auto out = result.net.forward(env.observe().to_tensor());
    Action a = mean_action(out.dist);
    std::printf("%s: alpha=%.3f len=%.3f width=%.3f color=%.3f value=%.3f\n", tag, a.alpha,
                a.length, a.width, a.color[0], out.value);
  };
  probe("on-disk  ", 16, 16);
  probe("disk-edge", 16, 22);
  probe("far-corner", 2, 2);
  std::printf("log_std: ");
  for (int i = 0; i < 6; ++i) std::printf("%.3f ", result.net.log_std()(i));
  std::printf("\n");
  std::printf("last log rows:\n");
  size_t n = result.log.size();
  for (size_t i = n >= 4 ? n - 4 : 0; i < n; ++i) {
    std::printf("  ep=%ld ret=%.4f loss=%.4f hor=%d thr=%.3f\n", result.log[i].episode,
                result.log[i].mean_return, result.log[i].loss_half, result.log[i].horizon,
                result.log[i].r_thresh);
  }
  return 0;
}
