#pragma once

#include <span>

#include "brushgym/canvas.hpp"

namespace brushgym {

// Episode-degenerate guard: references whose initial loss is below this are
// already matched and produce no usable reward signal.
inline constexpr double kInitialLossEpsilon = 1e-8;

struct RewardConfig {
  double gamma = 0.95;            // discount factor
  double reward_threshold = 0.0;  // early-stop threshold on per-step reward
  int t_max = 8;                  // maximum steps per trial
};

// Mean |s - s*|^(1/2). Sharper than L2 near zero, so matching exact
// intensities beats hedging with averages. In [0,1] for unit-interval images.
double loss_half(const Canvas& s, const Canvas& s_star);

// Mean squared difference, reported as the evaluation metric.
double loss_l2(const Canvas& s, const Canvas& s_star);

// Per-step reward (prev_loss - cur_loss) / initial_loss. Throws
// std::domain_error when initial_loss <= kInitialLossEpsilon; callers are
// expected to skip such episodes.
double step_reward(double prev_loss, double cur_loss, double initial_loss);

// Sum of r_t * gamma^t with the exponent starting at t = 1.
double discounted_return(std::span<const double> rewards, double gamma);

// Smallest 1-based index whose reward exceeds the threshold, capped at t_max;
// t_max when no step qualifies. The cap keeps the horizon monotone in the
// threshold.
int adaptive_horizon(std::span<const double> rewards, double r_thresh, int t_max);

}  // namespace brushgym
