#include "brushgym/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace brushgym {

namespace {

void check_same_shape(const Canvas& a, const Canvas& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("loss: dimension mismatch");
}

}  // namespace

double loss_half(const Canvas& s, const Canvas& s_star) {
  check_same_shape(s, s_star);
  const auto& a = s.data();
  const auto& b = s_star.data();
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += std::sqrt(std::fabs(a[i] - b[i]));
  return sum / static_cast<double>(a.size());
}

double loss_l2(const Canvas& s, const Canvas& s_star) {
  check_same_shape(s, s_star);
  const auto& a = s.data();
  const auto& b = s_star.data();
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

double step_reward(double prev_loss, double cur_loss, double initial_loss) {
  if (initial_loss <= kInitialLossEpsilon) {
    throw std::domain_error("step_reward: degenerate episode (initial loss ~ 0)");
  }
  return (prev_loss - cur_loss) / initial_loss;
}

double discounted_return(std::span<const double> rewards, double gamma) {
  double sum = 0.0;
  double g = 1.0;
  for (double r : rewards) {
    g *= gamma;  // exponent starts at 1
    sum += r * g;
  }
  return sum;
}

int adaptive_horizon(std::span<const double> rewards, double r_thresh, int t_max) {
  for (size_t i = 0; i < rewards.size(); ++i) {
    int idx = static_cast<int>(i) + 1;
    if (idx > t_max) break;
    if (rewards[i] > r_thresh) return idx;
  }
  return t_max;
}

}  // namespace brushgym
