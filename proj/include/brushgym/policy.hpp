#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "brushgym/canvas.hpp"
#include "brushgym/rng.hpp"

namespace brushgym {

using Vector6d = Eigen::Matrix<double, 6, 1>;

// Convolution trunk topology: three valid (unpadded) conv layers with fixed
// kernels 8/4/3 and strides 4/2/1, then one fully-connected layer feeding a
// 6-way action-mean head, a scalar value head and a state-independent
// log-std vector. The default sizes are the full 64/64/64 + 512 stack; the
// "desk" preset shrinks every stage but keeps the topology.
struct PolicyConfig {
  int obs_h = 84;
  int obs_w = 84;
  int image_channels = 1;  // channels of one window; the net sees 2x (canvas + reference)
  int conv1_filters = 64;
  int conv2_filters = 64;
  int conv3_filters = 64;
  int fc_units = 512;
  double log_std_init = -0.5;

  int input_planes() const { return 2 * image_channels; }

  static PolicyConfig desk(int obs_h, int obs_w, int image_channels) {
    PolicyConfig c;
    c.obs_h = obs_h;
    c.obs_w = obs_w;
    c.image_channels = image_channels;
    c.conv1_filters = 16;
    c.conv2_filters = 16;
    c.conv3_filters = 16;
    c.fc_units = 128;
    return c;
  }

  bool same_topology(const PolicyConfig& o) const {
    return obs_h == o.obs_h && obs_w == o.obs_w && image_channels == o.image_channels &&
           conv1_filters == o.conv1_filters && conv2_filters == o.conv2_filters &&
           conv3_filters == o.conv3_filters && fc_units == o.fc_units;
  }
};

struct ActionDistribution {
  Vector6d mean;
  Vector6d std_dev;  // strictly positive
};

struct SampledAction {
  Action action;    // sigmoid-squashed sample, components in (0,1)
  Vector6d z;       // pre-squash Gaussian draw
  double log_prob;  // density of the squashed sample
};

// Gaussian draw squashed through a sigmoid, with the log-density of the
// squashed variable.
SampledAction sample_action(const ActionDistribution& dist, Rng& rng);

// Deterministic action: squash(mean).
Action mean_action(const ActionDistribution& dist);

// Log-density of a previously drawn pre-squash sample z under dist,
// including the squash Jacobian term.
double squashed_log_prob(const ActionDistribution& dist, const Vector6d& z);

// Entropy of the pre-squash diagonal Gaussian.
double gaussian_entropy(const ActionDistribution& dist);

struct ConvGeom {
  int in_c = 0, in_h = 0, in_w = 0;
  int kernel = 0, stride = 0;
  int out_c = 0, out_h = 0, out_w = 0;
  int patch_rows() const { return in_c * kernel * kernel; }
  int positions() const { return out_h * out_w; }
};

// Scratch space for one forward pass; reuse across steps to avoid
// reallocation in the rollout loop.
struct ForwardCache {
  Eigen::MatrixXd col1, col2, col3;  // im2col patches per conv layer
  Eigen::MatrixXd a1, a2, a3;        // post-ReLU feature maps (positions x channels)
  Eigen::VectorXd fc_act;            // post-ReLU fully-connected activations
  Eigen::VectorXd mean;
  double value = 0.0;
};

class PolicyNet {
 public:
  explicit PolicyNet(const PolicyConfig& cfg);

  // Orthogonal init, gain sqrt(2) in the trunk, 0.01 on the action-mean head
  // so early actions sit near mid-range, 1.0 on the value head.
  void init_weights(Rng& rng);

  const PolicyConfig& config() const { return cfg_; }
  const ConvGeom& geom1() const { return g1_; }
  const ConvGeom& geom2() const { return g2_; }
  const ConvGeom& geom3() const { return g3_; }

  struct Output {
    ActionDistribution dist;
    double value = 0.0;
  };

  // obs is the planar (2C x h x w) tensor from Observation::to_tensor().
  Output forward(std::span<const double> obs) const;
  Output forward(std::span<const double> obs, ForwardCache& cache) const;

  // Accumulates d(objective)/d(params) into grads given upstream gradients
  // with respect to the action mean and the value output. grads must have
  // parameter_count() entries. Gradients of log_std are the caller's job
  // (the vector feeds the outputs directly).
  void backward(std::span<const double> obs, const ForwardCache& cache, const Vector6d& d_mean,
                double d_value, Eigen::VectorXd& grads) const;

  Eigen::Index parameter_count() const { return params_.size(); }
  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  // Named parameter segments, in serialization order.
  struct Segment {
    std::string name;
    Eigen::Index offset;
    int rows, cols;  // cols == 1 for bias vectors
  };
  const std::vector<Segment>& segments() const { return segs_; }

  Eigen::Map<Eigen::VectorXd> log_std();
  Eigen::Map<const Eigen::VectorXd> log_std() const;

  // Copies the conv trunk, fully-connected layer and action-mean head from
  // another net with identical topology. Value head and log-std stay as-is.
  void copy_trunk_and_policy_head(const PolicyNet& src);

  // Versioned binary checkpoint: magic, topology table, little-endian f32
  // payload per segment. See README for the exact layout.
  void save(const std::string& path) const;
  static PolicyNet load(const std::string& path);

 private:
  Eigen::Map<Eigen::MatrixXd> mat(int seg_idx);
  Eigen::Map<const Eigen::MatrixXd> mat(int seg_idx) const;

  void build_layout();

  PolicyConfig cfg_;
  ConvGeom g1_, g2_, g3_;
  int fc_in_ = 0;
  std::vector<Segment> segs_;
  Eigen::VectorXd params_;

  // segment indices, fixed by build_layout()
  enum SegIdx {
    kC1W, kC1B, kC2W, kC2B, kC3W, kC3B,
    kFcW, kFcB, kMeanW, kMeanB, kValueW, kValueB, kLogStd,
    kSegCount
  };
};

// Adam with bias correction; moment buffers match the net's flat parameters.
class AdamOptimizer {
 public:
  AdamOptimizer(Eigen::Index n, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grads);
  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Eigen::VectorXd m_, v_;
};

}  // namespace brushgym
