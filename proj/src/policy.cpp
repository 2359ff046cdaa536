#include "brushgym/policy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

namespace brushgym {

namespace {

constexpr char kMagic[8] = {'B', 'G', 'N', 'E', 'T', 'C', 'K', '1'};
constexpr uint32_t kVersion = 1;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double softplus(double x) {
  // log(1 + e^x), stable for large |x|
  return std::log1p(std::exp(-std::fabs(x))) + std::max(x, 0.0);
}

ConvGeom make_geom(int in_c, int in_h, int in_w, int k, int s, int out_c) {
  ConvGeom g;
  g.in_c = in_c;
  g.in_h = in_h;
  g.in_w = in_w;
  g.kernel = k;
  g.stride = s;
  g.out_c = out_c;
  g.out_h = (in_h - k) / s + 1;
  g.out_w = (in_w - k) / s + 1;
  if (in_h < k || in_w < k || g.out_h < 1 || g.out_w < 1) {
    throw std::invalid_argument("PolicyConfig: observation too small for the conv stack");
  }
  return g;
}

// Feature maps are (positions x channels) column-major matrices, so each
// channel plane is a contiguous column with position = i*w + j.
void im2col(const ConvGeom& g, const double* in, Eigen::MatrixXd& out) {
  out.resize(g.patch_rows(), g.positions());
  const size_t plane = static_cast<size_t>(g.in_h) * g.in_w;
  for (int oi = 0; oi < g.out_h; ++oi) {
    for (int oj = 0; oj < g.out_w; ++oj) {
      int p = oi * g.out_w + oj;
      double* dst = out.data() + static_cast<size_t>(p) * g.patch_rows();
      for (int c = 0; c < g.in_c; ++c) {
        const double* src = in + c * plane;
        for (int ki = 0; ki < g.kernel; ++ki) {
          const double* row = src + static_cast<size_t>(oi * g.stride + ki) * g.in_w + oj * g.stride;
          for (int kj = 0; kj < g.kernel; ++kj) *dst++ = row[kj];
        }
      }
    }
  }
}

// scatter-add of patch gradients back onto the (positions x channels) input
void col2im(const ConvGeom& g, const Eigen::MatrixXd& cols, Eigen::MatrixXd& d_in) {
  d_in.setZero(static_cast<Eigen::Index>(g.in_h) * g.in_w, g.in_c);
  const size_t plane = static_cast<size_t>(g.in_h) * g.in_w;
  for (int oi = 0; oi < g.out_h; ++oi) {
    for (int oj = 0; oj < g.out_w; ++oj) {
      int p = oi * g.out_w + oj;
      const double* src = cols.data() + static_cast<size_t>(p) * g.patch_rows();
      for (int c = 0; c < g.in_c; ++c) {
        double* dst = d_in.data() + c * plane;
        for (int ki = 0; ki < g.kernel; ++ki) {
          double* row = dst + static_cast<size_t>(oi * g.stride + ki) * g.in_w + oj * g.stride;
          for (int kj = 0; kj < g.kernel; ++kj) row[kj] += *src++;
        }
      }
    }
  }
}

Eigen::MatrixXd orthogonal_matrix(int rows, int cols, double gain, Rng& rng) {
  const int big = std::max(rows, cols), small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  Eigen::MatrixXd m = rows >= cols ? q : Eigen::MatrixXd(q.transpose());
  return gain * m;
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

SampledAction sample_action(const ActionDistribution& dist, Rng& rng) {
  SampledAction s;
  for (int i = 0; i < 6; ++i) {
    s.z(i) = dist.mean(i) + dist.std_dev(i) * rng.normal();
  }
  s.log_prob = squashed_log_prob(dist, s.z);
  auto v = std::array<double, 6>{};
  for (int i = 0; i < 6; ++i) v[i] = sigmoid(s.z(i));
  s.action = Action::from_vector(v);
  return s;
}

Action mean_action(const ActionDistribution& dist) {
  auto v = std::array<double, 6>{};
  for (int i = 0; i < 6; ++i) v[i] = sigmoid(dist.mean(i));
  return Action::from_vector(v);
}

double squashed_log_prob(const ActionDistribution& dist, const Vector6d& z) {
  double lp = 0.0;
  for (int i = 0; i < 6; ++i) {
    double sd = dist.std_dev(i);
    double u = (z(i) - dist.mean(i)) / sd;
    lp += -0.5 * u * u - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
    // change of variables: -log(da/dz) = -log(a(1-a)), stable form
    lp += softplus(z(i)) + softplus(-z(i));
  }
  return lp;
}

double gaussian_entropy(const ActionDistribution& dist) {
  double h = 0.0;
  for (int i = 0; i < 6; ++i) h += std::log(dist.std_dev(i)) + 0.5 * std::log(2.0 * M_PI * M_E);
  return h;
}

PolicyNet::PolicyNet(const PolicyConfig& cfg) : cfg_(cfg) {
  build_layout();
  params_.setZero(segs_.back().offset + static_cast<Eigen::Index>(segs_.back().rows) * segs_.back().cols);
  log_std().setConstant(cfg_.log_std_init);
}

void PolicyNet::build_layout() {
  g1_ = make_geom(cfg_.input_planes(), cfg_.obs_h, cfg_.obs_w, 8, 4, cfg_.conv1_filters);
  g2_ = make_geom(g1_.out_c, g1_.out_h, g1_.out_w, 4, 2, cfg_.conv2_filters);
  g3_ = make_geom(g2_.out_c, g2_.out_h, g2_.out_w, 3, 1, cfg_.conv3_filters);
  fc_in_ = g3_.out_c * g3_.positions();

  segs_.clear();
  Eigen::Index off = 0;
  auto add = [&](const char* name, int rows, int cols) {
    segs_.push_back({name, off, rows, cols});
    off += static_cast<Eigen::Index>(rows) * cols;
  };
  add("conv1.weight", g1_.out_c, g1_.patch_rows());
  add("conv1.bias", g1_.out_c, 1);
  add("conv2.weight", g2_.out_c, g2_.patch_rows());
  add("conv2.bias", g2_.out_c, 1);
  add("conv3.weight", g3_.out_c, g3_.patch_rows());
  add("conv3.bias", g3_.out_c, 1);
  add("fc.weight", cfg_.fc_units, fc_in_);
  add("fc.bias", cfg_.fc_units, 1);
  add("mean_head.weight", 6, cfg_.fc_units);
  add("mean_head.bias", 6, 1);
  add("value_head.weight", 1, cfg_.fc_units);
  add("value_head.bias", 1, 1);
  add("log_std", 6, 1);
}

Eigen::Map<Eigen::MatrixXd> PolicyNet::mat(int i) {
  const Segment& s = segs_[i];
  return {params_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<const Eigen::MatrixXd> PolicyNet::mat(int i) const {
  const Segment& s = segs_[i];
  return {params_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<Eigen::VectorXd> PolicyNet::log_std() {
  const Segment& s = segs_[kLogStd];
  return {params_.data() + s.offset, s.rows};
}

Eigen::Map<const Eigen::VectorXd> PolicyNet::log_std() const {
  const Segment& s = segs_[kLogStd];
  return {params_.data() + s.offset, s.rows};
}

void PolicyNet::init_weights(Rng& rng) {
  const double root2 = std::sqrt(2.0);
  mat(kC1W) = orthogonal_matrix(segs_[kC1W].rows, segs_[kC1W].cols, root2, rng);
  mat(kC2W) = orthogonal_matrix(segs_[kC2W].rows, segs_[kC2W].cols, root2, rng);
  mat(kC3W) = orthogonal_matrix(segs_[kC3W].rows, segs_[kC3W].cols, root2, rng);
  mat(kFcW) = orthogonal_matrix(segs_[kFcW].rows, segs_[kFcW].cols, root2, rng);
  mat(kMeanW) = orthogonal_matrix(6, cfg_.fc_units, 0.01, rng);
  mat(kValueW) = orthogonal_matrix(1, cfg_.fc_units, 1.0, rng);
  mat(kC1B).setZero();
  mat(kC2B).setZero();
  mat(kC3B).setZero();
  mat(kFcB).setZero();
  mat(kMeanB).setZero();
  mat(kValueB).setZero();
  log_std().setConstant(cfg_.log_std_init);
}

PolicyNet::Output PolicyNet::forward(std::span<const double> obs) const {
  ForwardCache cache;
  return forward(obs, cache);
}

PolicyNet::Output PolicyNet::forward(std::span<const double> obs, ForwardCache& cache) const {
  if (static_cast<Eigen::Index>(obs.size()) !=
      static_cast<Eigen::Index>(cfg_.input_planes()) * cfg_.obs_h * cfg_.obs_w) {
    throw std::invalid_argument("PolicyNet::forward: observation shape mismatch");
  }
  for (double v : obs) {
    if (!std::isfinite(v)) throw std::invalid_argument("PolicyNet::forward: non-finite input");
  }

  im2col(g1_, obs.data(), cache.col1);
  cache.a1.noalias() = cache.col1.transpose() * mat(kC1W).transpose();
  cache.a1.rowwise() += mat(kC1B).col(0).transpose();
  cache.a1 = cache.a1.cwiseMax(0.0);

  im2col(g2_, cache.a1.data(), cache.col2);
  cache.a2.noalias() = cache.col2.transpose() * mat(kC2W).transpose();
  cache.a2.rowwise() += mat(kC2B).col(0).transpose();
  cache.a2 = cache.a2.cwiseMax(0.0);

  im2col(g3_, cache.a2.data(), cache.col3);
  cache.a3.noalias() = cache.col3.transpose() * mat(kC3W).transpose();
  cache.a3.rowwise() += mat(kC3B).col(0).transpose();
  cache.a3 = cache.a3.cwiseMax(0.0);

  Eigen::Map<const Eigen::VectorXd> a3_flat(cache.a3.data(), fc_in_);
  cache.fc_act.noalias() = mat(kFcW) * a3_flat;
  cache.fc_act += mat(kFcB).col(0);
  cache.fc_act = cache.fc_act.cwiseMax(0.0);

  cache.mean.noalias() = mat(kMeanW) * cache.fc_act;
  cache.mean += mat(kMeanB).col(0);
  cache.value = (mat(kValueW) * cache.fc_act)(0) + mat(kValueB)(0, 0);

  Output out;
  out.dist.mean = cache.mean;
  out.dist.std_dev = log_std().array().exp();
  out.value = cache.value;
  return out;
}

void PolicyNet::backward(std::span<const double> obs, const ForwardCache& cache,
                         const Vector6d& d_mean, double d_value, Eigen::VectorXd& grads) const {
  if (grads.size() != params_.size()) {
    throw std::invalid_argument("PolicyNet::backward: gradient buffer size mismatch");
  }
  auto gmat = [&](int i) {
    const Segment& s = segs_[i];
    return Eigen::Map<Eigen::MatrixXd>(grads.data() + s.offset, s.rows, s.cols);
  };

  // heads
  gmat(kMeanW).noalias() += d_mean * cache.fc_act.transpose();
  gmat(kMeanB).col(0) += d_mean;
  gmat(kValueW).noalias() += d_value * cache.fc_act.transpose();
  gmat(kValueB)(0, 0) += d_value;

  Eigen::VectorXd d_fc = mat(kMeanW).transpose() * d_mean;
  d_fc.noalias() += mat(kValueW).transpose() * Eigen::Matrix<double, 1, 1>(d_value);
  d_fc = (cache.fc_act.array() > 0.0).select(d_fc, 0.0);

  Eigen::Map<const Eigen::VectorXd> a3_flat(cache.a3.data(), fc_in_);
  gmat(kFcW).noalias() += d_fc * a3_flat.transpose();
  gmat(kFcB).col(0) += d_fc;

  Eigen::VectorXd d_a3_flat = mat(kFcW).transpose() * d_fc;
  Eigen::Map<Eigen::MatrixXd> d_a3(d_a3_flat.data(), g3_.positions(), g3_.out_c);
  Eigen::MatrixXd d_pre3 = (cache.a3.array() > 0.0).select(d_a3, 0.0);

  gmat(kC3W).noalias() += d_pre3.transpose() * cache.col3.transpose();
  gmat(kC3B).col(0) += d_pre3.colwise().sum().transpose();
  Eigen::MatrixXd d_col3 = mat(kC3W).transpose() * d_pre3.transpose();
  Eigen::MatrixXd d_a2;
  col2im(g3_, d_col3, d_a2);

  Eigen::MatrixXd d_pre2 = (cache.a2.array() > 0.0).select(d_a2, 0.0);
  gmat(kC2W).noalias() += d_pre2.transpose() * cache.col2.transpose();
  gmat(kC2B).col(0) += d_pre2.colwise().sum().transpose();
  Eigen::MatrixXd d_col2 = mat(kC2W).transpose() * d_pre2.transpose();
  Eigen::MatrixXd d_a1;
  col2im(g2_, d_col2, d_a1);

  Eigen::MatrixXd d_pre1 = (cache.a1.array() > 0.0).select(d_a1, 0.0);
  gmat(kC1W).noalias() += d_pre1.transpose() * cache.col1.transpose();
  gmat(kC1B).col(0) += d_pre1.colwise().sum().transpose();
  // gradients w.r.t. the observation are not needed

  (void)obs;
}

void PolicyNet::copy_trunk_and_policy_head(const PolicyNet& src) {
  if (!cfg_.same_topology(src.cfg_)) {
    throw std::invalid_argument("copy_trunk_and_policy_head: topology mismatch");
  }
  for (int i = kC1W; i <= kMeanB; ++i) {
    const Segment& s = segs_[i];
    params_.segment(s.offset, static_cast<Eigen::Index>(s.rows) * s.cols) =
        src.params_.segment(s.offset, static_cast<Eigen::Index>(s.rows) * s.cols);
  }
}

void PolicyNet::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_raw<uint32_t>(out, kVersion);
  for (int v : {cfg_.obs_h, cfg_.obs_w, cfg_.image_channels, cfg_.conv1_filters,
                cfg_.conv2_filters, cfg_.conv3_filters, cfg_.fc_units}) {
    write_raw<uint32_t>(out, static_cast<uint32_t>(v));
  }
  write_raw<uint32_t>(out, static_cast<uint32_t>(segs_.size()));
  for (const Segment& s : segs_) {
    write_raw<uint8_t>(out, static_cast<uint8_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    write_raw<uint32_t>(out, static_cast<uint32_t>(s.rows));
    write_raw<uint32_t>(out, static_cast<uint32_t>(s.cols));
    Eigen::Index n = static_cast<Eigen::Index>(s.rows) * s.cols;
    for (Eigen::Index i = 0; i < n; ++i) {
      write_raw<float>(out, static_cast<float>(params_[s.offset + i]));
    }
  }
  if (!out) throw std::runtime_error("failed to write " + path);
}

PolicyNet PolicyNet::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a policy checkpoint: " + path);
  }
  if (read_raw<uint32_t>(in) != kVersion) {
    throw std::runtime_error("unsupported checkpoint version in " + path);
  }
  PolicyConfig cfg;
  cfg.obs_h = static_cast<int>(read_raw<uint32_t>(in));
  cfg.obs_w = static_cast<int>(read_raw<uint32_t>(in));
  cfg.image_channels = static_cast<int>(read_raw<uint32_t>(in));
  cfg.conv1_filters = static_cast<int>(read_raw<uint32_t>(in));
  cfg.conv2_filters = static_cast<int>(read_raw<uint32_t>(in));
  cfg.conv3_filters = static_cast<int>(read_raw<uint32_t>(in));
  cfg.fc_units = static_cast<int>(read_raw<uint32_t>(in));

  PolicyNet net(cfg);
  uint32_t seg_count = read_raw<uint32_t>(in);
  if (seg_count != net.segs_.size()) {
    throw std::runtime_error("checkpoint segment table mismatch in " + path);
  }
  for (const Segment& s : net.segs_) {
    uint8_t name_len = read_raw<uint8_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    uint32_t rows = read_raw<uint32_t>(in);
    uint32_t cols = read_raw<uint32_t>(in);
    if (!in || name != s.name || rows != static_cast<uint32_t>(s.rows) ||
        cols != static_cast<uint32_t>(s.cols)) {
      throw std::runtime_error("checkpoint segment " + s.name + " mismatch in " + path);
    }
    Eigen::Index n = static_cast<Eigen::Index>(s.rows) * s.cols;
    for (Eigen::Index i = 0; i < n; ++i) {
      net.params_[s.offset + i] = static_cast<double>(read_raw<float>(in));
    }
  }
  return net;
}

void AdamOptimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("AdamOptimizer: size mismatch");
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grads;
  v_ = beta2_ * v_.array() + (1.0 - beta2_) * grads.array().square();
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

}  // namespace brushgym
