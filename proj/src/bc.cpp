#include "brushgym/bc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"

namespace brushgym {

namespace {

constexpr char kDatasetMagic[8] = {'B', 'G', 'D', 'E', 'M', 'O', '0', '1'};

double wrap_unit(double x) {
  double f = x - std::floor(x);
  return f == 1.0 ? 0.0 : f;
}

// angle/length encoding of a displacement, inverse of action_displacement
Action chord_action(double dr, double dc, double l_max, double width, double ink) {
  Action a;
  double len = std::hypot(dr, dc);
  a.alpha = wrap_unit(std::atan2(dc, dr) / (2.0 * M_PI));
  a.length = std::min(1.0, len / l_max);
  a.width = width;
  a.color = {ink, ink, ink};
  return a;
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("demo dataset: truncated file");
  return v;
}

}  // namespace

std::array<double, 2> parse_svg_extent(std::string_view document) {
  size_t vb = document.find("viewBox");
  if (vb != std::string_view::npos) {
    size_t q1 = document.find_first_of("\"'", vb);
    if (q1 != std::string_view::npos) {
      size_t q2 = document.find(document[q1], q1 + 1);
      if (q2 != std::string_view::npos) {
        std::string text(document.substr(q1 + 1, q2 - q1 - 1));
        double x0, y0, w, h;
        if (std::sscanf(text.c_str(), "%lf %lf %lf %lf", &x0, &y0, &w, &h) == 4 && w > 0 &&
            h > 0) {
          return {w, h};
        }
      }
    }
  }
  return {109.0, 109.0};  // KanjiVG default
}

std::vector<StrokePolyline> scale_strokes_to_canvas(std::span<const StrokePolyline> strokes,
                                                    double glyph_w, double glyph_h,
                                                    const EnvConfig& env, double margin_frac) {
  double usable_h = env.canvas_h * (1.0 - 2.0 * margin_frac);
  double usable_w = env.canvas_w * (1.0 - 2.0 * margin_frac);
  double scale = std::min(usable_h / glyph_h, usable_w / glyph_w);
  double off_r = 0.5 * (env.canvas_h - glyph_h * scale);
  double off_c = 0.5 * (env.canvas_w - glyph_w * scale);

  std::vector<StrokePolyline> out;
  out.reserve(strokes.size());
  for (const auto& s : strokes) {
    StrokePolyline t;
    t.stroke_index = s.stroke_index;
    t.points.reserve(s.points.size());
    for (const auto& p : s.points) {
      t.points.push_back({p[1] * scale + off_r, p[0] * scale + off_c});  // (row, col)
    }
    out.push_back(std::move(t));
  }
  return out;
}

DemoBuild strokes_to_pairs(std::span<const StrokePolyline> strokes_canvas, const EnvConfig& env,
                           const DemoOptions& options) {
  const double l_max = env.brush.l_max;
  DemoBuild build;
  if (strokes_canvas.empty()) {
    build.reference = Canvas(env.canvas_h, env.canvas_w, env.channels, 0.0);
    return build;
  }

  // pass 1: geometry only, one action per chord
  StrokeActions demo;
  demo.start = {strokes_canvas[0].points[0][0], strokes_canvas[0].points[0][1]};
  std::array<double, 2> pos = demo.start;
  std::vector<bool> pen_up_flags;

  auto emit = [&](const std::array<double, 2>& target, double width) {
    // chords recomputed against the running rendered position so action
    // quantization never accumulates drift
    std::array<double, 2> goal = target;
    double len = std::hypot(goal[0] - pos[0], goal[1] - pos[1]);
    int hops = std::max(1, static_cast<int>(std::ceil(len / l_max)));
    std::array<double, 2> from = pos;
    for (int h = 1; h <= hops; ++h) {
      double t = static_cast<double>(h) / hops;
      std::array<double, 2> next = {from[0] + (goal[0] - from[0]) * t,
                                    from[1] + (goal[1] - from[1]) * t};
      Action a = chord_action(next[0] - pos[0], next[1] - pos[1], l_max, width, options.ink);
      demo.actions.push_back(a);
      pen_up_flags.push_back(width <= 0.0);
      BrushState bs{pos[0], pos[1], false};
      bs = update_position(bs, a, env.brush);
      pos = {bs.row, bs.col};
    }
  };

  auto deviation = [](const std::array<double, 2>& p, const std::array<double, 2>& a,
                      const std::array<double, 2>& b) {
    double vx = b[0] - a[0], vy = b[1] - a[1];
    double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p[0] - (a[0] + t * vx), p[1] - (a[1] + t * vy));
  };

  for (const auto& stroke : strokes_canvas) {
    if (stroke.points.size() < 2) continue;
    // transit to the stroke start with the pen up
    double gap = std::hypot(stroke.points[0][0] - pos[0], stroke.points[0][1] - pos[1]);
    if (gap > 1e-9) emit(stroke.points[0], 0.0);

    // Greedy chording: extend each chord along the polyline until it would
    // exceed l_max of arc length or stray from the passed vertices by more
    // than the deviation budget, then emit and restart from the cut.
    std::array<double, 2> chord_start = pos;
    std::vector<std::array<double, 2>> passed;
    double arc = 0.0;
    std::array<double, 2> cursor = stroke.points[0];
    size_t i = 1;
    while (i < stroke.points.size()) {
      std::array<double, 2> target = stroke.points[i];
      double seg = std::hypot(target[0] - cursor[0], target[1] - cursor[1]);
      if (seg < 1e-12) {
        ++i;
        continue;
      }
      if (arc + seg > l_max + 1e-12) {
        // cut inside this segment at the arc budget
        double t = (l_max - arc) / seg;
        std::array<double, 2> cut = {cursor[0] + (target[0] - cursor[0]) * t,
                                     cursor[1] + (target[1] - cursor[1]) * t};
        emit(cut, options.w_demo);
        chord_start = pos;
        passed.clear();
        arc = 0.0;
        cursor = cut;
        continue;
      }
      bool strays = false;
      for (const auto& p : passed) {
        if (deviation(p, chord_start, target) > options.chord_deviation) {
          strays = true;
          break;
        }
      }
      if (strays) {
        // close the chord at the last accepted vertex
        emit(cursor, options.w_demo);
        chord_start = pos;
        passed.clear();
        arc = 0.0;
        continue;
      }
      arc += seg;
      passed.push_back(target);
      cursor = target;
      ++i;
    }
    double tail = std::hypot(cursor[0] - pos[0], cursor[1] - pos[1]);
    if (tail > 1e-9) emit(cursor, options.w_demo);
  }

  build.strokes.canvas_h = env.canvas_h;
  build.strokes.canvas_w = env.canvas_w;
  build.strokes.channels = env.channels;
  build.strokes.brush = env.brush;
  build.strokes.strokes.push_back(demo);

  // pass 2: render once for the reference, then replay for observations
  build.reference = render_stroke_list(build.strokes);

  Canvas canvas(env.canvas_h, env.canvas_w, env.channels, 0.0);
  BrushState brush{demo.start[0], demo.start[1], false};
  build.pairs.reserve(demo.actions.size());
  for (size_t i = 0; i < demo.actions.size(); ++i) {
    DemoPair pair;
    pair.target = demo.actions[i];
    pair.pen_up = pen_up_flags[i];
    pair.obs = extract_observation(canvas, build.reference, brush, env.window_h, env.window_w)
                   .to_tensor();
    render_action(canvas, brush, demo.actions[i], env.brush);
    build.pairs.push_back(std::move(pair));
  }
  if (!(canvas == build.reference)) {
    throw std::logic_error("strokes_to_pairs: demo replay diverged from its reference");
  }
  return build;
}

std::vector<DemoPair> augment_demo_pairs(const DemoBuild& build, const EnvConfig& env,
                                         int variants_per_step, double max_jitter_px, Rng& rng) {
  std::vector<DemoPair> out;
  if (build.strokes.strokes.empty() || variants_per_step <= 0) return out;
  const StrokeActions& demo = build.strokes.strokes[0];

  Canvas canvas(env.canvas_h, env.canvas_w, env.channels, 0.0);
  BrushState brush{demo.start[0], demo.start[1], false};
  for (size_t t = 0; t < demo.actions.size(); ++t) {
    BrushState next = update_position(brush, demo.actions[t], env.brush);
    for (int v = 0; v < variants_per_step; ++v) {
      double jr = rng.uniform(-max_jitter_px, max_jitter_px);
      double jc = rng.uniform(-max_jitter_px, max_jitter_px);
      BrushState off{brush.row + jr, brush.col + jc, brush.pen_down};
      DemoPair pair;
      pair.pen_up = demo.actions[t].width <= 0.0;
      pair.obs = extract_observation(canvas, build.reference, off, env.window_h, env.window_w)
                     .to_tensor();
      // steer from the perturbed position back to the demo's next waypoint
      double dr = next.row - off.row, dc = next.col - off.col;
      Action corrected = demo.actions[t];
      corrected.alpha = [&] {
        double a = std::atan2(dc, dr) / (2.0 * M_PI);
        double f = a - std::floor(a);
        return f == 1.0 ? 0.0 : f;
      }();
      corrected.length = std::min(1.0, std::hypot(dr, dc) / env.brush.l_max);
      pair.target = corrected;
      out.push_back(std::move(pair));
    }
    render_action(canvas, brush, demo.actions[t], env.brush);
  }
  return out;
}

void write_demo_dataset(std::span<const DemoPair> pairs, const EnvConfig& env,
                        const DemoOptions& options, const std::string& bin_path) {
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + bin_path + " for writing");
  out.write(kDatasetMagic, sizeof(kDatasetMagic));
  write_raw<uint32_t>(out, 1);
  for (int v : {env.window_h, env.window_w, env.channels, env.canvas_h, env.canvas_w}) {
    write_raw<uint32_t>(out, static_cast<uint32_t>(v));
  }
  for (double v : {env.brush.l_max, env.brush.w_max, env.brush.opacity}) {
    write_raw<double>(out, v);
  }
  write_raw<uint32_t>(out, static_cast<uint32_t>(pairs.size()));
  const uint32_t obs_len = static_cast<uint32_t>(2 * env.channels * env.window_h * env.window_w);
  for (const DemoPair& p : pairs) {
    if (p.obs.size() != obs_len) {
      throw std::invalid_argument("write_demo_dataset: observation length mismatch");
    }
    uint32_t payload = 4 + 1 + 3 + 6 * 4 + obs_len * 4;
    write_raw<uint32_t>(out, payload);
    write_raw<uint32_t>(out, static_cast<uint32_t>(p.glyph_id));
    write_raw<uint8_t>(out, p.pen_up ? 1 : 0);
    for (int i = 0; i < 3; ++i) write_raw<uint8_t>(out, 0);
    for (double v : p.target.as_vector()) write_raw<float>(out, static_cast<float>(v));
    for (double v : p.obs) write_raw<float>(out, static_cast<float>(v));
  }
  if (!out) throw std::runtime_error("failed to write " + bin_path);

  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["records"] = pairs.size();
  manifest["window"] = {env.window_h, env.window_w};
  manifest["canvas"] = {env.canvas_h, env.canvas_w};
  manifest["channels"] = env.channels;
  manifest["brush"] = {{"l_max", env.brush.l_max},
                       {"w_max", env.brush.w_max},
                       {"opacity", env.brush.opacity}};
  manifest["w_demo"] = options.w_demo;
  manifest["ink"] = options.ink;
  std::ofstream mout(bin_path + ".json");
  if (!mout) throw std::runtime_error("cannot open " + bin_path + ".json for writing");
  mout << manifest.dump(2) << "\n";
}

std::vector<DemoPair> read_demo_dataset(const std::string& bin_path, EnvConfig* env_out) {
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open demo dataset " + bin_path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kDatasetMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a demo dataset: " + bin_path);
  }
  if (read_raw<uint32_t>(in) != 1) {
    throw std::runtime_error("unsupported demo dataset version in " + bin_path);
  }
  EnvConfig env;
  env.window_h = static_cast<int>(read_raw<uint32_t>(in));
  env.window_w = static_cast<int>(read_raw<uint32_t>(in));
  env.channels = static_cast<int>(read_raw<uint32_t>(in));
  env.canvas_h = static_cast<int>(read_raw<uint32_t>(in));
  env.canvas_w = static_cast<int>(read_raw<uint32_t>(in));
  env.brush.l_max = read_raw<double>(in);
  env.brush.w_max = read_raw<double>(in);
  env.brush.opacity = read_raw<double>(in);
  if (env_out) *env_out = env;

  uint32_t count = read_raw<uint32_t>(in);
  const uint32_t obs_len = static_cast<uint32_t>(2 * env.channels * env.window_h * env.window_w);
  std::vector<DemoPair> pairs;
  pairs.reserve(count);
  for (uint32_t r = 0; r < count; ++r) {
    uint32_t payload = read_raw<uint32_t>(in);
    if (payload != 4 + 1 + 3 + 6 * 4 + obs_len * 4) {
      throw std::runtime_error("demo dataset record size mismatch in " + bin_path);
    }
    DemoPair p;
    p.glyph_id = static_cast<int>(read_raw<uint32_t>(in));
    p.pen_up = read_raw<uint8_t>(in) != 0;
    for (int i = 0; i < 3; ++i) read_raw<uint8_t>(in);
    std::array<double, 6> act;
    for (double& v : act) v = static_cast<double>(read_raw<float>(in));
    p.target = Action::from_vector(act);
    p.obs.resize(obs_len);
    for (double& v : p.obs) v = static_cast<double>(read_raw<float>(in));
    pairs.push_back(std::move(p));
  }
  return pairs;
}

namespace {

// The angle component is circular: 0.999 and 0.001 are nearly the same
// heading. Plain differences would regress opposing branches to the
// reversed direction, so alpha errors are wrapped into [-0.5, 0.5).
double action_error(int k, double pred, double target) {
  double d = pred - target;
  if (k == 0) d -= std::round(d);
  return d;
}

}  // namespace

double bc_action_mse(const PolicyNet& net, std::span<const DemoPair> pairs) {
  if (pairs.empty()) return 0.0;
  ForwardCache cache;
  double total = 0.0;
  for (const DemoPair& p : pairs) {
    PolicyNet::Output out = net.forward(p.obs, cache);
    auto target = p.target.as_vector();
    for (int k = 0; k < 6; ++k) {
      double pred = 1.0 / (1.0 + std::exp(-out.dist.mean(k)));
      double d = action_error(k, pred, target[k]);
      total += d * d;
    }
  }
  return total / (6.0 * static_cast<double>(pairs.size()));
}

BcResult train_bc(PolicyNet& net, std::span<const DemoPair> dataset, const BcConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("train_bc: empty dataset");
  Rng rng(cfg.seed);

  // hold out whole glyphs when the corpus has several, single pairs otherwise
  std::set<int> glyph_ids;
  for (const auto& p : dataset) glyph_ids.insert(p.glyph_id);
  std::vector<size_t> train_idx, val_idx;
  BcResult result;
  if (glyph_ids.size() >= 3 && cfg.val_fraction > 0.0) {
    std::vector<int> ids(glyph_ids.begin(), glyph_ids.end());
    for (size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.uniform_int(static_cast<int>(i))]);
    size_t held = std::max<size_t>(1, static_cast<size_t>(std::lround(ids.size() * cfg.val_fraction)));
    std::set<int> held_set(ids.begin(), ids.begin() + static_cast<long>(held));
    result.held_out_glyphs.assign(held_set.begin(), held_set.end());
    for (size_t i = 0; i < dataset.size(); ++i) {
      (held_set.count(dataset[i].glyph_id) ? val_idx : train_idx).push_back(i);
    }
  } else {
    for (size_t i = 0; i < dataset.size(); ++i) train_idx.push_back(i);
    size_t held = static_cast<size_t>(std::lround(dataset.size() * cfg.val_fraction));
    for (size_t i = 0; i < held && train_idx.size() > 1; ++i) {
      val_idx.push_back(train_idx.back());
      train_idx.pop_back();
    }
  }
  if (train_idx.empty()) {
    train_idx = std::move(val_idx);
    val_idx.clear();
  }

  auto subset_mse = [&](const std::vector<size_t>& idx) {
    if (idx.empty()) return bc_action_mse(net, dataset);
    double total = 0.0;
    ForwardCache cache;
    for (size_t i : idx) {
      PolicyNet::Output out = net.forward(dataset[i].obs, cache);
      auto target = dataset[i].target.as_vector();
      for (int k = 0; k < 6; ++k) {
        double pred = 1.0 / (1.0 + std::exp(-out.dist.mean(k)));
        double d = action_error(k, pred, target[k]);
        total += d * d;
      }
    }
    return total / (6.0 * static_cast<double>(idx.size()));
  };

  AdamOptimizer opt(net.parameter_count(), cfg.learning_rate);
  Eigen::VectorXd grads(net.parameter_count());
  ForwardCache cache;

  result.val_curve.push_back(subset_mse(val_idx));
  Eigen::VectorXd best_params = net.parameters();
  double best_val = result.val_curve[0];
  result.best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // seeded shuffle
    for (size_t i = train_idx.size(); i > 1; --i) {
      std::swap(train_idx[i - 1], train_idx[rng.uniform_int(static_cast<int>(i))]);
    }
    double epoch_loss = 0.0;
    size_t seen = 0;
    for (size_t begin = 0; begin < train_idx.size(); begin += cfg.batch_size) {
      size_t end = std::min(train_idx.size(), begin + cfg.batch_size);
      grads.setZero();
      double batch_loss = 0.0;
      const double inv = 1.0 / (6.0 * static_cast<double>(end - begin));
      for (size_t i = begin; i < end; ++i) {
        const DemoPair& p = dataset[train_idx[i]];
        PolicyNet::Output out = net.forward(p.obs, cache);
        auto target = p.target.as_vector();
        Vector6d d_mean;
        for (int k = 0; k < 6; ++k) {
          double pred = 1.0 / (1.0 + std::exp(-out.dist.mean(k)));
          double diff = action_error(k, pred, target[k]);
          batch_loss += diff * diff * inv;
          d_mean(k) = 2.0 * diff * pred * (1.0 - pred) * inv;
        }
        net.backward(p.obs, cache, d_mean, 0.0, grads);
      }
      opt.step(net.parameters(), grads);
      epoch_loss += batch_loss * static_cast<double>(end - begin);
      seen += end - begin;
    }
    result.train_curve.push_back(seen > 0 ? epoch_loss / static_cast<double>(seen) : 0.0);
    result.val_curve.push_back(subset_mse(val_idx));
    if (result.val_curve.back() < best_val) {
      best_val = result.val_curve.back();
      best_params = net.parameters();
      result.best_epoch = epoch;
    }
  }
  net.parameters() = best_params;
  return result;
}

PolicyNet init_rl_from_bc(const PolicyNet& bc_net, double log_std_init, uint64_t value_seed) {
  PolicyConfig cfg = bc_net.config();
  cfg.log_std_init = log_std_init;
  PolicyNet net(cfg);
  Rng rng(value_seed);
  net.init_weights(rng);  // fresh value head (and everything else)
  net.copy_trunk_and_policy_head(bc_net);
  net.log_std().setConstant(log_std_init);
  return net;
}

ReplayResult replay_policy(const PolicyNet& net, const Canvas& reference,
                           std::array<double, 2> start, int steps, const EnvConfig& env_cfg) {
  PaintEnv env(env_cfg);
  env.set_reference(reference, 0);
  env.place_brush(start[0], start[1]);
  ReplayResult result;
  result.initial_loss = env.loss();
  ForwardCache cache;
  for (int t = 0; t < steps; ++t) {
    PolicyNet::Output out = net.forward(env.observe().to_tensor(), cache);
    env.apply(mean_action(out.dist));
  }
  result.canvas = env.canvas();
  result.final_loss = env.loss();
  return result;
}

}  // namespace brushgym
