#include "brushgym/sim2real.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace brushgym {

using nlohmann::json;

// ---------------------------------------------------------------------------
// projection

Eigen::Vector2d ProjectionTransform::invert_xy(double x_robot, double y_robot) const {
  Eigen::Matrix2d a = matrix.topLeftCorner<2, 2>();
  Eigen::Vector2d t(matrix(0, 2), matrix(1, 2));
  return a.inverse() * (Eigen::Vector2d(x_robot, y_robot) - t);
}

ProjectionTransform fit_projection(std::span<const Correspondence> correspondences) {
  const Eigen::Index n = static_cast<Eigen::Index>(correspondences.size());
  if (n < 3) {
    throw std::invalid_argument("fit_projection: need at least 3 correspondences");
  }
  Eigen::MatrixXd a(n, 3);
  Eigen::MatrixXd b(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.row(i) << correspondences[i].first.x(), correspondences[i].first.y(), 1.0;
    b.row(i) = correspondences[i].second.transpose();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) {
    throw std::invalid_argument("fit_projection: collinear 2D points (rank-deficient fit)");
  }

  ProjectionTransform t;
  Eigen::MatrixXd coeff = qr.solve(b);  // (3 x 3): columns are per-output-dim fits
  t.matrix = coeff.transpose();
  Eigen::MatrixXd residual = a * coeff - b;
  t.rms_residual = std::sqrt(residual.squaredNorm() / static_cast<double>(n));
  return t;
}

Eigen::Vector3d apply_projection(const ProjectionTransform& t, const Eigen::Vector2d& p) {
  return t.apply(p);
}

// ---------------------------------------------------------------------------
// brush simulator

double BrushSimulator::true_width(double pressure) const {
  double p = std::max(0.0, pressure);
  double x = std::min(p / cfg_.p_sat, 1.0);
  return cfg_.w_max * std::pow(x, cfg_.kappa);
}

double BrushSimulator::stroke_width(double pressure) {
  ++width_calls_;
  return true_width(pressure) + cfg_.noise_sigma * rng_.normal();
}

double BrushSimulator::deformation(double pressure) {
  ++deformation_calls_;
  return true_width(pressure) + cfg_.noise_sigma * rng_.normal();
}

// ---------------------------------------------------------------------------
// pressure-limit knee

KneeFit fit_pressure_knee(std::span<const std::pair<double, double>> samples) {
  const int n = static_cast<int>(samples.size());
  if (n < 4) throw std::invalid_argument("fit_pressure_knee: need at least 4 samples");
  for (int i = 1; i < n; ++i) {
    if (!(samples[i].first > samples[i - 1].first)) {
      throw std::invalid_argument("fit_pressure_knee: pressures must be strictly increasing");
    }
  }

  auto line_fit = [&](int lo, int hi, double* slope, double* intercept) {
    // least squares over samples[lo..hi]
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = hi - lo + 1;
    for (int i = lo; i <= hi; ++i) {
      sx += samples[i].first;
      sy += samples[i].second;
      sxx += samples[i].first * samples[i].first;
      sxy += samples[i].first * samples[i].second;
    }
    double det = m * sxx - sx * sx;
    *slope = (m * sxy - sx * sy) / det;
    *intercept = (sy - *slope * sx) / m;
    double sse = 0;
    for (int i = lo; i <= hi; ++i) {
      double e = samples[i].second - (*slope * samples[i].first + *intercept);
      sse += e * e;
    }
    return sse;
  };

  double sum_y2 = 0.0;
  for (const auto& s : samples) sum_y2 += s.second * s.second;

  KneeFit best;
  best.sse = std::numeric_limits<double>::infinity();
  // rising segment needs >= 2 points, flat segment >= 2 points
  for (int k = 1; k <= n - 3; ++k) {
    double slope, intercept;
    double sse = line_fit(0, k, &slope, &intercept);
    double level = 0;
    for (int i = k + 1; i < n; ++i) level += samples[i].second;
    level /= (n - 1 - k);
    for (int i = k + 1; i < n; ++i) {
      double e = samples[i].second - level;
      sse += e * e;
    }
    if (sse < best.sse) {
      best = KneeFit{0.0, slope, intercept, level, sse};
    }
  }

  double line_slope, line_intercept;
  double sse_line = line_fit(0, n - 1, &line_slope, &line_intercept);
  // a single regime explains the data just as well: no knee to find
  if (sse_line <= 2.0 * best.sse + 1e-12 * sum_y2 + 1e-18) {
    throw NoKneeError("fit_pressure_knee: samples span a single regime");
  }
  if (best.slope <= 0.0) {
    throw NoKneeError("fit_pressure_knee: rising segment has non-positive slope");
  }
  best.p_sat = (best.level - best.intercept) / best.slope;
  if (best.p_sat <= samples.front().first || best.p_sat >= samples.back().first) {
    throw NoKneeError("fit_pressure_knee: breakpoint outside the sampled range");
  }
  return best;
}

double estimate_pressure_limit(std::span<const std::pair<double, double>> samples) {
  return fit_pressure_knee(samples).p_sat;
}

// ---------------------------------------------------------------------------
// hybrid pressure estimation

double PressureMapping::pressure_for_width(double width) const {
  if (table.empty()) {
    double w = std::clamp(width, 0.0, 1.0);
    return pressure_min + w * (pressure_max - pressure_min);
  }
  if (width <= table.front().width) return table.front().pressure;
  if (width >= table.back().width) return table.back().pressure;
  size_t lo = 0, hi = table.size() - 1;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    if (width < table[mid].width) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  double t = (width - table[lo].width) / (table[hi].width - table[lo].width);
  return table[lo].pressure + t * (table[hi].pressure - table[lo].pressure);
}

namespace {

void bisect_pressure(BrushSimulator& renderer, double lo, double hi, double a_step,
                     bool two_sided, std::vector<PressureMapping::Sample>& samples) {
  if (hi - lo <= a_step) return;
  double mid = 0.5 * (lo + hi);
  double w = renderer.stroke_width(mid);
  if (!std::isfinite(w)) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "non-finite width %g at pressure %.9g", w, mid);
    throw CalibrationError(std::string("estimate_pressure_mapping: ") + buf);
  }
  samples.push_back({w, mid});
  bisect_pressure(renderer, lo, mid, a_step, two_sided, samples);
  if (two_sided) {
    bisect_pressure(renderer, mid, hi, a_step, two_sided, samples);
  }
}

// median of a small vector (copies; calibration tables are tiny)
double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

PressureMapping estimate_pressure_mapping(BrushSimulator& renderer, double a_p_min,
                                          double a_p_max, double a_step,
                                          const PressureEstimationOptions& options) {
  if (!(a_p_min < a_p_max)) {
    throw std::invalid_argument("estimate_pressure_mapping: a_p_min must be below a_p_max");
  }
  if (!(a_step > 0.0)) {
    throw std::invalid_argument("estimate_pressure_mapping: a_step must be positive");
  }

  std::vector<PressureMapping::Sample> raw;
  bisect_pressure(renderer, a_p_min, a_p_max, a_step, options.two_sided, raw);

  PressureMapping m;
  m.pressure_min = a_p_min;
  m.pressure_max = a_p_max;
  if (raw.empty()) {
    m.assumed_linear = true;  // base case hit immediately: endpoints-only mapping
    return m;
  }

  // De-duplicate into width bins, keeping the median pressure per bin.
  double w_hi = 0.0;
  for (const auto& s : raw) w_hi = std::max(w_hi, std::fabs(s.width));
  double bin_w = w_hi > 0.0 ? w_hi / options.dedup_bins : 1.0;
  std::vector<std::vector<double>> bin_p(options.dedup_bins + 1), bin_v(options.dedup_bins + 1);
  for (const auto& s : raw) {
    int b = std::clamp(static_cast<int>(std::floor(s.width / bin_w)), 0, options.dedup_bins);
    bin_p[b].push_back(s.pressure);
    bin_v[b].push_back(s.width);
  }
  struct Entry {
    double width, pressure, weight;
  };
  std::vector<Entry> entries;
  for (size_t b = 0; b < bin_p.size(); ++b) {
    if (bin_p[b].empty()) continue;
    entries.push_back({median_of(bin_v[b]), median_of(bin_p[b]),
                       static_cast<double>(bin_p[b].size())});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.width < b.width; });

  // Noise can leave the per-bin pressures non-monotone; pool adjacent
  // violators so the final map is nondecreasing.
  std::vector<Entry> stack;
  for (const Entry& e : entries) {
    Entry cur = e;
    while (!stack.empty() && stack.back().pressure > cur.pressure) {
      double w = stack.back().weight + cur.weight;
      cur.pressure = (stack.back().pressure * stack.back().weight + cur.pressure * cur.weight) / w;
      cur.width = (stack.back().width * stack.back().weight + cur.width * cur.weight) / w;
      cur.weight = w;
      stack.pop_back();
    }
    stack.push_back(cur);
  }
  for (const Entry& e : stack) {
    if (!m.table.empty() && e.width - m.table.back().width < 1e-12) {
      m.table.back().pressure = 0.5 * (m.table.back().pressure + e.pressure);
      continue;
    }
    m.table.push_back({e.width, e.pressure});
  }
  return m;
}

CalibrationResult calibrate_pressure(BrushSimulator& sim, const CalibrationConfig& cfg) {
  if (cfg.sweep_samples < 4) {
    throw std::invalid_argument("calibrate_pressure: sweep needs at least 4 samples");
  }
  CalibrationResult result;
  for (int i = 0; i < cfg.sweep_samples; ++i) {
    double p = cfg.a_p_min + (cfg.a_p_max - cfg.a_p_min) * i / (cfg.sweep_samples - 1);
    result.sweep.emplace_back(p, sim.deformation(p));
  }

  double hi = cfg.a_p_max;
  if (cfg.restrict_to_knee) {
    try {
      KneeFit knee = fit_pressure_knee(result.sweep);
      result.knee = knee;
      hi = std::min(hi, knee.p_sat);
    } catch (const NoKneeError&) {
      // saturation outside the probed range; calibrate the full interval
    }
  }
  if (hi - cfg.a_p_min < 4.0 * cfg.a_step) {
    hi = std::min(cfg.a_p_max, cfg.a_p_min + 4.0 * cfg.a_step);
  }

  int before = sim.width_calls();
  PressureEstimationOptions opts;
  opts.two_sided = cfg.two_sided;
  result.mapping = estimate_pressure_mapping(sim, cfg.a_p_min, hi, cfg.a_step, opts);
  result.width_renders = sim.width_calls() - before;
  result.mapping_range_lo = cfg.a_p_min;
  result.mapping_range_hi = hi;
  return result;
}

// ---------------------------------------------------------------------------
// calibration report

void write_calibration_json(const CalibrationResult& result, const BrushSimConfig& sim,
                            const ProjectionTransform& projection, const std::string& path) {
  json doc;
  if (result.knee) {
    doc["pressure_limit"] = {{"p_sat", result.knee->p_sat},
                             {"slope", result.knee->slope},
                             {"intercept", result.knee->intercept},
                             {"level", result.knee->level},
                             {"fit_sse", result.knee->sse}};
  } else {
    doc["pressure_limit"] = nullptr;
  }
  json sweep = json::array();
  for (const auto& [p, d] : result.sweep) sweep.push_back({p, d});
  doc["sweep"] = std::move(sweep);

  json table = json::array();
  for (const auto& s : result.mapping.table) table.push_back({s.width, s.pressure});
  doc["mapping"] = {{"table", std::move(table)},
                    {"pressure_min", result.mapping.pressure_min},
                    {"pressure_max", result.mapping.pressure_max},
                    {"assumed_linear", result.mapping.assumed_linear},
                    {"range_lo", result.mapping_range_lo},
                    {"range_hi", result.mapping_range_hi},
                    {"width_renders", result.width_renders}};
  doc["simulator"] = {{"p_sat", sim.p_sat},
                      {"w_max", sim.w_max},
                      {"kappa", sim.kappa},
                      {"noise_sigma", sim.noise_sigma},
                      {"seed", sim.seed}};
  json mat = json::array();
  for (int i = 0; i < 3; ++i) {
    mat.push_back({projection.matrix(i, 0), projection.matrix(i, 1), projection.matrix(i, 2)});
  }
  doc["projection"] = {{"matrix", std::move(mat)}, {"rms_residual", projection.rms_residual}};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << doc.dump(2) << "\n";
}

LoadedCalibration read_calibration_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open calibration " + path);
  json doc = json::parse(in);

  LoadedCalibration lc;
  if (!doc.at("pressure_limit").is_null()) {
    KneeFit knee;
    knee.p_sat = doc["pressure_limit"].at("p_sat").get<double>();
    knee.slope = doc["pressure_limit"].at("slope").get<double>();
    knee.intercept = doc["pressure_limit"].at("intercept").get<double>();
    knee.level = doc["pressure_limit"].at("level").get<double>();
    knee.sse = doc["pressure_limit"].at("fit_sse").get<double>();
    lc.result.knee = knee;
  }
  for (const auto& s : doc.at("sweep")) {
    lc.result.sweep.emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
  }
  const auto& m = doc.at("mapping");
  for (const auto& s : m.at("table")) {
    lc.result.mapping.table.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
  }
  lc.result.mapping.pressure_min = m.at("pressure_min").get<double>();
  lc.result.mapping.pressure_max = m.at("pressure_max").get<double>();
  lc.result.mapping.assumed_linear = m.at("assumed_linear").get<bool>();
  lc.result.mapping_range_lo = m.at("range_lo").get<double>();
  lc.result.mapping_range_hi = m.at("range_hi").get<double>();
  lc.result.width_renders = m.at("width_renders").get<int>();

  const auto& s = doc.at("simulator");
  lc.sim.p_sat = s.at("p_sat").get<double>();
  lc.sim.w_max = s.at("w_max").get<double>();
  lc.sim.kappa = s.at("kappa").get<double>();
  lc.sim.noise_sigma = s.at("noise_sigma").get<double>();
  lc.sim.seed = s.at("seed").get<uint64_t>();

  const auto& pj = doc.at("projection");
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) lc.projection.matrix(i, j) = pj.at("matrix").at(i).at(j).get<double>();
  lc.projection.rms_residual = pj.at("rms_residual").get<double>();

  lc.checksum = file_checksum(path);
  return lc;
}

std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// stylization

std::vector<StylizedSegment> stylize_stroke(std::span<const std::array<double, 2>> polyline,
                                            const StrokeStyle& style, Rng& rng) {
  if (style.stddev < 0.0) throw std::invalid_argument("stylize_stroke: negative stddev");
  std::vector<StylizedSegment> out;
  if (polyline.size() < 2) return out;
  out.reserve(polyline.size() - 1);
  for (size_t i = 1; i < polyline.size(); ++i) {
    double w = rng.normal(style.mean, style.stddev);
    w = std::clamp(w, style.clamp_lo, style.clamp_hi);
    out.push_back({polyline[i], w});
  }
  return out;
}

// ---------------------------------------------------------------------------
// trajectory export

TrajectoryExport export_trajectory(const StrokeList& strokes, const PressureMapping& mapping,
                                   const ProjectionTransform& transform,
                                   const ExportOptions& options) {
  TrajectoryExport traj;
  traj.calibration_checksum = options.calibration_checksum;
  Rng style_rng(options.style_seed);

  auto emit = [&](double row, double col, double width_cmd) {
    // painting coordinates: x = col, y = row
    Eigen::Vector3d plane = transform.apply(Eigen::Vector2d(col, row));
    Waypoint wp;
    wp.x = plane.x();
    wp.y = plane.y();
    if (width_cmd <= 0.0) {
      wp.z = plane.z() + options.travel_clearance;
      wp.pressure = 0.0;
      wp.pen_down = false;
    } else {
      double w = width_cmd;
      if (!mapping.in_domain(w)) {
        w = std::clamp(w, mapping.width_min(), mapping.width_max());
        ++traj.clamp_warnings;
      }
      wp.pressure = mapping.pressure_for_width(w);
      wp.z = plane.z() - wp.pressure * options.pressure_depth_scale;
      wp.pen_down = true;
    }
    traj.waypoints.push_back(wp);
  };

  for (const auto& stroke : strokes.strokes) {
    BrushState pos{stroke.start[0], stroke.start[1], false};
    emit(pos.row, pos.col, 0.0);  // travel to the stroke start
    for (const Action& a : stroke.actions) {
      BrushState next = update_position(pos, a, strokes.brush);
      double width_cmd = a.width;
      if (a.width > 0.0 && options.use_style) {
        width_cmd = std::clamp(style_rng.normal(options.style.mean, options.style.stddev),
                               options.style.clamp_lo, options.style.clamp_hi);
      }
      emit(next.row, next.col, a.width > 0.0 ? width_cmd : 0.0);
      pos = next;
    }
  }
  return traj;
}

void write_trajectory_csv(const TrajectoryExport& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "# calibration_checksum=" << traj.calibration_checksum << "\n";
  out << "# clamp_warnings=" << traj.clamp_warnings << "\n";
  out << "index,x_mm,y_mm,z_mm,pressure,pen_down\n";
  char buf[256];
  for (size_t i = 0; i < traj.waypoints.size(); ++i) {
    const Waypoint& w = traj.waypoints[i];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%d\n", i, w.x, w.y, w.z,
                  w.pressure, w.pen_down ? 1 : 0);
    out << buf;
  }
}

std::vector<Waypoint> read_trajectory_csv(const std::string& path, std::string* checksum) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory " + path);
  std::vector<Waypoint> waypoints;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "calibration_checksum=";
      size_t p = line.find(key);
      if (p != std::string::npos && checksum) *checksum = line.substr(p + key.size());
      continue;
    }
    if (line.rfind("index,", 0) == 0) continue;
    Waypoint w;
    long idx;
    int pen;
    if (std::sscanf(line.c_str(), "%ld,%lf,%lf,%lf,%lf,%d", &idx, &w.x, &w.y, &w.z, &w.pressure,
                    &pen) != 6) {
      throw std::runtime_error("malformed trajectory line: " + line);
    }
    w.pen_down = pen != 0;
    waypoints.push_back(w);
  }
  return waypoints;
}

Canvas resimulate_trajectory(std::span<const Waypoint> waypoints,
                             const ProjectionTransform& transform, const BrushSimulator& sim,
                             int canvas_h, int canvas_w, int channels, const BrushConfig& brush,
                             double ink) {
  Canvas canvas(canvas_h, canvas_w, channels, 0.0);
  std::array<double, 3> color{ink, ink, ink};
  bool have_prev = false;
  Eigen::Vector2d prev(0.0, 0.0);
  for (const Waypoint& w : waypoints) {
    Eigen::Vector2d painting = transform.invert_xy(w.x, w.y);
    if (w.pen_down && have_prev) {
      double width = sim.true_width(w.pressure);
      stamp_segment(canvas, prev.y(), prev.x(), painting.y(), painting.x(),
                    brush.w_max * width, color, brush.opacity);
    }
    prev = painting;
    have_prev = true;
  }
  return canvas;
}

}  // namespace brushgym
