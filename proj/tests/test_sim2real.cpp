#include <cmath>
#include <cstdio>

#include "brushgym/objective.hpp"
#include "brushgym/sim2real.hpp"
#include "brushgym/strokes.hpp"
#include "doctest.h"

using namespace brushgym;

namespace {

// synthetic rig: rotation about z, tilted painting plane, offset base
ProjectionTransform synthetic_transform(double angle_deg, double tilt_deg, double tx, double ty,
                                        double tz) {
  double a = angle_deg * M_PI / 180.0;
  double t = std::tan(tilt_deg * M_PI / 180.0);
  ProjectionTransform out;
  out.matrix << std::cos(a), -std::sin(a), tx,
                std::sin(a),  std::cos(a), ty,
                t,            0.5 * t,     tz;
  return out;
}

std::vector<Correspondence> sample_correspondences(const ProjectionTransform& truth, int n,
                                                   Rng& rng, double noise = 0.0) {
  std::vector<Correspondence> cs;
  for (int i = 0; i < n; ++i) {
    Eigen::Vector2d p(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0));
    Eigen::Vector3d q = truth.apply(p);
    if (noise > 0.0) {
      q += Eigen::Vector3d(rng.normal(0, noise), rng.normal(0, noise), rng.normal(0, noise));
    }
    cs.emplace_back(p, q);
  }
  return cs;
}

}  // namespace

TEST_CASE("projection: axis correspondences give the identity embedding") {
  std::vector<Correspondence> cs = {
      {{0.0, 0.0}, {0.0, 0.0, 0.0}},
      {{1.0, 0.0}, {1.0, 0.0, 0.0}},
      {{0.0, 1.0}, {0.0, 1.0, 0.0}},
  };
  ProjectionTransform t = fit_projection(cs);
  Eigen::Matrix3d expect;
  expect << 1, 0, 0, 0, 1, 0, 0, 0, 0;
  CHECK((t.matrix - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(t.rms_residual < 1e-12);

  Eigen::Vector3d p = apply_projection(t, {0.5, 0.5});
  CHECK(p.x() == doctest::Approx(0.5));
  CHECK(p.y() == doctest::Approx(0.5));
  CHECK(std::fabs(p.z()) < 1e-12);
}

// Oracle: generate from a known transform and recover it.
TEST_CASE("projection: noiseless synthetic transforms are recovered exactly") {
  Rng rng(71);
  ProjectionTransform truth = synthetic_transform(30.0, 10.0, 5.0, -2.0, 3.0);
  auto cs = sample_correspondences(truth, 6, rng);
  ProjectionTransform fit = fit_projection(cs);
  CHECK((fit.matrix - truth.matrix).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(fit.rms_residual < 1e-9);
  for (const auto& [p, q] : cs) {
    CHECK((fit.apply(p) - q).norm() < 1e-9);
  }
}

TEST_CASE("projection: 1e-4 coordinate noise keeps the RMS residual below 3e-4") {
  Rng rng(72);
  ProjectionTransform truth = synthetic_transform(-20.0, 5.0, 1.0, 7.0, 2.0);
  auto cs = sample_correspondences(truth, 6, rng, 1e-4);
  ProjectionTransform fit = fit_projection(cs);
  CHECK(fit.rms_residual <= 3e-4);
}

TEST_CASE("projection: translation-only transforms move all points equally") {
  std::vector<Correspondence> cs = {
      {{0.0, 0.0}, {4.0, -1.0, 2.0}},
      {{1.0, 0.0}, {5.0, -1.0, 2.0}},
      {{0.0, 1.0}, {4.0, 0.0, 2.0}},
      {{2.0, 3.0}, {6.0, 2.0, 2.0}},
  };
  ProjectionTransform t = fit_projection(cs);
  Eigen::Vector3d d1 = t.apply({10.0, 20.0}) - t.apply({9.0, 19.0});
  Eigen::Vector3d d2 = t.apply({-3.0, 0.0}) - t.apply({-4.0, -1.0});
  CHECK((d1 - d2).norm() < 1e-12);
}

TEST_CASE("projection: degenerate inputs are rejected") {
  std::vector<Correspondence> two = {{{0, 0}, {0, 0, 0}}, {{1, 1}, {1, 1, 0}}};
  CHECK_THROWS_AS(fit_projection(two), std::invalid_argument);
  std::vector<Correspondence> collinear = {
      {{0, 0}, {0, 0, 0}}, {{1, 1}, {1, 1, 0}}, {{2, 2}, {2, 2, 0}}, {{3, 3}, {3, 3, 0}}};
  CHECK_THROWS_AS(fit_projection(collinear), std::invalid_argument);
}

TEST_CASE("projection: invert_xy undoes the in-plane map") {
  ProjectionTransform t = synthetic_transform(45.0, 8.0, -2.0, 0.5, 1.0);
  Eigen::Vector2d p(3.25, -7.5);
  Eigen::Vector3d r = t.apply(p);
  Eigen::Vector2d back = t.invert_xy(r.x(), r.y());
  CHECK((back - p).norm() < 1e-10);
}

// Oracle: analytic knee position for exactly saturating data.
TEST_CASE("knee: exact min(p, 0.6) data sampled at 0.1 steps") {
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i <= 10; ++i) {
    double p = 0.1 * i;
    samples.emplace_back(p, std::min(p, 0.6));
  }
  double p_sat = estimate_pressure_limit(samples);
  CHECK(std::fabs(p_sat - 0.6) <= 0.05);
}

TEST_CASE("knee: single-regime data has no knee") {
  std::vector<std::pair<double, double>> flat;
  std::vector<std::pair<double, double>> rising;
  for (int i = 0; i <= 10; ++i) {
    flat.emplace_back(0.1 * i, 0.8);
    rising.emplace_back(0.1 * i, 0.3 * i * 0.1);
  }
  CHECK_THROWS_AS(estimate_pressure_limit(flat), NoKneeError);
  CHECK_THROWS_AS(estimate_pressure_limit(rising), NoKneeError);
  std::vector<std::pair<double, double>> few = {{0, 0}, {1, 1}, {2, 1}};
  CHECK_THROWS_AS(estimate_pressure_limit(few), std::invalid_argument);
}

TEST_CASE("knee: noisy synthetic trials recover p_sat within 5%") {
  Rng rng(73);
  int ok = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    double w_max = rng.uniform(0.5, 1.5);
    double p_sat = rng.uniform(0.3, 0.75);
    double sigma = 0.01 * w_max;
    std::vector<std::pair<double, double>> samples;
    for (int i = 0; i < 25; ++i) {
      double p = i / 24.0;
      double w = w_max * std::min(p / p_sat, 1.0);
      samples.emplace_back(p, w + rng.normal(0, sigma));
    }
    try {
      double est = estimate_pressure_limit(samples);
      if (std::fabs(est - p_sat) <= 0.05 * p_sat) ++ok;
    } catch (const NoKneeError&) {
    }
  }
  CHECK(ok >= static_cast<int>(0.95 * trials));
}

TEST_CASE("bisection mapping: analytic inverse of the linear brush") {
  BrushSimConfig cfg;
  cfg.p_sat = 1.0;  // w(p) = p on [0, 1]
  cfg.w_max = 1.0;
  cfg.kappa = 1.0;
  cfg.noise_sigma = 0.0;
  BrushSimulator sim(cfg);
  PressureMapping m = estimate_pressure_mapping(sim, 0.0, 1.0, 1.0 / 64.0);
  CHECK(std::fabs(m.pressure_for_width(0.5) - 0.5) <= 1.0 / 64.0);
  for (double w = 0.05; w <= 0.95; w += 0.05) {
    CHECK(std::fabs(sim.true_width(m.pressure_for_width(w)) - w) <= 1.0 / 64.0);
  }
}

TEST_CASE("bisection mapping: renderer call count is bounded by the full tree") {
  for (double a_step : {1.0 / 8, 1.0 / 64, 1.0 / 100}) {
    BrushSimulator sim(BrushSimConfig{});
    estimate_pressure_mapping(sim, 0.0, 1.0, a_step);
    int k = static_cast<int>(std::ceil(std::log2(1.0 / a_step)));
    CHECK(sim.width_calls() <= (1 << k) - 1);
  }
}

TEST_CASE("bisection mapping: immediate base case renders nothing") {
  BrushSimulator sim(BrushSimConfig{});
  PressureMapping m = estimate_pressure_mapping(sim, 0.2, 0.8, 0.7);
  CHECK(sim.width_calls() == 0);
  CHECK(m.assumed_linear);
  CHECK(m.table.empty());
  CHECK(m.pressure_for_width(0.0) == doctest::Approx(0.2));
  CHECK(m.pressure_for_width(1.0) == doctest::Approx(0.8));
}

TEST_CASE("bisection mapping: invalid intervals are rejected") {
  BrushSimulator sim(BrushSimConfig{});
  CHECK_THROWS_AS(estimate_pressure_mapping(sim, 0.5, 0.5, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(estimate_pressure_mapping(sim, 0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("mapping is nondecreasing for random monotone brushes") {
  Rng rng(74);
  for (int trial = 0; trial < 100; ++trial) {
    BrushSimConfig cfg;
    cfg.p_sat = rng.uniform(0.2, 0.9);
    cfg.w_max = rng.uniform(0.4, 1.6);
    cfg.kappa = rng.uniform(0.5, 2.0);
    cfg.noise_sigma = rng.uniform(0.0, 0.02);
    cfg.seed = rng.next_u64();
    BrushSimulator sim(cfg);
    PressureMapping m = estimate_pressure_mapping(sim, 0.0, 1.0, 1.0 / 64.0);
    for (size_t i = 1; i < m.table.size(); ++i) {
      REQUIRE(m.table[i].width > m.table[i - 1].width);
      REQUIRE(m.table[i].pressure >= m.table[i - 1].pressure);
    }
  }
}

TEST_CASE("hybrid calibration restricts the mapping to the rising regime") {
  BrushSimConfig cfg;
  cfg.p_sat = 0.6;
  cfg.w_max = 1.0;
  BrushSimulator sim(cfg);
  CalibrationConfig cal;
  cal.a_step = 1.0 / 64.0;
  CalibrationResult r = calibrate_pressure(sim, cal);
  REQUIRE(r.knee.has_value());
  CHECK(std::fabs(r.knee->p_sat - 0.6) < 0.02);
  CHECK(r.mapping_range_hi <= 0.6 + 1e-9);
  CHECK(r.mapping.table.back().pressure <= 0.6 + 1e-9);

  // accuracy bound over the calibrated range
  double range = r.mapping_range_hi - r.mapping_range_lo;
  double bound = sim.true_width(r.mapping_range_hi) * (cal.a_step / range);
  for (double f = 0.0; f <= 1.0; f += 0.1) {
    double w_t = r.mapping.width_min() + f * (r.mapping.width_max() - r.mapping.width_min());
    CHECK(std::fabs(sim.true_width(r.mapping.pressure_for_width(w_t)) - w_t) <= bound + 1e-12);
  }
}

TEST_CASE("calibration report round-trips through JSON") {
  BrushSimConfig cfg;
  cfg.p_sat = 0.55;
  cfg.noise_sigma = 0.005;
  cfg.seed = 9;
  BrushSimulator sim(cfg);
  CalibrationConfig cal;
  CalibrationResult r = calibrate_pressure(sim, cal);
  ProjectionTransform t = synthetic_transform(12.0, 4.0, 2.0, 3.0, 1.0);

  std::string path = "calibration_roundtrip.json";
  write_calibration_json(r, cfg, t, path);
  LoadedCalibration lc = read_calibration_json(path);
  CHECK(lc.sim.p_sat == cfg.p_sat);
  CHECK(lc.result.mapping.table.size() == r.mapping.table.size());
  for (size_t i = 0; i < r.mapping.table.size(); ++i) {
    CHECK(lc.result.mapping.table[i].width == r.mapping.table[i].width);
    CHECK(lc.result.mapping.table[i].pressure == r.mapping.table[i].pressure);
  }
  CHECK((lc.projection.matrix - t.matrix).cwiseAbs().maxCoeff() == 0.0);
  CHECK(lc.checksum.size() == 16);
  std::remove(path.c_str());
}

TEST_CASE("stylize: zero stddev clamps every width to the mean") {
  std::vector<std::array<double, 2>> poly = {{0, 0}, {0, 10}, {0, 20}, {5, 25}};
  StrokeStyle style;
  style.mean = 0.5;
  style.stddev = 0.0;
  Rng rng(75);
  auto segs = stylize_stroke(poly, style, rng);
  REQUIRE(segs.size() == 3);
  for (const auto& s : segs) CHECK(s.width == doctest::Approx(0.5));
}

TEST_CASE("stylize: sample mean matches the configured mean") {
  std::vector<std::array<double, 2>> poly(10001, {0, 0});
  for (size_t i = 0; i < poly.size(); ++i) poly[i] = {0.0, static_cast<double>(i)};
  StrokeStyle style;
  style.mean = 0.5;
  style.stddev = 0.3;
  style.clamp_lo = -1e9;  // inspect the raw draws
  style.clamp_hi = 1e9;
  Rng rng(76);
  auto segs = stylize_stroke(poly, style, rng);
  double mean = 0.0;
  for (const auto& s : segs) mean += s.width;
  mean /= static_cast<double>(segs.size());
  CHECK(std::fabs(mean - 0.5) < 0.01);
}

TEST_CASE("stylize: wider style saturates the clamp more and varies more") {
  std::vector<std::array<double, 2>> poly(5001, {0, 0});
  for (size_t i = 0; i < poly.size(); ++i) poly[i] = {0.0, static_cast<double>(i)};
  StrokeStyle calm{0.5, 0.3, 0.0, 1.0};
  StrokeStyle wild{0.7, 0.8, 0.0, 1.0};
  Rng r1(77), r2(77);
  auto a = stylize_stroke(poly, calm, r1);
  auto b = stylize_stroke(poly, wild, r2);
  auto stats = [](const std::vector<StylizedSegment>& v) {
    double mean = 0, saturated = 0;
    for (const auto& s : v) {
      mean += s.width;
      if (s.width == 0.0 || s.width == 1.0) saturated += 1;
    }
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (const auto& s : v) var += (s.width - mean) * (s.width - mean);
    return std::pair<double, double>{var / static_cast<double>(v.size()),
                                     saturated / static_cast<double>(v.size())};
  };
  auto [var_a, sat_a] = stats(a);
  auto [var_b, sat_b] = stats(b);
  CHECK(var_b > var_a);
  CHECK(sat_b > sat_a);
  for (const auto& s : a) {
    REQUIRE(s.width >= 0.0);
    REQUIRE(s.width <= 1.0);
  }
}

TEST_CASE("export: empty action sequence yields a header-only file") {
  StrokeList list;
  list.canvas_h = list.canvas_w = 32;
  PressureMapping m;
  m.assumed_linear = true;
  TrajectoryExport traj = export_trajectory(list, m, ProjectionTransform{});
  CHECK(traj.waypoints.empty());
  std::string path = "empty_traj.csv";
  write_trajectory_csv(traj, path);
  auto back = read_trajectory_csv(path);
  CHECK(back.empty());
  std::remove(path.c_str());
}

TEST_CASE("export: one pen-up action becomes a travel-height waypoint pair") {
  StrokeList list;
  list.canvas_h = list.canvas_w = 32;
  StrokeActions s;
  s.start = {10.0, 10.0};
  Action a;
  a.alpha = 0.25;
  a.length = 0.5;
  a.width = 0.0;
  s.actions.push_back(a);
  list.strokes.push_back(s);

  PressureMapping m;
  m.assumed_linear = true;
  ExportOptions opts;
  opts.travel_clearance = 7.0;
  TrajectoryExport traj = export_trajectory(list, m, ProjectionTransform{}, opts);
  REQUIRE(traj.waypoints.size() == 2);
  for (const auto& w : traj.waypoints) {
    CHECK_FALSE(w.pen_down);
    CHECK(w.z == doctest::Approx(1.0 + 7.0));  // identity matrix: plane z = 1
    CHECK(w.pressure == 0.0);
  }
  CHECK(traj.waypoints[1].x != traj.waypoints[0].x);
}

TEST_CASE("export: out-of-domain widths are clamped and counted") {
  StrokeList list;
  list.canvas_h = list.canvas_w = 32;
  list.brush.w_max = 4.0;
  StrokeActions s;
  s.start = {16.0, 4.0};
  Action a;
  a.alpha = 0.25;
  a.length = 0.2;
  a.width = 0.05;  // far below the calibrated width range
  s.actions.push_back(a);
  list.strokes.push_back(s);

  PressureMapping m;
  m.table = {{0.3, 0.2}, {0.6, 0.5}, {0.9, 0.8}};
  TrajectoryExport traj = export_trajectory(list, m, ProjectionTransform{});
  CHECK(traj.clamp_warnings == 1);
  CHECK(traj.waypoints.back().pressure == doctest::Approx(0.2));
}

// Oracle: closed-loop re-simulation of an exported trajectory against the
// directly rendered stroke list.
TEST_CASE("export/resimulate closed loop stays within loss_half 0.05") {
  StrokeList list;
  list.canvas_h = list.canvas_w = 64;
  list.channels = 1;
  list.brush.l_max = 16.0;
  list.brush.w_max = 6.0;

  auto add_stroke = [&list](double r0, double c0, std::initializer_list<double> alphas) {
    StrokeActions s;
    s.start = {r0, c0};
    for (double alpha : alphas) {
      Action a;
      a.alpha = alpha;
      a.length = 0.8;
      a.width = 0.55;
      a.color = {1.0, 1.0, 1.0};
      s.actions.push_back(a);
    }
    list.strokes.push_back(s);
  };
  add_stroke(12, 8, {0.25, 0.25, 0.27});
  add_stroke(20, 10, {0.0, 0.05, 0.1});
  add_stroke(45, 50, {0.6, 0.55, 0.5});

  BrushSimConfig sim_cfg;
  sim_cfg.p_sat = 0.7;
  sim_cfg.w_max = 1.0;
  sim_cfg.kappa = 1.0;
  sim_cfg.noise_sigma = 0.0;
  BrushSimulator sim(sim_cfg);
  CalibrationConfig cal;
  cal.a_step = 1.0 / 128.0;
  CalibrationResult calres = calibrate_pressure(sim, cal);

  Rng rng(78);
  ProjectionTransform truth = synthetic_transform(25.0, 6.0, 40.0, -10.0, 5.0);
  ProjectionTransform fit = fit_projection(sample_correspondences(truth, 8, rng));

  TrajectoryExport traj = export_trajectory(list, calres.mapping, fit);
  CHECK(traj.clamp_warnings == 0);

  Canvas direct = render_stroke_list(list);
  Canvas resim = resimulate_trajectory(traj.waypoints, fit, sim, 64, 64, 1, list.brush);
  double err = loss_half(resim, direct);
  MESSAGE("closed-loop loss_half: ", err);
  CHECK(err <= 0.05);
}

TEST_CASE("trajectory CSV round trip preserves waypoints and checksum") {
  StrokeList list;
  list.canvas_h = list.canvas_w = 32;
  StrokeActions s;
  s.start = {5.0, 5.0};
  Action a;
  a.alpha = 0.1;
  a.length = 0.4;
  a.width = 0.5;
  s.actions.push_back(a);
  a.width = 0.0;
  s.actions.push_back(a);
  list.strokes.push_back(s);

  PressureMapping m;
  m.table = {{0.1, 0.1}, {0.9, 0.7}};
  ExportOptions opts;
  opts.calibration_checksum = "deadbeef01234567";
  TrajectoryExport traj = export_trajectory(list, m, ProjectionTransform{}, opts);
  std::string path = "traj_roundtrip.csv";
  write_trajectory_csv(traj, path);

  std::string checksum;
  auto back = read_trajectory_csv(path, &checksum);
  CHECK(checksum == "deadbeef01234567");
  REQUIRE(back.size() == traj.waypoints.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].x == doctest::Approx(traj.waypoints[i].x).epsilon(1e-9));
    CHECK(back[i].pen_down == traj.waypoints[i].pen_down);
  }
  std::remove(path.c_str());
}
