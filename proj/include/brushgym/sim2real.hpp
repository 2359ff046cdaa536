#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "brushgym/canvas.hpp"
#include "brushgym/rng.hpp"
#include "brushgym/strokes.hpp"

namespace brushgym {

// ---------------------------------------------------------------------------
// 2D painting plane -> 3D robot configuration

// Homogeneous 2D painting coordinates (x, y, 1) mapped linearly into robot
// coordinates (x_r, y_r, z_r). Painting x is the canvas column, y the row.
struct ProjectionTransform {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
  double rms_residual = 0.0;

  Eigen::Vector3d apply(const Eigen::Vector2d& painting) const {
    return matrix * Eigen::Vector3d(painting.x(), painting.y(), 1.0);
  }
  // Inverse of the in-plane part; valid while the 2x2 block is non-singular.
  Eigen::Vector2d invert_xy(double x_robot, double y_robot) const;
};

using Correspondence = std::pair<Eigen::Vector2d, Eigen::Vector3d>;

// Least-squares fit of the 3x3 transform from point correspondences.
// Throws std::invalid_argument when fewer than 3 points are given or the 2D
// points are collinear (rank-deficient system).
ProjectionTransform fit_projection(std::span<const Correspondence> correspondences);

Eigen::Vector3d apply_projection(const ProjectionTransform& t, const Eigen::Vector2d& p);

// ---------------------------------------------------------------------------
// Simulated deformable brush

// Stand-in for the physical rig: pressing the brush down by `pressure`
// widens its footprint as w_max * min(p / p_sat, 1)^kappa until the
// deformation saturates at p_sat. Readouts carry zero-mean Gaussian noise.
struct BrushSimConfig {
  double p_sat = 0.6;
  double w_max = 1.0;   // footprint width in action-width units at saturation
  double kappa = 1.0;
  double noise_sigma = 0.0;
  uint64_t seed = 0;
};

class BrushSimulator {
 public:
  explicit BrushSimulator(const BrushSimConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  const BrushSimConfig& config() const { return cfg_; }

  // Stroke-image readout: footprint width of a test stroke at this pressure.
  double stroke_width(double pressure);
  // End-effector readout: brush tip deformation, same saturating curve.
  double deformation(double pressure);
  // Ground-truth curve without noise (test and re-simulation hook).
  double true_width(double pressure) const;

  int width_calls() const { return width_calls_; }
  int deformation_calls() const { return deformation_calls_; }

 private:
  BrushSimConfig cfg_;
  Rng rng_;
  int width_calls_ = 0;
  int deformation_calls_ = 0;
};

// ---------------------------------------------------------------------------
// Pressure-limit detection (deformation knee)

struct NoKneeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KneeFit {
  double p_sat = 0.0;      // breakpoint pressure
  double slope = 0.0;      // rising-segment slope
  double intercept = 0.0;  // rising-segment intercept
  double level = 0.0;      // flat-segment level
  double sse = 0.0;        // total squared error of the two-segment fit
};

// Fits a rising-then-flat two-segment model by exhaustive breakpoint search
// and returns the intersection of the two segments. Samples must be ordered
// by strictly increasing pressure and span both regimes; otherwise a
// NoKneeError is thrown.
KneeFit fit_pressure_knee(std::span<const std::pair<double, double>> samples);
double estimate_pressure_limit(std::span<const std::pair<double, double>> samples);

// ---------------------------------------------------------------------------
// Hybrid pressure estimation

// Monotone piecewise-linear map from stroke width to the pressure coordinate.
struct PressureMapping {
  struct Sample {
    double width;
    double pressure;
  };
  std::vector<Sample> table;  // strictly increasing widths
  double pressure_min = 0.0;  // calibrated bounds
  double pressure_max = 1.0;
  bool assumed_linear = false;  // no samples; linear fallback over [0, 1] widths

  double width_min() const { return table.empty() ? 0.0 : table.front().width; }
  double width_max() const { return table.empty() ? 1.0 : table.back().width; }
  bool in_domain(double width) const { return width >= width_min() && width <= width_max(); }

  // M(width): interpolated pressure, clamped to the calibrated ends.
  double pressure_for_width(double width) const;
};

struct PressureEstimationOptions {
  // Explore both halves after sampling the midpoint. The one-sided variant
  // keeps recursing on the upper half only.
  bool two_sided = true;
  int dedup_bins = 64;
};

struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Recursive interval bisection: sample the midpoint width, update the table,
// recurse until the interval is no wider than a_step. The returned mapping
// interpolates the de-duplicated, monotonicity-enforced sample table.
PressureMapping estimate_pressure_mapping(BrushSimulator& renderer, double a_p_min,
                                          double a_p_max, double a_step,
                                          const PressureEstimationOptions& options = {});

// ---------------------------------------------------------------------------
// Full hybrid calibration: deformation sweep for the pressure limit, then
// width bisection restricted to the rising regime.

struct CalibrationConfig {
  double a_p_min = 0.0;
  double a_p_max = 1.0;
  double a_step = 1.0 / 64.0;
  int sweep_samples = 17;
  bool restrict_to_knee = true;
  bool two_sided = true;
};

struct CalibrationResult {
  std::optional<KneeFit> knee;  // empty when the sweep saw a single regime
  std::vector<std::pair<double, double>> sweep;
  PressureMapping mapping;
  int width_renders = 0;
  double mapping_range_lo = 0.0;
  double mapping_range_hi = 0.0;
};

CalibrationResult calibrate_pressure(BrushSimulator& sim, const CalibrationConfig& cfg);

void write_calibration_json(const CalibrationResult& result, const BrushSimConfig& sim,
                            const ProjectionTransform& projection, const std::string& path);
struct LoadedCalibration {
  CalibrationResult result;
  BrushSimConfig sim;
  ProjectionTransform projection;
  std::string checksum;  // FNV-1a of the file bytes
};
LoadedCalibration read_calibration_json(const std::string& path);

// FNV-1a 64 over a file's bytes, hex-encoded.
std::string file_checksum(const std::string& path);

// ---------------------------------------------------------------------------
// Gaussian stroke stylization

struct StrokeStyle {
  double mean = 0.5;
  double stddev = 0.3;
  double clamp_lo = 0.0;
  double clamp_hi = 1.0;
};

struct StylizedSegment {
  std::array<double, 2> end;  // (row, col)
  double width;               // clamped to the style bounds
};

// Draws one width per polyline segment from N(mean, stddev^2), clamped.
std::vector<StylizedSegment> stylize_stroke(std::span<const std::array<double, 2>> polyline,
                                            const StrokeStyle& style, Rng& rng);

// ---------------------------------------------------------------------------
// Trajectory export

struct Waypoint {
  double x = 0.0, y = 0.0, z = 0.0;
  double pressure = 0.0;
  bool pen_down = false;
};

struct ExportOptions {
  double travel_clearance = 5.0;     // pen-up height above the painting plane
  double pressure_depth_scale = 1.0;  // z drop per unit pressure
  bool use_style = false;             // style width overrides the action width
  StrokeStyle style;
  uint64_t style_seed = 0;
  std::string calibration_checksum = "uncalibrated";
};

struct TrajectoryExport {
  std::vector<Waypoint> waypoints;
  int clamp_warnings = 0;  // widths outside the mapping domain, clamped
  std::string calibration_checksum;
};

// Converts simulated strokes to 3D waypoints: xy from the projection of the
// painting-plane path, z from the mapped pressure. Output is monochrome;
// action colors are dropped. width == 0 actions become travel moves.
TrajectoryExport export_trajectory(const StrokeList& strokes, const PressureMapping& mapping,
                                   const ProjectionTransform& transform,
                                   const ExportOptions& options = {});

void write_trajectory_csv(const TrajectoryExport& traj, const std::string& path);
std::vector<Waypoint> read_trajectory_csv(const std::string& path,
                                          std::string* checksum = nullptr);

// Replays an exported trajectory through the simulated brush back onto a
// canvas: waypoint xy inverted through the projection, pressure converted to
// a footprint width by the simulator's true curve, segments stamped with the
// fixed ink color.
Canvas resimulate_trajectory(std::span<const Waypoint> waypoints,
                             const ProjectionTransform& transform, const BrushSimulator& sim,
                             int canvas_h, int canvas_w, int channels, const BrushConfig& brush,
                             double ink = 1.0);

}  // namespace brushgym
