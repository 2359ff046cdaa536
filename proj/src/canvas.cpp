#include "brushgym/canvas.hpp"

#include <algorithm>
#include <cmath>

namespace brushgym {

namespace {

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Grayscale canvases take the mean of the three color components.
inline void effective_color(const std::array<double, 3>& color, int channels, double* out) {
  if (channels == 1) {
    out[0] = (color[0] + color[1] + color[2]) / 3.0;
  } else {
    out[0] = color[0];
    out[1] = color[1];
    out[2] = color[2];
  }
}

}  // namespace

bool Action::finite() const {
  return std::isfinite(alpha) && std::isfinite(length) && std::isfinite(width) &&
         std::isfinite(color[0]) && std::isfinite(color[1]) && std::isfinite(color[2]);
}

std::vector<double> Observation::to_tensor() const {
  const int h = window_height(), w = window_width(), c = channels();
  std::vector<double> t(static_cast<size_t>(2) * c * h * w);
  size_t plane = static_cast<size_t>(h) * w;
  for (int k = 0; k < c; ++k) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        t[k * plane + i * w + j] = canvas_window.at(i, j, k);
        t[(c + k) * plane + i * w + j] = reference_window.at(i, j, k);
      }
    }
  }
  return t;
}

void action_displacement(const Action& a, const BrushConfig& cfg, double* d_row, double* d_col) {
  double theta = 2.0 * M_PI * a.alpha;
  double dist = cfg.l_max * a.length;
  *d_row = dist * std::cos(theta);
  *d_col = dist * std::sin(theta);
}

BrushState update_position(const BrushState& brush, const Action& a, const BrushConfig& cfg) {
  double dr, dc;
  action_displacement(a, cfg, &dr, &dc);
  return BrushState{brush.row + dr, brush.col + dc, a.width > 0.0};
}

void stamp_dab(Canvas& canvas, double row, double col, double radius,
               const std::array<double, 3>& color, double opacity) {
  if (radius <= 0.0 || opacity <= 0.0) return;
  double eff[3];
  effective_color(color, canvas.channels(), eff);

  // Hard-edged anti-aliased disc: full coverage inside, a one-pixel linear
  // falloff across the rim. Dabs smaller than half a pixel fade out so a
  // near-zero width deposits (near) nothing.
  double fade = std::min(1.0, 2.0 * radius);
  int i0 = std::max(0, static_cast<int>(std::floor(row - radius - 1.0)));
  int i1 = std::min(canvas.height() - 1, static_cast<int>(std::ceil(row + radius + 1.0)));
  int j0 = std::max(0, static_cast<int>(std::floor(col - radius - 1.0)));
  int j1 = std::min(canvas.width() - 1, static_cast<int>(std::ceil(col + radius + 1.0)));
  for (int i = i0; i <= i1; ++i) {
    for (int j = j0; j <= j1; ++j) {
      double d = std::hypot(i - row, j - col);
      double cov = clamp01(radius - d + 0.5) * fade * opacity;
      if (cov <= 0.0) continue;
      for (int k = 0; k < canvas.channels(); ++k) {
        double& px = canvas.at(i, j, k);
        px = clamp01(px + cov * (eff[k] - px));
      }
    }
  }
}

void stamp_segment(Canvas& canvas, double r0, double c0, double r1, double c1,
                   double radius, const std::array<double, 3>& color, double opacity) {
  if (radius <= 0.0) return;
  double seg_len = std::hypot(r1 - r0, c1 - c0);
  double spacing = std::max(1.0, radius / 2.0);
  int n = seg_len > 0.0 ? static_cast<int>(std::ceil(seg_len / spacing)) : 0;
  for (int k = 0; k <= n; ++k) {
    double t = n > 0 ? static_cast<double>(k) / n : 0.0;
    stamp_dab(canvas, r0 + t * (r1 - r0), c0 + t * (c1 - c0), radius, color, opacity);
  }
}

void render_action(Canvas& canvas, BrushState& brush, const Action& a, const BrushConfig& cfg) {
  if (!a.finite()) {
    throw std::invalid_argument("render_action: non-finite action component");
  }
  Action act = a;
  act.alpha = clamp01(act.alpha);
  act.length = clamp01(act.length);
  act.width = clamp01(act.width);
  for (double& c : act.color) c = clamp01(c);

  BrushState next = update_position(brush, act, cfg);
  if (act.width > 0.0) {
    stamp_segment(canvas, brush.row, brush.col, next.row, next.col,
                  cfg.w_max * act.width, act.color, cfg.opacity);
  }
  brush = next;
}

Observation extract_observation(const Canvas& canvas, const Canvas& reference,
                                const BrushState& brush, int window_h, int window_w) {
  if (!canvas.same_shape(reference)) {
    throw std::invalid_argument("extract_observation: canvas/reference dimension mismatch");
  }
  if (window_h < 2 || window_w < 2 || window_h % 2 != 0 || window_w % 2 != 0) {
    throw std::invalid_argument("extract_observation: window dims must be even and positive");
  }

  int pr = static_cast<int>(std::floor(brush.row + 0.5));
  int pc = static_cast<int>(std::floor(brush.col + 0.5));
  int r0 = pr - window_h / 2;
  int c0 = pc - window_w / 2;

  Observation obs;
  obs.canvas_window = Canvas(window_h, window_w, canvas.channels(), 0.0);
  obs.reference_window = Canvas(window_h, window_w, canvas.channels(), 0.0);
  for (int i = 0; i < window_h; ++i) {
    int si = r0 + i;
    if (si < 0 || si >= canvas.height()) continue;
    for (int j = 0; j < window_w; ++j) {
      int sj = c0 + j;
      if (sj < 0 || sj >= canvas.width()) continue;
      for (int k = 0; k < canvas.channels(); ++k) {
        obs.canvas_window.at(i, j, k) = canvas.at(si, sj, k);
        obs.reference_window.at(i, j, k) = reference.at(si, sj, k);
      }
    }
  }
  return obs;
}

}  // namespace brushgym
