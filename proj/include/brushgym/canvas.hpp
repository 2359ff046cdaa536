#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace brushgym {

// H x W x C image with unit-interval intensities. Used both for the painting
// state and for reference images. Channel-interleaved, row-major.
class Canvas {
 public:
  Canvas() = default;
  Canvas(int height, int width, int channels, double fill = 0.0)
      : h_(height), w_(width), c_(channels) {
    if (height < 1 || width < 1 || (channels != 1 && channels != 3)) {
      throw std::invalid_argument("Canvas: bad dimensions");
    }
    px_.assign(static_cast<size_t>(h_) * w_ * c_, fill);
  }

  int height() const { return h_; }
  int width() const { return w_; }
  int channels() const { return c_; }

  double& at(int i, int j, int k) { return px_[(static_cast<size_t>(i) * w_ + j) * c_ + k]; }
  double at(int i, int j, int k) const { return px_[(static_cast<size_t>(i) * w_ + j) * c_ + k]; }

  const std::vector<double>& data() const { return px_; }
  std::vector<double>& data() { return px_; }
  size_t size() const { return px_.size(); }

  bool same_shape(const Canvas& o) const { return h_ == o.h_ && w_ == o.w_ && c_ == o.c_; }
  bool operator==(const Canvas& o) const {
    return same_shape(o) && px_ == o.px_;
  }

  void fill(double v) { px_.assign(px_.size(), v); }

 private:
  int h_ = 0, w_ = 0, c_ = 0;
  std::vector<double> px_;
};

// One painting action: angle, length, width and color, all normalized to
// [0,1]. width == 0 moves the brush without applying paint.
struct Action {
  double alpha = 0.0;
  double length = 0.0;
  double width = 0.0;
  std::array<double, 3> color{0.0, 0.0, 0.0};

  std::array<double, 6> as_vector() const {
    return {alpha, length, width, color[0], color[1], color[2]};
  }
  static Action from_vector(const std::array<double, 6>& v) {
    return Action{v[0], v[1], v[2], {v[3], v[4], v[5]}};
  }
  bool finite() const;
};

// Continuous brush position in canvas coordinates (row, col). The position
// may leave the canvas; strokes clip at the edges instead.
struct BrushState {
  double row = 0.0;
  double col = 0.0;
  bool pen_down = false;
};

// Rendering parameters. Defaults follow the 84-pixel observation window
// sizing (reach = window/2, max dab radius = window/8).
struct BrushConfig {
  double l_max = 42.0;   // pixels of travel at length == 1
  double w_max = 10.5;   // dab radius in pixels at width == 1
  double opacity = 1.0;  // dab compositing opacity
};

// Egocentric observation: same-size crops of the canvas and the reference,
// centered on the brush. Out-of-canvas regions are zero.
struct Observation {
  Canvas canvas_window;
  Canvas reference_window;

  int window_height() const { return canvas_window.height(); }
  int window_width() const { return canvas_window.width(); }
  int channels() const { return canvas_window.channels(); }

  // Stacked planar tensor (2C x h x w), canvas channels first. This is the
  // policy network's input layout.
  std::vector<double> to_tensor() const;
};

// Displacement of one action: (L_max*l*cos(2*pi*alpha), L_max*l*sin(2*pi*alpha))
// on the (row, col) axes.
void action_displacement(const Action& a, const BrushConfig& cfg, double* d_row, double* d_col);

// Pure position update, no canvas touch. Position is never clamped.
BrushState update_position(const BrushState& brush, const Action& a, const BrushConfig& cfg);

// Renders one action in place: stamps anti-aliased circular dabs along the
// swept segment and advances the brush. width == 0 leaves the canvas
// untouched. Throws std::invalid_argument on non-finite action components.
void render_action(Canvas& canvas, BrushState& brush, const Action& a, const BrushConfig& cfg);

// Stamps a single dab; exposed for re-simulation of exported trajectories.
void stamp_dab(Canvas& canvas, double row, double col, double radius,
               const std::array<double, 3>& color, double opacity);

// Stamps dabs from (r0,c0) to (r1,c1) with the standard spacing rule.
void stamp_segment(Canvas& canvas, double r0, double c0, double r1, double c1,
                   double radius, const std::array<double, 3>& color, double opacity);

// Egocentric crop pair centered on the rounded brush position. Both windows
// cover rows [p - h/2, p + h/2) and the matching columns; pixels outside the
// canvas are zero. Window dimensions must be even and positive. Throws if
// canvas and reference dimensions differ.
Observation extract_observation(const Canvas& canvas, const Canvas& reference,
                                const BrushState& brush, int window_h, int window_w);

}  // namespace brushgym
