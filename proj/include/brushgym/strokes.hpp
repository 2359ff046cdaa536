#pragma once

#include <array>
#include <string>
#include <vector>

#include "brushgym/canvas.hpp"

namespace brushgym {

// One stroke: a start position and the action sequence painted from it.
struct StrokeActions {
  std::array<double, 2> start{0.0, 0.0};  // (row, col)
  std::vector<Action> actions;
};

// Serializable record of a painting session, consumed by trajectory export.
struct StrokeList {
  int canvas_h = 0;
  int canvas_w = 0;
  int channels = 1;
  BrushConfig brush;
  std::vector<StrokeActions> strokes;

  size_t total_actions() const {
    size_t n = 0;
    for (const auto& s : strokes) n += s.actions.size();
    return n;
  }
};

void write_stroke_list_json(const StrokeList& list, const std::string& path);
StrokeList read_stroke_list_json(const std::string& path);

// Replays the stroke list through the renderer onto a blank canvas.
Canvas render_stroke_list(const StrokeList& list);

}  // namespace brushgym
