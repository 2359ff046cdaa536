#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace brushgym {

// One glyph stroke as an ordered 2D polyline in glyph coordinates (x, y).
struct StrokePolyline {
  std::vector<std::array<double, 2>> points;
  int stroke_index = 0;
};

struct SvgParseError : std::runtime_error {
  SvgParseError(const std::string& msg, size_t offset)
      : std::runtime_error(msg + " at byte " + std::to_string(offset)), byte_offset(offset) {}
  size_t byte_offset;
};

struct SvgOptions {
  // max chord deviation when flattening cubic Beziers, in path units
  double flatten_tolerance = 0.5;
};

// Extracts the strokes of a glyph document: every <path> element's data, in
// document order, one polyline per subpath. Supports the M/m, L/l, C/c
// command subset with repeated coordinate groups and implicit linetos.
std::vector<StrokePolyline> parse_svg_strokes(std::string_view document,
                                              const SvgOptions& options = {});

// Parses bare path data (the d attribute payload) with the same rules.
std::vector<StrokePolyline> parse_path_data(std::string_view data, const SvgOptions& options = {},
                                            size_t base_offset = 0);

// Emits a polyline as absolute M/L path text that re-parses to the same
// points bit-for-bit.
std::string emit_path_text(const StrokePolyline& stroke);

// Exact cubic Bezier evaluation, exposed as the reference for flattening.
std::array<double, 2> cubic_bezier_point(const std::array<double, 2>& p0,
                                         const std::array<double, 2>& p1,
                                         const std::array<double, 2>& p2,
                                         const std::array<double, 2>& p3, double t);

}  // namespace brushgym
