#include "brushgym/svg.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

namespace brushgym {

namespace {

using Pt = std::array<double, 2>;

inline Pt lerp(const Pt& a, const Pt& b, double t) {
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
}

inline double dist_point_segment(const Pt& p, const Pt& a, const Pt& b) {
  double vx = b[0] - a[0], vy = b[1] - a[1];
  double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  double dx = p[0] - (a[0] + t * vx), dy = p[1] - (a[1] + t * vy);
  return std::hypot(dx, dy);
}

// Adaptive subdivision; control-point distance to the chord bounds the
// curve's deviation, so it is a safe flatness test.
void flatten_cubic(const Pt& p0, const Pt& p1, const Pt& p2, const Pt& p3, double tol, int depth,
                   std::vector<Pt>& out) {
  double d = std::max(dist_point_segment(p1, p0, p3), dist_point_segment(p2, p0, p3));
  if (d <= tol || depth >= 24) {
    out.push_back(p3);
    return;
  }
  Pt p01 = lerp(p0, p1, 0.5), p12 = lerp(p1, p2, 0.5), p23 = lerp(p2, p3, 0.5);
  Pt p012 = lerp(p01, p12, 0.5), p123 = lerp(p12, p23, 0.5);
  Pt mid = lerp(p012, p123, 0.5);
  flatten_cubic(p0, p01, p012, mid, tol, depth + 1, out);
  flatten_cubic(mid, p123, p23, p3, tol, depth + 1, out);
}

class PathScanner {
 public:
  PathScanner(std::string_view data, size_t base) : data_(data), base_(base) {}

  bool at_end() {
    skip_separators();
    return pos_ >= data_.size();
  }

  char peek_command() {
    skip_separators();
    if (pos_ >= data_.size()) return '\0';
    char c = data_[pos_];
    return std::isalpha(static_cast<unsigned char>(c)) ? c : '\0';
  }

  char take_command() {
    char c = peek_command();
    if (c == '\0') {
      throw SvgParseError("expected path command", base_ + pos_);
    }
    ++pos_;
    return c;
  }

  double take_number() {
    skip_separators();
    size_t start = pos_;
    const char* begin = data_.data() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) {
      throw SvgParseError("expected number in path data", base_ + start);
    }
    pos_ += static_cast<size_t>(end - begin);
    if (!std::isfinite(v)) {
      throw SvgParseError("non-finite coordinate in path data", base_ + start);
    }
    return v;
  }

  bool number_follows() {
    skip_separators();
    if (pos_ >= data_.size()) return false;
    char c = data_[pos_];
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
  }

  size_t offset() const { return base_ + pos_; }

 private:
  void skip_separators() {
    while (pos_ < data_.size() &&
           (std::isspace(static_cast<unsigned char>(data_[pos_])) || data_[pos_] == ',')) {
      ++pos_;
    }
  }

  std::string_view data_;
  size_t base_;
  size_t pos_ = 0;
};

}  // namespace

std::array<double, 2> cubic_bezier_point(const Pt& p0, const Pt& p1, const Pt& p2, const Pt& p3,
                                         double t) {
  double u = 1.0 - t;
  double b0 = u * u * u, b1 = 3.0 * u * u * t, b2 = 3.0 * u * t * t, b3 = t * t * t;
  return {b0 * p0[0] + b1 * p1[0] + b2 * p2[0] + b3 * p3[0],
          b0 * p0[1] + b1 * p1[1] + b2 * p2[1] + b3 * p3[1]};
}

std::vector<StrokePolyline> parse_path_data(std::string_view data, const SvgOptions& options,
                                            size_t base_offset) {
  std::vector<StrokePolyline> strokes;
  PathScanner scan(data, base_offset);
  StrokePolyline cur;
  Pt pos{0.0, 0.0};
  char last_cmd = '\0';

  auto finish_stroke = [&strokes, &cur]() {
    if (cur.points.size() >= 2) {
      strokes.push_back(std::move(cur));
    }
    cur = StrokePolyline{};
  };

  while (!scan.at_end()) {
    char cmd = scan.peek_command();
    if (cmd != '\0') {
      scan.take_command();
      last_cmd = cmd;
    } else if (last_cmd == '\0') {
      throw SvgParseError("path data must start with a moveto", scan.offset());
    } else {
      // repeated coordinate group; moveto continues as lineto
      if (last_cmd == 'M') last_cmd = 'L';
      if (last_cmd == 'm') last_cmd = 'l';
      cmd = last_cmd;
    }

    bool relative = std::islower(static_cast<unsigned char>(cmd));
    switch (std::toupper(static_cast<unsigned char>(cmd))) {
      case 'M': {
        double x = scan.take_number(), y = scan.take_number();
        finish_stroke();
        pos = relative ? Pt{pos[0] + x, pos[1] + y} : Pt{x, y};
        cur.points.push_back(pos);
        break;
      }
      case 'L': {
        double x = scan.take_number(), y = scan.take_number();
        if (cur.points.empty()) {
          throw SvgParseError("lineto before any moveto", scan.offset());
        }
        pos = relative ? Pt{pos[0] + x, pos[1] + y} : Pt{x, y};
        cur.points.push_back(pos);
        break;
      }
      case 'C': {
        double x1 = scan.take_number(), y1 = scan.take_number();
        double x2 = scan.take_number(), y2 = scan.take_number();
        double x3 = scan.take_number(), y3 = scan.take_number();
        if (cur.points.empty()) {
          throw SvgParseError("curveto before any moveto", scan.offset());
        }
        Pt p1 = relative ? Pt{pos[0] + x1, pos[1] + y1} : Pt{x1, y1};
        Pt p2 = relative ? Pt{pos[0] + x2, pos[1] + y2} : Pt{x2, y2};
        Pt p3 = relative ? Pt{pos[0] + x3, pos[1] + y3} : Pt{x3, y3};
        flatten_cubic(pos, p1, p2, p3, options.flatten_tolerance, 0, cur.points);
        pos = p3;
        break;
      }
      default:
        throw SvgParseError(std::string("unsupported path command '") + cmd + "'",
                            scan.offset() - 1);
    }
  }
  finish_stroke();

  for (size_t i = 0; i < strokes.size(); ++i) strokes[i].stroke_index = static_cast<int>(i);
  return strokes;
}

std::vector<StrokePolyline> parse_svg_strokes(std::string_view document,
                                              const SvgOptions& options) {
  std::vector<StrokePolyline> strokes;
  size_t pos = 0;
  while (true) {
    size_t elem = document.find("<path", pos);
    if (elem == std::string_view::npos) break;
    size_t close = document.find('>', elem);
    if (close == std::string_view::npos) {
      throw SvgParseError("unterminated <path> element", elem);
    }
    std::string_view tag = document.substr(elem, close - elem);

    // locate the d attribute inside the tag
    size_t dpos = 0;
    size_t dstart = std::string_view::npos;
    while ((dpos = tag.find('d', dpos)) != std::string_view::npos) {
      bool boundary = dpos == 0 || std::isspace(static_cast<unsigned char>(tag[dpos - 1])) ||
                      tag[dpos - 1] == '"' || tag[dpos - 1] == '\'';
      size_t eq = dpos + 1;
      while (eq < tag.size() && std::isspace(static_cast<unsigned char>(tag[eq]))) ++eq;
      if (boundary && eq < tag.size() && tag[eq] == '=') {
        size_t q = eq + 1;
        while (q < tag.size() && std::isspace(static_cast<unsigned char>(tag[q]))) ++q;
        if (q < tag.size() && (tag[q] == '"' || tag[q] == '\'')) {
          char quote = tag[q];
          size_t vstart = q + 1;
          size_t vend = tag.find(quote, vstart);
          if (vend == std::string_view::npos) {
            throw SvgParseError("unterminated d attribute", elem + q);
          }
          dstart = vstart;
          auto sub = parse_path_data(tag.substr(vstart, vend - vstart), options, elem + vstart);
          for (auto& s : sub) strokes.push_back(std::move(s));
          break;
        }
      }
      ++dpos;
    }
    (void)dstart;
    pos = close + 1;
  }
  for (size_t i = 0; i < strokes.size(); ++i) strokes[i].stroke_index = static_cast<int>(i);
  return strokes;
}

std::string emit_path_text(const StrokePolyline& stroke) {
  std::string out;
  char buf[64];
  for (size_t i = 0; i < stroke.points.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.17g %.17g", i == 0 ? "M " : " L ", stroke.points[i][0],
                  stroke.points[i][1]);
    out += buf;
  }
  return out;
}

}  // namespace brushgym
