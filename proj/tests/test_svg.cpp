#include <cmath>

#include "brushgym/rng.hpp"
#include "brushgym/svg.hpp"
#include "doctest.h"

using namespace brushgym;

TEST_CASE("simple moveto-lineto parses to one polyline") {
  auto strokes = parse_path_data("M 0 0 L 30 0");
  REQUIRE(strokes.size() == 1);
  REQUIRE(strokes[0].points.size() == 2);
  CHECK(strokes[0].points[0] == std::array<double, 2>{0.0, 0.0});
  CHECK(strokes[0].points[1] == std::array<double, 2>{30.0, 0.0});
}

TEST_CASE("empty path element parses to zero strokes") {
  auto strokes = parse_svg_strokes(R"(<svg><path d=""/></svg>)");
  CHECK(strokes.empty());
  auto no_d = parse_svg_strokes(R"(<svg><path id="x"/></svg>)");
  CHECK(no_d.empty());
}

TEST_CASE("degenerate straight cubic flattens collinear with its endpoints") {
  auto strokes = parse_path_data("M 0 0 C 10 0 20 0 30 0");
  REQUIRE(strokes.size() == 1);
  REQUIRE(strokes[0].points.size() >= 2);
  for (const auto& p : strokes[0].points) {
    CHECK(std::fabs(p[1]) <= 1e-6);
    CHECK(p[0] >= -1e-6);
    CHECK(p[0] <= 30.0 + 1e-6);
  }
  CHECK(strokes[0].points.back()[0] == doctest::Approx(30.0));
}

// Oracle: exact de Casteljau evaluation; every dense curve sample must lie
// within the flattening tolerance of the emitted polyline.
TEST_CASE("cubic flattening respects the chord-deviation tolerance") {
  Rng rng(41);
  SvgOptions opt;
  opt.flatten_tolerance = 0.5;
  for (int trial = 0; trial < 20; ++trial) {
    std::array<double, 2> p0{rng.uniform(0, 100), rng.uniform(0, 100)};
    std::array<double, 2> p1{rng.uniform(0, 100), rng.uniform(0, 100)};
    std::array<double, 2> p2{rng.uniform(0, 100), rng.uniform(0, 100)};
    std::array<double, 2> p3{rng.uniform(0, 100), rng.uniform(0, 100)};
    char buf[256];
    std::snprintf(buf, sizeof(buf), "M %f %f C %f %f %f %f %f %f", p0[0], p0[1], p1[0], p1[1],
                  p2[0], p2[1], p3[0], p3[1]);
    auto strokes = parse_path_data(buf, opt);
    REQUIRE(strokes.size() == 1);
    const auto& pts = strokes[0].points;
    REQUIRE(pts.size() >= 2);
    for (int s = 0; s <= 500; ++s) {
      auto q = cubic_bezier_point(p0, p1, p2, p3, s / 500.0);
      double best = 1e300;
      for (size_t i = 0; i + 1 < pts.size(); ++i) {
        double vx = pts[i + 1][0] - pts[i][0], vy = pts[i + 1][1] - pts[i][1];
        double len2 = vx * vx + vy * vy;
        double t = len2 > 0 ? ((q[0] - pts[i][0]) * vx + (q[1] - pts[i][1]) * vy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, std::hypot(q[0] - (pts[i][0] + t * vx), q[1] - (pts[i][1] + t * vy)));
      }
      REQUIRE(best <= opt.flatten_tolerance + 1e-9);
    }
  }
}

TEST_CASE("relative commands and implicit linetos") {
  auto strokes = parse_path_data("m 10 10 20 0 l 0 20");
  REQUIRE(strokes.size() == 1);
  REQUIRE(strokes[0].points.size() == 3);
  CHECK(strokes[0].points[1] == std::array<double, 2>{30.0, 10.0});
  CHECK(strokes[0].points[2] == std::array<double, 2>{30.0, 30.0});
}

TEST_CASE("multiple subpaths become ordered strokes") {
  auto strokes = parse_path_data("M 0 0 L 1 0 M 5 5 L 6 5 L 6 6");
  REQUIRE(strokes.size() == 2);
  CHECK(strokes[0].stroke_index == 0);
  CHECK(strokes[1].stroke_index == 1);
  CHECK(strokes[1].points.size() == 3);
}

TEST_CASE("malformed path commands report the byte offset") {
  try {
    parse_path_data("M 0 0 Q 1 1 2 2");
    FAIL("expected SvgParseError");
  } catch (const SvgParseError& e) {
    CHECK(e.byte_offset == 6);
  }
  try {
    parse_path_data("M 0 zz");
    FAIL("expected SvgParseError");
  } catch (const SvgParseError& e) {
    CHECK(e.byte_offset == 4);
  }
  CHECK_THROWS_AS(parse_path_data("L 1 2"), SvgParseError);
}

TEST_CASE("document parsing walks path elements in order") {
  const char* doc = R"(<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 109 109">
    <g id="strokes" style="fill:none">
      <path id="s1" d="M 10 10 L 99 10"/>
      <path id="s2" d="M 10 20 L 99 20"/>
    </g></svg>)";
  auto strokes = parse_svg_strokes(doc);
  REQUIRE(strokes.size() == 2);
  CHECK(strokes[0].points[0][1] == 10.0);
  CHECK(strokes[1].points[0][1] == 20.0);
}

TEST_CASE("emit/parse round trip is idempotent") {
  Rng rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    StrokePolyline s;
    int n = 2 + rng.uniform_int(8);
    for (int i = 0; i < n; ++i) {
      s.points.push_back({rng.uniform(-50, 150), rng.uniform(-50, 150)});
    }
    std::string text = emit_path_text(s);
    auto parsed = parse_path_data(text);
    REQUIRE(parsed.size() == 1);
    REQUIRE(parsed[0].points.size() == s.points.size());
    for (size_t i = 0; i < s.points.size(); ++i) {
      CHECK(parsed[0].points[i][0] == s.points[i][0]);
      CHECK(parsed[0].points[i][1] == s.points[i][1]);
    }
    CHECK(emit_path_text(parsed[0]) == text);
  }
}
