#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "brushgym/bc.hpp"
#include "brushgym/corpus.hpp"
#include "brushgym/objective.hpp"
#include "doctest.h"

using namespace brushgym;

namespace {

EnvConfig bc_env() {
  EnvConfig e = EnvConfig::with_window(64, 64, 1, 40);
  e.brush.l_max = 10.0;
  e.brush.w_max = 5.0;
  return e;
}

// direct rasterization of polylines, independent of the action encoding
Canvas rasterize_polylines(std::span<const StrokePolyline> strokes, const EnvConfig& env,
                           double radius, double ink) {
  Canvas canvas(env.canvas_h, env.canvas_w, env.channels, 0.0);
  std::array<double, 3> color{ink, ink, ink};
  for (const auto& s : strokes) {
    for (size_t i = 1; i < s.points.size(); ++i) {
      stamp_segment(canvas, s.points[i - 1][0], s.points[i - 1][1], s.points[i][0],
                    s.points[i][1], radius, color, env.brush.opacity);
    }
  }
  return canvas;
}

}  // namespace

TEST_CASE("svg extent parses the viewBox and falls back to 109") {
  CHECK(parse_svg_extent(R"(<svg viewBox="0 0 109 109">)") == std::array<double, 2>{109, 109});
  CHECK(parse_svg_extent(R"(<svg viewBox="0 0 200 150">)") == std::array<double, 2>{200, 150});
  CHECK(parse_svg_extent("<svg>") == std::array<double, 2>{109, 109});
}

TEST_CASE("glyph strokes scale into the canvas with margins") {
  std::vector<StrokePolyline> strokes(1);
  strokes[0].points = {{0.0, 0.0}, {109.0, 109.0}};  // (x, y) corners
  EnvConfig env = bc_env();
  auto scaled = scale_strokes_to_canvas(strokes, 109, 109, env, 0.1);
  REQUIRE(scaled.size() == 1);
  for (const auto& p : scaled[0].points) {
    CHECK(p[0] >= 64 * 0.1 - 1e-9);
    CHECK(p[0] <= 64 * 0.9 + 1e-9);
    CHECK(p[1] >= 64 * 0.1 - 1e-9);
  }
}

// Oracle: recompute the expected chord geometry from the polyline itself.
TEST_CASE("a straight 30px stroke with l_max=10 yields 3 full-length pairs") {
  EnvConfig env = bc_env();
  std::vector<StrokePolyline> strokes(1);
  strokes[0].points = {{20.0, 15.0}, {50.0, 15.0}};  // 30 px along +row
  DemoBuild build = strokes_to_pairs(strokes, env, DemoOptions{});
  REQUIRE(build.pairs.size() == 3);
  for (const auto& pair : build.pairs) {
    CHECK(pair.target.length == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(pair.target.width == doctest::Approx(0.5));
    // +row direction is alpha = 0 under the displacement convention
    CHECK(std::fabs(pair.target.alpha) < 1e-9);
  }
}

TEST_CASE("chord angles match the construction oracle on random polylines") {
  EnvConfig env = bc_env();
  Rng rng(81);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<StrokePolyline> strokes(1);
    double r = rng.uniform(10, 50), c = rng.uniform(10, 50);
    strokes[0].points.push_back({r, c});
    for (int k = 0; k < 4; ++k) {
      r += rng.uniform(-8, 8);
      c += rng.uniform(-8, 8);
      strokes[0].points.push_back({r, c});
    }
    DemoBuild build = strokes_to_pairs(strokes, env, DemoOptions{});
    // replaying displacement must land on the final polyline vertex
    BrushState pos{strokes[0].points[0][0], strokes[0].points[0][1], false};
    for (const auto& pair : build.pairs) pos = update_position(pos, pair.target, env.brush);
    CHECK(pos.row == doctest::Approx(strokes[0].points.back()[0]).epsilon(1e-6));
    CHECK(pos.col == doctest::Approx(strokes[0].points.back()[1]).epsilon(1e-6));
  }
}

TEST_CASE("two strokes with a small gap produce exactly one pen-up pair") {
  EnvConfig env = bc_env();
  std::vector<StrokePolyline> strokes(2);
  strokes[0].points = {{20.0, 20.0}, {28.0, 20.0}};
  strokes[1].points = {{24.0, 26.0}, {32.0, 26.0}};  // gap ~7.2px <= l_max
  DemoBuild build = strokes_to_pairs(strokes, env, DemoOptions{});
  int pen_up = 0;
  for (const auto& p : build.pairs) {
    if (p.pen_up) {
      ++pen_up;
      CHECK(p.target.width == 0.0);
    }
  }
  CHECK(pen_up == 1);
}

TEST_CASE("demo observations replay to the exact reference canvas") {
  EnvConfig env = bc_env();
  std::vector<StrokePolyline> strokes(2);
  strokes[0].points = {{15.0, 12.0}, {15.0, 50.0}};
  strokes[1].points = {{30.0, 12.0}, {48.0, 44.0}};
  DemoBuild build = strokes_to_pairs(strokes, env, DemoOptions{});
  // strokes_to_pairs asserts bitwise replay internally; double-check here
  Canvas replay = render_stroke_list(build.strokes);
  CHECK(replay == build.reference);
  CHECK(build.pairs.size() == build.strokes.strokes[0].actions.size());
}

// Oracle: direct rasterization of the source polylines. The two dab grids
// are anchored differently, so the comparison bounds the encoding error plus
// the rim anti-aliasing phase noise.
TEST_CASE("replayed demo matches direct polyline rasterization within loss_half 0.01") {
  EnvConfig env = EnvConfig::with_window(96, 96, 1, 40);
  env.brush.l_max = 12.0;
  env.brush.w_max = 5.0;
  DemoOptions opt;
  std::vector<StrokePolyline> strokes(3);
  strokes[0].points = {{18.0, 15.0}, {18.0, 78.0}};
  strokes[1].points = {{42.0, 15.0}, {54.0, 45.0}, {45.0, 75.0}};
  strokes[2].points = {{72.0, 18.0}, {75.0, 45.0}, {69.0, 78.0}};
  DemoBuild build = strokes_to_pairs(strokes, env, opt);
  Canvas direct = rasterize_polylines(strokes, env, opt.w_demo * env.brush.w_max, opt.ink);
  double err = loss_half(build.reference, direct);
  MESSAGE("demo vs rasterization loss_half: ", err);
  CHECK(err <= 0.01);
}

TEST_CASE("demo actions stay in the constant-color width-binary subspace") {
  EnvConfig env = bc_env();
  DemoOptions opt;
  opt.w_demo = 0.4;
  std::vector<StrokePolyline> strokes(2);
  strokes[0].points = {{10.0, 10.0}, {40.0, 14.0}, {52.0, 40.0}};
  strokes[1].points = {{20.0, 50.0}, {44.0, 52.0}};
  DemoBuild build = strokes_to_pairs(strokes, env, opt);
  for (const auto& p : build.pairs) {
    CHECK((p.target.width == 0.0 || p.target.width == opt.w_demo));
    CHECK(p.target.color[0] == opt.ink);
    CHECK(p.target.color[1] == opt.ink);
    CHECK(p.target.color[2] == opt.ink);
    CHECK(p.target.length <= 1.0);
    CHECK(p.target.alpha >= 0.0);
    CHECK(p.target.alpha < 1.0);
  }
}

TEST_CASE("demo dataset round-trips through the binary format") {
  EnvConfig env = bc_env();
  std::vector<StrokePolyline> strokes(1);
  strokes[0].points = {{20.0, 10.0}, {20.0, 50.0}};
  DemoBuild build = strokes_to_pairs(strokes, env, DemoOptions{});
  for (size_t i = 0; i < build.pairs.size(); ++i) build.pairs[i].glyph_id = 7;

  std::string path = "demo_roundtrip.bin";
  write_demo_dataset(build.pairs, env, DemoOptions{}, path);
  EnvConfig env_back;
  auto pairs = read_demo_dataset(path, &env_back);
  CHECK(env_back.window_h == env.window_h);
  CHECK(env_back.brush.l_max == env.brush.l_max);
  REQUIRE(pairs.size() == build.pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].glyph_id == 7);
    CHECK(pairs[i].pen_up == build.pairs[i].pen_up);
    auto a = pairs[i].target.as_vector();
    auto b = build.pairs[i].target.as_vector();
    for (int k = 0; k < 6; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-6));
    REQUIRE(pairs[i].obs.size() == build.pairs[i].obs.size());
    double max_err = 0.0;
    for (size_t j = 0; j < pairs[i].obs.size(); ++j) {
      max_err = std::max(max_err, std::fabs(pairs[i].obs[j] - build.pairs[i].obs[j]));
    }
    CHECK(max_err < 1e-6);  // f32 payload
  }
  CHECK(std::filesystem::exists(path + ".json"));
  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}

// Oracle: single-sample convergence run.
TEST_CASE("train_bc overfits a single pair to under 1% of the initial loss") {
  EnvConfig env = bc_env();
  std::vector<StrokePolyline> strokes(1);
  strokes[0].points = {{20.0, 10.0}, {20.0, 19.0}};
  DemoBuild build = strokes_to_pairs(strokes, env, DemoOptions{});
  REQUIRE(build.pairs.size() == 1);

  PolicyConfig pc = PolicyConfig::desk(env.window_h, env.window_w, env.channels);
  PolicyNet net(pc);
  Rng rng(82);
  net.init_weights(rng);

  BcConfig bc;
  bc.epochs = 500;  // one gradient step per epoch on a single-pair dataset
  bc.batch_size = 1;
  bc.learning_rate = 3e-3;
  bc.val_fraction = 0.0;
  bc.seed = 1;
  BcResult result = train_bc(net, build.pairs, bc);
  REQUIRE(result.train_curve.size() == 500);
  CHECK(result.train_curve.back() < 0.01 * result.train_curve.front());
}

TEST_CASE("train_bc with zero learning rate keeps the loss curve flat") {
  EnvConfig env = bc_env();
  std::vector<StrokePolyline> strokes(1);
  strokes[0].points = {{20.0, 10.0}, {20.0, 40.0}};
  DemoBuild build = strokes_to_pairs(strokes, env, DemoOptions{});
  PolicyConfig pc = PolicyConfig::desk(env.window_h, env.window_w, env.channels);
  PolicyNet net(pc);
  Rng rng(83);
  net.init_weights(rng);
  BcConfig bc;
  bc.epochs = 5;
  bc.learning_rate = 0.0;
  bc.val_fraction = 0.0;
  BcResult result = train_bc(net, build.pairs, bc);
  for (double v : result.train_curve) CHECK(v == doctest::Approx(result.train_curve[0]));
}

TEST_CASE("duplicating the dataset leaves full-batch descent unchanged") {
  EnvConfig env = bc_env();
  std::vector<StrokePolyline> strokes(1);
  strokes[0].points = {{20.0, 10.0}, {30.0, 34.0}, {22.0, 52.0}};
  DemoBuild build = strokes_to_pairs(strokes, env, DemoOptions{});
  std::vector<DemoPair> doubled = build.pairs;
  doubled.insert(doubled.end(), build.pairs.begin(), build.pairs.end());

  auto run = [&env](std::span<const DemoPair> data, int batch) {
    PolicyConfig pc = PolicyConfig::desk(env.window_h, env.window_w, env.channels);
    PolicyNet net(pc);
    Rng rng(84);
    net.init_weights(rng);
    BcConfig bc;
    bc.epochs = 8;
    bc.batch_size = batch;
    bc.learning_rate = 1e-3;
    bc.val_fraction = 0.0;
    return train_bc(net, data, bc);
  };
  BcResult a = run(build.pairs, static_cast<int>(build.pairs.size()));
  BcResult b = run(doubled, static_cast<int>(doubled.size()));
  REQUIRE(a.train_curve.size() == b.train_curve.size());
  for (size_t i = 0; i < a.train_curve.size(); ++i) {
    CHECK(a.train_curve[i] == doctest::Approx(b.train_curve[i]).epsilon(1e-6));
  }
}

TEST_CASE("init_rl_from_bc copies the action head and refreshes the value head") {
  EnvConfig env = bc_env();
  PolicyConfig pc = PolicyConfig::desk(env.window_h, env.window_w, env.channels);
  PolicyNet bc_net(pc);
  Rng rng(85);
  bc_net.init_weights(rng);
  bc_net.log_std().setConstant(-2.5);

  PolicyNet rl_net = init_rl_from_bc(bc_net, -0.7, 99);
  std::vector<double> obs(static_cast<size_t>(pc.input_planes()) * pc.obs_h * pc.obs_w);
  Rng orng(86);
  for (double& v : obs) v = orng.uniform();
  auto a = bc_net.forward(obs);
  auto b = rl_net.forward(obs);
  CHECK(a.dist.mean == b.dist.mean);
  CHECK(a.value != b.value);
  for (int i = 0; i < 6; ++i) CHECK(rl_net.log_std()(i) == -0.7);
}

TEST_CASE("fixture glyphs parse, build pairs, and a short BC run improves validation") {
  EnvConfig env = bc_env();
  std::vector<DemoPair> dataset;
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(FIXTURE_GLYPH_DIR)) {
    if (e.path().extension() == ".svg") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  REQUIRE(files.size() == 50);
  files.resize(8);

  int glyph_id = 0;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string doc((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto extent = parse_svg_extent(doc);
    SvgOptions so;
    so.flatten_tolerance = 0.5 * extent[0] / env.canvas_w;
    auto strokes = parse_svg_strokes(doc, so);
    REQUIRE(strokes.size() >= 2);
    auto scaled = scale_strokes_to_canvas(strokes, extent[0], extent[1], env, 0.1);
    DemoBuild build = strokes_to_pairs(scaled, env, DemoOptions{});
    REQUIRE(build.pairs.size() >= 4);
    for (auto& p : build.pairs) p.glyph_id = glyph_id;
    for (auto& p : build.pairs) dataset.push_back(std::move(p));
    ++glyph_id;
  }

  PolicyConfig pc = PolicyConfig::desk(env.window_h, env.window_w, env.channels);
  PolicyNet net(pc);
  Rng rng(87);
  net.init_weights(rng);
  BcConfig bc;
  bc.epochs = 10;
  bc.seed = 5;
  BcResult result = train_bc(net, dataset, bc);
  REQUIRE(!result.held_out_glyphs.empty());
  CHECK(result.val_curve[result.best_epoch] < result.val_curve[0]);
}
