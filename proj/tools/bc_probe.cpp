// Scratch diagnostics for the behavior-cloning pipeline.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "brushgym/bc.hpp"
#include "brushgym/image_io.hpp"
#include "brushgym/objective.hpp"

using namespace brushgym;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  std::string glyph_dir = argc > 1 ? argv[1] : "../data/glyphs";
  int epochs = argc > 2 ? std::atoi(argv[2]) : 30;
  double lr = argc > 3 ? std::atof(argv[3]) : 1e-3;
  int window = argc > 4 ? std::atoi(argv[4]) : 40;
  double l_max = argc > 5 ? std::atof(argv[5]) : 10.0;
  double w_max = argc > 6 ? std::atof(argv[6]) : 5.0;

  EnvConfig env = EnvConfig::with_window(64, 64, 1, window);
  env.brush.l_max = l_max;
  env.brush.w_max = w_max;

  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(glyph_dir)) {
    if (e.path().extension() == ".svg") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());

  int aug = argc > 7 ? std::atoi(argv[7]) : 0;
  double jitter = argc > 8 ? std::atof(argv[8]) : 2.0;
  std::vector<DemoPair> dataset;
  std::vector<DemoBuild> builds(files.size());
  Rng aug_rng(12345);
  for (size_t i = 0; i < files.size(); ++i) {
    std::ifstream in(files[i]);
    std::string doc((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto extent = parse_svg_extent(doc);
    SvgOptions so;
    so.flatten_tolerance = 0.5 * extent[0] / env.canvas_w;
    auto strokes = parse_svg_strokes(doc, so);
    auto scaled = scale_strokes_to_canvas(strokes, extent[0], extent[1], env, 0.1);
    builds[i] = strokes_to_pairs(scaled, env, DemoOptions{});
    for (auto& p : builds[i].pairs) {
      p.glyph_id = static_cast<int>(i);
      dataset.push_back(p);
    }
    auto extra = augment_demo_pairs(builds[i], env, aug, jitter, aug_rng);
    for (auto& p : extra) {
      p.glyph_id = static_cast<int>(i);
      dataset.push_back(std::move(p));
    }
  }
  std::printf("%zu pairs from %zu glyphs\n", dataset.size(), files.size());

  PolicyNet net(PolicyConfig::desk(window, window, 1));
  Rng rng(0);
  net.init_weights(rng);
  BcConfig bc;
  bc.epochs = epochs;
  bc.learning_rate = lr;
  bc.seed = 0;
  BcResult res = train_bc(net, dataset, bc);
  std::printf("val mse %.5f -> %.5f; held out:", res.val_curve[0],
              res.val_curve[res.best_epoch]);
  for (int g : res.held_out_glyphs) std::printf(" %d", g);
  std::printf("\n");

  auto replay_verbose = [&](int gid, const char* tag, bool verbose) {
    const DemoBuild& build = builds[gid];
    PaintEnv penv(env);
    penv.set_reference(build.reference, 0);
    penv.place_brush(build.strokes.strokes[0].start[0], build.strokes.strokes[0].start[1]);
    double initial = penv.loss();
    size_t steps = build.pairs.size() + build.pairs.size() / 4 + 2;
    for (size_t t = 0; t < steps; ++t) {
      auto out = net.forward(penv.observe().to_tensor());
      Action a = mean_action(out.dist);
      if (verbose && t < build.pairs.size()) {
        const Action& d = build.strokes.strokes[0].actions[t];
        std::printf("  t=%2zu pred a=%.2f l=%.2f w=%.2f c=%.2f | demo a=%.2f l=%.2f w=%.2f\n", t,
                    a.alpha, a.length, a.width, a.color[0], d.alpha, d.length, d.width);
      }
      penv.apply(a);
    }
    double final_loss = penv.loss();
    std::printf("%s glyph %d: initial %.4f final %.4f reduction %.3f\n", tag, gid, initial,
                final_loss, 1.0 - final_loss / initial);
    write_image(penv.canvas(), std::string("/tmp/replay_") + std::to_string(gid) + ".png");
    write_image(build.reference, std::string("/tmp/ref_") + std::to_string(gid) + ".png");
  };

  int train_gid = 0;
  while (std::find(res.held_out_glyphs.begin(), res.held_out_glyphs.end(), train_gid) !=
         res.held_out_glyphs.end()) {
    ++train_gid;
  }
  replay_verbose(train_gid, "train", true);
  for (int g : res.held_out_glyphs) replay_verbose(g, "held-out", false);

  // open-loop sanity: feed DEMO observations, how close are the predictions?
  double mse_train = bc_action_mse(net, std::span(dataset).subspan(0, 100));
  std::printf("train-subset action mse: %.5f\n", mse_train);
  return 0;
}
