#pragma once

#include <string>
#include <vector>

#include "brushgym/canvas.hpp"
#include "brushgym/rng.hpp"

namespace brushgym {

// Procedural reference shapes: bright anti-aliased figures on a dark ground.
Canvas make_disk_reference(int h, int w, double row, double col, double radius,
                           double intensity = 1.0, int channels = 1);
Canvas make_bar_reference(int h, int w, bool horizontal, double center, double half_width,
                          double intensity = 1.0, int channels = 1);
Canvas make_cross_reference(int h, int w, double row, double col, double half_len,
                            double half_width, double intensity = 1.0, int channels = 1);

// The desk corpus: disk, horizontal bar, vertical bar, two-stroke cross,
// with seeded jitter. count > 4 cycles the shape kinds.
std::vector<Canvas> procedural_corpus(int count, int h, int w, uint64_t seed, int channels = 1);

// Loads every .png/.ppm/.pgm in the directory, sorted by filename.
std::vector<Canvas> load_corpus_dir(const std::string& dir);

// Random patch crop; the patch must fit inside the image.
Canvas sample_patch(const Canvas& image, int patch_h, int patch_w, Rng& rng);

}  // namespace brushgym
