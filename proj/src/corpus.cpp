#include "brushgym/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "brushgym/image_io.hpp"

namespace brushgym {

namespace {

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void paint_coverage(Canvas& c, int i, int j, double cov, double intensity) {
  for (int k = 0; k < c.channels(); ++k) {
    double& px = c.at(i, j, k);
    px = std::max(px, clamp01(cov * intensity));
  }
}

}  // namespace

Canvas make_disk_reference(int h, int w, double row, double col, double radius, double intensity,
                           int channels) {
  Canvas c(h, w, channels, 0.0);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double d = std::hypot(i - row, j - col);
      paint_coverage(c, i, j, clamp01(radius - d + 0.5), intensity);
    }
  }
  return c;
}

Canvas make_bar_reference(int h, int w, bool horizontal, double center, double half_width,
                          double intensity, int channels) {
  Canvas c(h, w, channels, 0.0);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double d = horizontal ? std::fabs(i - center) : std::fabs(j - center);
      paint_coverage(c, i, j, clamp01(half_width - d + 0.5), intensity);
    }
  }
  return c;
}

Canvas make_cross_reference(int h, int w, double row, double col, double half_len,
                            double half_width, double intensity, int channels) {
  Canvas c(h, w, channels, 0.0);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      // two perpendicular bars of limited extent
      double dh = std::max(std::fabs(i - row) - half_width, std::fabs(j - col) - half_len);
      double dv = std::max(std::fabs(j - col) - half_width, std::fabs(i - row) - half_len);
      double cov = clamp01(0.5 - std::min(dh, dv));
      paint_coverage(c, i, j, cov, intensity);
    }
  }
  return c;
}

std::vector<Canvas> procedural_corpus(int count, int h, int w, uint64_t seed, int channels) {
  if (count < 1) throw std::invalid_argument("procedural_corpus: count must be positive");
  Rng rng(seed);
  std::vector<Canvas> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    double jr = rng.uniform(-0.08, 0.08) * h;
    double jc = rng.uniform(-0.08, 0.08) * w;
    switch (i % 4) {
      case 0:
        out.push_back(make_disk_reference(h, w, h / 2.0 + jr, w / 2.0 + jc,
                                          0.22 * std::min(h, w), 1.0, channels));
        break;
      case 1:
        out.push_back(
            make_bar_reference(h, w, true, h / 2.0 + jr, 0.09 * h, 1.0, channels));
        break;
      case 2:
        out.push_back(
            make_bar_reference(h, w, false, w / 2.0 + jc, 0.09 * w, 1.0, channels));
        break;
      default:
        out.push_back(make_cross_reference(h, w, h / 2.0 + jr, w / 2.0 + jc,
                                           0.38 * std::min(h, w), 0.08 * std::min(h, w), 1.0,
                                           channels));
        break;
    }
  }
  return out;
}

std::vector<Canvas> load_corpus_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("corpus directory not found: " + dir);
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Canvas> out;
  for (const auto& f : files) out.push_back(read_image(f));
  return out;
}

Canvas sample_patch(const Canvas& image, int patch_h, int patch_w, Rng& rng) {
  if (patch_h > image.height() || patch_w > image.width()) {
    throw std::invalid_argument("sample_patch: patch larger than the image");
  }
  int r0 = image.height() == patch_h ? 0 : rng.uniform_int(image.height() - patch_h + 1);
  int c0 = image.width() == patch_w ? 0 : rng.uniform_int(image.width() - patch_w + 1);
  Canvas out(patch_h, patch_w, image.channels(), 0.0);
  for (int i = 0; i < patch_h; ++i)
    for (int j = 0; j < patch_w; ++j)
      for (int k = 0; k < image.channels(); ++k) out.at(i, j, k) = image.at(r0 + i, c0 + j, k);
  return out;
}

}  // namespace brushgym
