#include "brushgym/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace brushgym {

namespace {

uint8_t to_byte(double v) {
  double q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<uint8_t>(q);
}

bool has_suffix(const std::string& s, const std::string& suf) {
  if (s.size() < suf.size()) return false;
  std::string tail = s.substr(s.size() - suf.size());
  std::transform(tail.begin(), tail.end(), tail.begin(), ::tolower);
  return tail == suf;
}

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

Canvas read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("failed to decode " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_expand(png);     // palette/low-bit -> 8-bit
  png_set_strip_16(png);   // 16-bit -> 8-bit
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  int h = static_cast<int>(png_get_image_height(png, info));
  int w = static_cast<int>(png_get_image_width(png, info));
  int nc = static_cast<int>(png_get_channels(png, info));
  if (nc != 1 && nc != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("unsupported PNG channel count in " + path);
  }

  std::vector<uint8_t> row(static_cast<size_t>(w) * nc);
  Canvas canvas(h, w, nc, 0.0);
  for (int i = 0; i < h; ++i) {
    png_read_row(png, row.data(), nullptr);
    for (int j = 0; j < w; ++j) {
      for (int k = 0; k < nc; ++k) {
        canvas.at(i, j, k) = row[static_cast<size_t>(j) * nc + k] / 255.0;
      }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return canvas;
}

void write_png(const Canvas& canvas, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open " + path + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed to encode " + path);
  }

  png_init_io(png, fp.get());
  int color_type = canvas.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, canvas.width(), canvas.height(), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(canvas.width()) * canvas.channels());
  for (int i = 0; i < canvas.height(); ++i) {
    for (int j = 0; j < canvas.width(); ++j) {
      for (int k = 0; k < canvas.channels(); ++k) {
        row[static_cast<size_t>(j) * canvas.channels() + k] = to_byte(canvas.at(i, j, k));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Canvas read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") throw std::runtime_error("unsupported PNM magic in " + path);
  int nc = magic == "P5" ? 1 : 3;

  auto next_int = [&in, &path]() {
    // skip whitespace and '#' comments
    for (;;) {
      int ch = in.peek();
      if (ch == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(ch)) {
        in.get();
      } else {
        break;
      }
    }
    long v = -1;
    in >> v;
    if (!in || v < 0) throw std::runtime_error("malformed PNM header in " + path);
    return v;
  };

  long w = next_int(), h = next_int(), maxval = next_int();
  if (maxval <= 0 || maxval > 255) throw std::runtime_error("unsupported PNM maxval in " + path);
  in.get();  // single whitespace after header

  std::vector<uint8_t> buf(static_cast<size_t>(w) * h * nc);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw std::runtime_error("truncated PNM data in " + path);
  }

  Canvas canvas(static_cast<int>(h), static_cast<int>(w), nc, 0.0);
  size_t idx = 0;
  for (int i = 0; i < canvas.height(); ++i)
    for (int j = 0; j < canvas.width(); ++j)
      for (int k = 0; k < nc; ++k) canvas.at(i, j, k) = buf[idx++] / static_cast<double>(maxval);
  return canvas;
}

void write_pnm(const Canvas& canvas, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << (canvas.channels() == 1 ? "P5" : "P6") << "\n"
      << canvas.width() << " " << canvas.height() << "\n255\n";
  std::vector<uint8_t> buf;
  buf.reserve(canvas.size());
  for (int i = 0; i < canvas.height(); ++i)
    for (int j = 0; j < canvas.width(); ++j)
      for (int k = 0; k < canvas.channels(); ++k) buf.push_back(to_byte(canvas.at(i, j, k)));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

}  // namespace

Canvas read_image(const std::string& path) {
  if (has_suffix(path, ".png")) return read_png(path);
  if (has_suffix(path, ".ppm") || has_suffix(path, ".pgm") || has_suffix(path, ".pnm")) {
    return read_pnm(path);
  }
  throw std::runtime_error("unsupported image extension: " + path);
}

void write_image(const Canvas& canvas, const std::string& path) {
  if (has_suffix(path, ".png")) {
    write_png(canvas, path);
  } else if (has_suffix(path, ".ppm") || has_suffix(path, ".pgm") || has_suffix(path, ".pnm")) {
    write_pnm(canvas, path);
  } else {
    throw std::runtime_error("unsupported image extension: " + path);
  }
}

}  // namespace brushgym
