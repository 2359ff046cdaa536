#pragma once

#include <string>

#include "brushgym/canvas.hpp"

namespace brushgym {

// PNG / PPM / PGM image I/O, selected by file extension. Pixels are written
// as 8-bit samples; reading maps them back to [0,1]. PNG reads accept 8/16
// bit gray or RGB(A); alpha is dropped.
Canvas read_image(const std::string& path);
void write_image(const Canvas& canvas, const std::string& path);

}  // namespace brushgym
