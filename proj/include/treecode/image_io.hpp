#pragma once

#include <string>

#include "treecode/sift.hpp"

namespace treecode {

// Binary 8-bit grayscale PGM (P5, maxval <= 255). Intensities come out in
// [0, 1] (pixel / 255).
GrayImage read_pgm(const std::string& path);

void write_pgm(const std::string& path, const GrayImage& img);

}  // namespace treecode
