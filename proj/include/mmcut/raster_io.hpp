#pragma once

#include <string>

#include "mmcut/grid.hpp"

namespace mmcut {

// Readers accept 8-bit grayscale PNG and binary PGM (P5), detected by file
// content. Writers pick the format from the extension (.png or .pgm).
// Intensities map linearly between bytes and [0, 1]; masks are stored with
// values {0, 255} and binarized at 128 when read.

GrayImage load_image(const std::string& path);
BinaryMask load_mask(const std::string& path);

void save_image(const GrayImage& image, const std::string& path);
void save_mask(const BinaryMask& mask, const std::string& path);

// 8-bit RGB PNG writer, used for contour overlays.
void save_rgb(const Grid<uint8_t>& r, const Grid<uint8_t>& g, const Grid<uint8_t>& b,
              const std::string& path);

}  // namespace mmcut
