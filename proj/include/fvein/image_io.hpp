#pragma once

#include <filesystem>

#include "fvein/numerics.hpp"

namespace fvein {

// Decodes an 8-bit grayscale BMP (palettized, 8 bits per pixel) or PNG
// (grayscale, bit depth 8) into [0,1] intensities. Other formats and pixel
// layouts are rejected with invalid-input; unreadable files raise io.
GrayImage read_image(const std::filesystem::path& path);

// Writes an 8-bit grayscale PNG, rounding [0,1] intensities to 0..255.
void write_png(const std::filesystem::path& path, const GrayImage& image);

// Writes an 8-bit palettized grayscale BMP.
void write_bmp(const std::filesystem::path& path, const GrayImage& image);

}  // namespace fvein
