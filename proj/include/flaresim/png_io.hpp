#pragma once

#include "flaresim/image.hpp"

#include <filesystem>

namespace flaresim {

// Reads an 8- or 16-bit grayscale/RGB PNG, maps samples to [0,1] and
// linearizes by raising to `gamma` (gamma = 1 leaves samples untouched).
// Palette images are expanded to RGB; alpha channels are stripped.
ImageF load_png(const std::filesystem::path& path, double gamma = 1.0);

// Clips samples to [0,1], encodes with exponent 1/inv_gamma and quantizes
// round-to-nearest to 8 bits. Channel count of the image decides gray vs RGB.
void save_png(const ImageF& img, const std::filesystem::path& path, double inv_gamma = 1.0);

} // namespace flaresim
