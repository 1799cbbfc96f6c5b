#pragma once

#include <filesystem>
#include <iosfwd>

#include "rockfrag/image.hpp"

namespace rockfrag {

/// Binary PGM (P5) with maxval <= 255. Header comments are accepted.
GrayImage read_pgm(std::istream& in);
GrayImage read_pgm(const std::filesystem::path& path);

/// 8-bit PNG of any colour type, converted to luminance.
GrayImage read_png(const std::filesystem::path& path);

/// PGM or PNG, chosen by the file's magic bytes.
GrayImage read_image(const std::filesystem::path& path);

void write_pgm(std::ostream& out, const GrayImage& img);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

}  // namespace rockfrag
