#include <png.h>

#include <array>
#include <cstring>
#include <fstream>

#include "rockfrag/error.hpp"
#include "rockfrag/pgm.hpp"

namespace rockfrag {

GrayImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw InputError("png " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_GRAY;
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw InputError("png " + path.string() + ": empty image");
  }
  std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw InputError("png " + path.string() + ": " + msg);
  }
  return GrayImage(static_cast<int>(image.width), static_cast<int>(image.height), std::move(px));
}

GrayImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  static constexpr std::array<unsigned char, 8> kPng = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (in.gcount() == 8 && std::memcmp(magic.data(), kPng.data(), 8) == 0) return read_png(path);
  if (in.gcount() >= 2 && magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  throw InputError(path.string() + ": not a binary PGM or PNG image");
}

}  // namespace rockfrag
