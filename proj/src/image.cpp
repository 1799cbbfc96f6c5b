#include "rockfrag/image.hpp"

#include <algorithm>

#include "rockfrag/error.hpp"

namespace rockfrag {

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw InputError("image dimensions must be positive");
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) throw InputError("image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw InputError("image pixel count does not match width x height");
}

RegionMask::RegionMask(int width, int height, bool value) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw InputError("mask dimensions must be positive");
  cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), value ? 1 : 0);
}

std::size_t RegionMask::count_true() const noexcept {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

GrayImage upscale_nearest(const GrayImage& img, int factor) {
  if (factor < 1) throw InputError("upscale factor must be >= 1");
  GrayImage out(img.width() * factor, img.height() * factor);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.at(x, y) = img.at(x / factor, y / factor);
  return out;
}

GrayImage box_blur(const GrayImage& img, int passes) {
  GrayImage cur = img;
  for (int pass = 0; pass < passes; ++pass) {
    GrayImage next(cur.width(), cur.height());
    for (int y = 0; y < cur.height(); ++y) {
      for (int x = 0; x < cur.width(); ++x) {
        int sum = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = std::clamp(y + dy, 0, cur.height() - 1);
          for (int dx = -1; dx <= 1; ++dx) sum += cur.at(std::clamp(x + dx, 0, cur.width() - 1), yy);
        }
        next.at(x, y) = static_cast<std::uint8_t>((sum + 4) / 9);
      }
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace rockfrag
