#pragma once

#include <cstdint>
#include <vector>

namespace rockfrag {

/// 8-bit grayscale image, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }
  std::vector<std::uint8_t>& pixels() noexcept { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Boolean grid congruent with an image; true = analyzable rock region.
class RegionMask {
 public:
  RegionMask() = default;
  RegionMask(int width, int height, bool value = true);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool at(int x, int y) const { return cells_[index(x, y)] != 0; }
  void set(int x, int y, bool v) { cells_[index(x, y)] = v ? 1 : 0; }
  std::size_t count_true() const noexcept;
  bool congruent_with(const GrayImage& img) const noexcept {
    return img.width() == width_ && img.height() == height_;
  }

  bool operator==(const RegionMask&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// Nearest-neighbour upscale by an integer factor.
GrayImage upscale_nearest(const GrayImage& img, int factor);

/// 3x3 box blur with edge replication, applied `passes` times.
GrayImage box_blur(const GrayImage& img, int passes = 1);

}  // namespace rockfrag
