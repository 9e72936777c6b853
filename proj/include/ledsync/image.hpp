// 8-bit grayscale raster and binary PGM (P5) I/O.
//
// Pixel (x, y) is centred on integer coordinates and covers
// [x - 0.5, x + 0.5) x [y - 0.5, y + 0.5).

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ledsync {

class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<std::uint8_t> row(int y) {
    return {pixels_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const std::uint8_t> row(int y) const {
    return {pixels_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  bool Contains(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x <= width_ - 1.0 && y <= height_ - 1.0;
  }

  // Bilinear interpolation; coordinates are clamped to the image.
  double Sample(double x, double y) const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

GrayImage ReadPgm(const std::filesystem::path& path);
void WritePgm(const GrayImage& image, const std::filesystem::path& path);

// Sorted list of frame_NNNNNN.pgm files in a directory.
std::vector<std::filesystem::path> ListFrames(const std::filesystem::path& dir);
std::string FrameFileName(int frame_index);

}  // namespace ledsync
