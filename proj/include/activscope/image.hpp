#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace activscope {

using Rgb = std::array<std::uint8_t, 3>;

// Interleaved 8-bit RGB raster, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {0, 0, 0});

  Rgb at(int y, int x) const {
    const auto i = index(y, x);
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(int y, int x, Rgb c) {
    const auto i = index(y, x);
    pixels[i] = c[0];
    pixels[i + 1] = c[1];
    pixels[i + 2] = c[2];
  }
  bool contains(int y, int x) const { return y >= 0 && x >= 0 && y < height && x < width; }

  RgbImage crop(int y, int x, int h, int w) const;

  bool operator==(const RgbImage&) const = default;

 private:
  std::size_t index(int y, int x) const {
    return (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

// Single-channel 8-bit raster (masks, grayscale heatmaps).
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const GrayImage&) const = default;
};

void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);
RgbImage read_png_rgb(const std::filesystem::path& path);
GrayImage read_png_gray(const std::filesystem::path& path);

// One-pixel rectangle outline, clipped to the image.
void draw_box(RgbImage& image, int top, int left, int h, int w, Rgb color);

}  // namespace activscope
