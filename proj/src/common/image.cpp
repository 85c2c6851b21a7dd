#include "activscope/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "activscope/error.hpp"

namespace activscope {

RgbImage::RgbImage(int w, int h, Rgb fill) : width(w), height(h) {
  pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill[0];
    pixels[i + 1] = fill[1];
    pixels[i + 2] = fill[2];
  }
}

RgbImage RgbImage::crop(int y, int x, int h, int w) const {
  if (y < 0 || x < 0 || y + h > height || x + w > width) {
    throw Error("out_of_bounds", "crop outside image");
  }
  RgbImage out(w, h);
  for (int r = 0; r < h; ++r) {
    const auto* src = &pixels[(static_cast<std::size_t>(y + r) * width + x) * 3];
    std::copy(src, src + static_cast<std::size_t>(w) * 3,
              &out.pixels[static_cast<std::size_t>(r) * w * 3]);
  }
  return out;
}

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error("io_error", "cannot open " + path.string());
  return f;
}

void write_png_rows(const std::filesystem::path& path, int width, int height, int color_type,
                    const std::uint8_t* data, std::size_t row_bytes) {
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("io_error", "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("io_error", "png write failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  // Fixed settings keep output bytes reproducible.
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(data + static_cast<std::size_t>(y) * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Reads any 8-bit PNG, converting to the requested channel count (1 or 3).
std::vector<std::uint8_t> read_png_any(const std::filesystem::path& path, int channels, int& width,
                                       int& height) {
  auto file = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error("parse_error", "not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("io_error", "libpng init failed");
  }
  std::vector<std::uint8_t> data;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("parse_error", "corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  const bool is_gray = !(color & PNG_COLOR_MASK_COLOR) && color != PNG_COLOR_TYPE_PALETTE;
  if (channels == 3 && is_gray) png_set_gray_to_rgb(png);
  if (channels == 1 && !is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  const std::size_t row_bytes = static_cast<std::size_t>(width) * channels;
  if (png_get_rowbytes(png, info) != row_bytes) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("parse_error", "unexpected PNG layout: " + path.string());
  }
  data.resize(row_bytes * height);
  for (int y = 0; y < height; ++y) png_read_row(png, &data[y * row_bytes], nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return data;
}

}  // namespace

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  write_png_rows(path, image.width, image.height, PNG_COLOR_TYPE_RGB, image.pixels.data(),
                 static_cast<std::size_t>(image.width) * 3);
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  write_png_rows(path, image.width, image.height, PNG_COLOR_TYPE_GRAY, image.pixels.data(),
                 static_cast<std::size_t>(image.width));
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  RgbImage out;
  out.pixels = read_png_any(path, 3, out.width, out.height);
  return out;
}

GrayImage read_png_gray(const std::filesystem::path& path) {
  GrayImage out;
  out.pixels = read_png_any(path, 1, out.width, out.height);
  return out;
}

void draw_box(RgbImage& image, int top, int left, int h, int w, Rgb color) {
  const int bottom = top + h - 1;
  const int right = left + w - 1;
  for (int x = left; x <= right; ++x) {
    if (image.contains(top, x)) image.set(top, x, color);
    if (image.contains(bottom, x)) image.set(bottom, x, color);
  }
  for (int y = top; y <= bottom; ++y) {
    if (image.contains(y, left)) image.set(y, left, color);
    if (image.contains(y, right)) image.set(y, right, color);
  }
}

}  // namespace activscope
