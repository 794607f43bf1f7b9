#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pathattn {

/// Interleaved 8-bit RGB, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* px(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* px(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

std::vector<std::uint8_t> encode_png_gray(int width, int height, std::span<const std::uint8_t> pixels);
std::vector<std::uint8_t> encode_png_rgb(const RgbImage& image);

/// Decodes any 8/16-bit PNG into RGB (alpha dropped, gray expanded).
RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes);
RgbImage read_png_rgb(const std::filesystem::path& path);

/// Grayscale decode, used to inspect rendered heatmaps.
std::vector<std::uint8_t> decode_png_gray(std::span<const std::uint8_t> bytes, int* width,
                                          int* height);

}  // namespace pathattn
