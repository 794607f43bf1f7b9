#include "pathattn/render.hpp"

#include <algorithm>
#include <cmath>

#include "pathattn/error.hpp"

namespace pathattn {

std::uint8_t gray_level(double value) {
  const double v = std::clamp(value, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

std::array<std::uint8_t, 3> ramp_color(double value) {
  static constexpr double stops[5][3] = {
      {0, 0, 255}, {0, 255, 255}, {0, 255, 0}, {255, 255, 0}, {255, 0, 0}};
  const double v = std::clamp(value, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(v));
  const double f = v - i;
  std::array<std::uint8_t, 3> c{};
  for (int k = 0; k < 3; ++k)
    c[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(
        std::floor(stops[i][k] + (stops[i + 1][k] - stops[i][k]) * f + 0.5));
  return c;
}

std::vector<std::uint8_t> render_gray_pixels(const AttentionHeatmap& heatmap) {
  std::vector<std::uint8_t> px;
  px.reserve(heatmap.grid.size());
  for (double v : heatmap.grid.values()) px.push_back(gray_level(v));
  return px;
}

RgbImage render_overlay_pixels(const AttentionHeatmap& heatmap, const RgbImage& base) {
  const int hw = heatmap.grid.width(), hh = heatmap.grid.height();
  if (base.width <= 0 || base.height <= 0 || hw <= 0 || hh <= 0)
    throw Error(ErrorCode::AspectMismatch, "empty heatmap or base image");
  // Heatmap sides are ceil-rounded, so allow one cell of slack plus 1%.
  const double expected_w = static_cast<double>(base.width) * hh / base.height;
  if (std::abs(expected_w - hw) > 1.0 + 0.01 * hw)
    throw Error(ErrorCode::AspectMismatch,
                "base image " + std::to_string(base.width) + "x" + std::to_string(base.height) +
                    " does not match heatmap " + std::to_string(hw) + "x" + std::to_string(hh));
  RgbImage out(base.width, base.height);
  for (int y = 0; y < base.height; ++y) {
    const int gy = std::min(hh - 1, static_cast<int>((static_cast<std::int64_t>(y) * hh) / base.height));
    for (int x = 0; x < base.width; ++x) {
      const int gx = std::min(hw - 1, static_cast<int>((static_cast<std::int64_t>(x) * hw) / base.width));
      const auto c = ramp_color(heatmap.grid.at(gx, gy));
      const auto* b = base.px(x, y);
      auto* o = out.px(x, y);
      for (int k = 0; k < 3; ++k)
        o[k] = static_cast<std::uint8_t>((c[static_cast<std::size_t>(k)] + b[k] + 1) / 2);
    }
  }
  return out;
}

std::vector<std::uint8_t> render_heatmap(const AttentionHeatmap& heatmap, RenderMode mode,
                                         const std::optional<RgbImage>& base) {
  if (mode == RenderMode::Gray)
    return encode_png_gray(heatmap.grid.width(), heatmap.grid.height(),
                           render_gray_pixels(heatmap));
  if (!base) throw Error(ErrorCode::AspectMismatch, "overlay rendering needs a base image");
  return encode_png_rgb(render_overlay_pixels(heatmap, *base));
}

namespace {

void plot(RgbImage& img, int x, int y, std::array<std::uint8_t, 3> c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  auto* p = img.px(x, y);
  p[0] = c[0];
  p[1] = c[1];
  p[2] = c[2];
}

void line(RgbImage& img, int x0, int y0, int x1, int y1, std::array<std::uint8_t, 3> c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    plot(img, x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) { err += dy; x0 += sx; }
    if (e2 <= dx) { err += dx; y0 += sy; }
  }
}

}  // namespace

void draw_scanpath(RgbImage& image, const Scanpath& path, double px_per_base) {
  constexpr std::array<std::uint8_t, 3> kLine{20, 20, 20};
  constexpr std::array<std::uint8_t, 3> kDot{230, 30, 30};
  auto to_px = [&](double v) { return static_cast<int>(std::floor(v * px_per_base)); };
  for (std::size_t i = 1; i < path.size(); ++i)
    line(image, to_px(path[i - 1].cx), to_px(path[i - 1].cy), to_px(path[i].cx),
         to_px(path[i].cy), kLine);
  for (const auto& p : path) {
    const int cx = to_px(p.cx), cy = to_px(p.cy);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) plot(image, cx + dx, cy + dy, kDot);
  }
}

}  // namespace pathattn
