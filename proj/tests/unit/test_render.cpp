#include <algorithm>

#include "pathattn/raster.hpp"
#include "pathattn/render.hpp"
#include "support.hpp"

using namespace pathattn;
using testing::error_code;

namespace {

AttentionHeatmap filled(int w, int h, double v) {
  AttentionHeatmap hm;
  hm.grid = Grid2D(w, h, {1, 16}, v);
  return hm;
}

}  // namespace

TEST_CASE("gray levels round half up") {
  CHECK(gray_level(0.0) == 0);
  CHECK(gray_level(1.0) == 255);
  CHECK(gray_level(0.5) == 128);
  CHECK(gray_level(0.25) == 64);
}

TEST_CASE("gray PNGs") {
  for (double v : {0.0, 1.0}) {
    const auto png = render_heatmap(filled(7, 3, v), RenderMode::Gray);
    int w = 0, h = 0;
    const auto px = decode_png_gray(png, &w, &h);
    CHECK(w == 7);
    CHECK(h == 3);
    CHECK(std::all_of(px.begin(), px.end(), [&](std::uint8_t p) { return p == (v == 0.0 ? 0 : 255); }));
  }
}

TEST_CASE("overlay blends the ramp over the base") {
  RgbImage base(14, 6);
  std::fill(base.data.begin(), base.data.end(), 100);
  const auto img = render_overlay_pixels(filled(7, 3, 1.0), base);
  CHECK(img.width == 14);
  const auto red = ramp_color(1.0);
  CHECK(red == std::array<std::uint8_t, 3>{255, 0, 0});
  CHECK(ramp_color(0.0) == std::array<std::uint8_t, 3>{0, 0, 255});
  CHECK(img.px(3, 2)[0] == (255 + 100 + 1) / 2);
  CHECK(img.px(3, 2)[1] == (0 + 100 + 1) / 2);

  RgbImage tall(6, 14);
  CHECK(error_code([&] { render_overlay_pixels(filled(7, 3, 1.0), tall); }) == ErrorCode::AspectMismatch);
  CHECK(error_code([&] { render_heatmap(filled(7, 3, 1.0), RenderMode::Overlay); }) ==
        ErrorCode::AspectMismatch);
}

TEST_CASE("RGB PNG round trip") {
  RgbImage img(5, 4);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i * 7);
  const auto back = decode_png_rgb(encode_png_rgb(img));
  CHECK(back.width == 5);
  CHECK(back.data == img.data);
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(error_code([&] { decode_png_rgb(junk); }) == ErrorCode::Io);
}

TEST_CASE("scanpath drawing stays in bounds") {
  RgbImage img(32, 32);
  Scanpath path{{16, 16, 0, 10, 0}, {480, 16, 1, 10, 0}, {-100, 900, 2, 10, 0}};
  draw_scanpath(img, path, 1.0 / 16.0);
  CHECK(std::any_of(img.data.begin(), img.data.end(), [](std::uint8_t v) { return v != 0; }));
}
