#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pathattn/heatmap.hpp"
#include "pathattn/raster.hpp"
#include "pathattn/scanpath.hpp"

namespace pathattn {

enum class RenderMode { Gray, Overlay };

/// value x 255, rounded half-up.
std::uint8_t gray_level(double value);

/// Blue, cyan, green, yellow, red at 0, 0.25, 0.5, 0.75, 1; linear in between.
std::array<std::uint8_t, 3> ramp_color(double value);

std::vector<std::uint8_t> render_gray_pixels(const AttentionHeatmap& heatmap);

/// Ramp color alpha-blended at 0.5 over `base`, which fixes the output size.
/// Heatmap cells are sampled nearest-neighbour. Throws AspectMismatch.
RgbImage render_overlay_pixels(const AttentionHeatmap& heatmap, const RgbImage& base);

/// PNG bytes; overlay mode requires `base`.
std::vector<std::uint8_t> render_heatmap(const AttentionHeatmap& heatmap, RenderMode mode,
                                         const std::optional<RgbImage>& base = std::nullopt);

/// Draws a scanpath polyline (and center dots) onto an image whose extent
/// covers the slide at `px_per_base` output pixels per base pixel.
void draw_scanpath(RgbImage& image, const Scanpath& path, double px_per_base);

}  // namespace pathattn
