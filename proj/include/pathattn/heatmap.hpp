#pragma once

// Attention heatmaps: viewport coverage counts, Gaussian smoothing and
// min-max normalization, plus group averaging and the AHM1 file format.

#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pathattn/grid.hpp"
#include "pathattn/ingest.hpp"

namespace pathattn {

/// Restricts accumulation to events whose magnification snaps to `level`
/// among `levels`.
struct MagFilter {
  double level = 10.0;
  std::vector<double> levels{4.0, 10.0, 20.0, 40.0};
};

struct AttentionHeatmap {
  Grid2D grid;
  double sigma = 16.0;  // grid cells at the working scale
  std::set<std::string> observers;
  std::optional<double> mag_filter;
  bool degenerate = false;  // constant before normalization, emitted as all zeros
};

struct HeatmapOptions {
  Scale scale{1, 16};
  double sigma = 16.0;
  std::optional<MagFilter> mag_filter;
};

/// Per-cell count of scaled viewport boxes covering the cell. Box starts are
/// floored and ends ceiled onto the grid. Throws EmptyInput without sessions.
Grid2D accumulate_viewports(std::span<const NavigationSession> sessions,
                            const SlideManifest& manifest, Scale scale,
                            const std::optional<MagFilter>& mag_filter = std::nullopt);

/// Unit-sum sampled Gaussian, radius ceil(3 sigma); index r is the center.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian with half-sample symmetric (reflect) padding.
Grid2D gaussian_smooth(const Grid2D& grid, double sigma);

/// Affine map onto [0, 1]. A constant grid maps to zeros and sets `degenerate`.
Grid2D min_max_normalize(const Grid2D& grid, bool* degenerate = nullptr);

AttentionHeatmap build_attention_heatmap(std::span<const NavigationSession> sessions,
                                         const SlideManifest& manifest,
                                         const HeatmapOptions& options = {});

/// Mean of already-normalized maps, renormalized. Throws DimensionMismatch.
AttentionHeatmap average_heatmaps(std::span<const AttentionHeatmap> heatmaps);

/// "AHM1" little-endian: u32 width, u32 height, f64 scale, f64 sigma, f32 values.
void write_heatmap(std::ostream& out, const AttentionHeatmap& heatmap);
AttentionHeatmap read_heatmap(std::istream& in);

}  // namespace pathattn
