#include "pathattn/heatmap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "pathattn/error.hpp"

namespace pathattn {

Grid2D accumulate_viewports(std::span<const NavigationSession> sessions,
                            const SlideManifest& manifest, Scale scale,
                            const std::optional<MagFilter>& mag_filter) {
  if (sessions.empty()) throw Error(ErrorCode::EmptyInput, "no sessions to accumulate");
  scale.validate();
  Grid2D grid = grid_for_slide(manifest.width_px, manifest.height_px, scale);
  const std::int64_t w = grid.width(), h = grid.height();

  // 2-D difference array; one prefix-sum pass turns it into exact counts.
  std::vector<std::int64_t> diff(static_cast<std::size_t>((w + 1) * (h + 1)), 0);
  auto bump = [&](std::int64_t x, std::int64_t y, std::int64_t v) {
    diff[static_cast<std::size_t>(y * (w + 1) + x)] += v;
  };
  for (const auto& session : sessions) {
    for (const auto& e : session.events) {
      if (mag_filter && nearest_standard_mag(e.mag, mag_filter->levels) != mag_filter->level)
        continue;
      const auto x0 = std::clamp<std::int64_t>(scale.floor_cells(e.x0), 0, w);
      const auto y0 = std::clamp<std::int64_t>(scale.floor_cells(e.y0), 0, h);
      const auto x1 = std::clamp<std::int64_t>(scale.ceil_cells(e.x1), 0, w);
      const auto y1 = std::clamp<std::int64_t>(scale.ceil_cells(e.y1), 0, h);
      if (x0 >= x1 || y0 >= y1) continue;
      bump(x0, y0, 1);
      bump(x1, y0, -1);
      bump(x0, y1, -1);
      bump(x1, y1, 1);
    }
  }
  for (std::int64_t y = 0; y <= h; ++y)
    for (std::int64_t x = 1; x <= w; ++x)
      diff[static_cast<std::size_t>(y * (w + 1) + x)] +=
          diff[static_cast<std::size_t>(y * (w + 1) + x - 1)];
  for (std::int64_t y = 1; y <= h; ++y)
    for (std::int64_t x = 0; x <= w; ++x)
      diff[static_cast<std::size_t>(y * (w + 1) + x)] +=
          diff[static_cast<std::size_t>((y - 1) * (w + 1) + x)];

  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      grid.at(static_cast<int>(x), static_cast<int>(y)) =
          static_cast<double>(diff[static_cast<std::size_t>(y * (w + 1) + x)]);
  return grid;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw Error(ErrorCode::InvalidArgument, "sigma must be a finite non-negative number");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

namespace {

// Half-sample symmetric extension (d c b a | a b c d | d c b a), periodic
// with period 2n so any radius is valid.
inline int reflect_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

void convolve_line(const double* in, double* out, int n, std::span<const double> kernel,
                   std::vector<double>& padded) {
  const int r = static_cast<int>(kernel.size() / 2);
  padded.resize(static_cast<std::size_t>(n + 2 * r));
  for (int i = -r; i < n + r; ++i) padded[static_cast<std::size_t>(i + r)] = in[reflect_index(i, n)];
  for (int i = 0; i < n; ++i) {
    // Sum of weighted offsets from the center sample: equal to the plain
    // weighted sum for a unit-sum kernel, and exact on constant input.
    const double* p = padded.data() + i;
    const double c = p[r];
    double acc = 0.0;
    for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * (p[k] - c);
    out[i] = c + acc;
  }
}

}  // namespace

Grid2D gaussian_smooth(const Grid2D& grid, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  if (kernel.size() == 1 || grid.size() == 0) return grid;
  const int w = grid.width(), h = grid.height();
  Grid2D tmp(w, h, grid.scale());
  std::vector<double> padded;
  for (int y = 0; y < h; ++y)
    convolve_line(grid.values().data() + static_cast<std::size_t>(y) * w,
                  tmp.values().data() + static_cast<std::size_t>(y) * w, w, kernel, padded);

  Grid2D out(w, h, grid.scale());
  std::vector<double> col_in(static_cast<std::size_t>(h)), col_out(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) col_in[static_cast<std::size_t>(y)] = tmp.at(x, y);
    convolve_line(col_in.data(), col_out.data(), h, kernel, padded);
    for (int y = 0; y < h; ++y) out.at(x, y) = col_out[static_cast<std::size_t>(y)];
  }
  return out;
}

Grid2D min_max_normalize(const Grid2D& grid, bool* degenerate) {
  Grid2D out(grid.width(), grid.height(), grid.scale());
  if (grid.size() == 0) {
    if (degenerate) *degenerate = true;
    return out;
  }
  auto [lo_it, hi_it] = std::minmax_element(grid.values().begin(), grid.values().end());
  const double lo = *lo_it, hi = *hi_it;
  if (degenerate) *degenerate = !(hi > lo);
  if (!(hi > lo)) return out;
  const double range = hi - lo;
  auto src = grid.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] - lo) / range;
  return out;
}

AttentionHeatmap build_attention_heatmap(std::span<const NavigationSession> sessions,
                                         const SlideManifest& manifest,
                                         const HeatmapOptions& options) {
  const Grid2D counts =
      accumulate_viewports(sessions, manifest, options.scale, options.mag_filter);
  AttentionHeatmap hm;
  hm.grid = min_max_normalize(gaussian_smooth(counts, options.sigma), &hm.degenerate);
  hm.sigma = options.sigma;
  for (const auto& s : sessions) hm.observers.insert(s.observer_id);
  if (options.mag_filter) hm.mag_filter = options.mag_filter->level;
  return hm;
}

AttentionHeatmap average_heatmaps(std::span<const AttentionHeatmap> heatmaps) {
  if (heatmaps.empty()) throw Error(ErrorCode::EmptyInput, "no heatmaps to average");
  const Grid2D& first = heatmaps.front().grid;
  Grid2D sum(first.width(), first.height(), first.scale());
  AttentionHeatmap out;
  out.sigma = heatmaps.front().sigma;
  out.mag_filter = heatmaps.front().mag_filter;
  for (const auto& hm : heatmaps) {
    if (!hm.grid.same_shape(first))
      throw Error(ErrorCode::DimensionMismatch, "heatmaps differ in size or scale");
    auto src = hm.grid.values();
    auto dst = sum.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    out.observers.insert(hm.observers.begin(), hm.observers.end());
    if (hm.mag_filter != out.mag_filter) out.mag_filter.reset();
  }
  const double n = static_cast<double>(heatmaps.size());
  for (auto& v : sum.values()) v /= n;
  out.grid = min_max_normalize(sum, &out.degenerate);
  return out;
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw Error(ErrorCode::Io, "truncated heatmap file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_heatmap(std::ostream& out, const AttentionHeatmap& heatmap) {
  out.write("AHM1", 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(heatmap.grid.width()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(heatmap.grid.height()));
  put_le<double>(out, heatmap.grid.scale().value());
  put_le<double>(out, heatmap.sigma);
  for (double v : heatmap.grid.values()) put_le<float>(out, static_cast<float>(v));
  if (!out) throw Error(ErrorCode::Io, "failed writing heatmap");
}

AttentionHeatmap read_heatmap(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "AHM1", 4) != 0)
    throw Error(ErrorCode::Io, "not an AHM1 heatmap file");
  const auto w = get_le<std::uint32_t>(in);
  const auto h = get_le<std::uint32_t>(in);
  const auto scale = get_le<double>(in);
  const auto sigma = get_le<double>(in);
  std::vector<double> values(static_cast<std::size_t>(w) * h);
  for (auto& v : values) v = static_cast<double>(get_le<float>(in));
  AttentionHeatmap hm;
  hm.grid = Grid2D(static_cast<int>(w), static_cast<int>(h), scale_from_double(scale),
                   std::move(values));
  hm.sigma = sigma;
  auto [lo, hi] = std::minmax_element(hm.grid.values().begin(), hm.grid.values().end());
  hm.degenerate = hm.grid.size() == 0 || *lo == *hi;
  return hm;
}

}  // namespace pathattn
