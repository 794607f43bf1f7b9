#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pathattn {

/// Grid cells per base pixel, kept as an exact rational so box scaling is
/// integer arithmetic.
struct Scale {
  std::int64_t num = 1;
  std::int64_t den = 16;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::int64_t floor_cells(std::int64_t base_px) const;
  std::int64_t ceil_cells(std::int64_t base_px) const;
  /// Base-pixel coordinate of a grid cell center.
  double cell_center(std::int64_t cell) const {
    return (static_cast<double>(cell) + 0.5) * static_cast<double>(den) /
           static_cast<double>(num);
  }
  void validate() const;
  std::string to_string() const;  // "1/16"

  friend bool operator==(const Scale&, const Scale&) = default;
};

/// Accepts "n/d", an integer, or a decimal with an exact reciprocal ("0.0625").
Scale parse_scale(std::string_view text);
/// Best rational for a stored f64 scale (used when reading heatmap files).
Scale scale_from_double(double value);

class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(int width, int height, Scale scale = {}, double fill = 0.0);
  Grid2D(int width, int height, Scale scale, std::vector<double> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const Scale& scale() const noexcept { return scale_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool same_shape(const Grid2D& other) const {
    return width_ == other.width_ && height_ == other.height_ && scale_ == other.scale_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  Scale scale_{};
  std::vector<double> values_;
};

/// Grid sized to cover a slide of the given base dimensions at `scale`.
Grid2D grid_for_slide(std::int64_t width_px, std::int64_t height_px, Scale scale);

}  // namespace pathattn
