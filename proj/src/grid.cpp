#include "pathattn/grid.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

#include "pathattn/error.hpp"
#include "pathattn/io.hpp"

namespace pathattn {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

}  // namespace

std::int64_t Scale::floor_cells(std::int64_t base_px) const {
  return floor_div(base_px * num, den);
}

std::int64_t Scale::ceil_cells(std::int64_t base_px) const {
  return ceil_div(base_px * num, den);
}

void Scale::validate() const {
  if (num <= 0 || den <= 0 || num > den)
    throw Error(ErrorCode::InvalidArgument, "scale must lie in (0, 1], got " + to_string());
}

std::string Scale::to_string() const {
  return std::to_string(num) + "/" + std::to_string(den);
}

Scale scale_from_double(double value) {
  if (!(value > 0.0) || value > 1.0)
    throw Error(ErrorCode::InvalidArgument, "scale must lie in (0, 1]");
  const double inv = 1.0 / value;
  const double rounded = std::round(inv);
  if (std::abs(inv - rounded) < 1e-9 * inv) return {1, static_cast<std::int64_t>(rounded)};
  // Fall back to a fixed denominator; exact for every dyadic scale we emit.
  constexpr std::int64_t den = 1 << 20;
  auto num = static_cast<std::int64_t>(std::llround(value * den));
  auto g = std::gcd(num, den);
  return {num / g, den / g};
}

Scale parse_scale(std::string_view text) {
  text = trim(text);
  Scale s;
  auto slash = text.find('/');
  if (slash != std::string_view::npos) {
    auto n = text.substr(0, slash), d = text.substr(slash + 1);
    auto r1 = std::from_chars(n.data(), n.data() + n.size(), s.num);
    auto r2 = std::from_chars(d.data(), d.data() + d.size(), s.den);
    if (r1.ec != std::errc() || r2.ec != std::errc() || r1.ptr != n.data() + n.size() ||
        r2.ptr != d.data() + d.size())
      throw Error(ErrorCode::InvalidArgument, "bad scale '" + std::string(text) + "'");
  } else {
    double v = 0.0;
    auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size())
      throw Error(ErrorCode::InvalidArgument, "bad scale '" + std::string(text) + "'");
    s = scale_from_double(v);
  }
  auto g = std::gcd(s.num, s.den);
  if (g > 0) {
    s.num /= g;
    s.den /= g;
  }
  s.validate();
  return s;
}

Grid2D::Grid2D(int width, int height, Scale scale, double fill)
    : width_(width), height_(height), scale_(scale) {
  if (width < 0 || height < 0) throw Error(ErrorCode::InvalidArgument, "negative grid size");
  values_.assign(static_cast<std::size_t>(width) * height, fill);
}

Grid2D::Grid2D(int width, int height, Scale scale, std::vector<double> values)
    : width_(width), height_(height), scale_(scale), values_(std::move(values)) {
  if (width < 0 || height < 0) throw Error(ErrorCode::InvalidArgument, "negative grid size");
  if (values_.size() != static_cast<std::size_t>(width) * height)
    throw Error(ErrorCode::DimensionMismatch, "value count does not match width x height");
  for (double v : values_)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "grid values must be finite");
}

Grid2D grid_for_slide(std::int64_t width_px, std::int64_t height_px, Scale scale) {
  scale.validate();
  return Grid2D(static_cast<int>(scale.ceil_cells(width_px)),
                static_cast<int>(scale.ceil_cells(height_px)), scale);
}

}  // namespace pathattn
