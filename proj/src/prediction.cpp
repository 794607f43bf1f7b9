#include "pathattn/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>

#include "pathattn/error.hpp"
#include "pathattn/io.hpp"

namespace pathattn {

BinSpec BinSpec::equal_width(int n_bins) {
  if (n_bins < 1) throw Error(ErrorCode::InvalidArgument, "need at least one bin");
  BinSpec spec;
  for (int i = 0; i <= n_bins; ++i)
    spec.edges.push_back(static_cast<double>(i) / static_cast<double>(n_bins));
  for (int i = 0; i < n_bins; ++i)
    spec.bin_means.push_back((spec.edges[static_cast<std::size_t>(i)] +
                              spec.edges[static_cast<std::size_t>(i) + 1]) / 2.0);
  return spec;
}

void BinSpec::validate() const {
  if (bin_means.empty() || edges.size() != bin_means.size() + 1)
    throw Error(ErrorCode::InvalidArgument, "binspec needs n_bins + 1 edges");
  if (edges.front() != 0.0 || edges.back() != 1.0)
    throw Error(ErrorCode::InvalidArgument, "bin edges must span [0, 1]");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i + 1] > edges[i]))
      throw Error(ErrorCode::InvalidArgument, "bin edges must increase strictly");
    if (!(bin_means[i] >= edges[i] && bin_means[i] <= edges[i + 1]))
      throw Error(ErrorCode::InvalidArgument, "bin mean outside its bin");
  }
}

namespace {

std::int64_t patch_stride(const SlideManifest& manifest, const PatchGridOptions& options) {
  if (options.size_px <= 0 || !(options.mag > 0.0))
    throw Error(ErrorCode::InvalidArgument, "patch size and magnification must be positive");
  const double factor = manifest.base_mag ? *manifest.base_mag / options.mag : 1.0;
  const auto stride = static_cast<std::int64_t>(std::llround(options.size_px * factor));
  if (stride <= 0) throw Error(ErrorCode::InvalidArgument, "patch footprint rounds to zero");
  return stride;
}

// Patch index owning each cell center along one axis, clamped to the grid so
// cells hanging past the slide edge belong to the last patch.
std::vector<int> axis_owner(int cells, Scale scale, std::int64_t stride, int n_patches) {
  std::vector<int> owner(static_cast<std::size_t>(cells));
  for (int c = 0; c < cells; ++c) {
    const auto idx = static_cast<std::int64_t>(std::floor(scale.cell_center(c) / static_cast<double>(stride)));
    owner[static_cast<std::size_t>(c)] =
        static_cast<int>(std::clamp<std::int64_t>(idx, 0, n_patches - 1));
  }
  return owner;
}

int patches_along(std::int64_t extent, std::int64_t stride) {
  return static_cast<int>((extent + stride - 1) / stride);
}

}  // namespace

std::vector<PatchRecord> extract_patch_grid(const SlideManifest& manifest,
                                            const PatchGridOptions& options) {
  manifest.validate();
  const auto stride = patch_stride(manifest, options);
  const int nx = patches_along(manifest.width_px, stride);
  const int ny = patches_along(manifest.height_px, stride);
  std::vector<PatchRecord> out;
  out.reserve(static_cast<std::size_t>(nx) * ny);
  for (int py = 0; py < ny; ++py)
    for (int px = 0; px < nx; ++px) {
      PatchRecord p;
      p.slide_id = manifest.slide_id;
      p.px = px;
      p.py = py;
      p.origin_x = px * stride;
      p.origin_y = py * stride;
      p.stride_px = stride;
      p.extent_x = std::min(stride, manifest.width_px - p.origin_x);
      p.extent_y = std::min(stride, manifest.height_px - p.origin_y);
      p.size_px = options.size_px;
      p.mag = options.mag;
      p.grid_nx = nx;
      p.grid_ny = ny;
      p.partial = p.extent_x < stride || p.extent_y < stride;
      out.push_back(std::move(p));
    }
  return out;
}

int discretize_intensity(double intensity, const BinSpec& spec) {
  if (!(intensity >= 0.0 && intensity <= 1.0))
    throw Error(ErrorCode::OutOfRange, "intensity " + format_number(intensity) + " outside [0, 1]");
  auto it = std::upper_bound(spec.edges.begin(), spec.edges.end(), intensity);
  const int bin = static_cast<int>(it - spec.edges.begin()) - 1;
  return std::clamp(bin, 0, spec.n_bins() - 1);
}

double patch_mean_intensity(const AttentionHeatmap& heatmap, const PatchRecord& patch) {
  const Grid2D& g = heatmap.grid;
  if (patch.stride_px <= 0) throw Error(ErrorCode::InvalidArgument, "patch has no footprint");
  const Scale s = g.scale();
  const int nx = std::max(patch.grid_nx, patch.px + 1);
  const int ny = std::max(patch.grid_ny, patch.py + 1);
  const auto ox = axis_owner(g.width(), s, patch.stride_px, nx);
  const auto oy = axis_owner(g.height(), s, patch.stride_px, ny);
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < g.height(); ++y) {
    if (oy[static_cast<std::size_t>(y)] != patch.py) continue;
    for (int x = 0; x < g.width(); ++x) {
      if (ox[static_cast<std::size_t>(x)] != patch.px) continue;
      sum += g.at(x, y);
      ++count;
    }
  }
  if (count == 0) {
    // Patch smaller than a cell: use the cell under the patch center.
    const double cx = static_cast<double>(patch.origin_x) + static_cast<double>(patch.extent_x) / 2.0;
    const double cy = static_cast<double>(patch.origin_y) + static_cast<double>(patch.extent_y) / 2.0;
    const int gx = std::clamp(static_cast<int>(std::floor(cx * s.value())), 0, g.width() - 1);
    const int gy = std::clamp(static_cast<int>(std::floor(cy * s.value())), 0, g.height() - 1);
    if (g.size() == 0) throw Error(ErrorCode::EmptyInput, "heatmap is empty");
    return g.at(gx, gy);
  }
  return std::clamp(sum / static_cast<double>(count), 0.0, 1.0);
}

int patch_label(const AttentionHeatmap& heatmap, const PatchRecord& patch, const BinSpec& spec) {
  return discretize_intensity(patch_mean_intensity(heatmap, patch), spec);
}

RgbImage pad_patch(const RgbImage& raster, int size) {
  if (raster.width <= 0 || raster.height <= 0)
    throw Error(ErrorCode::InvalidArgument, "cannot pad an empty raster");
  if (raster.width == size && raster.height == size) return raster;
  RgbImage out(size, size);
  for (int y = 0; y < size; ++y) {
    const int sy = std::min(y, raster.height - 1);
    for (int x = 0; x < size; ++x) {
      const int sx = std::min(x, raster.width - 1);
      std::copy_n(raster.px(sx, sy), 3, out.px(x, y));
    }
  }
  return out;
}

RgbImage flip_horizontal(const RgbImage& raster) {
  RgbImage out(raster.width, raster.height);
  for (int y = 0; y < raster.height; ++y)
    for (int x = 0; x < raster.width; ++x)
      std::copy_n(raster.px(raster.width - 1 - x, y), 3, out.px(x, y));
  return out;
}

RgbImage flip_vertical(const RgbImage& raster) {
  RgbImage out(raster.width, raster.height);
  for (int y = 0; y < raster.height; ++y)
    std::copy_n(raster.px(0, raster.height - 1 - y), static_cast<std::size_t>(raster.width) * 3,
                out.px(0, y));
  return out;
}

std::vector<double> patch_features(const RgbImage& raster) {
  const int w = raster.width, h = raster.height;
  if (w <= 0 || h <= 0) throw Error(ErrorCode::InvalidArgument, "empty patch raster");
  const double n = static_cast<double>(w) * h;
  std::vector<double> f(kFeatureDim, 0.0);
  double sum[3] = {0, 0, 0}, sum_sq[3] = {0, 0, 0};
  std::vector<double> gray(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto* p = raster.px(x, y);
      for (int c = 0; c < 3; ++c) {
        f[static_cast<std::size_t>(c * 16 + (p[c] >> 4))] += 1.0;
        const double v = p[c] / 255.0;
        sum[c] += v;
        sum_sq[c] += v * v;
      }
      gray[static_cast<std::size_t>(y) * w + x] = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
    }
  for (int i = 0; i < 48; ++i) f[static_cast<std::size_t>(i)] /= n;
  for (int c = 0; c < 3; ++c) {
    const double mean = sum[c] / n;
    f[static_cast<std::size_t>(48 + c)] = mean;
    f[static_cast<std::size_t>(51 + c)] = std::sqrt(std::max(0.0, sum_sq[c] / n - mean * mean));
  }

  // Central differences inside, one-sided at the borders.
  auto g = [&](int x, int y) { return gray[static_cast<std::size_t>(y) * w + x]; };
  double gsum = 0.0, gsum_sq = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double gx = 0.0, gy = 0.0;
      if (w > 1) {
        if (x == 0) gx = g(1, y) - g(0, y);
        else if (x == w - 1) gx = g(w - 1, y) - g(w - 2, y);
        else gx = (g(x + 1, y) - g(x - 1, y)) / 2.0;
      }
      if (h > 1) {
        if (y == 0) gy = g(x, 1) - g(x, 0);
        else if (y == h - 1) gy = g(x, h - 1) - g(x, h - 2);
        else gy = (g(x, y + 1) - g(x, y - 1)) / 2.0;
      }
      const double m = std::sqrt(gx * gx + gy * gy);
      gsum += m;
      gsum_sq += m * m;
    }
  const double gmean = gsum / n;
  f[54] = gmean;
  f[55] = std::sqrt(std::max(0.0, gsum_sq / n - gmean * gmean));
  return f;
}

double mean_saturation(const RgbImage& raster) {
  if (raster.width <= 0 || raster.height <= 0) return 0.0;
  double total = 0.0;
  const std::size_t n = static_cast<std::size_t>(raster.width) * raster.height;
  for (std::size_t i = 0; i < n; ++i) {
    const auto* p = raster.data.data() + i * 3;
    const int hi = std::max({p[0], p[1], p[2]});
    const int lo = std::min({p[0], p[1], p[2]});
    if (hi > 0) total += static_cast<double>(hi - lo) / hi;
  }
  return total / static_cast<double>(n);
}

std::vector<double> PatchClassifier::logits(std::span<const double> features) const {
  if (static_cast<int>(features.size()) != feature_dim)
    throw Error(ErrorCode::DimensionMismatch, "feature vector has wrong length");
  std::vector<double> z(bias.begin(), bias.end());
  for (int k = 0; k < n_bins; ++k) {
    const double* row = weights.data() + static_cast<std::size_t>(k) * feature_dim;
    double acc = 0.0;
    for (int d = 0; d < feature_dim; ++d) {
      const auto du = static_cast<std::size_t>(d);
      acc += row[d] * (features[du] - feature_means[du]) / feature_stds[du];
    }
    z[static_cast<std::size_t>(k)] += acc;
  }
  return z;
}

int PatchClassifier::predict(std::span<const double> features) const {
  const auto z = logits(features);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

double softmax_loss(std::span<const double> params, std::span<const double> x, int n_rows, int dim,
                    int n_bins, std::span<const int> labels, std::span<const double> sample_weights,
                    std::vector<double>* grad) {
  const auto K = static_cast<std::size_t>(n_bins), D = static_cast<std::size_t>(dim);
  if (params.size() != K * D + K || x.size() != static_cast<std::size_t>(n_rows) * D ||
      labels.size() != static_cast<std::size_t>(n_rows) ||
      sample_weights.size() != static_cast<std::size_t>(n_rows))
    throw Error(ErrorCode::DimensionMismatch, "softmax_loss argument sizes disagree");
  const double* W = params.data();
  const double* b = params.data() + K * D;
  if (grad) grad->assign(params.size(), 0.0);
  std::vector<double> z(K);
  double loss = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(n_rows); ++i) {
    const double* xi = x.data() + i * D;
    for (std::size_t k = 0; k < K; ++k) {
      double acc = b[k];
      for (std::size_t d = 0; d < D; ++d) acc += W[k * D + d] * xi[d];
      z[k] = acc;
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (auto& v : z) {
      v = std::exp(v - zmax);
      denom += v;
    }
    const auto y = static_cast<std::size_t>(labels[i]);
    const double wi = sample_weights[i];
    loss += wi * -(std::log(z[y] / denom));
    wsum += wi;
    if (grad) {
      for (std::size_t k = 0; k < K; ++k) {
        const double delta = wi * (z[k] / denom - (k == y ? 1.0 : 0.0));
        double* gw = grad->data() + k * D;
        for (std::size_t d = 0; d < D; ++d) gw[d] += delta * xi[d];
        (*grad)[K * D + k] += delta;
      }
    }
  }
  if (!(wsum > 0.0)) throw Error(ErrorCode::EmptyInput, "no weighted samples");
  if (grad)
    for (auto& g : *grad) g /= wsum;
  return loss / wsum;
}

std::vector<double> inverse_frequency_weights(std::span<const int> labels, int n_bins) {
  std::vector<double> counts(static_cast<std::size_t>(n_bins), 0.0);
  for (int y : labels) counts[static_cast<std::size_t>(y)] += 1.0;
  const double present = static_cast<double>(std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }));
  std::vector<double> w(counts.size(), 0.0);
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] > 0) w[c] = static_cast<double>(labels.size()) / (present * counts[c]);
  return w;
}

TrainingResult train_patch_classifier(std::span<const PatchRecord> patches, const BinSpec& spec,
                                      const TrainingOptions& options,
                                      std::span<const RgbImage> rasters) {
  spec.validate();
  if (patches.empty()) throw Error(ErrorCode::EmptyInput, "no training patches");
  if (options.epochs < 1 || options.epochs > kMaxEpochs)
    throw Error(ErrorCode::InvalidArgument,
                "epochs must be in [1, " + std::to_string(kMaxEpochs) + "]");
  if (!(options.learning_rate > 0.0))
    throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (options.augment_flips && rasters.size() != patches.size())
    throw Error(ErrorCode::InvalidArgument, "flip augmentation needs one raster per patch");

  const int K = spec.n_bins();
  const int D = static_cast<int>(patches.front().features.size());
  if (D == 0) throw Error(ErrorCode::InvalidArgument, "patches carry no features");
  const int N = static_cast<int>(patches.size());
  const auto Du = static_cast<std::size_t>(D), Ku = static_cast<std::size_t>(K);

  std::vector<int> labels;
  labels.reserve(patches.size());
  for (const auto& p : patches) {
    if (!p.label) throw Error(ErrorCode::InvalidArgument, "training patch lacks a label");
    if (*p.label < 0 || *p.label >= K) throw Error(ErrorCode::BinOutOfRange, "label outside bins");
    if (static_cast<int>(p.features.size()) != D)
      throw Error(ErrorCode::DimensionMismatch, "inconsistent feature lengths");
    for (double v : p.features)
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite feature");
    labels.push_back(*p.label);
  }

  TrainingResult result;
  PatchClassifier& model = result.model;
  model.n_bins = K;
  model.feature_dim = D;
  model.binspec = spec;
  model.weights.assign(Ku * Du, 0.0);
  model.bias.assign(Ku, 0.0);
  model.feature_means.assign(Du, 0.0);
  model.feature_stds.assign(Du, 1.0);

  // Population statistics of the training features only.
  for (const auto& p : patches)
    for (std::size_t d = 0; d < Du; ++d) model.feature_means[d] += p.features[d];
  for (auto& m : model.feature_means) m /= N;
  std::vector<double> var(Du, 0.0);
  for (const auto& p : patches)
    for (std::size_t d = 0; d < Du; ++d) {
      const double dv = p.features[d] - model.feature_means[d];
      var[d] += dv * dv;
    }
  for (std::size_t d = 0; d < Du; ++d) {
    const double sd = std::sqrt(var[d] / N);
    model.feature_stds[d] = sd > 1e-12 ? sd : 1.0;
  }

  const std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() == 1) {
    model.degenerate = true;
    model.bias[static_cast<std::size_t>(*distinct.begin())] = 1.0;
    result.degenerate_labels = true;
    return result;
  }

  auto standardize_into = [&](std::span<const double> f, double* dst) {
    for (std::size_t d = 0; d < Du; ++d)
      dst[d] = (f[d] - model.feature_means[d]) / model.feature_stds[d];
  };
  std::vector<double> X(static_cast<std::size_t>(N) * Du);
  for (int i = 0; i < N; ++i)
    standardize_into(patches[static_cast<std::size_t>(i)].features, X.data() + static_cast<std::size_t>(i) * Du);

  const auto class_w = options.class_weighting ? inverse_frequency_weights(labels, K)
                                               : std::vector<double>(Ku, 1.0);
  std::vector<double> sample_w(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i)
    sample_w[static_cast<std::size_t>(i)] = class_w[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];

  std::vector<double> params(Ku * Du + Ku, 0.0);
  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0), grad;
  std::mt19937_64 rng(options.seed);
  std::vector<int> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);
  const int batch = options.batch_size <= 0 ? N : std::min(options.batch_size, N);
  std::int64_t step = 0;

  std::vector<double> bx, bw;
  std::vector<int> by;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    if (batch < N) std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < N; start += batch) {
      const int end = std::min(N, start + batch);
      const int rows = end - start;
      bx.resize(static_cast<std::size_t>(rows) * Du);
      by.resize(static_cast<std::size_t>(rows));
      bw.resize(static_cast<std::size_t>(rows));
      for (int r = 0; r < rows; ++r) {
        const auto i = static_cast<std::size_t>(order[static_cast<std::size_t>(start + r)]);
        double* dst = bx.data() + static_cast<std::size_t>(r) * Du;
        if (options.augment_flips) {
          const auto bits = rng();
          RgbImage img = pad_patch(rasters[i], patches[i].size_px);
          if (bits & 1u) img = flip_horizontal(img);
          if (bits & 2u) img = flip_vertical(img);
          const auto f = patch_features(img);
          if (f.size() != Du) throw Error(ErrorCode::DimensionMismatch, "augmented feature length");
          standardize_into(f, dst);
        } else {
          std::copy_n(X.data() + i * Du, Du, dst);
        }
        by[static_cast<std::size_t>(r)] = labels[i];
        bw[static_cast<std::size_t>(r)] = sample_w[i];
      }
      softmax_loss(params, bx, rows, D, K, by, bw, &grad);
      ++step;
      const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
      for (std::size_t j = 0; j < params.size(); ++j) {
        m[j] = options.beta1 * m[j] + (1.0 - options.beta1) * grad[j];
        v[j] = options.beta2 * v[j] + (1.0 - options.beta2) * grad[j] * grad[j];
        params[j] -= options.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + options.epsilon);
      }
    }
    result.epoch_loss.push_back(softmax_loss(params, X, N, D, K, labels, sample_w));
  }

  std::copy_n(params.begin(), Ku * Du, model.weights.begin());
  std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(Ku * Du), Ku, model.bias.begin());
  return result;
}

PredictionSet import_predictions(std::string_view csv, int n_bins) {
  PredictionSet out;
  std::size_t pos = 0;
  std::int64_t line_no = 0;
  while (pos < csv.size()) {
    auto nl = csv.find('\n', pos);
    auto line = trim(csv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? csv.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line == "px,py,bin") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw Error(ErrorCode::MalformedLine, "expected px,py,bin", line_no);
    int px = 0, py = 0, bin = 0;
    try {
      std::size_t used = 0;
      px = std::stoi(f[0], &used);
      if (used != f[0].size()) throw std::invalid_argument("px");
      py = std::stoi(f[1], &used);
      if (used != f[1].size()) throw std::invalid_argument("py");
      bin = std::stoi(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument("bin");
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedLine, "non-integer field", line_no);
    }
    if (bin < 0 || bin >= n_bins)
      throw Error(ErrorCode::BinOutOfRange, "bin " + std::to_string(bin), line_no);
    if (!out.emplace(std::pair{px, py}, bin).second)
      throw Error(ErrorCode::DuplicatePatch,
                  "(" + std::to_string(px) + "," + std::to_string(py) + ")", line_no);
  }
  return out;
}

std::string export_predictions(const PredictionSet& predictions) {
  // Row-major (py, px) order to match the patch grid.
  std::vector<std::pair<std::pair<int, int>, int>> rows(predictions.begin(), predictions.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::pair{a.first.second, a.first.first} < std::pair{b.first.second, b.first.first};
  });
  std::string out = "px,py,bin\n";
  for (const auto& [key, bin] : rows)
    out += std::to_string(key.first) + ',' + std::to_string(key.second) + ',' + std::to_string(bin) + '\n';
  return out;
}

Grid2D paint_patch_bins(const PredictionSource& source, std::span<const PatchRecord> patches,
                        const SlideManifest& manifest, const BinSpec& spec, Scale scale) {
  spec.validate();
  Grid2D grid = grid_for_slide(manifest.width_px, manifest.height_px, scale);
  if (patches.empty()) return grid;
  const std::int64_t stride = patches.front().stride_px;
  int nx = 0, ny = 0;
  std::map<std::pair<int, int>, int> bins;
  for (const auto& p : patches) {
    if (p.stride_px != stride) throw Error(ErrorCode::InvalidArgument, "patches mix footprints");
    nx = std::max(nx, p.px + 1);
    ny = std::max(ny, p.py + 1);
    int bin = 0;
    if (const auto* set = std::get_if<PredictionSet>(&source)) {
      auto it = set->find({p.px, p.py});
      if (it == set->end())
        throw Error(ErrorCode::MissingPrediction,
                    "(" + std::to_string(p.px) + "," + std::to_string(p.py) + ")");
      bin = it->second;
    } else {
      const auto& model = std::get<PatchClassifier>(source);
      if (p.features.empty())
        throw Error(ErrorCode::MissingPrediction,
                    "patch (" + std::to_string(p.px) + "," + std::to_string(p.py) + ") has no features");
      bin = model.predict(p.features);
    }
    if (bin < 0 || bin >= spec.n_bins()) throw Error(ErrorCode::BinOutOfRange, std::to_string(bin));
    bins[{p.px, p.py}] = bin;
  }
  nx = std::max(nx, patches_along(manifest.width_px, stride));
  ny = std::max(ny, patches_along(manifest.height_px, stride));
  const auto ox = axis_owner(grid.width(), scale, stride, nx);
  const auto oy = axis_owner(grid.height(), scale, stride, ny);
  for (int y = 0; y < grid.height(); ++y)
    for (int x = 0; x < grid.width(); ++x) {
      auto it = bins.find({ox[static_cast<std::size_t>(x)], oy[static_cast<std::size_t>(y)]});
      if (it != bins.end()) grid.at(x, y) = spec.bin_means[static_cast<std::size_t>(it->second)];
    }
  return grid;
}

AttentionHeatmap predict_and_reassemble(const PredictionSource& source,
                                        std::span<const PatchRecord> patches,
                                        const SlideManifest& manifest, const BinSpec& spec,
                                        const ReassembleOptions& options) {
  const Grid2D painted = paint_patch_bins(source, patches, manifest, spec, options.scale);
  AttentionHeatmap hm;
  hm.sigma = options.sigma;
  hm.grid = min_max_normalize(gaussian_smooth(painted, options.sigma), &hm.degenerate);
  return hm;
}

std::string save_model_json(const PatchClassifier& model) {
  nlohmann::ordered_json doc;
  doc["feature_dim"] = model.feature_dim;
  doc["n_bins"] = model.n_bins;
  doc["weights"] = model.weights;
  doc["bias"] = model.bias;
  doc["feature_means"] = model.feature_means;
  doc["feature_stds"] = model.feature_stds;
  doc["binspec"] = {{"edges", model.binspec.edges}, {"bin_means", model.binspec.bin_means}};
  doc["degenerate"] = model.degenerate;
  return doc.dump(2) + "\n";
}

PatchClassifier load_model_json(std::string_view text) {
  PatchClassifier m;
  try {
    const auto doc = nlohmann::json::parse(text);
    m.feature_dim = doc.at("feature_dim").get<int>();
    m.n_bins = doc.at("n_bins").get<int>();
    m.weights = doc.at("weights").get<std::vector<double>>();
    m.bias = doc.at("bias").get<std::vector<double>>();
    m.feature_means = doc.at("feature_means").get<std::vector<double>>();
    m.feature_stds = doc.at("feature_stds").get<std::vector<double>>();
    m.binspec.edges = doc.at("binspec").at("edges").get<std::vector<double>>();
    m.binspec.bin_means = doc.at("binspec").at("bin_means").get<std::vector<double>>();
    m.degenerate = doc.value("degenerate", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("model file: ") + e.what());
  }
  m.binspec.validate();
  const auto K = static_cast<std::size_t>(m.n_bins), D = static_cast<std::size_t>(m.feature_dim);
  if (m.n_bins != m.binspec.n_bins() || m.weights.size() != K * D || m.bias.size() != K ||
      m.feature_means.size() != D || m.feature_stds.size() != D)
    throw Error(ErrorCode::DimensionMismatch, "model arrays disagree with feature_dim/n_bins");
  for (double s : m.feature_stds)
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "feature_stds must be positive");
  return m;
}

std::vector<PatchImageRef> parse_patch_manifest(std::string_view csv,
                                                const std::filesystem::path& base_dir) {
  std::vector<PatchImageRef> out;
  std::size_t pos = 0;
  std::int64_t line_no = 0;
  while (pos < csv.size()) {
    auto nl = csv.find('\n', pos);
    auto line = trim(csv.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? csv.size() : nl + 1;
    ++line_no;
    if (line.empty() || line == "slide_id,px,py,path") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw Error(ErrorCode::MalformedLine, "expected slide_id,px,py,path", line_no);
    PatchImageRef ref;
    ref.slide_id = f[0];
    try {
      ref.px = std::stoi(f[1]);
      ref.py = std::stoi(f[2]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedLine, "non-integer patch index", line_no);
    }
    ref.path = f[3];
    if (ref.path.is_relative()) ref.path = base_dir / ref.path;
    out.push_back(std::move(ref));
  }
  return out;
}

}  // namespace pathattn
