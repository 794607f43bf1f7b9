#pragma once

// Patch-level attention prediction: grid the slide into patches, label each
// by its discretized mean heatmap intensity, classify from image features,
// then paint bin means back onto a grid and smooth.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "pathattn/grid.hpp"
#include "pathattn/heatmap.hpp"
#include "pathattn/ingest.hpp"
#include "pathattn/raster.hpp"

namespace pathattn {

struct BinSpec {
  std::vector<double> edges;      // n_bins + 1, from 0 to 1
  std::vector<double> bin_means;  // representative intensity per bin

  static BinSpec equal_width(int n_bins = 5);
  int n_bins() const { return static_cast<int>(bin_means.size()); }
  void validate() const;
};

struct PatchRecord {
  std::string slide_id;
  int px = 0;
  int py = 0;
  std::int64_t origin_x = 0;   // base pixels
  std::int64_t origin_y = 0;
  std::int64_t stride_px = 0;  // nominal footprint side in base pixels
  std::int64_t extent_x = 0;   // footprint clipped to the slide
  std::int64_t extent_y = 0;
  int grid_nx = 1;  // patches per row / column of the slide grid
  int grid_ny = 1;
  int size_px = 500;
  double mag = 10.0;
  bool partial = false;
  std::vector<double> features;
  std::optional<int> label;
  std::optional<int> predicted;
};

struct PatchGridOptions {
  int size_px = 500;
  double mag = 10.0;
};

/// Non-overlapping grid anchored at the origin. The footprint of a patch is
/// size_px * base_mag / mag base pixels (base_mag defaults to mag).
std::vector<PatchRecord> extract_patch_grid(const SlideManifest& manifest,
                                            const PatchGridOptions& options = {});

/// Bin i with edges[i] <= x < edges[i+1]; x == 1 falls in the last bin.
int discretize_intensity(double intensity, const BinSpec& spec);

/// Mean heatmap value over the cells whose centers fall in the patch.
double patch_mean_intensity(const AttentionHeatmap& heatmap, const PatchRecord& patch);
int patch_label(const AttentionHeatmap& heatmap, const PatchRecord& patch, const BinSpec& spec);

inline constexpr int kFeatureDim = 56;

/// Edge-replication padding (or cropping) to size x size.
RgbImage pad_patch(const RgbImage& raster, int size);
RgbImage flip_horizontal(const RgbImage& raster);
RgbImage flip_vertical(const RgbImage& raster);

/// 16-bin normalized histograms per channel (48), channel means and standard
/// deviations in [0,1] units (6), grayscale gradient magnitude mean and
/// standard deviation (2).
std::vector<double> patch_features(const RgbImage& raster);

/// Mean HSV saturation, for optional tissue filtering.
double mean_saturation(const RgbImage& raster);

struct PatchClassifier {
  int n_bins = 0;
  int feature_dim = 0;
  std::vector<double> weights;  // n_bins x feature_dim, row-major
  std::vector<double> bias;
  std::vector<double> feature_means;
  std::vector<double> feature_stds;
  BinSpec binspec;
  bool degenerate = false;  // trained on a single class; always predicts it

  std::vector<double> logits(std::span<const double> features) const;
  int predict(std::span<const double> features) const;
};

inline constexpr int kMaxEpochs = 20;

struct TrainingOptions {
  double learning_rate = 0.005;
  int epochs = kMaxEpochs;  // 1..kMaxEpochs
  int batch_size = 64;  // <= 0 means full batch
  std::uint64_t seed = 0;
  bool augment_flips = false;
  bool class_weighting = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainingResult {
  PatchClassifier model;
  std::vector<double> epoch_loss;  // weighted full-data loss after each epoch
  bool degenerate_labels = false;
};

/// Multinomial logistic regression trained with Adam on weighted mean
/// cross-entropy. With augmentation, `rasters[i]` (parallel to `patches`) is
/// randomly flipped and re-featurized each time it is drawn.
TrainingResult train_patch_classifier(std::span<const PatchRecord> patches, const BinSpec& spec,
                                      const TrainingOptions& options = {},
                                      std::span<const RgbImage> rasters = {});

/// Weighted mean cross-entropy of a softmax model over standardized rows.
/// `params` holds the weight matrix followed by the bias. Fills `grad` when given.
double softmax_loss(std::span<const double> params, std::span<const double> x, int n_rows,
                    int dim, int n_bins, std::span<const int> labels,
                    std::span<const double> sample_weights, std::vector<double>* grad = nullptr);

/// Inverse-frequency class weights: N / (classes_present * count_c); 0 for absent classes.
std::vector<double> inverse_frequency_weights(std::span<const int> labels, int n_bins);

using PredictionSet = std::map<std::pair<int, int>, int>;
using PredictionSource = std::variant<PatchClassifier, PredictionSet>;

/// CSV "px,py,bin" (header optional). Throws DuplicatePatch, BinOutOfRange.
PredictionSet import_predictions(std::string_view csv, int n_bins);
std::string export_predictions(const PredictionSet& predictions);

struct ReassembleOptions {
  Scale scale{1, 16};
  double sigma = 16.0;
};

/// Paints bin means onto the patch footprints (cells outside every listed
/// patch stay 0). Throws MissingPrediction.
Grid2D paint_patch_bins(const PredictionSource& source, std::span<const PatchRecord> patches,
                        const SlideManifest& manifest, const BinSpec& spec, Scale scale);

AttentionHeatmap predict_and_reassemble(const PredictionSource& source,
                                        std::span<const PatchRecord> patches,
                                        const SlideManifest& manifest, const BinSpec& spec,
                                        const ReassembleOptions& options = {});

std::string save_model_json(const PatchClassifier& model);
PatchClassifier load_model_json(std::string_view text);

struct PatchImageRef {
  std::string slide_id;
  int px = 0;
  int py = 0;
  std::filesystem::path path;
};

/// "slide_id,px,py,path"; relative paths resolve against `base_dir`.
std::vector<PatchImageRef> parse_patch_manifest(std::string_view csv,
                                                const std::filesystem::path& base_dir);

}  // namespace pathattn
