#pragma once

// Synthetic cases for demos and tests: a slide with graded tumor polygons and
// navigation sessions whose viewports are biased toward the tumors.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pathattn/ingest.hpp"
#include "pathattn/prediction.hpp"
#include "pathattn/raster.hpp"

namespace pathattn {

struct SyntheticCaseOptions {
  std::string slide_id = "SYN-0001";
  std::int64_t width_px = 16384;
  std::int64_t height_px = 12288;
  double base_mag = 40.0;
  int n_observers = 8;            // alternately GU and GEN
  double tumor_bias = 0.8;        // probability a viewport centers on a tumor
  int events_per_session = 120;
  int screen_w = 1280;            // viewer canvas in screen pixels
  int screen_h = 800;
  std::uint64_t seed = 7;
};

struct SyntheticCase {
  SlideManifest manifest;
  TumorAnnotation annotation;
  std::vector<NavigationSession> sessions;
};

SyntheticCase make_synthetic_case(const SyntheticCaseOptions& options = {});

/// Sessions whose viewport centers are uniform over the slide.
std::vector<NavigationSession> make_uniform_sessions(const SlideManifest& manifest, int count,
                                                     int events_per_session, std::uint64_t seed,
                                                     const SyntheticCaseOptions& view = {});

std::string annotation_to_geojson(const TumorAnnotation& annotation);

/// manifest.json, annotation.geojson and sessions/<observer>.jsonl.
void write_case_directory(const SyntheticCase& c, const std::filesystem::path& dir);

/// H&E-like raster for one patch: purple textured tumor, pink stroma.
RgbImage synthetic_patch_raster(const TumorAnnotation& annotation, const PatchRecord& patch,
                                std::uint64_t seed);

}  // namespace pathattn
