#pragma once

// Reproducible per-case runs: load a case directory, emit heatmaps, scanpaths,
// magnification dwell statistics and the CC/SSS report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pathattn/grid.hpp"
#include "pathattn/ingest.hpp"
#include "pathattn/metrics.hpp"
#include "pathattn/prediction.hpp"
#include "pathattn/scanpath.hpp"

namespace pathattn {

struct RunConfig {
  Scale scale{1, 16};
  double sigma = 16.0;
  BinSpec binspec = BinSpec::equal_width(5);
  AlignmentScoring scoring{};
  MatchDirection direction = MatchDirection::AttentionToTumor;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "pathattn_out";
  std::vector<double> mag_buckets{4.0, 10.0, 20.0, 40.0};

  void validate() const;
};

/// Pretty-printed JSON with every field, stable key order.
std::string run_config_json(const RunConfig& config);
/// Fields absent from the JSON keep the values already in `base`.
RunConfig parse_run_config(std::string_view json_text, RunConfig base = {});

struct CaseInputs {
  std::filesystem::path directory;
  SlideManifest manifest;
  std::vector<NavigationSession> sessions;  // validated and clipped
  std::vector<std::filesystem::path> session_files;
  std::optional<TumorAnnotation> annotation;
};

/// Expects manifest.json, session logs as sessions/*.jsonl (or *.jsonl beside
/// the manifest) and an optional annotation.geojson. Errors name the file.
CaseInputs load_case_directory(const std::filesystem::path& dir);

struct ReportOutputs {
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> files;  // relative to out_dir, sorted
  std::optional<CaseReport> report;
};

/// Writes everything under config.output_dir / <slide_id>.
ReportOutputs run_report(const std::filesystem::path& case_dir, const RunConfig& config);

}  // namespace pathattn
