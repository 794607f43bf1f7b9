#pragma once

// Evaluation against tumor annotations: probability maps, histogram
// matching, cross-correlation, Welch's t-test and per-case reports.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pathattn/grid.hpp"
#include "pathattn/heatmap.hpp"
#include "pathattn/ingest.hpp"
#include "pathattn/scanpath.hpp"

namespace pathattn {

struct TumorProbabilityMap {
  Grid2D grid;
  double sigma = 16.0;
  bool empty = false;  // no tumor cells; grid is all zeros
};

/// Binary tumor mask: a cell is 1 iff its center lies inside a G3/G4/G5
/// region (even-odd rule). Benign regions do not count as tumor.
Grid2D rasterize_annotation(const TumorAnnotation& annotation, const SlideManifest& manifest,
                            Scale scale);

TumorProbabilityMap tumor_probability_map(const Grid2D& mask, double sigma = 16.0);

/// Rank transfer: the k-th smallest source cell (ties by row-major index)
/// receives the k-th smallest reference value.
Grid2D histogram_match(const Grid2D& source, const Grid2D& reference);

/// Pearson correlation over paired cells. Throws ConstantInput or DimensionMismatch.
double cross_correlation(const Grid2D& a, const Grid2D& b);
double cross_correlation(std::span<const double> a, std::span<const double> b);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;   // two-sided
  double df = 0.0;  // Welch-Satterthwaite
};

TTestResult welch_t_test(std::span<const double> xs, std::span<const double> ys);

enum class MatchDirection { AttentionToTumor, TumorToAttention };

std::string_view to_string(MatchDirection d);
MatchDirection parse_match_direction(std::string_view text);

struct EvaluationConfig {
  Scale scale{1, 16};
  double sigma = 16.0;
  AlignmentScoring scoring{};
  MatchDirection direction = MatchDirection::AttentionToTumor;
};

struct GroupResult {
  std::string group;  // "all", "GU" or "GEN"
  std::optional<double> cc;
  std::optional<double> sss;  // absent with fewer than two observers
  std::size_t n_observers = 0;
};

struct ObserverResult {
  std::string observer_id;
  ObserverGroup group = ObserverGroup::General;
  std::optional<double> cc;  // absent when the observer's own map is degenerate
};

struct CaseReport {
  std::string case_id;
  MatchDirection direction = MatchDirection::AttentionToTumor;
  std::vector<GroupResult> rows;
  std::vector<ObserverResult> observers;
  std::optional<TTestResult> group_cc_ttest;  // GU vs GEN per-observer CC
};

/// Group heatmaps are the average of per-observer heatmaps. The attention map
/// is histogram-matched to the tumor map (or the reverse, per config) before CC.
CaseReport evaluate_case(std::string case_id, std::span<const NavigationSession> sessions,
                         const TumorAnnotation& annotation, const SlideManifest& manifest,
                         const EvaluationConfig& config = {});

/// case_id,group,cc,sss,n_observers,match_direction
std::string case_report_csv(std::span<const CaseReport> reports);
/// case_id,observer_id,group,cc
std::string observer_report_csv(std::span<const CaseReport> reports);

struct CaseReportRow {
  std::string case_id;
  std::string group;
  std::optional<double> cc;
  std::optional<double> sss;
  std::size_t n_observers = 0;
  std::string match_direction;
};

std::vector<CaseReportRow> parse_case_report_csv(std::string_view text);

}  // namespace pathattn
