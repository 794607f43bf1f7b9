#pragma once

// Scanpaths (ordered viewport centers) and the Semantic Sequence Score:
// global alignment of the Gleason-grade strings two scanpaths traverse.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pathattn/ingest.hpp"

namespace pathattn {

struct ScanpathPoint {
  double cx = 0.0;
  double cy = 0.0;
  std::int64_t t_ms = 0;
  double mag = 1.0;
  std::int64_t dwell_ms = 0;
};

using Scanpath = std::vector<ScanpathPoint>;
using GradeString = std::vector<Grade>;

struct AlignmentScoring {
  double match = 1.0;
  double mismatch = 0.0;
  double gap = 0.0;

  void validate() const;  // match must beat both mismatch and gap
};

/// How a center inside several overlapping regions is labeled.
enum class OverlapRule { HighestGrade, FirstRegion };

Point viewport_center(const ViewportEvent& event);

Scanpath build_scanpath(const NavigationSession& session);

/// Even-odd rule on an open ring.
bool point_in_polygon(Point p, std::span<const Point> ring);

Grade grade_at(Point p, const TumorAnnotation& annotation,
               OverlapRule rule = OverlapRule::HighestGrade);

GradeString grade_string(const Scanpath& scanpath, const TumorAnnotation& annotation,
                         OverlapRule rule = OverlapRule::HighestGrade);

/// Needleman-Wunsch global alignment score. Throws EmptyString.
double align_score(std::span<const Grade> a, std::span<const Grade> b,
                   const AlignmentScoring& scoring = {});

/// align_score / (match * max(|a|, |b|)); in [0, 1] under the default scoring.
double semantic_sequence_score(std::span<const Grade> a, std::span<const Grade> b,
                               const AlignmentScoring& scoring = {});

/// Mean SSS over all unordered pairs, reduced in (i, j) lexicographic order.
/// Throws NeedTwoObservers.
double mean_pairwise_sss(std::span<const GradeString> strings,
                         const AlignmentScoring& scoring = {});
double mean_pairwise_sss(std::span<const NavigationSession> sessions,
                         const TumorAnnotation& annotation,
                         const AlignmentScoring& scoring = {});

/// Mean SSS over every (a, b) pair with a from the first set and b from the second.
double mean_cross_sss(std::span<const GradeString> first, std::span<const GradeString> second,
                      const AlignmentScoring& scoring = {});

std::string format_grade_string(std::span<const Grade> s);  // "G3 G5 B"
GradeString parse_grade_string(std::string_view text);

/// CSV with header cx,cy,t_ms,mag,dwell_ms.
std::string scanpath_csv(const Scanpath& scanpath);

}  // namespace pathattn
