#pragma once

// Session logs, slide manifests and tumor annotations.
//
// Coordinates are base-level slide pixels throughout. Viewport boxes are
// half-open: [x0, x1) x [y0, y1).

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pathattn {

struct SlideManifest {
  std::string slide_id;
  std::int64_t width_px = 0;
  std::int64_t height_px = 0;
  std::optional<std::string> tile_source;
  std::vector<double> standard_mags{2.0, 4.0, 10.0, 20.0, 40.0};
  // Objective power of the base level. Absent means patch magnification and
  // base level coincide (see extract_patch_grid).
  std::optional<double> base_mag;

  void validate() const;
};

struct ViewportEvent {
  std::int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double mag = 1.0;
  std::int64_t t_ms = 0;

  friend bool operator==(const ViewportEvent&, const ViewportEvent&) = default;
};

enum class ObserverGroup { GuSpecialist, General };

std::string_view to_string(ObserverGroup group);  // "GU" / "GEN"

struct NavigationSession {
  std::string slide_id;
  std::string observer_id;
  ObserverGroup group = ObserverGroup::General;
  std::optional<std::int64_t> end_ms;
  std::vector<ViewportEvent> events;

  friend bool operator==(const NavigationSession&, const NavigationSession&) = default;
};

/// Ordered by severity; Benign doubles as the background symbol in grade strings.
enum class Grade { Benign = 0, G3 = 3, G4 = 4, G5 = 5 };

std::string_view grade_token(Grade g);  // "B", "G3", "G4", "G5"

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct TumorRegion {
  std::vector<Point> polygon;  // open ring: last vertex != first
  Grade grade = Grade::G3;
};

struct TumorAnnotation {
  std::string slide_id;
  std::vector<TumorRegion> regions;
};

struct MagnificationStats {
  std::map<double, std::int64_t> dwell_ms;  // keyed by standard magnification
  std::int64_t total_ms = 0;
};

SlideManifest parse_manifest(std::string_view json_text);
std::string serialize_manifest(const SlideManifest& manifest);

/// Parses a line-delimited JSON session log. Events keep file order and
/// unknown fields are ignored. Error line numbers are 1-based physical lines.
NavigationSession parse_session_log(std::string_view text);

/// Canonical log text: header line then one line per event, fixed field order.
std::string serialize_session(const NavigationSession& session);

/// Intersects every box with the slide and drops events left empty.
/// Throws SlideMismatch or EmptySession.
NavigationSession validate_and_clip(NavigationSession session, const SlideManifest& manifest);

TumorAnnotation parse_annotation(std::string_view geojson, const SlideManifest& manifest);

/// Dwell per event: next timestamp minus this one; the last event runs to
/// end_ms when present, otherwise 0.
std::vector<std::int64_t> dwell_times(const NavigationSession& session);

/// Nearest entry of `levels` (sorted ascending); equidistant ties go to the lower level.
double nearest_standard_mag(double mag, std::span<const double> levels);

MagnificationStats magnification_stats(const NavigationSession& session,
                                       const SlideManifest& manifest);
MagnificationStats magnification_stats(const NavigationSession& session,
                                       std::span<const double> levels);

}  // namespace pathattn
