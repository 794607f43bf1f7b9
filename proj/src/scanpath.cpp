#include "pathattn/scanpath.hpp"

#include <algorithm>
#include <sstream>

#include "pathattn/error.hpp"
#include "pathattn/io.hpp"

namespace pathattn {

void AlignmentScoring::validate() const {
  if (!(match > mismatch) || !(match > gap))
    throw Error(ErrorCode::InvalidArgument, "alignment match score must exceed mismatch and gap");
}

Point viewport_center(const ViewportEvent& event) {
  // Integer sums are exact well past any slide size.
  return {static_cast<double>(event.x0 + event.x1) / 2.0,
          static_cast<double>(event.y0 + event.y1) / 2.0};
}

Scanpath build_scanpath(const NavigationSession& session) {
  const auto dwell = dwell_times(session);
  Scanpath path;
  path.reserve(session.events.size());
  for (std::size_t i = 0; i < session.events.size(); ++i) {
    const auto& e = session.events[i];
    const Point c = viewport_center(e);
    path.push_back({c.x, c.y, e.t_ms, e.mag, dwell[i]});
  }
  return path;
}

bool point_in_polygon(Point p, std::span<const Point> ring) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = ring[i];
    const Point& b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

Grade grade_at(Point p, const TumorAnnotation& annotation, OverlapRule rule) {
  Grade best = Grade::Benign;
  for (const auto& region : annotation.regions) {
    if (!point_in_polygon(p, region.polygon)) continue;
    if (rule == OverlapRule::FirstRegion) return region.grade;
    if (static_cast<int>(region.grade) > static_cast<int>(best)) best = region.grade;
  }
  return best;
}

GradeString grade_string(const Scanpath& scanpath, const TumorAnnotation& annotation,
                         OverlapRule rule) {
  GradeString out;
  out.reserve(scanpath.size());
  for (const auto& pt : scanpath) out.push_back(grade_at({pt.cx, pt.cy}, annotation, rule));
  return out;
}

double align_score(std::span<const Grade> a, std::span<const Grade> b,
                   const AlignmentScoring& scoring) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyString, "cannot align an empty string");
  const std::size_t m = b.size();
  // Rolling single row: prev[j] = S(i-1, j).
  std::vector<double> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<double>(j) * scoring.gap;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<double>(i) * scoring.gap;
    for (std::size_t j = 1; j <= m; ++j) {
      const double s = a[i - 1] == b[j - 1] ? scoring.match : scoring.mismatch;
      cur[j] = std::max({prev[j - 1] + s, prev[j] + scoring.gap, cur[j - 1] + scoring.gap});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double semantic_sequence_score(std::span<const Grade> a, std::span<const Grade> b,
                               const AlignmentScoring& scoring) {
  const double raw = align_score(a, b, scoring);
  return raw / (scoring.match * static_cast<double>(std::max(a.size(), b.size())));
}

double mean_pairwise_sss(std::span<const GradeString> strings, const AlignmentScoring& scoring) {
  if (strings.size() < 2)
    throw Error(ErrorCode::NeedTwoObservers, "pairwise SSS needs at least two observers");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < strings.size(); ++i)
    for (std::size_t j = i + 1; j < strings.size(); ++j) {
      sum += semantic_sequence_score(strings[i], strings[j], scoring);
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

double mean_pairwise_sss(std::span<const NavigationSession> sessions,
                         const TumorAnnotation& annotation, const AlignmentScoring& scoring) {
  std::vector<GradeString> strings;
  strings.reserve(sessions.size());
  for (const auto& s : sessions) {
    if (s.slide_id != annotation.slide_id)
      throw Error(ErrorCode::SlideMismatch, "session and annotation are for different slides");
    strings.push_back(grade_string(build_scanpath(s), annotation));
  }
  return mean_pairwise_sss(strings, scoring);
}

double mean_cross_sss(std::span<const GradeString> first, std::span<const GradeString> second,
                      const AlignmentScoring& scoring) {
  if (first.empty() || second.empty())
    throw Error(ErrorCode::NeedTwoObservers, "cross SSS needs one observer on each side");
  double sum = 0.0;
  for (const auto& a : first)
    for (const auto& b : second) sum += semantic_sequence_score(a, b, scoring);
  return sum / static_cast<double>(first.size() * second.size());
}

std::string format_grade_string(std::span<const Grade> s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ' ';
    out += grade_token(s[i]);
  }
  return out;
}

GradeString parse_grade_string(std::string_view text) {
  GradeString out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    if (tok == "B") out.push_back(Grade::Benign);
    else if (tok == "G3") out.push_back(Grade::G3);
    else if (tok == "G4") out.push_back(Grade::G4);
    else if (tok == "G5") out.push_back(Grade::G5);
    else throw Error(ErrorCode::UnknownGrade, tok);
  }
  return out;
}

std::string scanpath_csv(const Scanpath& scanpath) {
  std::string out = "cx,cy,t_ms,mag,dwell_ms\n";
  for (const auto& p : scanpath) {
    out += format_number(p.cx) + ',' + format_number(p.cy) + ',' + std::to_string(p.t_ms) + ',' +
           format_number(p.mag) + ',' + std::to_string(p.dwell_ms) + '\n';
  }
  return out;
}

}  // namespace pathattn
