#include "pathattn/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "pathattn/error.hpp"

namespace pathattn {

using nlohmann::json;

std::string_view to_string(ObserverGroup group) {
  return group == ObserverGroup::GuSpecialist ? "GU" : "GEN";
}

std::string_view grade_token(Grade g) {
  switch (g) {
    case Grade::Benign: return "B";
    case Grade::G3: return "G3";
    case Grade::G4: return "G4";
    case Grade::G5: return "G5";
  }
  return "B";
}

void SlideManifest::validate() const {
  if (width_px <= 0 || height_px <= 0)
    throw Error(ErrorCode::InvalidArgument, "slide dimensions must be positive");
  if (standard_mags.empty())
    throw Error(ErrorCode::InvalidArgument, "standard_mags is empty");
  for (std::size_t i = 0; i < standard_mags.size(); ++i) {
    if (!(standard_mags[i] > 0.0))
      throw Error(ErrorCode::InvalidArgument, "standard_mags must be positive");
    if (i > 0 && !(standard_mags[i] > standard_mags[i - 1]))
      throw Error(ErrorCode::InvalidArgument, "standard_mags must be strictly increasing");
  }
  if (base_mag && !(*base_mag > 0.0))
    throw Error(ErrorCode::InvalidArgument, "base_mag must be positive");
}

SlideManifest parse_manifest(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("manifest is not JSON: ") + e.what());
  }
  SlideManifest m;
  try {
    m.slide_id = doc.at("slide_id").get<std::string>();
    if (!doc.at("width_px").is_number_integer() || !doc.at("height_px").is_number_integer())
      throw Error(ErrorCode::InvalidArgument, "width_px/height_px must be integers");
    m.width_px = doc.at("width_px").get<std::int64_t>();
    m.height_px = doc.at("height_px").get<std::int64_t>();
    if (auto it = doc.find("tile_source"); it != doc.end() && !it->is_null())
      m.tile_source = it->get<std::string>();
    if (auto it = doc.find("standard_mags"); it != doc.end() && !it->is_null())
      m.standard_mags = it->get<std::vector<double>>();
    if (auto it = doc.find("base_mag"); it != doc.end() && !it->is_null())
      m.base_mag = it->get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

std::string serialize_manifest(const SlideManifest& manifest) {
  nlohmann::ordered_json doc;
  doc["slide_id"] = manifest.slide_id;
  doc["width_px"] = manifest.width_px;
  doc["height_px"] = manifest.height_px;
  if (manifest.tile_source) doc["tile_source"] = *manifest.tile_source;
  doc["standard_mags"] = manifest.standard_mags;
  if (manifest.base_mag) doc["base_mag"] = *manifest.base_mag;
  return doc.dump(2) + "\n";
}

namespace {

std::int64_t require_int(const json& obj, const char* key, std::int64_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_integer())
    throw Error(ErrorCode::MalformedLine, std::string("missing integer field '") + key + "'",
                line);
  return it->get<std::int64_t>();
}

NavigationSession parse_header(const json& obj, std::int64_t line) {
  NavigationSession s;
  auto get_string = [&](const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
      throw Error(ErrorCode::MalformedLine, std::string("header lacks '") + key + "'", line);
    return it->get<std::string>();
  };
  s.slide_id = get_string("slide_id");
  s.observer_id = get_string("observer_id");
  auto group = get_string("group");
  if (group == "GU") {
    s.group = ObserverGroup::GuSpecialist;
  } else if (group == "GEN") {
    s.group = ObserverGroup::General;
  } else {
    throw Error(ErrorCode::MalformedLine, "unknown group '" + group + "'", line);
  }
  if (auto it = obj.find("end_ms"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
      throw Error(ErrorCode::MalformedLine, "end_ms must be a non-negative integer", line);
    s.end_ms = it->get<std::int64_t>();
  }
  return s;
}

ViewportEvent parse_event(const json& obj, std::int64_t line) {
  ViewportEvent e;
  e.x0 = require_int(obj, "x0", line);
  e.y0 = require_int(obj, "y0", line);
  e.x1 = require_int(obj, "x1", line);
  e.y1 = require_int(obj, "y1", line);
  e.t_ms = require_int(obj, "t_ms", line);
  auto mag = obj.find("mag");
  if (mag == obj.end() || !mag->is_number())
    throw Error(ErrorCode::MalformedLine, "missing numeric field 'mag'", line);
  e.mag = mag->get<double>();
  if (!(e.mag > 0.0) || !std::isfinite(e.mag))
    throw Error(ErrorCode::MalformedLine, "mag must be positive", line);
  if (e.t_ms < 0) throw Error(ErrorCode::MalformedLine, "t_ms must be non-negative", line);
  if (e.x0 >= e.x1 || e.y0 >= e.y1)
    throw Error(ErrorCode::InvalidBox, "empty viewport box", line);
  return e;
}

}  // namespace

NavigationSession parse_session_log(std::string_view text) {
  std::optional<NavigationSession> session;
  std::int64_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (raw.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json obj;
    try {
      obj = json::parse(raw);
    } catch (const json::exception&) {
      throw Error(ErrorCode::MalformedLine, "not a JSON object", line_no);
    }
    if (!obj.is_object()) throw Error(ErrorCode::MalformedLine, "not a JSON object", line_no);
    auto type_it = obj.find("type");
    const std::string type =
        (type_it != obj.end() && type_it->is_string()) ? type_it->get<std::string>() : "";

    if (!session) {
      if (type != "session") throw Error(ErrorCode::MissingHeader, "first line must be the header");
      session = parse_header(obj, line_no);
      continue;
    }
    if (type != "viewport")
      throw Error(ErrorCode::MalformedLine, "expected a viewport event", line_no);
    auto ev = parse_event(obj, line_no);
    if (!session->events.empty() && ev.t_ms < session->events.back().t_ms)
      throw Error(ErrorCode::NonMonotonicTimestamp, "timestamp decreases", line_no);
    session->events.push_back(ev);
  }
  if (!session) throw Error(ErrorCode::MissingHeader, "log is empty");
  if (session->end_ms && !session->events.empty() && *session->end_ms < session->events.back().t_ms)
    throw Error(ErrorCode::NonMonotonicTimestamp, "end_ms precedes the last event", 1);
  return *std::move(session);
}

std::string serialize_session(const NavigationSession& session) {
  std::string out;
  nlohmann::ordered_json header;
  header["type"] = "session";
  header["slide_id"] = session.slide_id;
  header["observer_id"] = session.observer_id;
  header["group"] = std::string(to_string(session.group));
  if (session.end_ms) header["end_ms"] = *session.end_ms;
  out += header.dump();
  out += '\n';
  for (const auto& e : session.events) {
    nlohmann::ordered_json ev;
    ev["type"] = "viewport";
    ev["x0"] = e.x0;
    ev["y0"] = e.y0;
    ev["x1"] = e.x1;
    ev["y1"] = e.y1;
    ev["mag"] = e.mag;
    ev["t_ms"] = e.t_ms;
    out += ev.dump();
    out += '\n';
  }
  return out;
}

NavigationSession validate_and_clip(NavigationSession session, const SlideManifest& manifest) {
  if (session.slide_id != manifest.slide_id)
    throw Error(ErrorCode::SlideMismatch,
                "session is for '" + session.slide_id + "', manifest for '" + manifest.slide_id + "'");
  std::vector<ViewportEvent> kept;
  kept.reserve(session.events.size());
  for (auto e : session.events) {
    e.x0 = std::max<std::int64_t>(e.x0, 0);
    e.y0 = std::max<std::int64_t>(e.y0, 0);
    e.x1 = std::min(e.x1, manifest.width_px);
    e.y1 = std::min(e.y1, manifest.height_px);
    if (e.x0 < e.x1 && e.y0 < e.y1) kept.push_back(e);
  }
  if (kept.empty()) throw Error(ErrorCode::EmptySession, "no viewport intersects the slide");
  session.events = std::move(kept);
  return session;
}

namespace {

Grade parse_grade(const json& props) {
  auto it = props.find("grade");
  std::string value = (it != props.end() && it->is_string()) ? it->get<std::string>() : "";
  std::string lower;
  for (char c : value) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "g3") return Grade::G3;
  if (lower == "g4") return Grade::G4;
  if (lower == "g5") return Grade::G5;
  if (lower == "benign") return Grade::Benign;
  throw Error(ErrorCode::UnknownGrade, value);
}

int orientation(const Point& a, const Point& b, const Point& c) {
  double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  return (v > 0) - (v < 0);
}

bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_touch(const Point& a, const Point& b, const Point& c, const Point& d) {
  int o1 = orientation(a, b, c), o2 = orientation(a, b, d);
  int o3 = orientation(c, d, a), o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

bool is_simple(const std::vector<Point>& ring) {
  const std::size_t n = ring.size();
  if (n < 4) return true;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % n];
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
      if (segments_touch(a, b, ring[j], ring[(j + 1) % n])) return false;
    }
  }
  return true;
}

std::vector<Point> normalize_ring(std::vector<Point> ring) {
  std::vector<Point> out;
  for (const auto& p : ring)
    if (out.empty() || !(out.back() == p)) out.push_back(p);
  while (out.size() > 1 && out.front() == out.back()) out.pop_back();
  return out;
}

std::size_t distinct_vertices(const std::vector<Point>& ring) {
  std::set<std::pair<double, double>> seen;
  for (const auto& p : ring) seen.insert({p.x, p.y});
  return seen.size();
}

}  // namespace

TumorAnnotation parse_annotation(std::string_view geojson, const SlideManifest& manifest) {
  json doc;
  try {
    doc = json::parse(geojson);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("annotation is not JSON: ") + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features"))
    throw Error(ErrorCode::InvalidArgument, "annotation must be a GeoJSON FeatureCollection");

  TumorAnnotation ann;
  ann.slide_id = manifest.slide_id;
  for (const auto& feature : doc.at("features")) {
    const auto& geom = feature.at("geometry");
    if (geom.value("type", "") != "Polygon")
      throw Error(ErrorCode::InvalidArgument, "only Polygon geometries are supported");
    const json props = feature.value("properties", json::object());
    TumorRegion region;
    region.grade = parse_grade(props);

    const auto& rings = geom.at("coordinates");
    if (!rings.is_array() || rings.empty())
      throw Error(ErrorCode::DegeneratePolygon, "polygon has no rings");
    std::vector<Point> ring;
    for (const auto& c : rings.at(0)) {
      if (!c.is_array() || c.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "coordinate must be [x, y]");
      ring.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    }
    ring = normalize_ring(std::move(ring));
    if (distinct_vertices(ring) < 3)
      throw Error(ErrorCode::DegeneratePolygon, "fewer than 3 distinct vertices");
    if (!is_simple(ring))
      throw Error(ErrorCode::SelfIntersectingPolygon, "polygon edges cross");

    for (auto& p : ring) {
      p.x = std::clamp(p.x, 0.0, static_cast<double>(manifest.width_px));
      p.y = std::clamp(p.y, 0.0, static_cast<double>(manifest.height_px));
    }
    ring = normalize_ring(std::move(ring));
    if (distinct_vertices(ring) < 3)
      throw Error(ErrorCode::DegeneratePolygon, "polygon collapses after clipping to the slide");
    region.polygon = std::move(ring);
    ann.regions.push_back(std::move(region));
  }
  return ann;
}

std::vector<std::int64_t> dwell_times(const NavigationSession& session) {
  const auto& ev = session.events;
  std::vector<std::int64_t> dwell(ev.size(), 0);
  for (std::size_t i = 0; i + 1 < ev.size(); ++i) dwell[i] = ev[i + 1].t_ms - ev[i].t_ms;
  if (!ev.empty() && session.end_ms) dwell.back() = *session.end_ms - ev.back().t_ms;
  return dwell;
}

double nearest_standard_mag(double mag, std::span<const double> levels) {
  if (levels.empty()) throw Error(ErrorCode::InvalidArgument, "no magnification levels");
  double best = levels.front();
  double best_dist = std::abs(mag - best);
  for (double level : levels.subspan(1)) {
    double d = std::abs(mag - level);
    if (d < best_dist) {  // strict: an equal distance keeps the lower level
      best = level;
      best_dist = d;
    }
  }
  return best;
}

MagnificationStats magnification_stats(const NavigationSession& session,
                                       const SlideManifest& manifest) {
  return magnification_stats(session, manifest.standard_mags);
}

MagnificationStats magnification_stats(const NavigationSession& session,
                                       std::span<const double> levels) {
  MagnificationStats stats;
  for (double level : levels) stats.dwell_ms[level] = 0;
  const auto dwell = dwell_times(session);
  for (std::size_t i = 0; i < dwell.size(); ++i)
    stats.dwell_ms[nearest_standard_mag(session.events[i].mag, levels)] += dwell[i];
  if (!session.events.empty()) {
    const auto last = session.end_ms.value_or(session.events.back().t_ms);
    stats.total_ms = last - session.events.front().t_ms;
  }
  return stats;
}

}  // namespace pathattn
