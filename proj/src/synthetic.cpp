#include "pathattn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>

#include "pathattn/error.hpp"
#include "pathattn/io.hpp"
#include "pathattn/scanpath.hpp"

namespace pathattn {

namespace {

// Portable uniform [0, 1) from the raw engine output.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(hi - lo + 1));
}

std::vector<Point> star_polygon(double cx, double cy, double radius, int vertices,
                                std::mt19937_64& rng) {
  std::vector<Point> ring;
  for (int k = 0; k < vertices; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / vertices;
    const double r = radius * (0.75 + 0.25 * uniform01(rng));
    ring.push_back({std::round(cx + r * std::cos(angle)), std::round(cy + r * std::sin(angle))});
  }
  return ring;
}

Point point_in_region(const TumorRegion& region, std::mt19937_64& rng) {
  double x0 = region.polygon[0].x, x1 = x0, y0 = region.polygon[0].y, y1 = y0;
  for (const auto& p : region.polygon) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const Point p{x0 + uniform01(rng) * (x1 - x0), y0 + uniform01(rng) * (y1 - y0)};
    if (point_in_polygon(p, region.polygon)) return p;
  }
  return {(x0 + x1) / 2, (y0 + y1) / 2};
}

ViewportEvent viewport_at(Point center, double mag, const SlideManifest& m,
                          const SyntheticCaseOptions& view) {
  const double factor = m.base_mag.value_or(view.base_mag) / mag;
  const auto half_w = static_cast<std::int64_t>(view.screen_w * factor / 2.0);
  const auto half_h = static_cast<std::int64_t>(view.screen_h * factor / 2.0);
  const auto cx = static_cast<std::int64_t>(center.x), cy = static_cast<std::int64_t>(center.y);
  ViewportEvent e;
  e.x0 = std::max<std::int64_t>(0, cx - half_w);
  e.y0 = std::max<std::int64_t>(0, cy - half_h);
  e.x1 = std::min(m.width_px, cx + half_w);
  e.y1 = std::min(m.height_px, cy + half_h);
  if (e.x1 <= e.x0) e.x1 = std::min(m.width_px, e.x0 + 1);
  if (e.y1 <= e.y0) e.y1 = std::min(m.height_px, e.y0 + 1);
  e.mag = mag;
  return e;
}

double pick(std::mt19937_64& rng, std::initializer_list<std::pair<double, double>> weighted) {
  double u = uniform01(rng);
  for (const auto& [value, weight] : weighted) {
    if (u < weight) return value;
    u -= weight;
  }
  return weighted.end()[-1].first;
}

void stamp_times(NavigationSession& s, std::mt19937_64& rng) {
  std::int64_t t = 0;
  for (auto& e : s.events) {
    e.t_ms = t;
    t += uniform_int(rng, 200, 3000);
  }
  s.end_ms = t;
}

}  // namespace

SyntheticCase make_synthetic_case(const SyntheticCaseOptions& o) {
  SyntheticCase c;
  c.manifest.slide_id = o.slide_id;
  c.manifest.width_px = o.width_px;
  c.manifest.height_px = o.height_px;
  c.manifest.base_mag = o.base_mag;
  c.annotation.slide_id = o.slide_id;

  std::mt19937_64 rng(o.seed);
  const double w = static_cast<double>(o.width_px), h = static_cast<double>(o.height_px);
  struct Blob {
    double fx, fy, fr;
    Grade grade;
  };
  const Blob blobs[] = {{0.30, 0.35, 0.085, Grade::G3},
                        {0.62, 0.62, 0.100, Grade::G4},
                        {0.74, 0.26, 0.060, Grade::G5},
                        {0.18, 0.78, 0.070, Grade::Benign}};
  for (const auto& b : blobs)
    c.annotation.regions.push_back({star_polygon(b.fx * w, b.fy * h, b.fr * w, 24, rng), b.grade});

  std::vector<const TumorRegion*> tumors;
  for (const auto& r : c.annotation.regions)
    if (r.grade != Grade::Benign) tumors.push_back(&r);

  for (int i = 0; i < o.n_observers; ++i) {
    NavigationSession s;
    s.slide_id = o.slide_id;
    s.group = i % 2 == 0 ? ObserverGroup::GuSpecialist : ObserverGroup::General;
    s.observer_id = (s.group == ObserverGroup::GuSpecialist ? "gu" : "gen") + std::to_string(i / 2 + 1);
    for (int k = 0; k < o.events_per_session; ++k) {
      if (uniform01(rng) < o.tumor_bias) {
        const auto& region = *tumors[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(tumors.size()) - 1))];
        const Point p = point_in_region(region, rng);
        const double mag = pick(rng, {{10.0, 0.5}, {20.0, 0.3}, {40.0, 0.2}});
        s.events.push_back(viewport_at(p, mag, c.manifest, o));
      } else {
        const Point p{uniform01(rng) * w, uniform01(rng) * h};
        const double mag = pick(rng, {{2.0, 0.3}, {4.0, 0.4}, {10.0, 0.3}});
        s.events.push_back(viewport_at(p, mag, c.manifest, o));
      }
    }
    stamp_times(s, rng);
    c.sessions.push_back(std::move(s));
  }
  return c;
}

std::vector<NavigationSession> make_uniform_sessions(const SlideManifest& manifest, int count,
                                                     int events_per_session, std::uint64_t seed,
                                                     const SyntheticCaseOptions& view) {
  std::mt19937_64 rng(seed);
  std::vector<NavigationSession> out;
  const double w = static_cast<double>(manifest.width_px), h = static_cast<double>(manifest.height_px);
  for (int i = 0; i < count; ++i) {
    NavigationSession s;
    s.slide_id = manifest.slide_id;
    s.observer_id = "rnd" + std::to_string(i + 1);
    s.group = i % 2 == 0 ? ObserverGroup::GuSpecialist : ObserverGroup::General;
    for (int k = 0; k < events_per_session; ++k) {
      const Point p{uniform01(rng) * w, uniform01(rng) * h};
      const double mag = pick(rng, {{4.0, 0.25}, {10.0, 0.25}, {20.0, 0.25}, {40.0, 0.25}});
      s.events.push_back(viewport_at(p, mag, manifest, view));
    }
    stamp_times(s, rng);
    out.push_back(std::move(s));
  }
  return out;
}

std::string annotation_to_geojson(const TumorAnnotation& annotation) {
  nlohmann::ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = nlohmann::ordered_json::array();
  for (const auto& region : annotation.regions) {
    nlohmann::ordered_json ring = nlohmann::ordered_json::array();
    for (const auto& p : region.polygon) ring.push_back({p.x, p.y});
    ring.push_back({region.polygon.front().x, region.polygon.front().y});
    nlohmann::ordered_json feature;
    feature["type"] = "Feature";
    feature["geometry"] = {{"type", "Polygon"}, {"coordinates", {ring}}};
    feature["properties"] = {
        {"grade", region.grade == Grade::Benign ? std::string("benign")
                                                : std::string(grade_token(region.grade))}};
    doc["features"].push_back(std::move(feature));
  }
  return doc.dump(1) + "\n";
}

void write_case_directory(const SyntheticCase& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "sessions");
  write_text_file(dir / "manifest.json", serialize_manifest(c.manifest));
  write_text_file(dir / "annotation.geojson", annotation_to_geojson(c.annotation));
  for (const auto& s : c.sessions)
    write_text_file(dir / "sessions" / (s.observer_id + ".jsonl"), serialize_session(s));
}

RgbImage synthetic_patch_raster(const TumorAnnotation& annotation, const PatchRecord& patch,
                                std::uint64_t seed) {
  // Partial patches come out at their clipped size; callers pad them.
  const double per_px = static_cast<double>(patch.stride_px) / patch.size_px;
  const int w = std::max(1, static_cast<int>(std::ceil(static_cast<double>(patch.extent_x) / per_px)));
  const int h = std::max(1, static_cast<int>(std::ceil(static_cast<double>(patch.extent_y) / per_px)));
  // Tumor membership sampled on a coarse lattice; per-pixel polygon tests are too slow.
  constexpr int kBlock = 10;
  const int bw = (w + kBlock - 1) / kBlock, bh = (h + kBlock - 1) / kBlock;
  std::vector<Grade> block(static_cast<std::size_t>(bw) * bh);
  for (int by = 0; by < bh; ++by)
    for (int bx = 0; bx < bw; ++bx) {
      const Point p{static_cast<double>(patch.origin_x) + (bx * kBlock + kBlock / 2.0) * per_px,
                    static_cast<double>(patch.origin_y) + (by * kBlock + kBlock / 2.0) * per_px};
      block[static_cast<std::size_t>(by) * bw + bx] = grade_at(p, annotation);
    }
  std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(patch.px) * 0x9E3779B97F4A7C15ULL) ^
                      (static_cast<std::uint64_t>(patch.py) << 32));
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Grade g = block[static_cast<std::size_t>(y / kBlock) * bw + x / kBlock];
      const double noise = uniform01(rng);
      double r, gr, b;
      if (g == Grade::Benign) {
        r = 232; gr = 178; b = 205;  // stroma pink
        const double n = (noise - 0.5) * 20.0;
        r += n; gr += n; b += n;
      } else {
        // Denser nuclei (darker speckle) for higher grades.
        const double density = g == Grade::G3 ? 0.25 : g == Grade::G4 ? 0.4 : 0.55;
        const bool nucleus = noise < density;
        r = nucleus ? 70 : 150;
        gr = nucleus ? 40 : 90;
        b = nucleus ? 120 : 170;
      }
      auto* p = img.px(x, y);
      p[0] = static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
      p[1] = static_cast<std::uint8_t>(std::clamp(gr, 0.0, 255.0));
      p[2] = static_cast<std::uint8_t>(std::clamp(b, 0.0, 255.0));
    }
  return img;
}

}  // namespace pathattn
