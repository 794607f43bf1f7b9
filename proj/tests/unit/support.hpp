#pragma once

#include <doctest.h>

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pathattn/error.hpp"
#include "pathattn/grid.hpp"
#include "pathattn/ingest.hpp"

namespace testing {

using namespace pathattn;

inline SlideManifest manifest(std::int64_t w, std::int64_t h, std::string id = "S1") {
  SlideManifest m;
  m.slide_id = std::move(id);
  m.width_px = w;
  m.height_px = h;
  return m;
}

struct Box {
  std::int64_t x0, y0, x1, y1;
  double mag = 10.0;
};

inline NavigationSession session(std::vector<Box> boxes, std::string observer = "o1",
                                 ObserverGroup group = ObserverGroup::GuSpecialist,
                                 std::string slide = "S1") {
  NavigationSession s;
  s.slide_id = std::move(slide);
  s.observer_id = std::move(observer);
  s.group = group;
  std::int64_t t = 0;
  for (const auto& b : boxes) {
    s.events.push_back({b.x0, b.y0, b.x1, b.y1, b.mag, t});
    t += 1000;
  }
  return s;
}

inline std::vector<Point> rect(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

inline Grid2D random_grid(std::mt19937_64& rng, int w, int h, Scale scale = {1, 1}) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> v(static_cast<std::size_t>(w) * h);
  for (auto& x : v) x = u(rng);
  return Grid2D(w, h, scale, std::move(v));
}

// The typed code of the error `fn` throws, or nothing when it does not throw.
inline std::optional<ErrorCode> error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testing
