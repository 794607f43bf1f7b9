#include <algorithm>
#include <cmath>
#include <random>

#include "pathattn/metrics.hpp"
#include "support.hpp"

using namespace pathattn;
using testing::error_code;

namespace {

TumorAnnotation annotation(std::vector<TumorRegion> regions) {
  TumorAnnotation a;
  a.slide_id = "S1";
  a.regions = std::move(regions);
  return a;
}

Grid2D grid(int w, int h, std::vector<double> v) { return Grid2D(w, h, {1, 1}, std::move(v)); }

std::vector<double> sorted(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("rasterized annotations") {
  const auto m = testing::manifest(10, 10);
  const auto left = annotation({{testing::rect(0, 0, 5, 10), Grade::G3}});
  const auto mask = rasterize_annotation(left, m, {1, 1});
  double ones = 0;
  for (double v : mask.values()) ones += v;
  CHECK(ones == 50);

  CHECK(sorted(rasterize_annotation(annotation({}), m, {1, 1}).values()).back() == 0.0);

  const auto benign = annotation({{testing::rect(0, 0, 10, 10), Grade::Benign}});
  CHECK(sorted(rasterize_annotation(benign, m, {1, 1}).values()).back() == 0.0);
}

TEST_CASE("overlapping polygons rasterize to the per-cell union") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 640.0);
  const auto m = testing::manifest(640, 640);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<TumorRegion> regions;
    for (int r = 0; r < 3; ++r) {
      // Random triangles are always simple.
      regions.push_back({{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}}, Grade::G4});
    }
    const auto a = annotation(regions);
    const auto mask = rasterize_annotation(a, m, {1, 16});
    for (int y = 0; y < mask.height(); ++y)
      for (int x = 0; x < mask.width(); ++x) {
        const Point c{(x + 0.5) * 16.0, (y + 0.5) * 16.0};
        bool inside = false;
        for (const auto& r : regions) inside = inside || point_in_polygon(c, r.polygon);
        CHECK(mask.at(x, y) == (inside ? 1.0 : 0.0));
      }
  }
}

TEST_CASE("tumor probability map") {
  const auto empty = tumor_probability_map(Grid2D(8, 8, {1, 1}), 2.0);
  CHECK(empty.empty);
  for (double v : empty.grid.values()) CHECK(v == 0.0);

  Grid2D single(21, 21, {1, 1});
  single.at(10, 10) = 1.0;
  const auto peak = tumor_probability_map(single, 2.0);
  CHECK(peak.grid.at(10, 10) == 1.0);
  CHECK(peak.grid.at(10, 11) < 1.0);
}

TEST_CASE("half-plane tumor map matches direct convolution") {
  const int w = 40, h = 30;
  const double sigma = 3.0;
  Grid2D mask(w, h, {1, 1});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < 17; ++x) mask.at(x, y) = 1.0;

  // Direct 2-D convolution with half-sample symmetric boundary.
  const int r = 9;
  std::vector<double> k;
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += std::exp(-i * i / (2 * sigma * sigma));
  for (int i = -r; i <= r; ++i) k.push_back(std::exp(-i * i / (2 * sigma * sigma)) / sum);
  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  std::vector<double> direct(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = -r; j <= r; ++j)
        for (int i = -r; i <= r; ++i) acc += k[i + r] * k[j + r] * mask.at(reflect(x + i, w), reflect(y + j, h));
      direct[static_cast<std::size_t>(y) * w + x] = acc;
    }
  const auto [lo, hi] = std::minmax_element(direct.begin(), direct.end());
  const double mn = *lo, mx = *hi;

  const auto map = tumor_probability_map(mask, sigma);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      CHECK(std::abs(map.grid.at(x, y) - (direct[static_cast<std::size_t>(y) * w + x] - mn) / (mx - mn)) < 1e-9);
      if (x > 0) CHECK(map.grid.at(x, y) <= map.grid.at(x - 1, y));  // monotone ramp
    }
}

TEST_CASE("histogram matching") {
  const auto out = histogram_match(grid(3, 1, {3, 1, 2}), grid(3, 1, {10, 20, 30}));
  CHECK(std::vector<double>(out.values().begin(), out.values().end()) == std::vector<double>{30, 10, 20});

  const auto c = histogram_match(grid(2, 2, {4, 1, 3, 2}), grid(2, 2, {7, 7, 7, 7}));
  for (double v : c.values()) CHECK(v == 7.0);

  // Ties resolve by row-major index.
  const auto t = histogram_match(grid(4, 1, {5, 5, 5, 5}), grid(4, 1, {4, 3, 2, 1}));
  CHECK(std::vector<double>(t.values().begin(), t.values().end()) == std::vector<double>{1, 2, 3, 4});

  CHECK(error_code([] { histogram_match(grid(2, 1, {1, 2}), grid(1, 2, {1, 2})); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("histogram matching properties") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> quant(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    Grid2D src = testing::random_grid(rng, 9, 7);
    if (trial % 2) for (double& v : src.values()) v = quant(rng);  // many ties
    const Grid2D ref = testing::random_grid(rng, 9, 7);
    const auto out = histogram_match(src, ref);
    CHECK(sorted(out.values()) == sorted(ref.values()));
    for (std::size_t i = 0; i < src.size(); ++i)
      for (std::size_t j = 0; j < src.size(); ++j)
        if (src.values()[i] < src.values()[j]) CHECK(out.values()[i] <= out.values()[j]);
  }
}

TEST_CASE("cross-correlation") {
  // cov 7/2, Saa 5, Sbb 19/4; value from the exact formula.
  const auto a = grid(2, 2, {1, 2, 3, 4}), b = grid(2, 2, {2, 4, 5, 4});
  CHECK(std::abs(cross_correlation(a, b) - 0.71818484645960786682) < 1e-12);
  CHECK(cross_correlation(a, b) == cross_correlation(b, a));

  std::mt19937_64 rng(40);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = testing::random_grid(rng, 12, 8);
    const auto o = testing::random_grid(rng, 12, 8);
    Grid2D affine = m, neg = m;
    for (double& v : affine.values()) v = 3.5 * v - 11.0;
    for (double& v : neg.values()) v = -v;
    CHECK(std::abs(cross_correlation(m, m) - 1.0) < 1e-9);
    CHECK(std::abs(cross_correlation(m, affine) - 1.0) < 1e-9);
    CHECK(std::abs(cross_correlation(m, neg) + 1.0) < 1e-9);
    Grid2D o2 = o;
    for (double& v : o2.values()) v = 0.25 * v + 100.0;
    CHECK(std::abs(cross_correlation(m, o) - cross_correlation(m, o2)) < 1e-9);
    const double cc = cross_correlation(m, o);
    CHECK(cc >= -1.0);
    CHECK(cc <= 1.0);
  }

  CHECK(error_code([] { cross_correlation(grid(2, 1, {1, 1}), grid(2, 1, {1, 2})); }) ==
        ErrorCode::ConstantInput);
  CHECK(error_code([] { cross_correlation(grid(2, 1, {1, 2}), grid(1, 2, {1, 2})); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("Welch t-test") {
  const std::vector<double> xs{1, 2, 3, 4}, ys{2, 3, 4, 5};
  const auto r = welch_t_test(xs, ys);
  // Reference values from 40-digit arithmetic.
  CHECK(std::abs(r.t - -1.09544511501033222691) < 1e-9);
  CHECK(std::abs(r.df - 6.0) < 1e-9);
  CHECK(std::abs(r.p - 0.31533359620122973297) < 1e-9);

  const auto same = welch_t_test(xs, xs);
  CHECK(std::abs(same.t) < 1e-9);
  CHECK(std::abs(same.p - 1.0) < 1e-9);

  const auto swapped = welch_t_test(ys, xs);
  CHECK(swapped.t == -r.t);
  CHECK(swapped.p == r.p);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(5), b(8);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng) + 0.5;
    const auto base = welch_t_test(a, b);
    CHECK(base.p > 0.0);
    CHECK(base.p <= 1.0);
    for (auto& v : a) v += 42.0;
    for (auto& v : b) v += 42.0;
    const auto shifted = welch_t_test(a, b);
    CHECK(std::abs(shifted.t - base.t) < 1e-9);
    CHECK(std::abs(shifted.p - base.p) < 1e-9);
  }

  const std::vector<double> one{1.0}, flat{2.0, 2.0, 2.0};
  CHECK(error_code([&] { welch_t_test(one, xs); }) == ErrorCode::InsufficientData);
  CHECK(error_code([&] { welch_t_test(flat, xs); }) == ErrorCode::ZeroVariance);
}

TEST_CASE("evaluate_case on viewports that tile the tumor") {
  const auto m = testing::manifest(1024, 1024);
  const auto a = annotation({{testing::rect(128, 256, 512, 640), Grade::G4},
                             {testing::rect(640, 128, 896, 384), Grade::G3}});
  std::vector<NavigationSession> sessions;
  for (int i = 0; i < 4; ++i)
    sessions.push_back(testing::session({{128, 256, 512, 640}, {640, 128, 896, 384}}, "o" + std::to_string(i),
                                        i % 2 ? ObserverGroup::General : ObserverGroup::GuSpecialist));
  EvaluationConfig cfg;
  cfg.sigma = 2.0;
  const auto report = evaluate_case("case", sessions, a, m, cfg);
  REQUIRE(report.rows.size() == 3);
  for (const auto& row : report.rows) {
    REQUIRE(row.cc);
    CHECK(*row.cc >= 0.9);
    REQUIRE(row.sss);
    CHECK(*row.sss == 1.0);
  }
  CHECK(report.observers.size() == 4);

  const auto csv = case_report_csv(std::span(&report, 1));
  CHECK(csv.rfind("case_id,group,cc,sss,n_observers,match_direction\n", 0) == 0);
  const auto rows = parse_case_report_csv(csv);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].group == "GU");
  CHECK(rows[1].n_observers == 2);
  CHECK(rows[1].match_direction == "attention_to_tumor");
}

TEST_CASE("evaluate_case with an empty group and a single observer") {
  const auto m = testing::manifest(512, 512);
  const auto a = annotation({{testing::rect(64, 64, 256, 256), Grade::G5}});
  const std::vector<NavigationSession> sessions{testing::session({{64, 64, 256, 256}, {300, 300, 400, 400}})};
  EvaluationConfig cfg;
  cfg.sigma = 2.0;
  cfg.direction = MatchDirection::TumorToAttention;
  const auto report = evaluate_case("c", sessions, a, m, cfg);
  REQUIRE(report.rows.size() == 2);  // all and GU; GEN has nobody
  CHECK(report.rows[0].group == "all");
  CHECK(report.rows[1].group == "GU");
  CHECK_FALSE(report.rows[0].sss);
  CHECK(report.direction == MatchDirection::TumorToAttention);
  CHECK_FALSE(report.group_cc_ttest);
}
