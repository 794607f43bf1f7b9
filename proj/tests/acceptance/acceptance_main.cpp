// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pathattn/heatmap.hpp"
#include "pathattn/io.hpp"
#include "pathattn/metrics.hpp"
#include "pathattn/prediction.hpp"
#include "pathattn/report.hpp"
#include "pathattn/scanpath.hpp"
#include "pathattn/synthetic.hpp"

using namespace pathattn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

SlideManifest square_slide(std::int64_t side, std::string id = "ACC") {
  SlideManifest m;
  m.slide_id = std::move(id);
  m.width_px = side;
  m.height_px = side;
  return m;
}

Grid2D random_grid(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<double> v(static_cast<std::size_t>(w) * h);
  for (auto& x : v) x = u(rng);
  return Grid2D(w, h, {1, 1}, std::move(v));
}

// 1. Viewport accumulation against a per-pixel brute-force count.
Outcome accumulation_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> coord(0, 64), n_sessions(1, 3), n_boxes(1, 10);
  const auto m = square_slide(64);
  int mismatches = 0;
  for (int set = 0; set < 100; ++set) {
    std::vector<NavigationSession> sessions;
    int budget = 10;  // at most 10 viewports per set
    for (int s = 0, ns = n_sessions(rng); s < ns && budget > 0; ++s) {
      NavigationSession sess;
      sess.slide_id = m.slide_id;
      sess.observer_id = "o" + std::to_string(s);
      const int nb = std::min(budget, n_boxes(rng));
      budget -= nb;
      for (int k = 0; k < nb; ++k) {
        int x0 = coord(rng), x1 = coord(rng), y0 = coord(rng), y1 = coord(rng);
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        if (x0 == x1) x0 == 64 ? --x0 : ++x1;
        if (y0 == y1) y0 == 64 ? --y0 : ++y1;
        sess.events.push_back({x0, y0, x1, y1, 10.0, k * 100});
      }
      sessions.push_back(std::move(sess));
    }
    const auto g = accumulate_viewports(sessions, m, {1, 1});
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        long count = 0;
        for (const auto& s : sessions)
          for (const auto& e : s.events) count += x >= e.x0 && x < e.x1 && y >= e.y0 && y < e.y1;
        mismatches += g.at(x, y) != static_cast<double>(count);
      }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 5.0,
          std::to_string(mismatches) + " mismatched cells over 100 sets, " + fmt("%.2f s", secs)};
}

// 2. Smoothing: impulse response, mass, uniform fixpoint.
Outcome smoothing() {
  Grid2D impulse(65, 65, {1, 1});
  impulse.at(32, 32) = 1.0;
  const auto out = gaussian_smooth(impulse, 4.0);
  double norm = 0.0;
  for (int i = -12; i <= 12; ++i) norm += std::exp(-(i * i) / 32.0);
  double impulse_err = 0.0;
  for (int y = 0; y < 65; ++y)
    for (int x = 0; x < 65; ++x) {
      const int dx = x - 32, dy = y - 32;
      const double expect = (std::abs(dx) <= 12 && std::abs(dy) <= 12)
                                 ? std::exp(-(dx * dx) / 32.0) * std::exp(-(dy * dy) / 32.0) / (norm * norm)
                                 : 0.0;
      impulse_err = std::max(impulse_err, std::abs(out.at(x, y) - expect));
    }

  std::mt19937_64 rng(2002);
  double mass_err = 0.0;
  for (double sigma : {1.0, 4.0, 16.0, 40.0}) {
    for (int t = 0; t < 5; ++t) {
      Grid2D g = random_grid(rng, 37, 53);
      for (double& v : g.values()) v = std::abs(v);
      const auto s = gaussian_smooth(g, sigma);
      const double a = std::accumulate(g.values().begin(), g.values().end(), 0.0);
      const double b = std::accumulate(s.values().begin(), s.values().end(), 0.0);
      mass_err = std::max(mass_err, std::abs(a - b) / a);
    }
  }

  bool fixpoint = true;
  for (double c : {0.0, 1.0, 0.3, 1234.5678}) {
    const auto s = gaussian_smooth(Grid2D(40, 30, {1, 1}, c), 16.0);
    fixpoint = fixpoint && std::all_of(s.values().begin(), s.values().end(), [&](double v) { return v == c; });
  }
  return {impulse_err <= 1e-9 && mass_err <= 1e-9 && fixpoint,
          "impulse max error " + fmt("%.3g", impulse_err) + ", mass relative error " + fmt("%.3g", mass_err) +
              ", uniform fixpoint " + (fixpoint ? "exact" : "broken")};
}

// 3. Normalization bounds on random grids.
Outcome normalization() {
  std::mt19937_64 rng(3003);
  std::uniform_int_distribution<int> dim(1, 40), kind(0, 9);
  int failures = 0, degenerate = 0;
  for (int t = 0; t < 1000; ++t) {
    Grid2D g = random_grid(rng, dim(rng), dim(rng));
    if (kind(rng) == 0) for (double& v : g.values()) v = 3.25;  // constant grids
    bool deg = false;
    const auto n = min_max_normalize(g, &deg);
    const auto [lo, hi] = std::minmax_element(n.values().begin(), n.values().end());
    if (deg) {
      ++degenerate;
      failures += *lo != 0.0 || *hi != 0.0;
    } else {
      failures += *lo != 0.0 || *hi != 1.0;
    }
  }
  return {failures == 0, std::to_string(failures) + " failures in 1000 grids (" + std::to_string(degenerate) +
                             " degenerate)"};
}

// 4. Cross-correlation identities and the 2x2 case.
Outcome correlation() {
  std::mt19937_64 rng(4004);
  std::uniform_real_distribution<double> a_dist(0.01, 50.0), b_dist(-50.0, 50.0);
  double err = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto m = random_grid(rng, 16, 12);
    Grid2D affine = m, neg = m;
    const double a = a_dist(rng), b = b_dist(rng);
    for (double& v : affine.values()) v = a * v + b;
    for (double& v : neg.values()) v = -v;
    err = std::max({err, std::abs(cross_correlation(m, m) - 1.0), std::abs(cross_correlation(m, affine) - 1.0),
                    std::abs(cross_correlation(m, neg) + 1.0)});
  }
  const Grid2D x(2, 2, {1, 1}, std::vector<double>{1, 2, 3, 4});
  const Grid2D y(2, 2, {1, 1}, std::vector<double>{2, 4, 5, 4});
  // 3.5 / sqrt(5 * 4.75), evaluated to 20 digits.
  const double hand_err = std::abs(cross_correlation(x, y) - 0.71818484645960786682);
  return {err <= 1e-9 && hand_err <= 1e-12,
          "identity max error " + fmt("%.3g", err) + ", 2x2 error " + fmt("%.3g", hand_err)};
}

// 5. Histogram matching: exact multiset and order preservation.
Outcome histogram_matching() {
  std::mt19937_64 rng(5005);
  std::uniform_int_distribution<int> dim(1, 24), quant(0, 5), kind(0, 2);
  int multiset_fail = 0, order_fail = 0;
  for (int t = 0; t < 1000; ++t) {
    const int w = dim(rng), h = dim(rng);
    Grid2D src = random_grid(rng, w, h), ref = random_grid(rng, w, h);
    if (kind(rng) == 0) for (double& v : src.values()) v = quant(rng);
    if (kind(rng) == 0) for (double& v : ref.values()) v = quant(rng);
    const auto out = histogram_match(src, ref);
    std::vector<double> a(out.values().begin(), out.values().end()), b(ref.values().begin(), ref.values().end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    multiset_fail += a != b;
    // Order: sort cells by source value, outputs must be non-decreasing along it.
    std::vector<std::size_t> idx(src.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return src.values()[i] < src.values()[j]; });
    bool ok = true;
    for (std::size_t k = 1; k < idx.size(); ++k)
      if (src.values()[idx[k - 1]] < src.values()[idx[k]] && out.values()[idx[k - 1]] > out.values()[idx[k]])
        ok = false;
    order_fail += !ok;
  }
  return {multiset_fail == 0 && order_fail == 0,
          std::to_string(multiset_fail) + " multiset and " + std::to_string(order_fail) +
              " order violations in 1000 pairs"};
}

// 6. Alignment against exhaustive enumeration.
//
// A global alignment is fully described by its set of aligned pairs
// (i1<i2<..., j1<j2<...); every other symbol is a gap. The oracle enumerates
// every such set. Scores depend only on symbol equality, so the first string
// is reduced to first-occurrence canonical form and the second relabeled to
// match; the oracle runs once per (canonical a, b).
constexpr int kMaxLen = 6;

double enumerate_alignments(const std::vector<int>& a, const std::vector<int>& b, std::size_t i0,
                            std::size_t j0, const AlignmentScoring& sc) {
  double best = 0.0;  // no further aligned pairs
  for (std::size_t i = i0; i < a.size(); ++i)
    for (std::size_t j = j0; j < b.size(); ++j) {
      const double s = (a[i] == b[j] ? sc.match : sc.mismatch) - 2.0 * sc.gap;
      best = std::max(best, s + enumerate_alignments(a, b, i + 1, j + 1, sc));
    }
  return best;
}

double oracle_score(const std::vector<int>& a, const std::vector<int>& b, const AlignmentScoring& sc) {
  return enumerate_alignments(a, b, 0, 0, sc) + sc.gap * static_cast<double>(a.size() + b.size());
}

// All strings of length 1..kMaxLen over 4 symbols, shortest first.
std::vector<std::vector<int>> all_strings() {
  std::vector<std::vector<int>> out;
  for (int len = 1; len <= kMaxLen; ++len) {
    int total = 1;
    for (int k = 0; k < len; ++k) total *= 4;
    for (int code = 0; code < total; ++code) {
      std::vector<int> s(static_cast<std::size_t>(len));
      for (int k = len - 1, c = code; k >= 0; --k, c /= 4) s[static_cast<std::size_t>(k)] = c % 4;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::size_t string_index(const std::vector<int>& s) {
  std::size_t offset = 0, pow = 4;
  for (std::size_t len = 1; len < s.size(); ++len, pow *= 4) offset += pow;
  std::size_t code = 0;
  for (int v : s) code = code * 4 + static_cast<std::size_t>(v);
  return offset + code;
}

Outcome alignment_oracle() {
  const auto t0 = Clock::now();
  const Grade symbols[] = {Grade::Benign, Grade::G3, Grade::G4, Grade::G5};
  const auto strings = all_strings();
  std::vector<GradeString> grades;
  grades.reserve(strings.size());
  for (const auto& s : strings) {
    GradeString g;
    for (int v : s) g.push_back(symbols[v]);
    grades.push_back(std::move(g));
  }

  auto canonical = [](const std::vector<int>& s, std::array<int, 4>& relabel) {
    relabel.fill(-1);
    int next = 0;
    std::vector<int> out;
    for (int v : s) {
      if (relabel[static_cast<std::size_t>(v)] < 0) relabel[static_cast<std::size_t>(v)] = next++;
      out.push_back(relabel[static_cast<std::size_t>(v)]);
    }
    for (auto& r : relabel)
      if (r < 0) r = next++;
    return out;
  };

  // Oracle table over canonical first strings.
  const AlignmentScoring sc{};
  std::vector<std::size_t> canon_slot(strings.size(), SIZE_MAX);
  std::vector<std::vector<double>> table;
  for (std::size_t i = 0; i < strings.size(); ++i) {
    std::array<int, 4> relabel{};
    if (canonical(strings[i], relabel) != strings[i]) continue;
    canon_slot[i] = table.size();
    std::vector<double> row(strings.size());
    for (std::size_t j = 0; j < strings.size(); ++j) row[j] = oracle_score(strings[i], strings[j], sc);
    table.push_back(std::move(row));
  }

  std::size_t pairs = 0, mismatches = 0;
  std::vector<int> relabeled;
  for (std::size_t i = 0; i < strings.size(); ++i) {
    std::array<int, 4> relabel{};
    const auto canon = canonical(strings[i], relabel);
    const auto& row = table[canon_slot[string_index(canon)]];
    for (std::size_t j = 0; j < strings.size(); ++j) {
      relabeled.clear();
      for (int v : strings[j]) relabeled.push_back(relabel[static_cast<std::size_t>(v)]);
      mismatches += align_score(grades[i], grades[j], sc) != row[string_index(relabeled)];
      ++pairs;
    }
  }

  // Non-default scoring on shorter strings, without the relabeling shortcut.
  const AlignmentScoring alt{2.0, -1.0, -0.5};
  std::size_t alt_mismatches = 0;
  for (std::size_t i = 0; i < strings.size() && strings[i].size() <= 4; ++i)
    for (std::size_t j = 0; j < strings.size() && strings[j].size() <= 4; ++j)
      alt_mismatches += align_score(grades[i], grades[j], alt) != oracle_score(strings[i], strings[j], alt);

  // Symmetry and self-score on random pairs.
  std::mt19937_64 rng(6006);
  std::uniform_int_distribution<int> len(1, 40), sym(0, 3);
  std::size_t sym_fail = 0, self_fail = 0;
  for (int t = 0; t < 10000; ++t) {
    GradeString a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
    for (auto& g : a) g = symbols[sym(rng)];
    for (auto& g : b) g = symbols[sym(rng)];
    sym_fail += semantic_sequence_score(a, b) != semantic_sequence_score(b, a);
    self_fail += semantic_sequence_score(a, a) != 1.0;
  }

  const double secs = seconds_since(t0);
  return {mismatches == 0 && alt_mismatches == 0 && sym_fail == 0 && self_fail == 0 && secs < 60.0,
          std::to_string(mismatches) + "/" + std::to_string(pairs) + " oracle mismatches (" +
              std::to_string(alt_mismatches) + " with alternate scoring), " + std::to_string(sym_fail) +
              " asymmetric, " + std::to_string(self_fail) + " self-score failures, " + fmt("%.1f s", secs)};
}

// 7. Discretize and reassemble smooth heatmaps.
//
// Each map is a sum of 1-3 Gaussian bumps whose widths are at least one patch
// (500 base px), so the field is smooth on the patch scale.
Outcome round_trip() {
  std::mt19937_64 rng(7007);
  std::uniform_real_distribution<double> pos(0.0, 2000.0), width(500.0, 900.0), amp(0.3, 1.0);
  std::uniform_int_distribution<int> bumps(1, 3);
  const auto m = square_slide(2000);
  const Scale scale{1, 16};
  const auto spec = BinSpec::equal_width(5);
  const auto patches = extract_patch_grid(m, {500, 10.0});
  double worst = 1.0, mean = 0.0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    Grid2D g = grid_for_slide(m.width_px, m.height_px, scale);
    struct Bump { double x, y, s, a; };
    std::vector<Bump> bs;
    for (int k = 0, nb = bumps(rng); k < nb; ++k) bs.push_back({pos(rng), pos(rng), width(rng), amp(rng)});
    for (int y = 0; y < g.height(); ++y)
      for (int x = 0; x < g.width(); ++x) {
        const double px = scale.cell_center(x), py = scale.cell_center(y);
        double v = 0.0;
        for (const auto& b : bs)
          v += b.a * std::exp(-((px - b.x) * (px - b.x) + (py - b.y) * (py - b.y)) / (2 * b.s * b.s));
        g.at(x, y) = v;
      }
    AttentionHeatmap original;
    original.grid = min_max_normalize(g);
    PredictionSet bins;
    for (const auto& p : patches) bins[{p.px, p.py}] = patch_label(original, p, spec);
    const auto rebuilt = predict_and_reassemble(bins, patches, m, spec, {scale, 16.0});
    const double cc = rebuilt.degenerate ? 0.0 : cross_correlation(original.grid, rebuilt.grid);
    worst = std::min(worst, cc);
    mean += cc / trials;
  }
  return {worst >= 0.9, "minimum CC " + fmt("%.4f", worst) + " over 50 maps (mean " + fmt("%.4f", mean) + ")"};
}

// 8. Classifier gradient, accuracy, determinism and monotone full-batch loss.
Outcome classifier() {
  std::mt19937_64 rng(8008);
  std::normal_distribution<double> n01(0.0, 1.0);

  double worst_grad = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int N = 12, D = 5, K = 5;
    std::vector<double> x(N * D), params(K * D + K), w(N);
    std::vector<int> y(N);
    for (auto& v : x) v = n01(rng);
    for (auto& v : params) v = 0.5 * n01(rng);
    for (int i = 0; i < N; ++i) {
      y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % K);
      w[static_cast<std::size_t>(i)] = 0.25 + static_cast<double>(rng() % 4);
    }
    std::vector<double> grad;
    softmax_loss(params, x, N, D, K, y, w, &grad);
    for (std::size_t j = 0; j < params.size(); ++j) {
      const double h = 1e-5;
      auto plus = params, minus = params;
      plus[j] += h;
      minus[j] -= h;
      const double fd = (softmax_loss(plus, x, N, D, K, y, w) - softmax_loss(minus, x, N, D, K, y, w)) / (2 * h);
      worst_grad = std::max(worst_grad, std::abs(fd - grad[j]) / std::max(std::abs(fd), 1e-3));
    }
  }

  // Two separable clusters in a 56-dimensional feature space, imbalanced 1:3.
  std::vector<PatchRecord> data;
  for (int i = 0; i < 400; ++i) {
    PatchRecord p;
    p.label = i % 4 == 0 ? 4 : 0;
    const double c = *p.label == 4 ? 0.8 : -0.8;
    for (int d = 0; d < kFeatureDim; ++d) p.features.push_back(c + n01(rng));
    data.push_back(std::move(p));
  }
  const auto spec = BinSpec::equal_width(5);
  TrainingOptions opt;
  opt.seed = 42;
  const auto r1 = train_patch_classifier(data, spec, opt);
  const auto r2 = train_patch_classifier(data, spec, opt);
  std::size_t correct = 0;
  for (const auto& p : data) correct += r1.model.predict(p.features) == *p.label;
  const double acc = static_cast<double>(correct) / static_cast<double>(data.size());
  const bool same = r1.model.weights == r2.model.weights && r1.model.bias == r2.model.bias;

  TrainingOptions full = opt;
  full.batch_size = 0;
  const auto fb = train_patch_classifier(data, spec, full);
  double worst_rise = 0.0;
  for (std::size_t e = 1; e < fb.epoch_loss.size(); ++e)
    worst_rise = std::max(worst_rise, fb.epoch_loss[e] - fb.epoch_loss[e - 1]);

  return {worst_grad <= 1e-4 && acc >= 0.95 && same && worst_rise <= 1e-6,
          "gradient relative error " + fmt("%.2g", worst_grad) + ", accuracy " + fmt("%.4f", acc) +
              ", reproducible " + (same ? "yes" : "no") + ", largest full-batch loss increase " +
              fmt("%.2g", worst_rise)};
}

// 9. Welch t-test against reference values.
Outcome welch() {
  const std::vector<double> xs{1, 2, 3, 4}, ys{2, 3, 4, 5};
  const auto same = welch_t_test(xs, xs);
  const auto r = welch_t_test(xs, ys);
  // t = -sqrt(6/5), df = 6, p from 40-digit evaluation of the Student-t CDF.
  const double t_err = std::abs(r.t - -1.09544511501033222691);
  const double p_err = std::abs(r.p - 0.31533359620122973297);
  const bool ok = std::abs(same.t) <= 1e-9 && std::abs(same.p - 1.0) <= 1e-9 && t_err <= 1e-6 && p_err <= 1e-6;
  return {ok, "identical samples t=" + fmt("%.3g", same.t) + " p=" + fmt("%.12g", same.p) + "; t error " +
                  fmt("%.2g", t_err) + ", p error " + fmt("%.2g", p_err)};
}

// 10. End-to-end synthetic case.
Outcome end_to_end() {
  const fs::path root = fs::temp_directory_path() / "pathattn_acceptance";
  fs::remove_all(root);
  const SyntheticCaseOptions opts;  // 8 sessions, 80% of viewports on tumor
  const auto c = make_synthetic_case(opts);
  write_case_directory(c, root / "case");

  // Same config twice; the output tree is cleared between runs.
  RunConfig cfg;
  cfg.output_dir = root / "out";
  const auto t0 = Clock::now();
  const auto out1 = run_report(root / "case", cfg);
  const double secs = seconds_since(t0);
  std::vector<std::string> first;
  for (const auto& f : out1.files) first.push_back(read_text_file(out1.out_dir / f));
  fs::remove_all(cfg.output_dir);
  const auto out2 = run_report(root / "case", cfg);

  bool identical = out1.files == out2.files;
  for (std::size_t i = 0; identical && i < out2.files.size(); ++i)
    identical = read_text_file(out2.out_dir / out2.files[i]) == first[i];

  double cc = -2.0;
  for (const auto& row : out1.report->rows)
    if (row.group == "all" && row.cc) cc = *row.cc;

  std::vector<GradeString> biased, uniform;
  for (const auto& s : c.sessions) biased.push_back(grade_string(build_scanpath(s), c.annotation));
  for (const auto& s : make_uniform_sessions(c.manifest, 8, opts.events_per_session, 99, opts))
    uniform.push_back(grade_string(build_scanpath(s), c.annotation));
  const double within = mean_pairwise_sss(biased);
  const double across = mean_cross_sss(biased, uniform);

  return {cc >= 0.6 && within > across && secs < 60.0 && identical,
          "CC " + fmt("%.4f", cc) + ", within-group SSS " + fmt("%.4f", within) + " vs biased-uniform " +
              fmt("%.4f", across) + ", report " + fmt("%.1f s", secs) + ", " +
              std::to_string(out1.files.size()) + " files " + (identical ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"viewport accumulation oracle", accumulation_oracle},
      {"gaussian smoothing", smoothing},
      {"min-max normalization", normalization},
      {"cross-correlation", correlation},
      {"histogram matching", histogram_matching},
      {"alignment oracle and SSS", alignment_oracle},
      {"discretize/reassemble round trip", round_trip},
      {"patch classifier", classifier},
      {"Welch t-test", welch},
      {"end-to-end synthetic case", end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
