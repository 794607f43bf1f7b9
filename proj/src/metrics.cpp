#include "pathattn/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "pathattn/error.hpp"
#include "pathattn/io.hpp"

namespace pathattn {

Grid2D rasterize_annotation(const TumorAnnotation& annotation, const SlideManifest& manifest,
                            Scale scale) {
  Grid2D mask = grid_for_slide(manifest.width_px, manifest.height_px, scale);
  std::vector<double> crossings;
  for (const auto& region : annotation.regions) {
    if (region.grade == Grade::Benign) continue;
    const auto& ring = region.polygon;
    const std::size_t n = ring.size();
    for (int cy = 0; cy < mask.height(); ++cy) {
      const double py = scale.cell_center(cy);
      crossings.clear();
      // Same edge walk and crossing formula as point_in_polygon, so the
      // scanline result agrees with per-point tests bit for bit.
      for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = ring[i];
        const Point& b = ring[j];
        if ((a.y > py) != (b.y > py))
          crossings.push_back(a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y));
      }
      if (crossings.empty()) continue;
      std::sort(crossings.begin(), crossings.end());
      // Inside iff an odd number of crossings lie strictly right of the center.
      std::size_t k = 0;
      for (int cx = 0; cx < mask.width(); ++cx) {
        const double px = scale.cell_center(cx);
        while (k < crossings.size() && crossings[k] <= px) ++k;
        if ((crossings.size() - k) % 2 == 1) mask.at(cx, cy) = 1.0;
      }
    }
  }
  return mask;
}

TumorProbabilityMap tumor_probability_map(const Grid2D& mask, double sigma) {
  TumorProbabilityMap pm;
  pm.sigma = sigma;
  pm.grid = min_max_normalize(gaussian_smooth(mask, sigma), &pm.empty);
  return pm;
}

Grid2D histogram_match(const Grid2D& source, const Grid2D& reference) {
  if (source.width() != reference.width() || source.height() != reference.height())
    throw Error(ErrorCode::DimensionMismatch, "histogram_match needs equal grid sizes");
  auto src = source.values();
  std::vector<std::size_t> order(src.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return src[i] < src[j]; });
  std::vector<double> ref(reference.values().begin(), reference.values().end());
  std::sort(ref.begin(), ref.end());
  Grid2D out(source.width(), source.height(), source.scale());
  auto dst = out.values();
  for (std::size_t k = 0; k < order.size(); ++k) dst[order[k]] = ref[k];
  return out;
}

double cross_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "CC needs equal sizes");
  if (a.empty()) throw Error(ErrorCode::ConstantInput, "CC of empty maps is undefined");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0))
    throw Error(ErrorCode::ConstantInput, "correlation with a constant map is undefined");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double cross_correlation(const Grid2D& a, const Grid2D& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::DimensionMismatch, "CC needs equal grid sizes");
  return cross_correlation(a.values(), b.values());
}

TTestResult welch_t_test(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() < 2 || ys.size() < 2)
    throw Error(ErrorCode::InsufficientData, "each sample needs at least two values");
  auto moments = [](std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::pair{mean, ss / (n - 1.0)};
  };
  const auto [mx, vx] = moments(xs);
  const auto [my, vy] = moments(ys);
  if (!(vx > 0.0) || !(vy > 0.0))
    throw Error(ErrorCode::ZeroVariance, "a sample has zero variance");
  const double sx = vx / static_cast<double>(xs.size());
  const double sy = vy / static_cast<double>(ys.size());
  TTestResult r;
  r.t = (mx - my) / std::sqrt(sx + sy);
  r.df = (sx + sy) * (sx + sy) /
         (sx * sx / static_cast<double>(xs.size() - 1) + sy * sy / static_cast<double>(ys.size() - 1));
  boost::math::students_t dist(r.df);
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

std::string_view to_string(MatchDirection d) {
  return d == MatchDirection::AttentionToTumor ? "attention_to_tumor" : "tumor_to_attention";
}

MatchDirection parse_match_direction(std::string_view text) {
  if (text == "attention_to_tumor") return MatchDirection::AttentionToTumor;
  if (text == "tumor_to_attention") return MatchDirection::TumorToAttention;
  throw Error(ErrorCode::InvalidArgument, "unknown match direction '" + std::string(text) + "'");
}

namespace {

double matched_cc(const Grid2D& attention, const Grid2D& tumor, MatchDirection direction) {
  if (direction == MatchDirection::AttentionToTumor)
    return cross_correlation(histogram_match(attention, tumor), tumor);
  return cross_correlation(attention, histogram_match(tumor, attention));
}

}  // namespace

CaseReport evaluate_case(std::string case_id, std::span<const NavigationSession> sessions,
                         const TumorAnnotation& annotation, const SlideManifest& manifest,
                         const EvaluationConfig& config) {
  if (sessions.empty()) throw Error(ErrorCode::EmptyInput, "case has no sessions");
  CaseReport report;
  report.case_id = std::move(case_id);
  report.direction = config.direction;

  const auto tumor = tumor_probability_map(
      rasterize_annotation(annotation, manifest, config.scale), config.sigma);

  HeatmapOptions hopt;
  hopt.scale = config.scale;
  hopt.sigma = config.sigma;
  std::vector<AttentionHeatmap> per_observer;
  std::vector<GradeString> strings;
  per_observer.reserve(sessions.size());
  for (const auto& s : sessions) {
    per_observer.push_back(build_attention_heatmap(std::span(&s, 1), manifest, hopt));
    strings.push_back(grade_string(build_scanpath(s), annotation));
  }

  for (std::size_t i = 0; i < sessions.size(); ++i) {
    ObserverResult obs{sessions[i].observer_id, sessions[i].group, std::nullopt};
    if (!per_observer[i].degenerate && !tumor.empty)
      obs.cc = matched_cc(per_observer[i].grid, tumor.grid, config.direction);
    report.observers.push_back(std::move(obs));
  }

  struct Set {
    std::string name;
    std::optional<ObserverGroup> group;
  };
  const Set sets[] = {{"all", std::nullopt},
                      {"GU", ObserverGroup::GuSpecialist},
                      {"GEN", ObserverGroup::General}};
  for (const auto& set : sets) {
    std::vector<AttentionHeatmap> maps;
    std::vector<GradeString> set_strings;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
      if (set.group && sessions[i].group != *set.group) continue;
      maps.push_back(per_observer[i]);
      set_strings.push_back(strings[i]);
    }
    if (maps.empty()) continue;
    GroupResult row;
    row.group = set.name;
    row.n_observers = maps.size();
    const auto avg = average_heatmaps(maps);
    if (avg.degenerate)
      throw Error(ErrorCode::ConstantInput, "group '" + set.name + "' attention map is constant");
    row.cc = matched_cc(avg.grid, tumor.grid, config.direction);
    if (set_strings.size() >= 2) row.sss = mean_pairwise_sss(set_strings, config.scoring);
    report.rows.push_back(std::move(row));
  }

  std::vector<double> gu, gen;
  for (const auto& o : report.observers) {
    if (!o.cc) continue;
    (o.group == ObserverGroup::GuSpecialist ? gu : gen).push_back(*o.cc);
  }
  try {
    report.group_cc_ttest = welch_t_test(gu, gen);
  } catch (const Error&) {
    // Too few observers or zero spread: no test for this case.
  }
  return report;
}

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

}  // namespace

std::string case_report_csv(std::span<const CaseReport> reports) {
  std::string out = "case_id,group,cc,sss,n_observers,match_direction\n";
  for (const auto& r : reports)
    for (const auto& row : r.rows)
      out += r.case_id + ',' + row.group + ',' + opt_number(row.cc) + ',' + opt_number(row.sss) +
             ',' + std::to_string(row.n_observers) + ',' + std::string(to_string(r.direction)) +
             '\n';
  return out;
}

std::string observer_report_csv(std::span<const CaseReport> reports) {
  std::string out = "case_id,observer_id,group,cc\n";
  for (const auto& r : reports)
    for (const auto& o : r.observers)
      out += r.case_id + ',' + o.observer_id + ',' + std::string(to_string(o.group)) + ',' +
             opt_number(o.cc) + '\n';
  return out;
}

std::vector<CaseReportRow> parse_case_report_csv(std::string_view text) {
  std::vector<CaseReportRow> rows;
  std::size_t pos = 0;
  std::int64_t line_no = 0;
  auto parse_opt = [&](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedLine, "bad number '" + s + "'", line_no);
    }
  };
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                   : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "case_id,group,cc,sss,n_observers,match_direction")
        throw Error(ErrorCode::MalformedLine, "unexpected report header", 1);
      continue;
    }
    auto f = split_csv_line(line);
    if (f.size() != 6) throw Error(ErrorCode::MalformedLine, "expected 6 fields", line_no);
    CaseReportRow row;
    row.case_id = f[0];
    row.group = f[1];
    row.cc = parse_opt(f[2]);
    row.sss = parse_opt(f[3]);
    row.n_observers = static_cast<std::size_t>(std::stoull(f[4]));
    row.match_direction = f[5];
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace pathattn
