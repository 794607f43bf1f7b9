#include "pathattn/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "pathattn/error.hpp"
#include "pathattn/heatmap.hpp"
#include "pathattn/io.hpp"
#include "pathattn/render.hpp"

namespace fs = std::filesystem;

namespace pathattn {

void RunConfig::validate() const {
  scale.validate();
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be non-negative");
  binspec.validate();
  scoring.validate();
  if (mag_buckets.empty()) throw Error(ErrorCode::InvalidArgument, "mag_buckets is empty");
  for (std::size_t i = 1; i < mag_buckets.size(); ++i)
    if (!(mag_buckets[i] > mag_buckets[i - 1]))
      throw Error(ErrorCode::InvalidArgument, "mag_buckets must increase strictly");
}

std::string run_config_json(const RunConfig& c) {
  nlohmann::ordered_json doc;
  doc["scale"] = c.scale.to_string();
  doc["sigma"] = c.sigma;
  doc["binspec"] = {{"edges", c.binspec.edges}, {"bin_means", c.binspec.bin_means}};
  doc["scoring"] = {{"match", c.scoring.match}, {"mismatch", c.scoring.mismatch}, {"gap", c.scoring.gap}};
  doc["match_direction"] = std::string(to_string(c.direction));
  doc["seed"] = c.seed;
  doc["output_dir"] = c.output_dir.string();
  doc["mag_buckets"] = c.mag_buckets;
  return doc.dump(2) + "\n";
}

RunConfig parse_run_config(std::string_view json_text, RunConfig c) {
  try {
    const auto doc = nlohmann::json::parse(json_text);
    if (auto it = doc.find("scale"); it != doc.end())
      c.scale = it->is_string() ? parse_scale(it->get<std::string>()) : scale_from_double(it->get<double>());
    if (auto it = doc.find("sigma"); it != doc.end()) c.sigma = it->get<double>();
    if (auto it = doc.find("binspec"); it != doc.end()) {
      c.binspec.edges = it->at("edges").get<std::vector<double>>();
      c.binspec.bin_means = it->at("bin_means").get<std::vector<double>>();
    }
    if (auto it = doc.find("scoring"); it != doc.end()) {
      c.scoring.match = it->value("match", c.scoring.match);
      c.scoring.mismatch = it->value("mismatch", c.scoring.mismatch);
      c.scoring.gap = it->value("gap", c.scoring.gap);
    }
    if (auto it = doc.find("match_direction"); it != doc.end())
      c.direction = parse_match_direction(it->get<std::string>());
    if (auto it = doc.find("seed"); it != doc.end()) c.seed = it->get<std::uint64_t>();
    if (auto it = doc.find("output_dir"); it != doc.end()) c.output_dir = it->get<std::string>();
    if (auto it = doc.find("mag_buckets"); it != doc.end()) c.mag_buckets = it->get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

template <typename F>
auto with_path(const fs::path& path, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail(), e.line());
  }
}

}  // namespace

CaseInputs load_case_directory(const fs::path& dir) {
  CaseInputs in;
  in.directory = dir;
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path))
    throw Error(ErrorCode::Io, "missing manifest file " + manifest_path.string());
  in.manifest = with_path(manifest_path, [&] { return parse_manifest(read_text_file(manifest_path)); });

  const fs::path sessions_dir = fs::is_directory(dir / "sessions") ? dir / "sessions" : dir;
  for (const auto& entry : fs::directory_iterator(sessions_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
      in.session_files.push_back(entry.path());
  std::sort(in.session_files.begin(), in.session_files.end());
  if (in.session_files.empty())
    throw Error(ErrorCode::Io, "no session logs (*.jsonl) in " + sessions_dir.string());
  for (const auto& f : in.session_files)
    in.sessions.push_back(with_path(f, [&] {
      return validate_and_clip(parse_session_log(read_text_file(f)), in.manifest);
    }));

  const fs::path ann_path = dir / "annotation.geojson";
  if (fs::exists(ann_path))
    in.annotation = with_path(ann_path, [&] { return parse_annotation(read_text_file(ann_path), in.manifest); });
  return in;
}

namespace {

std::string mag_label(double mag) { return format_number(mag) + "x"; }

struct Writer {
  fs::path root;
  std::vector<fs::path> files;

  void text(const fs::path& rel, std::string_view contents) {
    fs::create_directories((root / rel).parent_path());
    write_text_file(root / rel, contents);
    files.push_back(rel);
  }
  void bytes(const fs::path& rel, const std::vector<std::uint8_t>& data) {
    fs::create_directories((root / rel).parent_path());
    write_binary_file(root / rel, data);
    files.push_back(rel);
  }
  void heatmap(const std::string& stem, const AttentionHeatmap& hm) {
    std::ostringstream bin;
    write_heatmap(bin, hm);
    text(stem + ".ahm", bin.str());
    bytes(stem + ".png", render_heatmap(hm, RenderMode::Gray));
  }
};

RgbImage ramp_image(const AttentionHeatmap& hm) {
  RgbImage img(hm.grid.width(), hm.grid.height());
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const auto c = ramp_color(hm.grid.at(x, y));
      std::copy(c.begin(), c.end(), img.px(x, y));
    }
  return img;
}

}  // namespace

ReportOutputs run_report(const fs::path& case_dir, const RunConfig& config) {
  config.validate();
  const CaseInputs in = load_case_directory(case_dir);
  const auto& sessions = in.sessions;
  ReportOutputs out;
  out.out_dir = config.output_dir / in.manifest.slide_id;
  Writer w{out.out_dir, {}};

  HeatmapOptions hopt;
  hopt.scale = config.scale;
  hopt.sigma = config.sigma;

  struct Set {
    std::string name;
    std::optional<ObserverGroup> group;
  };
  const Set sets[] = {{"all", std::nullopt},
                      {"GU", ObserverGroup::GuSpecialist},
                      {"GEN", ObserverGroup::General}};
  auto members = [&](const Set& set) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < sessions.size(); ++i)
      if (!set.group || sessions[i].group == *set.group) idx.push_back(i);
    return idx;
  };

  std::vector<AttentionHeatmap> per_observer;
  for (const auto& s : sessions)
    per_observer.push_back(build_attention_heatmap(std::span(&s, 1), in.manifest, hopt));

  // Per-magnification maps, one per observer and bucket.
  std::map<double, std::vector<AttentionHeatmap>> per_mag;
  for (double level : config.mag_buckets) {
    HeatmapOptions mopt = hopt;
    mopt.mag_filter = MagFilter{level, config.mag_buckets};
    for (const auto& s : sessions)
      per_mag[level].push_back(build_attention_heatmap(std::span(&s, 1), in.manifest, mopt));
  }

  std::vector<Scanpath> paths;
  for (const auto& s : sessions) paths.push_back(build_scanpath(s));

  for (const auto& set : sets) {
    const auto idx = members(set);
    if (idx.empty()) continue;
    std::vector<AttentionHeatmap> maps;
    for (auto i : idx) maps.push_back(per_observer[i]);
    const auto avg = average_heatmaps(maps);
    w.heatmap("heatmaps/" + set.name, avg);

    RgbImage overlay = ramp_image(avg);
    for (auto i : idx) draw_scanpath(overlay, paths[i], config.scale.value());
    w.bytes("scanpaths/overlay_" + set.name + ".png", encode_png_rgb(overlay));

    for (double level : config.mag_buckets) {
      std::vector<AttentionHeatmap> mmaps;
      for (auto i : idx) mmaps.push_back(per_mag[level][i]);
      w.heatmap("heatmaps/" + set.name + "_" + mag_label(level), average_heatmaps(mmaps));
    }
  }

  for (std::size_t i = 0; i < sessions.size(); ++i) {
    w.text("scanpaths/" + sessions[i].observer_id + ".csv", scanpath_csv(paths[i]));
    if (in.annotation)
      w.text("scanpaths/" + sessions[i].observer_id + ".grades.txt",
             format_grade_string(grade_string(paths[i], *in.annotation)) + "\n");
  }

  // Dwell per magnification bucket: per observer, then group means.
  {
    std::string csv = "observer_id,group,mag,dwell_ms\n";
    std::vector<MagnificationStats> stats;
    for (const auto& s : sessions) stats.push_back(magnification_stats(s, config.mag_buckets));
    for (std::size_t i = 0; i < sessions.size(); ++i)
      for (const auto& [mag, ms] : stats[i].dwell_ms)
        csv += sessions[i].observer_id + ',' + std::string(to_string(sessions[i].group)) + ',' +
               format_number(mag) + ',' + std::to_string(ms) + '\n';
    for (const auto& set : sets) {
      const auto idx = members(set);
      if (idx.empty()) continue;
      for (double mag : config.mag_buckets) {
        double total = 0.0;
        for (auto i : idx) total += static_cast<double>(stats[i].dwell_ms.at(mag));
        csv += "mean," + set.name + ',' + format_number(mag) + ',' +
               format_number(total / static_cast<double>(idx.size())) + '\n';
      }
    }
    w.text("magnification_dwell.csv", csv);
  }

  if (in.annotation) {
    const auto tumor = tumor_probability_map(
        rasterize_annotation(*in.annotation, in.manifest, config.scale), config.sigma);
    AttentionHeatmap tumor_hm;
    tumor_hm.grid = tumor.grid;
    tumor_hm.sigma = tumor.sigma;
    tumor_hm.degenerate = tumor.empty;
    w.heatmap("tumor_probability", tumor_hm);

    EvaluationConfig ecfg;
    ecfg.scale = config.scale;
    ecfg.sigma = config.sigma;
    ecfg.scoring = config.scoring;
    ecfg.direction = config.direction;
    out.report = evaluate_case(in.manifest.slide_id, sessions, *in.annotation, in.manifest, ecfg);
    const std::vector<CaseReport> reports{*out.report};
    w.text("report.csv", case_report_csv(reports));
    w.text("observers.csv", observer_report_csv(reports));
  }

  nlohmann::ordered_json meta;
  meta["command"] = "report";
  meta["case_dir"] = case_dir.string();
  meta["slide_id"] = in.manifest.slide_id;
  meta["config"] = nlohmann::ordered_json::parse(run_config_json(config));
  nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
  inputs.push_back("manifest.json");
  for (const auto& f : in.session_files) inputs.push_back(fs::relative(f, case_dir).generic_string());
  if (in.annotation) inputs.push_back("annotation.geojson");
  meta["inputs"] = inputs;
  std::sort(w.files.begin(), w.files.end());
  nlohmann::ordered_json outputs = nlohmann::ordered_json::array();
  for (const auto& f : w.files) outputs.push_back(f.generic_string());
  meta["outputs"] = outputs;
  w.text("run.json", meta.dump(2) + "\n");

  std::sort(w.files.begin(), w.files.end());
  out.files = std::move(w.files);
  return out;
}

}  // namespace pathattn
