// pathattn: command-line front end for heatmaps, scanpaths, evaluation,
// patch prediction and case reports.

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "pathattn/error.hpp"
#include "pathattn/heatmap.hpp"
#include "pathattn/ingest.hpp"
#include "pathattn/io.hpp"
#include "pathattn/metrics.hpp"
#include "pathattn/prediction.hpp"
#include "pathattn/render.hpp"
#include "pathattn/report.hpp"
#include "pathattn/scanpath.hpp"
#include "pathattn/synthetic.hpp"

namespace fs = std::filesystem;
using namespace pathattn;

namespace {

constexpr const char* kOutputEnv = "PATHATTN_OUTPUT_DIR";

// RunConfig flags shared by every subcommand. A --config file is applied
// first, then any flag given on the command line overrides it.
struct ConfigFlags {
  std::string config_file;
  std::string scale;
  double sigma = 16.0;
  int bins = 5;
  double match = 1.0, mismatch = 0.0, gap = 0.0;
  std::string direction;
  std::uint64_t seed = 0;
  std::string out;

  std::vector<CLI::Option*> opts;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON run configuration; flags override it")
        ->check(CLI::ExistingFile);
    opts = {
        app->add_option("--scale", scale, "grid cells per base pixel, e.g. 1/16"),
        app->add_option("--sigma", sigma, "Gaussian sigma in grid cells (default 16)"),
        app->add_option("--bins", bins, "number of equal-width intensity bins (default 5)"),
        app->add_option("--match", match, "alignment match score (default 1)"),
        app->add_option("--mismatch", mismatch, "alignment mismatch score (default 0)"),
        app->add_option("--gap", gap, "alignment gap score (default 0)"),
        app->add_option("--direction", direction,
                        "histogram matching: attention_to_tumor | tumor_to_attention"),
        app->add_option("--seed", seed, "random seed (default 0)"),
        app->add_option("--out", out,
                        std::string("output directory (default $") + kOutputEnv +
                            " or ./pathattn_out)"),
    };
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (const char* env = std::getenv(kOutputEnv); env && *env) cfg.output_dir = env;
    if (!config_file.empty()) cfg = parse_run_config(read_text_file(config_file), cfg);
    if (opts[0]->count()) cfg.scale = parse_scale(scale);
    if (opts[1]->count()) cfg.sigma = sigma;
    if (opts[2]->count()) cfg.binspec = BinSpec::equal_width(bins);
    if (opts[3]->count()) cfg.scoring.match = match;
    if (opts[4]->count()) cfg.scoring.mismatch = mismatch;
    if (opts[5]->count()) cfg.scoring.gap = gap;
    if (opts[6]->count()) cfg.direction = parse_match_direction(direction);
    if (opts[7]->count()) cfg.seed = seed;
    if (opts[8]->count()) cfg.output_dir = out;
    cfg.validate();
    return cfg;
  }
};

void write_metadata(const fs::path& output, const std::string& command, const RunConfig& cfg,
                    const std::vector<std::string>& inputs,
                    const nlohmann::ordered_json& extra = nlohmann::ordered_json::object()) {
  nlohmann::ordered_json meta;
  meta["command"] = command;
  meta["config"] = nlohmann::ordered_json::parse(run_config_json(cfg));
  meta["inputs"] = inputs;
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  write_text_file(fs::path(output.string() + ".meta.json"), meta.dump(2) + "\n");
}

AttentionHeatmap load_heatmap(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_heatmap(in);
}

void save_heatmap(const fs::path& path, const AttentionHeatmap& hm) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ostringstream bin;
  write_heatmap(bin, hm);
  write_text_file(path, bin.str());
  fs::path png = path;
  png.replace_extension(".png");
  write_binary_file(png, render_heatmap(hm, RenderMode::Gray));
}

std::vector<NavigationSession> load_sessions(const std::vector<std::string>& logs,
                                             const SlideManifest& manifest) {
  std::vector<NavigationSession> out;
  for (const auto& f : logs) {
    try {
      out.push_back(validate_and_clip(parse_session_log(read_text_file(f)), manifest));
    } catch (const Error& e) {
      throw Error(e.code(), f + ": " + e.detail(), e.line());
    }
  }
  return out;
}

std::vector<double> split_numbers(const std::string& text) {
  std::vector<double> v;
  for (const auto& f : split_csv_line(text))
    if (!f.empty()) v.push_back(std::stod(f));
  return v;
}

// Attach features to grid patches from the patch-manifest CSV.
std::vector<PatchRecord> featurize_patches(const SlideManifest& manifest,
                                           const PatchGridOptions& grid_opts,
                                           const fs::path& patch_csv, double min_saturation,
                                           std::vector<RgbImage>* rasters) {
  auto patches = extract_patch_grid(manifest, grid_opts);
  const auto refs = parse_patch_manifest(read_text_file(patch_csv), patch_csv.parent_path());
  std::map<std::pair<int, int>, fs::path> by_index;
  for (const auto& r : refs)
    if (r.slide_id == manifest.slide_id) by_index[{r.px, r.py}] = r.path;
  std::vector<PatchRecord> kept;
  for (auto& p : patches) {
    auto it = by_index.find({p.px, p.py});
    if (it == by_index.end()) continue;
    RgbImage img = pad_patch(read_png_rgb(it->second), p.size_px);
    if (min_saturation > 0.0 && mean_saturation(img) < min_saturation) continue;
    p.features = patch_features(img);
    if (rasters) rasters->push_back(std::move(img));
    kept.push_back(std::move(p));
  }
  if (kept.empty()) throw Error(ErrorCode::EmptyInput, "no patch rasters matched the slide grid");
  return kept;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pathattn: pathologist attention heatmaps, scanpaths and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pathattn 1.0.0");

  // ---- ingest -----------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "validate session logs and summarize magnification dwell");
  std::string ingest_manifest;
  std::vector<std::string> ingest_logs;
  std::string ingest_write;
  ingest->add_option("--manifest", ingest_manifest, "slide manifest JSON")->required()->check(CLI::ExistingFile);
  ingest->add_option("logs", ingest_logs, "session logs (JSONL)")->required()->check(CLI::ExistingFile);
  ingest->add_option("--write-clipped", ingest_write, "directory for canonical, clipped logs");
  ingest->callback([&] {
    const auto manifest = parse_manifest(read_text_file(ingest_manifest));
    std::cout << "observer_id,group,events,dropped,total_ms";
    for (double m : manifest.standard_mags) std::cout << ',' << format_number(m) << 'x';
    std::cout << '\n';
    for (const auto& f : ingest_logs) {
      NavigationSession raw, clipped;
      try {
        raw = parse_session_log(read_text_file(f));
        clipped = validate_and_clip(raw, manifest);
      } catch (const Error& e) {
        throw Error(e.code(), f + ": " + e.detail(), e.line());
      }
      const auto stats = magnification_stats(clipped, manifest);
      std::cout << clipped.observer_id << ',' << to_string(clipped.group) << ','
                << clipped.events.size() << ',' << raw.events.size() - clipped.events.size() << ','
                << stats.total_ms;
      for (const auto& [mag, ms] : stats.dwell_ms) std::cout << ',' << ms;
      std::cout << '\n';
      if (!ingest_write.empty()) {
        fs::create_directories(ingest_write);
        write_text_file(fs::path(ingest_write) / fs::path(f).filename(), serialize_session(clipped));
      }
    }
  });

  // ---- heatmap ----------------------------------------------------------
  auto* heatmap = app.add_subcommand("heatmap", "build a normalized attention heatmap (AHM1 + PNG)");
  ConfigFlags heatmap_cfg;
  heatmap_cfg.attach(heatmap);
  std::string hm_manifest, hm_output;
  std::vector<std::string> hm_logs;
  double hm_mag = 0.0;
  std::string hm_levels = "4,10,20,40";
  heatmap->add_option("--manifest", hm_manifest, "slide manifest JSON")->required()->check(CLI::ExistingFile);
  heatmap->add_option("logs", hm_logs, "session logs (JSONL)")->required()->check(CLI::ExistingFile);
  heatmap->add_option("-o,--output", hm_output, "output .ahm path (PNG written beside it)")->required();
  auto* mag_opt = heatmap->add_option("--mag", hm_mag, "only events snapping to this magnification");
  heatmap->add_option("--mag-levels", hm_levels, "levels used for snapping (default 4,10,20,40)");
  heatmap->add_flag("--average", "average per-observer maps instead of pooling all viewports");
  heatmap->callback([&] {
    const auto cfg = heatmap_cfg.resolve();
    const auto manifest = parse_manifest(read_text_file(hm_manifest));
    const auto sessions = load_sessions(hm_logs, manifest);
    HeatmapOptions opt;
    opt.scale = cfg.scale;
    opt.sigma = cfg.sigma;
    if (mag_opt->count()) opt.mag_filter = MagFilter{hm_mag, split_numbers(hm_levels)};
    AttentionHeatmap hm;
    if (heatmap->count("--average")) {
      std::vector<AttentionHeatmap> maps;
      for (const auto& s : sessions) maps.push_back(build_attention_heatmap(std::span(&s, 1), manifest, opt));
      hm = average_heatmaps(maps);
    } else {
      hm = build_attention_heatmap(sessions, manifest, opt);
    }
    save_heatmap(hm_output, hm);
    nlohmann::ordered_json extra;
    extra["observers"] = std::vector<std::string>(hm.observers.begin(), hm.observers.end());
    extra["degenerate"] = hm.degenerate;
    if (hm.mag_filter) extra["mag_filter"] = *hm.mag_filter;
    std::vector<std::string> inputs{hm_manifest};
    inputs.insert(inputs.end(), hm_logs.begin(), hm_logs.end());
    write_metadata(hm_output, "heatmap", cfg, inputs, extra);
    std::cout << hm_output << ": " << hm.grid.width() << "x" << hm.grid.height()
              << (hm.degenerate ? " (degenerate, all zeros)" : "") << '\n';
  });

  // ---- scanpath ---------------------------------------------------------
  auto* scanpath = app.add_subcommand("scanpath", "export a scanpath CSV and its grade string");
  std::string sp_manifest, sp_log, sp_annotation, sp_output;
  scanpath->add_option("--manifest", sp_manifest, "slide manifest JSON")->required()->check(CLI::ExistingFile);
  scanpath->add_option("session", sp_log, "session log (JSONL)")->required()->check(CLI::ExistingFile);
  scanpath->add_option("--annotation", sp_annotation, "GeoJSON tumor annotation")->check(CLI::ExistingFile);
  scanpath->add_option("-o,--output", sp_output, "output CSV (grades written as <output>.grades.txt)")->required();
  scanpath->callback([&] {
    const auto manifest = parse_manifest(read_text_file(sp_manifest));
    const auto session = load_sessions({sp_log}, manifest).front();
    const auto path = build_scanpath(session);
    if (fs::path(sp_output).has_parent_path()) fs::create_directories(fs::path(sp_output).parent_path());
    write_text_file(sp_output, scanpath_csv(path));
    if (!sp_annotation.empty()) {
      const auto ann = parse_annotation(read_text_file(sp_annotation), manifest);
      const auto grades = format_grade_string(grade_string(path, ann));
      write_text_file(sp_output + ".grades.txt", grades + "\n");
      std::cout << grades << '\n';
    }
  });

  // ---- compare ----------------------------------------------------------
  auto* compare = app.add_subcommand("compare", "CC between heatmaps, SSS between grade strings, Welch t-test");
  compare->require_subcommand(1);
  auto* cmp_cc = compare->add_subcommand("cc", "cross-correlation of two heatmaps");
  std::string cc_a, cc_b, cc_match = "attention_to_tumor";
  cmp_cc->add_option("attention", cc_a, "attention heatmap (.ahm)")->required()->check(CLI::ExistingFile);
  cmp_cc->add_option("reference", cc_b, "reference map, e.g. tumor probability (.ahm)")->required()->check(CLI::ExistingFile);
  cmp_cc->add_option("--match", cc_match, "attention_to_tumor | tumor_to_attention | none");
  cmp_cc->callback([&] {
    const auto a = load_heatmap(cc_a).grid;
    const auto b = load_heatmap(cc_b).grid;
    double cc = 0.0;
    if (cc_match == "none") cc = cross_correlation(a, b);
    else if (parse_match_direction(cc_match) == MatchDirection::AttentionToTumor)
      cc = cross_correlation(histogram_match(a, b), b);
    else cc = cross_correlation(a, histogram_match(b, a));
    std::cout << format_number(cc) << '\n';
  });
  auto* cmp_sss = compare->add_subcommand("sss", "semantic sequence score of grade-string files");
  ConfigFlags sss_cfg;
  sss_cfg.attach(cmp_sss);
  std::vector<std::string> sss_files;
  cmp_sss->add_option("strings", sss_files, "grade-string files (two for a pair, more for the pairwise mean)")
      ->required()->expected(2, -1)->check(CLI::ExistingFile);
  cmp_sss->callback([&] {
    const auto cfg = sss_cfg.resolve();
    std::vector<GradeString> strings;
    for (const auto& f : sss_files) strings.push_back(parse_grade_string(read_text_file(f)));
    if (strings.size() == 2)
      std::cout << format_number(semantic_sequence_score(strings[0], strings[1], cfg.scoring)) << '\n';
    else
      std::cout << format_number(mean_pairwise_sss(strings, cfg.scoring)) << '\n';
  });
  auto* cmp_t = compare->add_subcommand("ttest", "Welch t-test");
  std::string t_xs, t_ys;
  std::vector<std::string> t_reports;
  cmp_t->add_option("--xs", t_xs, "comma-separated first sample");
  cmp_t->add_option("--ys", t_ys, "comma-separated second sample");
  cmp_t->add_option("--observers", t_reports,
                    "observers.csv files from `report`: per case, GU vs GEN per-observer CC")
      ->check(CLI::ExistingFile);
  cmp_t->callback([&] {
    if (!t_reports.empty()) {
      // One test per case, then the mean p across cases.
      std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_case;
      for (const auto& f : t_reports) {
        std::istringstream in(read_text_file(f));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
          const auto fields = split_csv_line(line);
          if (fields.size() != 4 || fields[3].empty()) continue;
          auto& bucket = by_case[fields[0]];
          (fields[2] == "GU" ? bucket.first : bucket.second).push_back(std::stod(fields[3]));
        }
      }
      std::cout << "case_id,t,df,p\n";
      double psum = 0.0;
      int n = 0;
      for (const auto& [case_id, samples] : by_case) {
        const auto r = welch_t_test(samples.first, samples.second);
        std::cout << case_id << ',' << format_number(r.t) << ',' << format_number(r.df) << ','
                  << format_number(r.p) << '\n';
        psum += r.p;
        ++n;
      }
      if (n > 0) std::cout << "mean_p," << format_number(psum / n) << '\n';
      return;
    }
    if (t_xs.empty() || t_ys.empty())
      throw Error(ErrorCode::InvalidArgument, "give --xs and --ys, or --observers");
    const auto r = welch_t_test(split_numbers(t_xs), split_numbers(t_ys));
    std::cout << "t=" << format_number(r.t) << " df=" << format_number(r.df)
              << " p=" << format_number(r.p) << '\n';
  });

  // ---- predict-train ----------------------------------------------------
  auto* ptrain = app.add_subcommand("predict-train", "train the baseline patch classifier");
  ConfigFlags ptrain_cfg;
  ptrain_cfg.attach(ptrain);
  std::string pt_manifest, pt_heatmap, pt_patches, pt_output;
  TrainingOptions topt;
  PatchGridOptions pt_grid;
  double pt_min_sat = 0.0;
  ptrain->add_option("--manifest", pt_manifest, "slide manifest JSON")->required()->check(CLI::ExistingFile);
  ptrain->add_option("--heatmap", pt_heatmap, "ground-truth attention heatmap (.ahm)")->required()->check(CLI::ExistingFile);
  ptrain->add_option("--patches", pt_patches, "patch manifest CSV (slide_id,px,py,path)")->required()->check(CLI::ExistingFile);
  ptrain->add_option("-o,--output", pt_output, "model JSON")->required();
  ptrain->add_option("--lr", topt.learning_rate, "Adam learning rate (default 0.005)");
  ptrain->add_option("--epochs", topt.epochs, "epochs, at most 20 (default 20)")
      ->check(CLI::Range(1, pathattn::kMaxEpochs));
  ptrain->add_option("--batch", topt.batch_size, "mini-batch size, 0 for full batch (default 64)");
  ptrain->add_flag("--augment", topt.augment_flips, "random horizontal/vertical flips");
  ptrain->add_flag("--no-class-weights", "disable inverse-frequency class weighting");
  ptrain->add_option("--size-px", pt_grid.size_px, "patch side in pixels (default 500)");
  ptrain->add_option("--patch-mag", pt_grid.mag, "patch magnification (default 10)");
  ptrain->add_option("--min-saturation", pt_min_sat, "skip patches below this mean saturation (default off)");
  ptrain->callback([&] {
    const auto cfg = ptrain_cfg.resolve();
    const auto manifest = parse_manifest(read_text_file(pt_manifest));
    const auto gt = load_heatmap(pt_heatmap);
    std::vector<RgbImage> rasters;
    auto patches = featurize_patches(manifest, pt_grid, pt_patches, pt_min_sat,
                                     topt.augment_flips ? &rasters : nullptr);
    for (auto& p : patches) p.label = patch_label(gt, p, cfg.binspec);
    topt.seed = cfg.seed;
    topt.class_weighting = ptrain->count("--no-class-weights") == 0;
    const auto result = train_patch_classifier(patches, cfg.binspec, topt, rasters);
    if (fs::path(pt_output).has_parent_path()) fs::create_directories(fs::path(pt_output).parent_path());
    write_text_file(pt_output, save_model_json(result.model));
    nlohmann::ordered_json extra;
    extra["training"] = {{"lr", topt.learning_rate}, {"epochs", topt.epochs}, {"batch", topt.batch_size},
                         {"augment_flips", topt.augment_flips}, {"class_weighting", topt.class_weighting},
                         {"n_patches", patches.size()}, {"epoch_loss", result.epoch_loss},
                         {"degenerate_labels", result.degenerate_labels}};
    write_metadata(pt_output, "predict-train", cfg, {pt_manifest, pt_heatmap, pt_patches}, extra);
    if (result.degenerate_labels)
      std::cerr << "warning: all training labels are identical; the model is constant\n";
    std::size_t correct = 0;
    for (const auto& p : patches) correct += result.model.predict(p.features) == *p.label;
    std::cout << "trained on " << patches.size() << " patches, training accuracy "
              << format_number(static_cast<double>(correct) / static_cast<double>(patches.size())) << '\n';
  });

  // ---- predict-run ------------------------------------------------------
  auto* prun = app.add_subcommand("predict-run", "predict and reassemble an attention heatmap");
  ConfigFlags prun_cfg;
  prun_cfg.attach(prun);
  std::string pr_manifest, pr_model, pr_patches, pr_predictions, pr_output;
  PatchGridOptions pr_grid;
  prun->add_option("--manifest", pr_manifest, "slide manifest JSON")->required()->check(CLI::ExistingFile);
  auto* model_opt = prun->add_option("--model", pr_model, "model JSON from predict-train")->check(CLI::ExistingFile);
  prun->add_option("--patches", pr_patches, "patch manifest CSV (with --model)")->check(CLI::ExistingFile);
  auto* preds_opt = prun->add_option("--predictions", pr_predictions, "external predictions CSV (px,py,bin)")
                        ->check(CLI::ExistingFile);
  model_opt->excludes(preds_opt);
  prun->add_option("-o,--output", pr_output, "output .ahm (PNG and predictions CSV beside it)")->required();
  prun->add_option("--size-px", pr_grid.size_px, "patch side in pixels (default 500)");
  prun->add_option("--patch-mag", pr_grid.mag, "patch magnification (default 10)");
  prun->callback([&] {
    const auto cfg = prun_cfg.resolve();
    const auto manifest = parse_manifest(read_text_file(pr_manifest));
    ReassembleOptions ropt{cfg.scale, cfg.sigma};
    AttentionHeatmap hm;
    PredictionSet exported;
    if (model_opt->count()) {
      if (pr_patches.empty()) throw Error(ErrorCode::InvalidArgument, "--model needs --patches");
      const auto model = load_model_json(read_text_file(pr_model));
      const auto patches = featurize_patches(manifest, pr_grid, pr_patches, 0.0, nullptr);
      hm = predict_and_reassemble(model, patches, manifest, model.binspec, ropt);
      for (const auto& p : patches) exported[{p.px, p.py}] = model.predict(p.features);
    } else if (preds_opt->count()) {
      const auto preds = import_predictions(read_text_file(pr_predictions), cfg.binspec.n_bins());
      const auto patches = extract_patch_grid(manifest, pr_grid);
      hm = predict_and_reassemble(preds, patches, manifest, cfg.binspec, ropt);
      exported = preds;
    } else {
      throw Error(ErrorCode::InvalidArgument, "give --model or --predictions");
    }
    save_heatmap(pr_output, hm);
    write_text_file(pr_output + ".predictions.csv", export_predictions(exported));
    write_metadata(pr_output, "predict-run", cfg,
                   {pr_manifest, model_opt->count() ? pr_model : pr_predictions});
    std::cout << pr_output << ": " << hm.grid.width() << "x" << hm.grid.height() << '\n';
  });

  // ---- report -----------------------------------------------------------
  auto* report = app.add_subcommand("report", "full per-case outputs and the CC/SSS report");
  ConfigFlags report_cfg;
  report_cfg.attach(report);
  std::vector<std::string> report_dirs;
  unsigned report_jobs = 1;
  report->add_option("cases", report_dirs, "case directories")->required();
  report->add_option("-j,--jobs", report_jobs, "cases processed concurrently (default 1)")->check(CLI::PositiveNumber);
  report->callback([&] {
    const auto cfg = report_cfg.resolve();
    std::vector<std::optional<ReportOutputs>> results(report_dirs.size());
    std::vector<std::string> errors(report_dirs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < report_dirs.size(); i = next++) {
        try {
          results[i] = run_report(report_dirs[i], cfg);
        } catch (const std::exception& e) {
          errors[i] = report_dirs[i] + ": " + e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<unsigned>(report_jobs, static_cast<unsigned>(report_dirs.size()));
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    bool failed = false;
    std::vector<CaseReport> reports;
    for (std::size_t i = 0; i < report_dirs.size(); ++i) {
      if (!errors[i].empty()) {
        std::cerr << "error: " << errors[i] << '\n';
        failed = true;
        continue;
      }
      std::cout << results[i]->out_dir.string() << ": " << results[i]->files.size() << " files\n";
      if (results[i]->report) reports.push_back(*results[i]->report);
    }
    if (reports.size() > 1) {
      fs::create_directories(cfg.output_dir);
      write_text_file(cfg.output_dir / "report.csv", case_report_csv(reports));
      write_text_file(cfg.output_dir / "observers.csv", observer_report_csv(reports));
    }
    if (!reports.empty()) std::cout << case_report_csv(reports);
    if (failed) throw CLI::RuntimeError(1);
  });

  // ---- render -----------------------------------------------------------
  auto* render = app.add_subcommand("render", "render a heatmap file to PNG");
  std::string rd_input, rd_output, rd_mode = "gray", rd_base;
  render->add_option("heatmap", rd_input, "heatmap (.ahm)")->required()->check(CLI::ExistingFile);
  render->add_option("-o,--output", rd_output, "output PNG")->required();
  render->add_option("--mode", rd_mode, "gray | overlay")->check(CLI::IsMember({"gray", "overlay"}));
  render->add_option("--base", rd_base, "base image PNG for overlay mode")->check(CLI::ExistingFile);
  render->callback([&] {
    const auto hm = load_heatmap(rd_input);
    std::optional<RgbImage> base;
    if (!rd_base.empty()) base = read_png_rgb(rd_base);
    const auto mode = rd_mode == "gray" ? RenderMode::Gray : RenderMode::Overlay;
    write_binary_file(rd_output, render_heatmap(hm, mode, base));
  });

  // ---- synth ------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "write a synthetic case directory");
  std::string sy_dir;
  SyntheticCaseOptions sy_opt;
  bool sy_patches = false;
  synth->add_option("directory", sy_dir, "output case directory")->required();
  synth->add_option("--seed", sy_opt.seed, "random seed (default 7)");
  synth->add_option("--observers", sy_opt.n_observers, "number of sessions (default 8)");
  synth->add_option("--bias", sy_opt.tumor_bias, "fraction of viewports on tumor (default 0.8)");
  synth->add_option("--events", sy_opt.events_per_session, "viewports per session (default 120)");
  synth->add_option("--slide-id", sy_opt.slide_id, "slide identifier");
  synth->add_flag("--patches", sy_patches, "also write 10x patch PNGs and patches.csv");
  synth->callback([&] {
    const auto c = make_synthetic_case(sy_opt);
    write_case_directory(c, sy_dir);
    if (sy_patches) {
      const auto patches = extract_patch_grid(c.manifest);
      fs::create_directories(fs::path(sy_dir) / "patches");
      std::string csv = "slide_id,px,py,path\n";
      for (const auto& p : patches) {
        const std::string name = "patches/p_" + std::to_string(p.px) + "_" + std::to_string(p.py) + ".png";
        write_binary_file(fs::path(sy_dir) / name,
                          encode_png_rgb(synthetic_patch_raster(c.annotation, p, sy_opt.seed)));
        csv += c.manifest.slide_id + ',' + std::to_string(p.px) + ',' + std::to_string(p.py) + ',' + name + '\n';
      }
      write_text_file(fs::path(sy_dir) / "patches.csv", csv);
    }
    std::cout << sy_dir << ": " << c.sessions.size() << " sessions\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
