// Python bindings. Grids cross the boundary as float64 arrays of shape
// (height, width); grade strings as space-separated tokens ("G3 G5 B").

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "pathattn/error.hpp"
#include "pathattn/heatmap.hpp"
#include "pathattn/ingest.hpp"
#include "pathattn/io.hpp"
#include "pathattn/metrics.hpp"
#include "pathattn/render.hpp"
#include "pathattn/report.hpp"
#include "pathattn/scanpath.hpp"
#include "pathattn/synthetic.hpp"

namespace py = pybind11;
using namespace pathattn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Grid2D to_grid(const Array& a, Scale scale = {}) {
  if (a.ndim() != 2) throw Error(ErrorCode::InvalidArgument, "expected a 2-D array");
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  std::vector<double> v(a.data(), a.data() + a.size());
  return Grid2D(w, h, scale, std::move(v));
}

Array to_array(const Grid2D& g) {
  Array out({static_cast<py::ssize_t>(g.height()), static_cast<py::ssize_t>(g.width())});
  std::copy(g.values().begin(), g.values().end(), out.mutable_data());
  return out;
}

GradeString grades(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) return parse_grade_string(obj.cast<std::string>());
  std::string joined;
  for (auto item : obj) {
    if (!joined.empty()) joined += ' ';
    joined += item.cast<std::string>();
  }
  return parse_grade_string(joined);
}

AlignmentScoring scoring(double match, double mismatch, double gap) {
  AlignmentScoring s{match, mismatch, gap};
  s.validate();
  return s;
}

std::optional<MagFilter> mag_filter(std::optional<double> mag) {
  if (!mag) return std::nullopt;
  MagFilter f;
  f.level = *mag;
  return f;
}

py::dict heatmap_dict(const AttentionHeatmap& h) {
  py::dict d;
  d["grid"] = to_array(h.grid);
  d["scale"] = h.grid.scale().to_string();
  d["sigma"] = h.sigma;
  d["observers"] = std::vector<std::string>(h.observers.begin(), h.observers.end());
  d["degenerate"] = h.degenerate;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pathologist attention heatmaps, scanpaths and evaluation metrics";

  // Kept alive for the interpreter's lifetime by the module attribute.
  static py::handle error_type = py::exception<Error>(m, "PathattnError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      exc.attr("line") = e.line() ? py::cast(*e.line()) : py::none();
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<SlideManifest>(m, "SlideManifest")
      .def_readonly("slide_id", &SlideManifest::slide_id)
      .def_readonly("width_px", &SlideManifest::width_px)
      .def_readonly("height_px", &SlideManifest::height_px)
      .def_readonly("base_mag", &SlideManifest::base_mag)
      .def("to_json", [](const SlideManifest& s) { return serialize_manifest(s); });

  py::class_<ViewportEvent>(m, "ViewportEvent")
      .def_readonly("x0", &ViewportEvent::x0)
      .def_readonly("y0", &ViewportEvent::y0)
      .def_readonly("x1", &ViewportEvent::x1)
      .def_readonly("y1", &ViewportEvent::y1)
      .def_readonly("mag", &ViewportEvent::mag)
      .def_readonly("t_ms", &ViewportEvent::t_ms);

  py::class_<NavigationSession>(m, "NavigationSession")
      .def_readonly("slide_id", &NavigationSession::slide_id)
      .def_readonly("observer_id", &NavigationSession::observer_id)
      .def_property_readonly("group",
                             [](const NavigationSession& s) { return std::string(to_string(s.group)); })
      .def_readonly("end_ms", &NavigationSession::end_ms)
      .def_readonly("events", &NavigationSession::events)
      .def("to_jsonl", [](const NavigationSession& s) { return serialize_session(s); });

  py::class_<TumorAnnotation>(m, "TumorAnnotation")
      .def_readonly("slide_id", &TumorAnnotation::slide_id)
      .def_property_readonly("n_regions",
                             [](const TumorAnnotation& a) { return a.regions.size(); })
      .def("to_geojson", [](const TumorAnnotation& a) { return annotation_to_geojson(a); });

  m.def("parse_manifest", &parse_manifest, py::arg("text"));
  m.def("parse_session_log", &parse_session_log, py::arg("text"));
  m.def("validate_and_clip", &validate_and_clip, py::arg("session"), py::arg("manifest"));
  m.def("parse_annotation", &parse_annotation, py::arg("geojson"), py::arg("manifest"));
  m.def("dwell_times", &dwell_times, py::arg("session"));

  m.def(
      "accumulate_viewports",
      [](const std::vector<NavigationSession>& sessions, const SlideManifest& manifest,
         const std::string& scale, std::optional<double> mag) {
        return to_array(accumulate_viewports(sessions, manifest, parse_scale(scale), mag_filter(mag)));
      },
      py::arg("sessions"), py::arg("manifest"), py::arg("scale") = "1/16",
      py::arg("mag") = py::none());

  m.def(
      "attention_heatmap",
      [](const std::vector<NavigationSession>& sessions, const SlideManifest& manifest,
         const std::string& scale, double sigma, std::optional<double> mag) {
        HeatmapOptions o{parse_scale(scale), sigma, mag_filter(mag)};
        return heatmap_dict(build_attention_heatmap(sessions, manifest, o));
      },
      py::arg("sessions"), py::arg("manifest"), py::arg("scale") = "1/16", py::arg("sigma") = 16.0,
      py::arg("mag") = py::none());

  m.def("gaussian_kernel", &gaussian_kernel, py::arg("sigma"));
  m.def(
      "gaussian_smooth",
      [](const Array& a, double sigma) { return to_array(gaussian_smooth(to_grid(a), sigma)); },
      py::arg("grid"), py::arg("sigma"));
  m.def(
      "min_max_normalize", [](const Array& a) { return to_array(min_max_normalize(to_grid(a))); },
      py::arg("grid"));

  m.def(
      "read_heatmap",
      [](const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
        return heatmap_dict(read_heatmap(in));
      },
      py::arg("path"));

  m.def(
      "render_gray_png",
      [](const Array& a) {
        AttentionHeatmap h;
        h.grid = to_grid(a);
        auto bytes = render_heatmap(h, RenderMode::Gray);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("grid"));

  m.def(
      "tumor_mask",
      [](const TumorAnnotation& annotation, const SlideManifest& manifest, const std::string& scale) {
        return to_array(rasterize_annotation(annotation, manifest, parse_scale(scale)));
      },
      py::arg("annotation"), py::arg("manifest"), py::arg("scale") = "1/16");
  m.def(
      "tumor_probability_map",
      [](const Array& mask, double sigma) {
        return to_array(tumor_probability_map(to_grid(mask), sigma).grid);
      },
      py::arg("mask"), py::arg("sigma") = 16.0);

  m.def(
      "histogram_match",
      [](const Array& source, const Array& reference) {
        return to_array(histogram_match(to_grid(source), to_grid(reference)));
      },
      py::arg("source"), py::arg("reference"));
  m.def(
      "cross_correlation",
      [](const Array& a, const Array& b) { return cross_correlation(to_grid(a), to_grid(b)); },
      py::arg("a"), py::arg("b"));

  m.def(
      "welch_t_test",
      [](const std::vector<double>& xs, const std::vector<double>& ys) {
        auto r = welch_t_test(xs, ys);
        py::dict d;
        d["t"] = r.t;
        d["p"] = r.p;
        d["df"] = r.df;
        return d;
      },
      py::arg("xs"), py::arg("ys"));

  m.def(
      "scanpath",
      [](const NavigationSession& session) {
        std::vector<py::tuple> out;
        for (const auto& p : build_scanpath(session))
          out.push_back(py::make_tuple(p.cx, p.cy, p.t_ms, p.mag, p.dwell_ms));
        return out;
      },
      py::arg("session"), "List of (cx, cy, t_ms, mag, dwell_ms).");
  m.def(
      "grade_string",
      [](const NavigationSession& session, const TumorAnnotation& annotation) {
        return format_grade_string(grade_string(build_scanpath(session), annotation));
      },
      py::arg("session"), py::arg("annotation"));

  m.def(
      "align_score",
      [](const py::object& a, const py::object& b, double match, double mismatch, double gap) {
        return align_score(grades(a), grades(b), scoring(match, mismatch, gap));
      },
      py::arg("a"), py::arg("b"), py::arg("match") = 1.0, py::arg("mismatch") = 0.0,
      py::arg("gap") = 0.0);
  m.def(
      "semantic_sequence_score",
      [](const py::object& a, const py::object& b, double match, double mismatch, double gap) {
        return semantic_sequence_score(grades(a), grades(b), scoring(match, mismatch, gap));
      },
      py::arg("a"), py::arg("b"), py::arg("match") = 1.0, py::arg("mismatch") = 0.0,
      py::arg("gap") = 0.0);
  m.def(
      "mean_pairwise_sss",
      [](const std::vector<py::object>& strings, double match, double mismatch, double gap) {
        std::vector<GradeString> gs;
        for (const auto& s : strings) gs.push_back(grades(s));
        return mean_pairwise_sss(gs, scoring(match, mismatch, gap));
      },
      py::arg("strings"), py::arg("match") = 1.0, py::arg("mismatch") = 0.0, py::arg("gap") = 0.0);

  m.def(
      "run_report",
      [](const std::filesystem::path& case_dir, const std::filesystem::path& output_dir,
         const std::string& scale, double sigma, const std::string& match_direction,
         std::uint64_t seed) {
        RunConfig c;
        c.scale = parse_scale(scale);
        c.sigma = sigma;
        c.direction = parse_match_direction(match_direction);
        c.seed = seed;
        c.output_dir = output_dir;
        c.validate();
        ReportOutputs r;
        {
          py::gil_scoped_release release;
          r = run_report(case_dir, c);
        }
        py::dict d;
        d["out_dir"] = r.out_dir;
        d["files"] = r.files;
        if (r.report) {
          std::vector<CaseReport> one{*r.report};
          d["report_csv"] = case_report_csv(one);
          d["observers_csv"] = observer_report_csv(one);
        } else {
          d["report_csv"] = py::none();
          d["observers_csv"] = py::none();
        }
        return d;
      },
      py::arg("case_dir"), py::arg("output_dir"), py::arg("scale") = "1/16",
      py::arg("sigma") = 16.0, py::arg("match_direction") = "attention_to_tumor",
      py::arg("seed") = 0);

  m.def(
      "write_synthetic_case",
      [](const std::filesystem::path& dir, std::uint64_t seed, int observers, double bias,
         int events, const std::string& slide_id) {
        SyntheticCaseOptions o;
        o.seed = seed;
        o.n_observers = observers;
        o.tumor_bias = bias;
        o.events_per_session = events;
        o.slide_id = slide_id;
        write_case_directory(make_synthetic_case(o), dir);
      },
      py::arg("dir"), py::arg("seed") = 7, py::arg("observers") = 8, py::arg("bias") = 0.8,
      py::arg("events") = 120, py::arg("slide_id") = "SYN-0001");
}
