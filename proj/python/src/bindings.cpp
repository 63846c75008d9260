#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "pflow/errors.hpp"
#include "pflow/estimator.hpp"
#include "pflow/eval.hpp"
#include "pflow/flow.hpp"
#include "pflow/geometry.hpp"
#include "pflow/pattern.hpp"
#include "pflow/preprocess.hpp"
#include "pflow/simulator.hpp"

namespace py = pybind11;
using namespace pflow;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
Image<T> to_image(const Array<T>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  Image<T> img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(img.data(), a.data(), img.size() * sizeof(T));
  return img;
}

template <typename T>
Array<T> to_array(const Image<T>& img) {
  Array<T> a({img.height(), img.width()});
  std::memcpy(a.mutable_data(), img.data(), img.size() * sizeof(T));
  return a;
}

Mask to_mask(const Array<bool>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  Mask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  const bool* src = a.data();
  for (std::size_t i = 0; i < m.size(); ++i) m.values()[i] = src[i] ? 1 : 0;
  return m;
}

Array<bool> mask_array(const Mask& m) {
  Array<bool> a({m.height(), m.width()});
  bool* dst = a.mutable_data();
  for (std::size_t i = 0; i < m.size(); ++i) dst[i] = m.values()[i] != 0;
  return a;
}

DisparityMap make_map(const Array<float>& d, const Array<bool>& valid, std::optional<Array<float>> confidence) {
  DisparityMap m;
  m.d = to_image(d);
  m.valid = to_mask(valid);
  if (confidence) {
    m.confidence = to_image(*confidence);
  } else {
    m.confidence = ImageF(m.d.width(), m.d.height());
    for (std::size_t i = 0; i < m.d.size(); ++i) m.confidence.values()[i] = m.valid.values()[i] ? 1.0f : 0.0f;
  }
  if (!m.valid.same_shape(m.d) || !m.confidence.same_shape(m.d)) {
    throw std::invalid_argument("d, valid and confidence must share a shape");
  }
  return m;
}

EvalOptions eval_options(const std::vector<double>& thresholds, bool pooled) {
  EvalOptions o;
  o.thresholds = thresholds;
  o.pooled = pooled;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Structured-light disparity estimation driven by pattern flow.";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<RigModel>(m, "RigModel")
      .def(py::init([](double focal_px, double baseline_m, int width, int height, double d_min, double d_max,
                       int downsample_factor) {
             RigModel r{focal_px, baseline_m, width, height, d_min, d_max, downsample_factor};
             r.validate();
             return r;
           }),
           py::arg("focal_px"), py::arg("baseline_m"), py::arg("width"), py::arg("height"), py::arg("d_min"),
           py::arg("d_max"), py::arg("downsample_factor") = 8)
      .def_readwrite("focal_px", &RigModel::focal_px)
      .def_readwrite("baseline_m", &RigModel::baseline_m)
      .def_readwrite("width", &RigModel::width)
      .def_readwrite("height", &RigModel::height)
      .def_readwrite("d_min", &RigModel::d_min)
      .def_readwrite("d_max", &RigModel::d_max)
      .def_readwrite("downsample_factor", &RigModel::downsample_factor)
      .def_property_readonly("fb", &RigModel::fb)
      .def("validate", &RigModel::validate);

  m.def("disparity_to_depth", &disparity_to_depth, py::arg("d"), py::arg("rig"));
  m.def("depth_to_disparity", &depth_to_disparity, py::arg("z"), py::arg("rig"));
  m.def("camera_to_pattern_x", &camera_to_pattern_x, py::arg("x"), py::arg("d"));

  py::class_<Pattern>(m, "Pattern")
      .def_property_readonly("tile", [](const Pattern& p) { return to_array(p.tile); })
      .def_readonly("period_rows", &Pattern::period_rows)
      .def_readonly("patch_width", &Pattern::patch_width)
      .def_readonly("seed", &Pattern::seed)
      .def_property_readonly("width", &Pattern::width)
      .def("sample", [](const Pattern& p, double x, double y) { return sample_pattern(p, x, y); })
      .def("save", [](const Pattern& p, const std::filesystem::path& path) { return save_pattern(p, path); })
      .def_static("load", &load_pattern, py::arg("path"));

  m.def(
      "generate_pattern",
      [](std::uint64_t seed, int width, int period_rows, double dot_density, double dot_radius_px, int patch_width) {
        PatternSpec s;
        s.seed = seed;
        s.width = width;
        s.period_rows = period_rows;
        s.dot_density = dot_density;
        s.dot_radius_px = dot_radius_px;
        s.patch_width = patch_width;
        return generate_pattern(s);
      },
      py::arg("seed") = 1, py::arg("width") = 640, py::arg("period_rows") = 64, py::arg("dot_density") = 0.15,
      py::arg("dot_radius_px") = 1.0, py::arg("patch_width") = 11);
  m.def(
      "rows_unique", [](const Pattern& p) { return verify_row_uniqueness(p).pass; }, py::arg("pattern"));

  py::class_<LcnParams>(m, "LcnParams")
      .def(py::init<>())
      .def_readwrite("window", &LcnParams::window)
      .def_readwrite("eps", &LcnParams::eps);
  py::class_<FlowParams>(m, "FlowParams")
      .def(py::init<>())
      .def_readwrite("window", &FlowParams::window)
      .def_readwrite("iters", &FlowParams::iters)
      .def_readwrite("grad_floor", &FlowParams::grad_floor)
      .def_readwrite("u_max", &FlowParams::u_max)
      .def_readwrite("residual_tol", &FlowParams::residual_tol)
      .def_readwrite("residual_floor", &FlowParams::residual_floor)
      .def_readwrite("factor", &FlowParams::factor);
  py::class_<RefineParams>(m, "RefineParams")
      .def(py::init<>())
      .def_readwrite("patch", &RefineParams::patch)
      .def_readwrite("search_radius_px", &RefineParams::search_radius_px)
      .def_readwrite("init_step_px", &RefineParams::init_step_px)
      .def_readwrite("zncc_floor", &RefineParams::zncc_floor)
      .def_readwrite("ratio_floor", &RefineParams::ratio_floor)
      .def_readwrite("fuse_weight", &RefineParams::fuse_weight)
      .def_readwrite("agree_px", &RefineParams::agree_px)
      .def_readwrite("fill_holes", &RefineParams::fill_holes);
  py::class_<EngineParams>(m, "EngineParams")
      .def(py::init<>())
      .def_readwrite("lcn", &EngineParams::lcn)
      .def_readwrite("flow", &EngineParams::flow)
      .def_readwrite("refine", &EngineParams::refine)
      .def_readwrite("confidence_decay", &EngineParams::confidence_decay);

  m.def(
      "lcn", [](const Array<float>& image, int window, double eps) { return to_array(lcn(to_image(image), {window, eps})); },
      py::arg("image"), py::arg("window") = 9, py::arg("eps") = 1e-3);
  m.def(
      "downsample", [](const Array<float>& image, int factor) { return to_array(downsample(to_image(image), factor)); },
      py::arg("image"), py::arg("factor"));

  py::class_<FlowMap>(m, "FlowMap")
      .def_property_readonly("u", [](const FlowMap& f) { return to_array(f.u); })
      .def_property_readonly("valid", [](const FlowMap& f) { return mask_array(f.valid); })
      .def_readonly("factor", &FlowMap::factor);
  m.def(
      "compute_pattern_flow",
      [](const Array<float>& current, const Array<float>& previous, const FlowParams& params) {
        return compute_pattern_flow(to_image(current), to_image(previous), params);
      },
      py::arg("current"), py::arg("previous"), py::arg("params") = FlowParams{});

  py::class_<DisparityMap>(m, "DisparityMap")
      .def(py::init(&make_map), py::arg("d"), py::arg("valid"), py::arg("confidence") = py::none())
      .def_property_readonly("d", [](const DisparityMap& d) { return to_array(d.d); })
      .def_property_readonly("valid", [](const DisparityMap& d) { return mask_array(d.valid); })
      .def_property_readonly("confidence", [](const DisparityMap& d) { return to_array(d.confidence); })
      .def_property_readonly("valid_count", &DisparityMap::valid_count);

  py::class_<SceneSpec>(m, "Scene")
      .def_readwrite("n_frames", &SceneSpec::n_frames)
      .def_readwrite("background_depth", &SceneSpec::background_depth)
      .def_property_readonly("n_primitives", [](const SceneSpec& s) { return s.primitives.size(); })
      .def("depth_at", [](const SceneSpec& s, const RigModel& rig, double x, double y, int t) {
        return depth_at(s, rig, x, y, t);
      });
  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init([](double sigma, double ambient, int bits, std::uint64_t seed) {
             NoiseModel n{sigma, ambient, bits, seed};
             n.validate();
             return n;
           }),
           py::arg("sigma") = 0.01, py::arg("ambient") = 0.05, py::arg("bits") = 8, py::arg("seed") = 0)
      .def_readwrite("sigma", &NoiseModel::gaussian_sigma)
      .def_readwrite("ambient", &NoiseModel::ambient_level)
      .def_readwrite("bits", &NoiseModel::quantize_bits)
      .def_readwrite("seed", &NoiseModel::seed)
      .def_static("none", &NoiseModel::none);

  m.def(
      "load_scene",
      [](const std::filesystem::path& path) {
        const auto kv = io::KeyValueFile::read(path);
        return py::make_tuple(RigModel::read_from(kv), SceneSpec::from_kv(kv), NoiseModel::from_kv(kv));
      },
      py::arg("path"), "Returns (rig, scene, noise) from a scene file.");
  m.def(
      "render_frame",
      [](const SceneSpec& scene, int t, const RigModel& rig, const Pattern& pattern, const NoiseModel& noise) {
        auto r = render_frame(scene, t, rig, pattern, noise);
        return py::make_tuple(to_array(r.frame.intensity), r.gt);
      },
      py::arg("scene"), py::arg("t"), py::arg("rig"), py::arg("pattern"), py::arg("noise"),
      "Returns (intensity, ground_truth).");
  m.def(
      "gen_sequence",
      [](const SceneSpec& scene, const RigModel& rig, const Pattern& pattern, const NoiseModel& noise,
         const std::filesystem::path& out_dir) { return gen_sequence(scene, rig, pattern, noise, out_dir).n_frames(); },
      py::arg("scene"), py::arg("rig"), py::arg("pattern"), py::arg("noise"), py::arg("out_dir"));

  m.def(
      "warp_history",
      [](const DisparityMap& prev, const FlowMap& flow, const RigModel& rig, double decay) {
        return warp_history(prev, flow, rig, decay);
      },
      py::arg("prev"), py::arg("flow"), py::arg("rig"), py::arg("decay") = 0.95);
  m.def(
      "refine",
      [](const Array<float>& frame_lcn, const Pattern& pattern, const DisparityMap& prior, const RigModel& rig,
         const RefineParams& params) { return refine(to_image(frame_lcn), pattern, prior, rig, params); },
      py::arg("frame_lcn"), py::arg("pattern"), py::arg("prior"), py::arg("rig"), py::arg("params") = RefineParams{});
  m.def(
      "initialize",
      [](const Array<float>& frame_lcn, const Pattern& pattern, const RigModel& rig, const RefineParams& params) {
        return initialize(to_image(frame_lcn), pattern, rig, params);
      },
      py::arg("frame_lcn"), py::arg("pattern"), py::arg("rig"), py::arg("params") = RefineParams{});
  m.def(
      "run_sequence",
      [](const std::vector<Array<float>>& frames, const RigModel& rig, const Pattern& pattern,
         const std::string& ablation, const EngineParams& params) {
        std::vector<Frame> fs;
        for (std::size_t t = 0; t < frames.size(); ++t) fs.push_back({static_cast<int>(t), to_image(frames[t])});
        py::gil_scoped_release release;
        return run_sequence(fs, rig, pattern, params, parse_ablation(ablation)).maps;
      },
      py::arg("frames"), py::arg("rig"), py::arg("pattern"), py::arg("ablation") = "full",
      py::arg("params") = EngineParams{});

  m.def(
      "bad_pixel_ratio",
      [](const DisparityMap& pred, const DisparityMap& gt, double t) { return bad_pixel_ratio(pred, gt, gt.valid, t); },
      py::arg("pred"), py::arg("gt"), py::arg("t"));
  m.def(
      "avg_l1", [](const DisparityMap& pred, const DisparityMap& gt) { return avg_l1(pred, gt, gt.valid); },
      py::arg("pred"), py::arg("gt"));
  m.def(
      "evaluate_sequence",
      [](const std::vector<DisparityMap>& preds, const std::vector<DisparityMap>& gts,
         const std::vector<double>& thresholds, bool pooled) {
        const auto row = evaluate_sequence(preds, gts, eval_options(thresholds, pooled));
        py::dict out;
        for (std::size_t k = 0; k < row.thresholds.size(); ++k) out[py::str("o" + io::format_double(row.thresholds[k]))] = row.bad[k];
        out["avg"] = row.avg;
        out["n_pixels"] = row.n_pixels;
        out["n_frames"] = row.n_frames;
        return out;
      },
      py::arg("preds"), py::arg("gts"), py::arg("thresholds") = std::vector<double>{1.0, 2.0, 5.0},
      py::arg("pooled") = false);
}
