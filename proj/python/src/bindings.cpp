#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

#include "anchorframe/error.hpp"
#include "anchorframe/geometry.hpp"
#include "anchorframe/scoring.hpp"
#include "anchorframe/synth.hpp"
#include "cli.hpp"

namespace py = pybind11;
using namespace anchorframe;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const F64Array& a) {
  Tensor t;
  t.shape.assign(a.shape(), a.shape() + a.ndim());
  t.data.assign(a.data(), a.data() + a.size());
  return t;
}

py::array_t<std::uint8_t> frame_to_array(const Frame& f) {
  py::array_t<std::uint8_t> a({f.height(), f.width(), f.channels()});
  std::memcpy(a.mutable_data(), f.pixels().data(), f.pixels().size());
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Keyframe selection and mask propagation core";

  static py::exception<Error> error(m, "AnchorframeError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(to_string(e.code())) + ": " + e.what();
      PyErr_SetString(error.ptr(), msg.c_str());
    }
  });

  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<double, double, double, double>(), py::arg("x1"), py::arg("y1"),
           py::arg("x2"), py::arg("y2"))
      .def_readwrite("x1", &BoundingBox::x1)
      .def_readwrite("y1", &BoundingBox::y1)
      .def_readwrite("x2", &BoundingBox::x2)
      .def_readwrite("y2", &BoundingBox::y2)
      .def_property_readonly("width", &BoundingBox::width)
      .def_property_readonly("height", &BoundingBox::height)
      .def_property_readonly("center",
                             [](const BoundingBox& b) {
                               return py::make_tuple(b.center_x(), b.center_y());
                             })
      .def("valid", &BoundingBox::valid)
      .def_static("from_center", &BoundingBox::from_center, py::arg("cx"), py::arg("cy"),
                  py::arg("w"), py::arg("h"))
      .def(py::self == py::self)
      .def("__repr__", [](const BoundingBox& b) {
        std::ostringstream s;
        s << "BoundingBox(" << b.x1 << ", " << b.y1 << ", " << b.x2 << ", " << b.y2 << ")";
        return s.str();
      });

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def("completeness_score", &completeness_score, py::arg("box"), py::arg("width"),
        py::arg("height"), py::arg("tau") = 0.05);
  m.def("base_score", &base_score, py::arg("s_text"), py::arg("s_comp"));
  m.def(
      "utility",
      [](double s_base, double s_cyc, double s_attr, double lb, double lc, double lp) {
        SelectorConfig cfg;
        cfg.lambda_b = lb;
        cfg.lambda_c = lc;
        cfg.lambda_p = lp;
        cfg.validate();
        return utility(s_base, s_cyc, s_attr, cfg);
      },
      py::arg("s_base"), py::arg("s_cyc"), py::arg("s_attr"), py::arg("lambda_b") = 0.5,
      py::arg("lambda_c") = 0.3, py::arg("lambda_p") = 0.2);

  m.def(
      "region_weighted_mse",
      [](const F64Array& pred, const F64Array& target, const F64Array& mask, double gamma) {
        return region_weighted_mse(to_tensor(pred), to_tensor(target), to_tensor(mask), gamma);
      },
      py::arg("pred"), py::arg("target"), py::arg("mask"), py::arg("gamma"));

  m.def(
      "generate_scene",
      [](const std::string& spec_json) {
        const SceneSpec spec = nlohmann::json::parse(spec_json).get<SceneSpec>();
        auto [video, truth] = generate_scene(spec);
        py::list frames;
        for (const Frame& f : video.frames()) frames.append(frame_to_array(f));
        return py::make_tuple(frames, nlohmann::json(truth).dump());
      },
      py::arg("spec_json"),
      "Render a scene from its JSON spec. Returns (frames, truth_json); frames are "
      "HxWxC uint8 arrays.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a command-line invocation in-process. Returns (code, stdout, stderr).");
}
