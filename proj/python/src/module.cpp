#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "activscope/bench.hpp"
#include "activscope/error.hpp"
#include "activscope/feature_io.hpp"
#include "activscope/model_io.hpp"
#include "activscope/scope.hpp"
#include "activscope/synthlab.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace activscope;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const nn::ModelSpec& m, const FloatArray& a) {
  if (a.ndim() != 3 || a.shape(0) != m.input.channels || a.shape(1) != m.input.height ||
      a.shape(2) != m.input.width)
    throw Error("input_mismatch", "expected an array of shape (" + std::to_string(m.input.channels) + ", " +
                                      std::to_string(m.input.height) + ", " + std::to_string(m.input.width) + ")");
  Tensor t(m.input);
  std::copy(a.data(), a.data() + a.size(), t.data.begin());
  return t;
}

py::array_t<float> to_array(const Tensor& t) {
  py::array_t<float> out({t.shape.channels, t.shape.height, t.shape.width});
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

py::array_t<std::uint8_t> to_array(const RgbImage& img) {
  py::array_t<std::uint8_t> out({img.height, img.width, 3});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

py::array_t<std::uint8_t> to_array(const GrayImage& img) {
  py::array_t<std::uint8_t> out({img.height, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

std::vector<Tensor> to_batch(const nn::ModelSpec& m, const FloatArray& a) {
  if (a.ndim() != 4) throw Error("input_mismatch", "expected an array of shape (n, c, h, w)");
  std::vector<Tensor> batch;
  const auto* p = a.data();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    Tensor t(m.input);
    if (a.shape(1) != t.shape.channels || a.shape(2) != t.shape.height || a.shape(3) != t.shape.width)
      throw Error("input_mismatch", "batch entries must have shape " + t.shape.str());
    std::copy(p, p + t.data.size(), t.data.begin());
    p += t.data.size();
    batch.push_back(std::move(t));
  }
  return batch;
}

py::array_t<float> rows_to_array(const FeatureMatrix& X) {
  py::array_t<float> data({X.rows, X.cols});
  std::copy(X.data.begin(), X.data.end(), data.mutable_data());
  return data;
}

py::tuple features_to_numpy(const FeatureMatrix& X) {
  py::array_t<std::uint8_t> labels(X.labels.size());
  std::copy(X.labels.begin(), X.labels.end(), labels.mutable_data());
  return py::make_tuple(rows_to_array(X), labels);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "activscope core bindings";

  static py::exception<Error> error(m, "ActivscopeError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error)(e.what());
      exc.attr("code") = e.code();
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  py::class_<nn::ModelSpec>(m, "Model")
      .def_static("preset", &nn::preset, py::arg("name"), py::arg("seed") = 42)
      .def_static("load", &nn::load_model, py::arg("path"))
      .def("save", [](const nn::ModelSpec& self, const fs::path& p) { nn::save_model(p, self); }, py::arg("path"))
      .def_readonly("name", &nn::ModelSpec::name)
      .def_readonly("seed", &nn::ModelSpec::seed)
      .def_property_readonly("input_shape",
                             [](const nn::ModelSpec& self) {
                               return py::make_tuple(self.input.channels, self.input.height, self.input.width);
                             })
      .def_property_readonly("layers",
                             [](const nn::ModelSpec& self) {
                               std::vector<std::string> kinds;
                               for (const auto& l : self.layers) kinds.emplace_back(nn::to_string(l.kind));
                               return kinds;
                             })
      .def_property_readonly("shapes",
                             [](const nn::ModelSpec& self) {
                               py::list out;
                               for (const auto& s : self.shapes()) out.append(py::make_tuple(s.channels, s.height, s.width));
                               return out;
                             })
      .def_property_readonly("assigned_layer", &nn::assigned_layer)
      .def_property_readonly("parameter_count", &nn::ModelSpec::parameter_count)
      .def(
          "forward",
          [](const nn::ModelSpec& self, const FloatArray& x) {
            const auto acts = nn::forward(self, to_tensor(self, x));
            py::list out;
            for (const auto& t : acts.outputs) out.append(to_array(t));
            return out;
          },
          py::arg("patch"), "Outputs of every layer for one (c, h, w) patch.")
      .def(
          "predict", [](const nn::ModelSpec& self, const FloatArray& x) { return nn::predict_class(self, to_tensor(self, x)); },
          py::arg("patch"))
      .def(
          "features",
          [](const nn::ModelSpec& self, const std::string& tap, const FloatArray& batch) {
            const auto inputs = to_batch(self, batch);
            const std::vector<int> labels(inputs.size(), 0);
            const auto t = nn::parse_tap(tap);
            if (t != nn::Tap::gap) return rows_to_array(nn::extract_features(self, t, inputs, labels));
            const auto pooled = nn::swap_pooling(self, nn::final_pool_index(self));
            return rows_to_array(nn::extract_features(pooled, t, inputs, labels));
          },
          py::arg("tap"), py::arg("batch"), "Tap activations of an (n, c, h, w) batch: flat_conv, fc1 or gap.")
      .def("__eq__", [](const nn::ModelSpec& a, const nn::ModelSpec& b) { return a == b; });

  m.def(
      "receptive_field",
      [](const nn::ModelSpec& model, std::size_t layer) {
        const auto g = scope::layer_geometry(model, layer);
        return py::make_tuple(g.r, g.j, g.start);
      },
      py::arg("model"), py::arg("layer"), "(r, j, start) of a layer's output neurons.");

  m.def(
      "fov_box",
      [](const nn::ModelSpec& model, std::size_t layer, int row, int col) {
        const auto b = scope::fov_map(model, layer).box(row, col);
        return py::make_tuple(b.y, b.x, b.h, b.w);
      },
      py::arg("model"), py::arg("layer"), py::arg("row"), py::arg("col"),
      "(y, x, h, w) input box of one neuron, clipped to the patch.");

  m.def(
      "generate_scene",
      [](std::uint64_t seed, int size) {
        synth::SceneSpec spec;
        spec.seed = seed;
        spec.width = spec.height = size;
        const auto s = synth::generate_scene(spec);
        return py::make_tuple(to_array(s.image), to_array(s.mask));
      },
      py::arg("seed"), py::arg("size") = 512, "(image, tumor mask) of a synthetic scene.");

  m.def(
      "load_features", [](const fs::path& p) { return features_to_numpy(load_features(p)); }, py::arg("path"),
      "(features, labels) from a feature file.");

  m.def(
      "_run_experiment",
      [](int n, const fs::path& root, const std::string& config, std::optional<fs::path> tags) {
        bench::Workspace ws(root, bench::config_from_json(nlohmann::json::parse(config)));
        py::gil_scoped_release release;
        bench::Report r;
        switch (n) {
          case 1: r = bench::run_exp1(ws); break;
          case 2: r = bench::run_exp2(ws); break;
          case 3: r = bench::run_exp3(ws); break;
          case 4: r = bench::run_exp4(ws, tags ? std::optional(scope::load_tags(*tags)) : std::nullopt); break;
          default: throw Error("invalid_argument", "experiment must be 1 to 4");
        }
        return bench::to_json(r).dump();
      },
      py::arg("n"), py::arg("root"), py::arg("config"), py::arg("tags") = std::nullopt);
}
