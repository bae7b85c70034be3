/* Copyright 2026 The FilTag Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Python bindings for the filtag core.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "filtag/cli.h"
#include "filtag/edge_world.h"
#include "filtag/errors.h"
#include "filtag/evaluate.h"
#include "filtag/explain.h"
#include "filtag/infer.h"
#include "filtag/ingest.h"
#include "filtag/stats.h"
#include "filtag/tag_store.h"
#include "filtag/tagging.h"

namespace py = pybind11;

namespace filtag {
namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor3 ToTensor(const FloatArray& a) {
  if (a.ndim() != 3) throw Error(ErrorCode::kShape, "expected a (C, H, W) array");
  Shape3 s{static_cast<uint32_t>(a.shape(0)), static_cast<uint32_t>(a.shape(1)),
           static_cast<uint32_t>(a.shape(2))};
  return Tensor3(s, std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray ToArray(const Tensor3& t) {
  FloatArray out({t.channels(), t.height(), t.width()});
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

Padding ParsePadding(const std::string& p) {
  if (p == "valid") return Padding::kValid;
  if (p == "same-zero" || p == "same") return Padding::kSameZero;
  throw Error(ErrorCode::kDomain, "padding must be 'valid' or 'same-zero'");
}

SelectionMethod Method(std::optional<int64_t> k, std::optional<double> q) {
  if (k.has_value() == q.has_value()) {
    throw Error(ErrorCode::kUsage, "give exactly one of k or q");
  }
  return k ? SelectionMethod::KBest(*k) : SelectionMethod::QQuantile(*q);
}

ClassActivationMatrix ToMatrix(const DoubleArray& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::kShape, "expected a (classes, filters) array");
  ClassActivationMatrix m;
  m.filter_count = static_cast<uint32_t>(a.shape(1));
  for (py::ssize_t r = 0; r < a.shape(0); ++r) {
    m.class_ids.push_back(static_cast<uint32_t>(r));
    m.image_counts.push_back(1);
  }
  m.values.assign(a.data(), a.data() + a.size());
  return m;
}

py::object Json(const std::string& text) {
  return py::module_::import("json").attr("loads")(text);
}

}  // namespace
}  // namespace filtag

PYBIND11_MODULE(_filtag, m) {
  using namespace filtag;
  m.doc() = "Filter tagging and explanation core";

  static py::exception<Error> error(m, "FiltagError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = py::reinterpret_borrow<py::object>(error.ptr());
      py::object exc = type(std::string(ErrorCodeName(e.code())) + ": " + e.what());
      exc.attr("code") = ErrorCodeName(e.code());
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def("conv2d",
        [](const FloatArray& input, const py::array_t<float, py::array::c_style |
                                                              py::array::forcecast>& filters,
           std::vector<float> bias, uint32_t stride, const std::string& padding) {
          if (filters.ndim() != 4) {
            throw Error(ErrorCode::kShape, "filters must be (F, C, kh, kw)");
          }
          std::vector<Tensor3> fs;
          const Shape3 fshape{static_cast<uint32_t>(filters.shape(1)),
                              static_cast<uint32_t>(filters.shape(2)),
                              static_cast<uint32_t>(filters.shape(3))};
          for (py::ssize_t f = 0; f < filters.shape(0); ++f) {
            const float* begin = filters.data() + f * fshape.size();
            fs.emplace_back(fshape, std::vector<float>(begin, begin + fshape.size()));
          }
          if (bias.empty()) bias.assign(fs.size(), 0.0f);
          return ToArray(Conv2d(ToTensor(input), fs, bias, stride, ParsePadding(padding)));
        },
        py::arg("input"), py::arg("filters"), py::arg("bias") = std::vector<float>{},
        py::arg("stride") = 1, py::arg("padding") = "valid");
  m.def("relu", [](const FloatArray& t) { return ToArray(Relu(ToTensor(t))); });
  m.def("maxpool2d",
        [](const FloatArray& t, uint32_t size, uint32_t stride) {
          return ToArray(MaxPool2d(ToTensor(t), size, stride));
        },
        py::arg("t"), py::arg("size") = 2, py::arg("stride") = 2);
  m.def("softmax", [](std::vector<float> logits) { return Softmax(logits); });

  m.def("scale_layer", [](const FloatArray& t) { return ToArray(ScaleLayer(ToTensor(t)).values); },
        "Min-max scale one layer's activations into [0, 1].");
  m.def("feature_map_scores", [](const FloatArray& t) { return LayerFilterScores(ToTensor(t)); },
        "Mean scaled activation of every feature map of one layer.");
  m.def("quantile_count", &QuantileCount);
  m.def("select_k_best", [](const DoubleArray& z, int64_t k) { return SelectKBest(ToMatrix(z), k); });
  m.def("select_q_quantile",
        [](const DoubleArray& z, double q) { return SelectQQuantile(ToMatrix(z), q); });
  m.def("spearman", [](std::vector<double> x, std::vector<double> y) {
    return SpearmanCorrelation(x, y);
  });

  m.def("split_dataset",
        [](const std::vector<std::pair<uint32_t, uint32_t>>& labeled, double fraction,
           uint64_t seed) {
          std::vector<LabeledImage> images;
          for (auto [id, label] : labeled) images.push_back({id, label});
          DatasetSplit s = SplitDataset(images, fraction, seed);
          py::dict d;
          d["tagging"] = s.tagging;
          d["test"] = s.test;
          d["warnings"] = s.warnings;
          return d;
        },
        py::arg("images"), py::arg("fraction") = 0.8, py::arg("seed") = 0);

  py::class_<ModelSpec>(m, "Model")
      .def_readonly("name", &ModelSpec::name)
      .def_readonly("class_names", &ModelSpec::class_names)
      .def_property_readonly("input_shape",
                             [](const ModelSpec& s) {
                               return py::make_tuple(s.input_shape.channels,
                                                     s.input_shape.height, s.input_shape.width);
                             })
      .def("forward",
           [](const ModelSpec& s, const FloatArray& image) {
             ForwardTrace t = Forward(s, ToTensor(image));
             py::list convs;
             for (const Tensor3& c : t.conv_outputs) convs.append(ToArray(c));
             py::dict d;
             d["conv_outputs"] = convs;
             d["probabilities"] = t.probabilities;
             d["predicted_class"] = t.predicted_class;
             return d;
           })
      .def("save", [](const ModelSpec& s, const std::filesystem::path& p) { SaveModel(s, p); });
  m.def("load_model", [](const std::filesystem::path& p) { return LoadModel(p); });
  m.def("edge_world_model", []() { return MakeEdgeWorldModel(); });

  py::class_<DumpReader>(m, "Dump")
      .def_property_readonly("dump_id", &DumpReader::dump_id)
      .def_property_readonly("classes", [](const DumpReader& r) { return r.schema().classes; })
      .def_property_readonly("model_name",
                             [](const DumpReader& r) { return r.schema().model_name; })
      .def_property_readonly("layers",
                             [](const DumpReader& r) {
                               py::list out;
                               for (const LayerSchema& l : r.schema().layers) {
                                 out.append(py::make_tuple(l.layer_id, l.filter_count,
                                                           l.height, l.width));
                               }
                               return out;
                             })
      .def_property_readonly("images",
                             [](const DumpReader& r) {
                               py::list out;
                               for (const ImageEntry& e : r.images()) {
                                 py::dict d;
                                 d["image_id"] = e.image_id;
                                 d["class_label"] = e.class_label;
                                 d["predicted_label"] = e.predicted_label;
                                 out.append(d);
                               }
                               return out;
                             })
      .def("read_image", [](const DumpReader& r, uint32_t id) {
        ImageRecords rec = r.ReadImage(id);
        py::dict d;
        for (const ActivationRecord& a : rec.layers) d[py::int_(a.layer_id)] = ToArray(a.feature_maps);
        return d;
      });
  m.def("open_dump", [](const std::filesystem::path& p) { return DumpReader::Open(p); });

  py::class_<TagStore>(m, "TagStore")
      .def_readonly("classes", &TagStore::classes)
      .def_property_readonly("method", [](const TagStore& s) { return s.method.ToString(); })
      .def_property_readonly("dump_id", [](const TagStore& s) { return s.provenance.dump_id; })
      .def_property_readonly("seed", [](const TagStore& s) { return s.provenance.seed; })
      .def("tags",
           [](const TagStore& s, uint32_t layer, uint32_t filter) {
             const FilterTags* f = s.Find({layer, filter});
             if (f == nullptr) throw Error(ErrorCode::kIndex, "no such filter");
             std::vector<std::pair<std::string, float>> out;
             for (const Tag& t : f->tags) out.emplace_back(s.classes.at(t.class_id), t.score);
             return out;
           })
      .def("tag_count", &TagStore::TagCount)
      .def("to_json", &TagStore::ToJson)
      .def("save", [](const TagStore& s, const std::filesystem::path& p) { s.Save(p); });
  m.def("load_tag_store", [](const std::filesystem::path& p) { return TagStore::Load(p); });
  m.def("build_tag_store",
        [](const std::filesystem::path& dump, std::optional<int64_t> k, std::optional<double> q,
           uint64_t seed, double fraction, int threads) {
          DumpReader reader = DumpReader::Open(dump);
          const DatasetSplit split = SplitDataset(
              LabeledImages(reader), fraction, seed,
              static_cast<uint32_t>(reader.schema().classes.size()));
          return BuildTagStore(reader, split, Method(k, q), threads);
        },
        py::arg("dump"), py::arg("k") = py::none(), py::arg("q") = py::none(),
        py::arg("seed") = 0, py::arg("fraction") = 0.8, py::arg("threads") = 1);

  m.def("explain",
        [](const std::filesystem::path& dump, const TagStore& store, uint32_t image_id,
           std::optional<int64_t> k, std::optional<double> q) {
          DumpReader reader = DumpReader::Open(dump);
          CheckStoreMatchesDump(reader, store);
          const SelectionMethod method = (k || q) ? Method(k, q) : store.method;
          const ImageRecords records = reader.ReadImage(image_id);
          const ImageEntry* entry = reader.FindImage(image_id);
          Explanation e = ExplainImage(
              image_id, entry->class_label, entry->predicted_label,
              SelectActivatedFilters(records, reader.schema().layers, method), store);
          return Json(ExplanationToJson(e, store.classes));
        },
        py::arg("dump"), py::arg("store"), py::arg("image_id"), py::arg("k") = py::none(),
        py::arg("q") = py::none());

  m.def("evaluate",
        [](const std::filesystem::path& dump, const TagStore& store, std::vector<uint32_t> n,
           std::optional<int64_t> k, std::optional<double> q, int threads) {
          DumpReader reader = DumpReader::Open(dump);
          const SelectionMethod method = (k || q) ? Method(k, q) : store.method;
          const auto ids = ResolveTestImages(reader, store, std::nullopt, std::nullopt);
          HitsReport r = Evaluate(reader, store, ids, method, n, threads);
          return Json(HitsReportToJson(r, store.classes));
        },
        py::arg("dump"), py::arg("store"), py::arg("n") = std::vector<uint32_t>{1},
        py::arg("k") = py::none(), py::arg("q") = py::none(), py::arg("threads") = 1);

  m.def("sweep",
        [](const std::filesystem::path& dump, std::vector<int64_t> ks, std::vector<double> qs,
           std::vector<uint32_t> n, uint64_t seed, double fraction, int threads) {
          DumpReader reader = DumpReader::Open(dump);
          std::vector<SelectionMethod> grid;
          for (int64_t k : ks) grid.push_back(SelectionMethod::KBest(k));
          for (double q : qs) grid.push_back(SelectionMethod::QQuantile(q));
          const DatasetSplit split = SplitDataset(LabeledImages(reader), fraction, seed);
          SweepTable t = Sweep(reader, split, grid, n, threads);
          return Json(SweepToJson(t, reader.schema().classes));
        },
        py::arg("dump"), py::arg("k") = std::vector<int64_t>{},
        py::arg("q") = std::vector<double>{}, py::arg("n") = std::vector<uint32_t>{1},
        py::arg("seed") = 0, py::arg("fraction") = 0.8, py::arg("threads") = 1);

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          int code;
          {
            py::gil_scoped_release release;
            code = RunCli(args, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        "Run the command-line interface in-process; returns (exit_code, stdout, stderr).");
}
