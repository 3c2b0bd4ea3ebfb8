// Copyright 2026 The acmgnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings. Matrices cross the boundary as float64 numpy arrays.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "acmgnn/aggregator.hpp"
#include "acmgnn/dataset.hpp"
#include "acmgnn/experiment.hpp"
#include "acmgnn/graph.hpp"
#include "acmgnn/manifold.hpp"

namespace py = pybind11;
using namespace acmgnn;

namespace {

template <class T>
std::vector<T> to_vector(std::span<const T> s) {
  return {s.begin(), s.end()};
}

py::dict dispersion_dict(const Dispersion& d) {
  py::dict out;
  out["mean_pairwise"] = d.mean_pairwise;
  out["max_pairwise"] = d.max_pairwise;
  return out;
}

}  // namespace

PYBIND11_MODULE(_acmgnn, m) {
  m.doc() = "Graph neural networks with contracted aggregation on manifolds";

  // Kept alive for the lifetime of the interpreter.
  static PyObject* error_type = PyErr_NewException("acmgnn.Error", PyExc_RuntimeError, nullptr);
  m.add_object("Error", py::handle(error_type));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type, inst.ptr());
    }
  });

  py::class_<Graph>(m, "Graph")
      .def(py::init([](Index n_nodes, const std::vector<Edge>& edges) { return build_graph(edges, n_nodes); }),
           py::arg("n_nodes"), py::arg("edges"))
      .def_property_readonly("n_nodes", &Graph::n_nodes)
      .def_property_readonly("n_edges", &Graph::n_edges)
      .def_property_readonly("degrees", [](const Graph& g) { return to_vector(g.degrees()); })
      .def("neighbors", [](const Graph& g, Index i) {
        if (i < 0 || i >= g.n_nodes()) throw py::index_error("node out of range");
        return to_vector(g.neighbors(i));
      })
      .def("has_edge", &Graph::has_edge)
      .def("edge_list", &Graph::edge_list)
      .def("is_connected", [](const Graph& g) { return is_connected(g); })
      .def("__repr__", [](const Graph& g) {
        return "Graph(n_nodes=" + std::to_string(g.n_nodes()) + ", n_edges=" + std::to_string(g.n_edges()) + ")";
      });
  m.def("path_graph", &path_graph, py::arg("n"));
  m.def("cycle_graph", &cycle_graph, py::arg("n"));
  m.def("complete_graph", &complete_graph, py::arg("n"));

  py::enum_<AggregatorKind>(m, "AggregatorKind")
      .value("ROW_NORM", AggregatorKind::RowNorm)
      .value("SYM_NORM", AggregatorKind::SymNorm)
      .value("ATTENTION", AggregatorKind::Attention);

  py::class_<AggregatorMatrix>(m, "Aggregator")
      .def_property_readonly("kind", &AggregatorMatrix::kind)
      .def_property_readonly("lam", &AggregatorMatrix::lambda)
      .def_property_readonly("nnz", &AggregatorMatrix::nnz)
      .def("to_dense", &AggregatorMatrix::to_dense)
      .def("apply", [](const AggregatorMatrix& L, const Matrix& H) { return spmm(L, H); }, py::arg("H"));
  m.def("make_aggregator", &make_aggregator, py::arg("graph"), py::arg("kind"), py::arg("lam") = 1.0);

  py::class_<ManifoldSpec>(m, "ManifoldSpec")
      .def(py::init<RowVector, double>(), py::arg("u_diag"), py::arg("b") = 0.0)
      .def_static("sphere", &ManifoldSpec::sphere, py::arg("dim"), py::arg("b") = 0.0)
      .def_property_readonly("dim", &ManifoldSpec::dim)
      .def_property_readonly("u_diag", &ManifoldSpec::u_diag)
      .def_property_readonly("a0", &ManifoldSpec::a0)
      .def_property_readonly("b", &ManifoldSpec::b)
      .def_property_readonly("x0", &ManifoldSpec::x0);
  m.def("project", &project_pu, py::arg("x"), py::arg("manifold"));
  m.def("push_forward", &push_forward, py::arg("w"), py::arg("manifold"));
  m.def("push_back", &push_back, py::arg("v"), py::arg("manifold"));
  m.def("distance", &manifold_distance, py::arg("x"), py::arg("y"), py::arg("manifold"));
  m.def(
      "project_rows",
      [](const Matrix& X, const ManifoldSpec& mf, bool zero_to_center) {
        return project_rows(X, mf, zero_to_center ? ZeroRowPolicy::MapToCenter : ZeroRowPolicy::Throw);
      },
      py::arg("X"), py::arg("manifold"), py::arg("zero_rows_to_center") = false);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("graph", &Dataset::graph)
      .def_readonly("features", &Dataset::features)
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("n_classes", &Dataset::n_classes)
      .def_property_readonly("train", [](const Dataset& d) { return d.split.train; })
      .def_property_readonly("val", [](const Dataset& d) { return d.split.val; })
      .def_property_readonly("test", [](const Dataset& d) { return d.split.test; });
  m.def("load_dataset", &load_dataset, py::arg("directory"));
  m.def("write_dataset", &write_dataset, py::arg("directory"), py::arg("dataset"));
  m.def("apply_missing_features", &apply_missing_features, py::arg("dataset"));
  m.def("modularity", &modularity, py::arg("graph"), py::arg("labels"));
  m.def(
      "synth_sbm",
      [](Index n, Index n_blocks, double p_in, double p_out, Index feat_dim, double sigma, std::uint64_t seed,
         Index train_per_class, Index val_per_class) {
        return synth_sbm({n, n_blocks, p_in, p_out, feat_dim, sigma, seed, train_per_class, val_per_class});
      },
      py::arg("n") = 200, py::arg("n_blocks") = 2, py::arg("p_in") = 0.1, py::arg("p_out") = 0.01,
      py::arg("feat_dim") = 8, py::arg("sigma") = 1.0, py::arg("seed") = 0, py::arg("train_per_class") = 20,
      py::arg("val_per_class") = 30);

  // Experiment entry points take the JSON config text; the Python wrapper accepts dicts.
  m.def("_validate_config", [](const std::string& text) { return to_json(parse_run_config(text)); });
  m.def("_train", [](const std::string& text) {
    const RunConfig cfg = parse_run_config(text);
    validate(cfg);
    py::gil_scoped_release release;
    return summary_json(cfg, train(cfg));
  });
  m.def("_sweep", [](const std::string& text, const std::vector<Index>& layers) {
    const RunConfig cfg = parse_run_config(text);
    validate(cfg);
    SweepResult r;
    {
      py::gil_scoped_release release;
      r = sweep_layers(cfg, layers);
    }
    py::list rows;
    for (const SweepRow& x : r.rows) {
      py::dict d;
      d["depth"] = x.depth;
      d["repeat"] = x.repeat;
      d["seed"] = x.seed;
      d["best_val_acc"] = x.best_val_acc;
      d["test_acc"] = x.test_acc;
      rows.append(d);
    }
    return rows;
  });
  m.def("_diagnose", [](const std::string& text, bool trained) {
    const RunConfig cfg = parse_run_config(text);
    validate(cfg);
    DiagnoseReport r;
    {
      py::gil_scoped_release release;
      r = diagnose(cfg, trained);
    }
    py::dict out;
    out["metric"] = r.metric;
    out["trained"] = r.trained;
    py::list layers;
    for (const Dispersion& d : r.per_layer) layers.append(dispersion_dict(d));
    out["per_layer"] = layers;
    out["final_layer"] = dispersion_dict(r.final_layer);
    return out;
  });
  m.def(
      "check_theory",
      [](const std::string& out, std::uint64_t seed) {
        std::string summary;
        const bool ok = run_theory_checks(out, seed, &summary);
        return py::make_tuple(ok, summary);
      },
      py::arg("output_dir"), py::arg("seed") = 0);
  m.def("self_check", &self_check, py::arg("directory"));
}
