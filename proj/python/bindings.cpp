// Python bindings. Structured values (manifold specs, configs,
// hyperparameters) cross the boundary as JSON text; the package __init__
// wraps them in plain dicts.

#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "icssl/baselines.hpp"
#include "icssl/episode_io.hpp"
#include "icssl/harness.hpp"
#include "icssl/icl_head.hpp"
#include "icssl/metrics.hpp"
#include "icssl/rep_transformer.hpp"
#include "icssl/spectral.hpp"
#include "icssl/validation.hpp"

namespace py = pybind11;
using namespace icssl;

namespace {

ManifoldSpec spec_arg(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    j = text;
  }
  return spec_from_json(j);
}

Hyperparameters hp_arg(const std::string& json_text) {
  Hyperparameters hp;
  if (!json_text.empty()) apply_hyperparameters(hp, nlohmann::json::parse(json_text));
  return hp;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "In-context semi-supervised learning toolkit (C++ core)";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const nlohmann::json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  py::class_<Episode>(m, "Episode")
      .def_readonly("points", &Episode::points)
      .def_readonly("labels", &Episode::labels)
      .def_readonly("true_labels", &Episode::true_labels)
      .def_readonly("labeled_count", &Episode::labeled_count)
      .def_readonly("center", &Episode::center)
      .def_readonly("num_classes", &Episode::num_classes)
      .def_readonly("seed", &Episode::seed)
      .def_property_readonly("spec", [](const Episode& e) { return spec_to_json(e.spec).dump(); })
      .def("to_json", [](const Episode& e) { return episode_to_json(e).dump(); })
      .def_static("from_json", [](const std::string& s) { return episode_from_json(nlohmann::json::parse(s)); })
      .def_static("from_csv", [](const std::string& path, int c) { return read_point_cloud_csv(path, c); },
                  py::arg("path"), py::arg("num_classes") = 2)
      .def("__len__", &Episode::size);

  m.def("make_episode", [](const std::string& spec, std::size_t n, double ratio, int c, std::uint64_t seed) {
    return make_episode(spec_arg(spec), n, ratio, c, seed);
  }, py::arg("spec"), py::arg("n") = 100, py::arg("label_ratio") = 0.39, py::arg("num_classes") = 2,
     py::arg("seed") = 0);
  m.def("sample_manifold", [](const std::string& spec, std::size_t n, std::uint64_t seed) {
    const auto sm = sample_manifold(spec_arg(spec), n, seed);
    return py::make_tuple(sm.intrinsic, sm.ambient, spec_to_json(sm.spec).dump());
  }, py::arg("spec"), py::arg("n"), py::arg("seed") = 0);
  m.def("geodesic", [](const std::string& spec, const Vector& p, const Vector& q) {
    return geodesic(spec_arg(spec), p, q);
  });

  m.def("affinity", [](const Matrix& points, double gamma, bool unit_diagonal) {
    return affinity(points, gamma, unit_diagonal ? DiagonalMode::UnitDiagonal : DiagonalMode::ZeroDiagonal).weights;
  }, py::arg("points"), py::arg("gamma") = 10.0, py::arg("unit_diagonal") = false);
  m.def("laplacians", [](const Matrix& weights) {
    AffinityMatrix a;
    a.weights = weights;
    const auto l = laplacians(a);
    py::dict d;
    d["degrees"] = l.degrees;
    d["L"] = l.unnormalized;
    d["L_sym"] = l.symmetric;
    d["L_rw"] = l.random_walk;
    return d;
  });
  m.def("bottom_eigenvectors", [](const Matrix& mat, std::size_t k) {
    const auto e = bottom_eigenvectors(mat, k);
    return py::make_tuple(e.values, e.vectors);
  });

  m.def("tf_laplacian", &tf_laplacian, py::arg("x"), py::arg("gamma"));
  m.def("tf_eigenmap", [](const Matrix& psi, std::size_t k, std::size_t sweeps, std::optional<double> mu,
                          std::size_t inner_loop, std::size_t outer_loop) {
    const auto n = static_cast<std::size_t>(psi.cols());
    return tf_eigenmap(psi, build_eigenmap_program(n, k, mu.value_or(auto_shift(psi)), sweeps, inner_loop, outer_loop));
  }, py::arg("psi"), py::arg("k"), py::arg("sweeps") = 100, py::arg("mu") = py::none(), py::arg("inner_loop") = 2,
     py::arg("outer_loop") = 2);
  m.def("tf_rep", [](const Matrix& x, double gamma, std::size_t k, std::size_t sweeps) {
    return tf_rep(x, gamma, k, sweeps);
  }, py::arg("x"), py::arg("gamma") = 10.0, py::arg("k") = 4, py::arg("sweeps") = 50);
  m.def("max_principal_angle", &max_principal_angle);
  m.def("estimate_lambda_max", &estimate_lambda_max);

  m.def("icl_forward", [](const Matrix& phi, const std::vector<int>& labels, int num_classes, double alpha,
                          std::size_t layers, const std::string& kernel, double gamma_f, double beta,
                          bool divide_by_m, std::optional<double> erase_lambda) {
    IclConfig cfg;
    cfg.alpha = alpha;
    cfg.layers = layers;
    if (kernel == "rbf") cfg.kernel = IclKernelType::Rbf;
    else if (kernel == "linear") cfg.kernel = IclKernelType::Linear;
    else throw std::invalid_argument("kernel: expected 'rbf' or 'linear'");
    cfg.kernel_gamma = gamma_f;
    cfg.divide_by_m = divide_by_m;
    if (erase_lambda) {
      cfg.erase = EraseMode::FiniteLambda;
      cfg.lambda = *erase_lambda;
    }
    return forward(phi, labels, ClassEmbeddings::scaled_identity(num_classes, beta), cfg);
  }, py::arg("phi"), py::arg("labels"), py::arg("num_classes") = 2, py::arg("alpha") = 1.0, py::arg("layers") = 20,
     py::arg("kernel") = "rbf", py::arg("gamma_f") = 1.0, py::arg("beta") = 2.0, py::arg("divide_by_m") = true,
     py::arg("erase_lambda") = py::none());
  m.def("predict", &predict);

  py::class_<LogRegModel>(m, "LogRegModel")
      .def_readonly("kernel", &LogRegModel::kernel)
      .def_readonly("weights", &LogRegModel::weights)
      .def_readonly("dual", &LogRegModel::dual)
      .def_readonly("bias", &LogRegModel::bias)
      .def_readonly("converged", &LogRegModel::converged)
      .def_readonly("gradient_norm", &LogRegModel::gradient_norm)
      .def_readonly("objective", &LogRegModel::objective)
      .def_readonly("iterations", &LogRegModel::iterations)
      .def("predict_proba", [](const LogRegModel& mdl, const Matrix& x) { return predict_logreg(mdl, x); });
  m.def("fit_logreg", [](const Matrix& f, const std::vector<int>& y, double lambda_reg, int c) {
    return fit_logreg(f, y, lambda_reg, c);
  }, py::arg("features"), py::arg("labels"), py::arg("lambda_reg") = 1e-2, py::arg("num_classes") = 0);
  m.def("fit_kernel_logreg", [](const Matrix& x, const std::vector<int>& y, double gamma_b, double lambda_reg, int c,
                                const std::vector<double>& w) {
    return fit_kernel_logreg(x, y, gamma_b, lambda_reg, c, w);
  }, py::arg("points"), py::arg("labels"), py::arg("gamma_b") = 10.0, py::arg("lambda_reg") = 1e-2,
     py::arg("num_classes") = 0, py::arg("sample_weights") = std::vector<double>{});

  m.def("accuracy", [](const std::vector<int>& p, const std::vector<int>& t, const std::vector<bool>& mask) {
    return accuracy(p, t, mask);
  }, py::arg("pred"), py::arg("truth"), py::arg("mask") = std::vector<bool>{});
  m.def("separation_score", [](const Matrix& v, const std::vector<int>& y) { return separation_score(v, y); });
  m.def("mutual_knn_alignment", &mutual_knn_alignment, py::arg("a"), py::arg("b"), py::arg("k"));

  m.def("run_episode", [](const Episode& ep, const std::string& method, const std::string& hp_json) {
    const auto out = run_episode(ep, parse_method(method), hp_arg(hp_json));
    py::dict d;
    d["accuracy"] = out.accuracy;
    d["loss"] = out.loss;
    d["predictions"] = out.predictions;
    d["probabilities"] = out.probabilities;
    d["fallback"] = out.fallback;
    return d;
  }, py::arg("episode"), py::arg("method"), py::arg("hyperparameters") = "");
  m.def("eigen_features", [](const Matrix& points, const std::string& hp_json) {
    return eigen_features(points, hp_arg(hp_json));
  }, py::arg("points"), py::arg("hyperparameters") = "");
  m.def("run_sweep_csv", [](const std::string& config_json) {
    SweepResult r;
    {
      py::gil_scoped_release release;
      r = run_sweep(config_from_json(nlohmann::json::parse(config_json)));
    }
    return sweep_csv(r);
  });
  m.def("plot_svg", [](const std::string& csv) { return plot_svg(parse_sweep_csv(csv)); });
  m.def("tune", [](const std::string& config_json, const std::string& method, const Grid& grid, std::size_t n) {
    TuneResult r;
    {
      py::gil_scoped_release release;
      r = tune_scalars(config_from_json(nlohmann::json::parse(config_json)), parse_method(method), grid, n);
    }
    py::list table;
    for (const auto& e : r.table) table.append(py::make_tuple(e.point, e.validation_accuracy));
    return py::make_tuple(r.best_point, r.best_accuracy, hyperparameters_to_json(r.best).dump(), table);
  }, py::arg("config"), py::arg("method"), py::arg("grid"), py::arg("validation_episodes") = 30);
  m.def("oracle_battery", [](std::uint64_t seed) {
    std::vector<Check> checks;
    {
      py::gil_scoped_release release;
      checks = oracle_battery(seed);
    }
    py::list out;
    for (const auto& c : checks) out.append(py::make_tuple(c.id, c.name, c.passed, c.detail));
    return out;
  }, py::arg("seed") = 1);
}
