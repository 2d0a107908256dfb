// icssl: command-line front end for episodes, sweeps, tuning and plots.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "icssl/episode_io.hpp"
#include "icssl/harness.hpp"
#include "icssl/rep_transformer.hpp"
#include "icssl/validation.hpp"

using namespace icssl;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// "alpha=1,2,4;L=5,20" or a JSON object file {"alpha": [1, 2, 4], ...}.
Grid parse_grid(const std::string& text) {
  Grid grid;
  if (std::filesystem::exists(text)) {
    const auto j = nlohmann::json::parse(read_file(text));
    for (const auto& [k, v] : j.items()) grid[k] = v.get<std::vector<double>>();
    return grid;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--grid: expected key=v1,v2,... got '" + item + "'");
    std::stringstream vs(item.substr(eq + 1));
    std::string v;
    auto& values = grid[item.substr(0, eq)];
    while (std::getline(vs, v, ',')) values.push_back(std::stod(v));
  }
  return grid;
}

void apply_overrides(Hyperparameters& hp, const std::vector<std::string>& sets) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set: expected key=value, got '" + s + "'");
    const std::string key = s.substr(0, eq), value = s.substr(eq + 1);
    if (key == "icl_kernel") j[key] = value;
    else if (key == "divide_by_m") j[key] = value == "true" || value == "1";
    else j[key] = std::stod(value);
  }
  apply_hyperparameters(hp, j);
}

int cmd_generate(const std::string& manifold, std::size_t n, double ratio, int classes,
                 std::uint64_t seed, const std::string& out, bool csv) {
  ManifoldSpec spec;
  try {
    spec = spec_from_json(nlohmann::json::parse(manifold));
  } catch (const nlohmann::json::parse_error&) {
    spec = spec_from_json(nlohmann::json(manifold));
  }
  const Episode ep = make_episode(spec, n, ratio, classes, seed);
  if (csv) write_point_cloud_csv(ep, out);
  else write_episode(ep, out);
  fmt::print("wrote {} ({} points, {} labeled, {})\n", out, ep.size(), ep.labeled_count, ep.spec.name());
  return 0;
}

int cmd_run(const std::string& episode_path, const std::string& method_name, const std::string& config,
            const std::vector<std::string>& sets, const std::string& trace, int classes) {
  const Method method = parse_method(method_name);
  Hyperparameters hp;
  if (!config.empty()) hp = load_config(config).hp_for(method);
  apply_overrides(hp, sets);

  const std::filesystem::path p(episode_path);
  const Episode ep = p.extension() == ".csv" ? read_point_cloud_csv(p, classes) : read_episode(p);

  std::FILE* trace_file = nullptr;
  SweepObserver observer;
  Matrix previous;
  if (!trace.empty()) {
    if (method != Method::E2eIcl) throw UsageError("--trace-eigenmap needs --method e2e-icl");
    trace_file = std::fopen(trace.c_str(), "w");
    if (!trace_file) throw std::runtime_error("cannot open " + trace);
    fmt::print(trace_file, "sweep,subspace_change,orthogonality_error\n");
    observer = [&](std::size_t sweep, const Matrix& phi) {
      const double change = previous.size() ? max_principal_angle(phi, previous) : 0.0;
      const Matrix gram = phi * phi.transpose();
      const double ortho = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
      fmt::print(trace_file, "{},{:.6e},{:.6e}\n", sweep, change, ortho);
      previous = phi;
    };
  }
  EpisodeOutcome out;
  try {
    out = run_episode(ep, method, hp, observer);
  } catch (...) {
    if (trace_file) std::fclose(trace_file);
    throw;
  }
  if (trace_file) std::fclose(trace_file);
  fmt::print("method {}\nmanifold {}\nn {}\nlabeled {}\naccuracy {:.6f}\nloss {:.6f}\n", method_id(method),
             ep.spec.name(), ep.size(), ep.labeled_count, out.accuracy, out.loss);
  if (out.fallback) fmt::print("note single observed class, predicted everywhere\n");
  return 0;
}

int cmd_sweep(const std::string& config, std::optional<std::uint64_t> seed, std::optional<std::size_t> workers,
              const std::string& out, const std::string& plot) {
  SweepConfig cfg = load_config(config);
  if (seed) cfg.seed = *seed;
  if (workers) cfg.workers = *workers;
  const SweepResult result = run_sweep(cfg);
  write_sweep_csv(result, out);
  std::size_t errors = 0;
  for (const auto& r : result.rows) errors += r.error.empty() ? 0 : 1;
  fmt::print("wrote {} ({} rows, {} with errors)\n", out, result.rows.size(), errors);
  if (!plot.empty()) {
    emit_plot(result, plot);
    fmt::print("wrote {}\n", plot);
  }
  return 0;
}

int cmd_tune(const std::string& config, const std::string& method_name, const std::string& grid_text,
             std::size_t validation, std::optional<std::uint64_t> seed, std::optional<std::size_t> workers,
             const std::string& out) {
  SweepConfig cfg = load_config(config);
  if (seed) cfg.seed = *seed;
  if (workers) cfg.workers = *workers;
  const Method method = parse_method(method_name);
  const TuneResult r = tune_scalars(cfg, method, parse_grid(grid_text), validation);
  for (const auto& e : r.table) {
    std::string line;
    for (const auto& [k, v] : e.point) line += fmt::format("{}={} ", k, v);
    fmt::print("{}-> {:.4f}\n", line, e.validation_accuracy);
  }
  nlohmann::json best = {{"method", std::string(method_id(method))},
                         {"validation_accuracy", r.best_accuracy},
                         {"point", r.best_point},
                         {"hyperparameters", hyperparameters_to_json(r.best)}};
  fmt::print("best {}\n", best["point"].dump());
  if (!out.empty()) write_file_atomic(out, best.dump(2) + "\n");
  return 0;
}

int cmd_plot(const std::string& csv, const std::string& out) {
  emit_plot(read_sweep_csv(csv), out);
  fmt::print("wrote {}\n", out);
  return 0;
}

int cmd_validate(std::uint64_t seed, bool full, std::size_t workers) {
  auto checks = oracle_battery(seed);
  if (full) {
    checks.push_back(check_benchmark(seed, 200, workers));
    checks.push_back(check_method_ordering(seed, 200, workers));
    checks.push_back(check_sweep_determinism(seed));
  }
  bool ok = true;
  for (const auto& c : checks) {
    fmt::print("[{}] {} {}: {} ({:.2f} s)\n", c.passed ? "PASS" : "FAIL", c.id, c.name, c.detail, c.seconds);
    ok = ok && c.passed;
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-context semi-supervised learning toolkit: episodes, sweeps, tuning, plots"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::optional<std::uint64_t> seed_opt;
  std::optional<std::size_t> workers_opt;
  std::string config, out, plot_out, trace, method = "eig-icl", episode_path, grid, csv_in;
  std::string manifold = "sphere";
  std::size_t n = 100, validation = 30;
  double ratio = 0.39;
  int classes = 2;
  bool as_csv = false, full = false;
  std::vector<std::string> sets;

  auto* gen = app.add_subcommand("generate", "Write one episode file");
  gen->add_option("--manifold", manifold, "Family name or JSON spec")->capture_default_str();
  gen->add_option("-n", n, "Number of points")->capture_default_str();
  gen->add_option("--ratio", ratio, "Label ratio")->capture_default_str();
  gen->add_option("--classes", classes, "Number of classes")->capture_default_str();
  gen->add_option("--seed", seed, "Episode seed")->capture_default_str();
  gen->add_option("--out", out, "Output path")->required();
  gen->add_flag("--csv", as_csv, "Write a point-cloud CSV instead of JSON");

  auto* run = app.add_subcommand("run", "Run one method on one episode");
  run->add_option("episode", episode_path, "Episode JSON or point-cloud CSV")->required();
  run->add_option("--method", method, "e2e-icl, eig-icl, orig-icl, eig-lr, orig-rbf-lr")->capture_default_str();
  run->add_option("--config", config, "Sweep config to take hyperparameters from");
  run->add_option("--set", sets, "Hyperparameter override key=value (repeatable)");
  run->add_option("--trace-eigenmap", trace, "Per-sweep eigenmap trace CSV (e2e-icl)");
  run->add_option("--classes", classes, "Classes for CSV input")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Run a config sweep to CSV");
  sweep->add_option("--config", config, "Sweep config (JSON)")->required();
  sweep->add_option("--out", out, "CSV output path")->required();
  sweep->add_option("--seed", seed_opt, "Override the config seed");
  sweep->add_option("--workers", workers_opt, "Override the worker count");
  sweep->add_option("--plot", plot_out, "Also write an SVG plot");

  auto* tune = app.add_subcommand("tune", "Grid-search method scalars on validation episodes");
  tune->add_option("--config", config, "Sweep config (JSON)")->required();
  tune->add_option("--method", method)->capture_default_str();
  tune->add_option("--grid", grid, "key=v1,v2;key2=... or a JSON file")->required();
  tune->add_option("--validation-episodes", validation)->capture_default_str();
  tune->add_option("--seed", seed_opt, "Override the config seed");
  tune->add_option("--workers", workers_opt, "Override the worker count");
  tune->add_option("--out", out, "Write the best point as JSON");

  auto* plot = app.add_subcommand("plot", "Render a sweep CSV as SVG");
  plot->add_option("csv", csv_in, "Sweep CSV")->required();
  plot->add_option("--out", out, "SVG output path")->required();

  auto* validate = app.add_subcommand("validate", "Run the oracle-equivalence checks");
  validate->add_option("--seed", seed, "Base seed")->capture_default_str();
  validate->add_flag("--full", full, "Also run the benchmark, ordering and determinism checks");
  validate->add_option("--workers", workers_opt, "Worker count for --full");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(manifold, n, ratio, classes, seed, out, as_csv);
    if (*run) return cmd_run(episode_path, method, config, sets, trace, classes);
    if (*sweep) return cmd_sweep(config, seed_opt, workers_opt, out, plot_out);
    if (*tune) return cmd_tune(config, method, grid, validation, seed_opt, workers_opt, out);
    if (*plot) return cmd_plot(csv_in, out);
    if (*validate) return cmd_validate(seed, full, workers_opt.value_or(1));
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
