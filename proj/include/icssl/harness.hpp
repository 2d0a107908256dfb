#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "icssl/icl_head.hpp"
#include "icssl/manifolds.hpp"
#include "icssl/rep_transformer.hpp"
#include "icssl/rng.hpp"

namespace icssl {

enum class Method { E2eIcl, EigIcl, OrigIcl, EigLr, OrigRbfLr };

std::string_view method_id(Method m);
Method parse_method(std::string_view id);
bool is_icl(Method m);

// Everything a method may read. Unused fields are ignored per method.
struct Hyperparameters {
  double gamma = 10.0;        // graph / Laplacian bandwidth
  std::size_t knn = 6;        // neighbors for the eigenfeature graph
  std::size_t k_feat = 4;
  std::size_t sweeps = 50;    // T for the attention eigenmap
  double alpha = 1.0;
  std::size_t layers = 20;    // L
  double gamma_f = 1.0;       // ICL head RBF bandwidth
  IclKernelType icl_kernel = IclKernelType::Rbf;
  bool divide_by_m = true;
  double beta = 2.0;
  double lambda_reg = 1e-2;
  double gamma_b = 10.0;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

// Keys: gamma, knn, k_feat, T, alpha, L, gamma_f, icl_kernel, divide_by_m,
// beta, lambda_reg, gamma_b. Unknown keys throw.
void apply_hyperparameters(Hyperparameters& hp, const nlohmann::json& j);
nlohmann::json hyperparameters_to_json(const Hyperparameters& hp);
// Numeric setter used by the tuner; integer keys are rounded.
void set_hyperparameter(Hyperparameters& hp, const std::string& key, double value);
double get_hyperparameter(const Hyperparameters& hp, const std::string& key);

struct EpisodeOutcome {
  double accuracy = 0.0;  // over unlabeled tokens; NaN without ground truth
  double loss = 0.0;      // mean -log p_true over unlabeled tokens
  std::vector<int> predictions;
  Matrix probabilities;   // n x C
  bool fallback = false;  // LR saw a single class and predicted it everywhere
};

// n x k_feat bottom eigenvectors of the symmetric normalized Laplacian of the
// kNN-sparsified RBF graph on the episode points.
Matrix eigen_features(const Matrix& points, const Hyperparameters& hp);

EpisodeOutcome run_episode(const Episode& ep, Method method, const Hyperparameters& hp,
                           const SweepObserver& trace = {});

std::vector<double> default_label_ratios();

struct SweepConfig {
  std::vector<ManifoldSpec> manifolds;
  std::vector<Method> methods;
  std::vector<double> label_ratios = default_label_ratios();
  std::size_t episodes_per_cell = 20;
  std::size_t n = 100;
  int num_classes = 2;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  Hyperparameters defaults;
  std::map<Method, Hyperparameters> per_method;

  void validate() const;
  const Hyperparameters& hp_for(Method m) const;
};

SweepConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SweepConfig& cfg);
SweepConfig load_config(const std::filesystem::path& path);

// Indexed seed of episode `e` for (spec, ratio). Validation and test
// episodes differ only in the stream tag.
std::uint64_t episode_seed(std::uint64_t base, const ManifoldSpec& spec, double ratio,
                           std::size_t e, Stream stream = Stream::Harness);

struct SweepRow {
  std::string manifold;
  std::string method;
  double label_ratio = 0.0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::size_t episode_count = 0;
  std::string error;  // empty when every episode succeeded
  double wall_time = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

// Cells run on cfg.workers threads; rows come back in config order
// (manifold, then method, then ratio).
SweepResult run_sweep(const SweepConfig& cfg);

std::string sweep_csv(const SweepResult& result);
void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path);
SweepResult read_sweep_csv(const std::filesystem::path& path);
SweepResult parse_sweep_csv(const std::string& text);

using Grid = std::map<std::string, std::vector<double>>;

struct TuneEntry {
  std::map<std::string, double> point;
  double validation_accuracy = 0.0;
};

struct TuneResult {
  Hyperparameters best;
  std::map<std::string, double> best_point;
  double best_accuracy = 0.0;
  std::vector<TuneEntry> table;
};

// Exhaustive search over the grid on validation episodes (cfg.manifolds x
// cfg.label_ratios x validation_episodes, Validation seed stream). Ties go
// to the smaller alpha, then the smaller L, then enumeration order.
TuneResult tune_scalars(const SweepConfig& cfg, Method method, const Grid& grid,
                        std::size_t validation_episodes);

// Mean accuracy over the given episodes.
double mean_accuracy(const std::vector<Episode>& episodes, Method method, const Hyperparameters& hp);

std::string plot_svg(const SweepResult& result);
void emit_plot(const SweepResult& result, const std::filesystem::path& path);

}  // namespace icssl
