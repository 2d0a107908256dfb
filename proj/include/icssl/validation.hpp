#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "icssl/harness.hpp"

namespace icssl {

struct Check {
  std::string id;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Laplacians I - A D^{-1} of random 100-point clouds whose shifted relative
// eigengap (lambda_{k+1} - lambda_k) / (mu - lambda_1) of Psi^T Psi is at
// least min_gap, with mu = 1.05 lambda_max. Deterministic in seed.
std::vector<Matrix> gapped_laplacians(std::uint64_t seed, std::size_t count, std::size_t k,
                                      double min_gap);

Check check_laplacian_layer(std::uint64_t seed);
Check check_subspace_recovery(std::uint64_t seed);
Check check_icl_head_oracle(std::uint64_t seed);
Check check_geodesic_vs_graph(std::uint64_t seed, std::size_t n = 2000);
Check check_product_metric(std::uint64_t seed);
Check check_metric_sanity(std::uint64_t seed);

// Grid used to tune the ICL head scalars in the benchmark checks.
Grid default_icl_grid();

// Tunes eig-icl on validation episodes, then scores `episodes` test episodes
// on the sphere at label ratio 0.39.
Check check_benchmark(std::uint64_t seed, std::size_t episodes = 200, std::size_t workers = 1);
// Tuned eig-icl against tuned eig-lr on the same test episodes, ratio 0.03.
Check check_method_ordering(std::uint64_t seed, std::size_t episodes = 200, std::size_t workers = 1);
// Two runs of one sweep config (different worker counts) give identical
// CSV once wall_time is dropped.
Check check_sweep_determinism(std::uint64_t seed);

// Per-episode accuracies on indexed test episodes, in episode order.
std::vector<double> episode_accuracies(const SweepConfig& cfg, Method method, const ManifoldSpec& spec,
                                       double ratio, std::size_t count,
                                       Stream stream = Stream::Harness);

// The oracle-equivalence checks (no benchmark runs).
std::vector<Check> oracle_battery(std::uint64_t seed);

// "sweep_csv" text with the trailing wall_time column removed.
std::string strip_wall_time(const std::string& csv);

}  // namespace icssl
