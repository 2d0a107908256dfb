#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "icssl/attention.hpp"

namespace icssl {

// Single RBF-attention layer that emits the right-normalized Laplacian
// I - A D^{-1} (unit-diagonal affinity, bandwidth gamma) in its lower block.
// X is d x n, one token per column.
Matrix tf_laplacian(const Matrix& x, double gamma);

// The layer parameters used by tf_laplacian, exposed for inspection.
LayerParams laplacian_layer(Eigen::Index d, Eigen::Index n, double gamma);

/// Stacked linear-attention layers running subspace iteration on
/// (mu I - Psi^T Psi) with Gram-Schmidt re-orthogonalization done by
/// attention.
///
/// One sweep is a power-step layer followed by orthogonalization layers for
/// rows 2..k (row 1 has nothing to project out). Each layer is applied
/// `inner_loop` times in a row and every application is followed by lower-row
/// normalization. The full run is `outer_loop` passes of `sweeps` sweeps.
struct EigenmapProgram {
  std::size_t n = 0;
  std::size_t k = 0;
  double mu = 0.0;
  std::size_t sweeps = 1;
  std::size_t inner_loop = 2;
  std::size_t outer_loop = 2;
  std::vector<LayerParams> layers;  // one sweep
  Matrix init;                      // k x n starting rows M
  // Stop once a sweep moves the row span by less than this (0 disables).
  double tolerance = 1e-10;
};

// Power step: b = c = 1, A = -I, B = C = 0, S = (mu - 1) I, a = s = 0.
// Net lower-block map Phi -> Phi (mu I - Psi^T Psi).
LayerParams power_step_layer(std::size_t k, double mu);

// Orthogonalization of row `row` (0-based) against rows 0..row-1:
// [A]_{row,row} = -1 and [B]_jj = [C]_jj = 1 for j < row.
LayerParams orthogonalization_layer(std::size_t k, std::size_t row);

// First k rows of the orthonormal DCT-II basis of R^n (row 0 is constant).
Matrix dct_rows(std::size_t k, std::size_t n);

EigenmapProgram build_eigenmap_program(std::size_t n, std::size_t k, double mu,
                                       std::size_t sweeps, std::size_t inner_loop,
                                       std::size_t outer_loop = 2);

// Called after every sweep with the 1-based sweep count and the current
// k x n block.
using SweepObserver = std::function<void(std::size_t, const Matrix&)>;

struct EigenmapRun {
  Matrix phi;              // k x n
  Matrix psi_block;        // upper block of the final state
  std::size_t sweeps_run = 0;
  double last_change = 0.0;
};

// Runs the program on Z_0 = [Psi; M]. Throws std::invalid_argument when
// mu <= lambda_max(Psi^T Psi) ("power step diverges") and
// std::runtime_error on a degenerate iterate.
EigenmapRun run_eigenmap(const Matrix& psi, const EigenmapProgram& program,
                         const SweepObserver& observer = {});
Matrix tf_eigenmap(const Matrix& psi, const EigenmapProgram& program,
                   const SweepObserver& observer = {});

// Power-iteration estimate of the largest eigenvalue of a symmetric PSD
// matrix; at most 200 iterations, early exit on 1e-10 relative stagnation.
double estimate_lambda_max(const Matrix& m);

// 1.05 x the estimated largest eigenvalue of Psi^T Psi.
double auto_shift(const Matrix& psi);

// tf_eigenmap(tf_laplacian(X, gamma), program(n, k, auto_shift, sweeps, 2)).
// Column i of the result is the feature of token i.
Matrix tf_rep(const Matrix& x, double gamma, std::size_t k, std::size_t sweeps,
              const SweepObserver& observer = {});

// Largest principal angle (radians) between the row spans of two k x n
// matrices, computed from the sine form |(I - Q_b Q_b^T) Q_a|_2.
double max_principal_angle(const Matrix& rows_a, const Matrix& rows_b);

}  // namespace icssl
