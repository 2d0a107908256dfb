#pragma once

// Reference implementations written with plain loops over std::vector. They
// share no code with the library paths they check.

#include <cstddef>
#include <utility>
#include <vector>

namespace icssl::oracle {

using Mat = std::vector<std::vector<double>>;  // row-major, m[i][j]

// I - A D^{-1} with A_ij = exp(-gamma |x_i - x_j|^2) including A_ii = 1.
// cols[i] is token i.
Mat right_normalized_laplacian(const Mat& cols, double gamma);

struct GdInstance {
  Mat phi;                 // phi[i] = feature vector of token i
  std::vector<int> labels; // -1 unlabeled
  Mat w;                   // w[c] = embedding of class c
  double alpha = 1.0;
  bool rbf = true;
  double gamma_f = 1.0;
  bool divide_by_m = true;
  std::size_t steps = 1;
};

// Straight functional gradient descent on the labeled cross-entropy:
// f_i <- f_i + (alpha/m) sum_{j labeled} (w_{y_j} - sum_c w_c p_c(f_j)) k(phi_i, phi_j).
// Returns f[i] for every token after `steps` updates from f = 0.
Mat gd_recursion(const GdInstance& inst);

// softmax_c(w_c . f) per token.
Mat gd_probabilities(const GdInstance& inst, const Mat& f);

// Single-source shortest paths over an adjacency list of (neighbor, weight).
std::vector<double> dijkstra(const std::vector<std::vector<std::pair<std::size_t, double>>>& adj,
                             std::size_t source);

// Real roots of det(lambda I - M) for a symmetric matrix, ascending. The
// polynomial comes from Faddeev-LeVerrier; roots are bracketed on a fine
// grid over the Gershgorin interval and refined by bisection. Repeated roots
// show no sign change and are missed; use it on matrices with simple spectra.
std::vector<double> charpoly_roots(const Mat& m);

}  // namespace icssl::oracle
