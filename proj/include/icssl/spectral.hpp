#pragma once

#include <cstddef>
#include <filesystem>

#include <Eigen/Dense>

namespace icssl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class DiagonalMode { ZeroDiagonal, UnitDiagonal };

// Weights exp(-gamma * |x_i - x_j|^2). A bandwidth written exp(-d^2 / 2h)
// corresponds to gamma = 1 / (2h); exp(-d^2 / sigma^2) to gamma = 1 / sigma^2.
struct AffinityMatrix {
  Matrix weights;
  double gamma = 10.0;
  DiagonalMode diagonal = DiagonalMode::ZeroDiagonal;
};

struct LaplacianSet {
  Vector degrees;
  Matrix unnormalized;  // D - A
  Matrix symmetric;     // I - D^{-1/2} A D^{-1/2}
  Matrix random_walk;   // I - A D^{-1}, columns sum to zero
};

struct EigenPairs {
  Vector values;   // ascending
  Matrix vectors;  // n x k, unit-norm columns
};

// points: n x d, one sample per row.
AffinityMatrix affinity(const Matrix& points, double gamma,
                        DiagonalMode mode = DiagonalMode::ZeroDiagonal);

// Keeps A_ij when j is among the k largest off-diagonal affinities of row i
// or i is among those of row j. Ties go to the smaller index. The diagonal is
// left as is.
AffinityMatrix knn_sparsify(const AffinityMatrix& a, std::size_t k);

LaplacianSet laplacians(const AffinityMatrix& a);

// Dense symmetric eigensolver (Householder tridiagonalization + implicit QL,
// via Eigen). Throws if the input is asymmetric beyond 1e-10.
EigenPairs bottom_eigenvectors(const Matrix& m, std::size_t k);

// Number of connected components of the graph with edges where A_ij > 0.
std::size_t connected_components(const Matrix& weights);

// Plain row-major CSV, 17 significant digits.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace icssl
