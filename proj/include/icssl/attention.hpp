#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace icssl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class AttentionKernel { Linear, RbfColumnNormalized };

// [k(U,V)]_ij = <U_i, V_j> over columns.
Matrix kernel_linear(const Matrix& u, const Matrix& v);

// [k(U,V)]_ij = exp(-|U_i - V_j|^2) / sum_k exp(-|U_k - V_j|^2).
// Column-stochastic. Each column is shifted by its largest exponent before
// exponentiating.
Matrix kernel_rbf(const Matrix& u, const Matrix& v);

// Row-block sizes of a token matrix: `upper` rows carry the frozen input
// (coordinates or Psi), `lower` rows the evolving block.
struct Partition {
  Eigen::Index upper = 0;
  Eigen::Index lower = 0;
  Eigen::Index rows() const { return upper + lower; }
  friend bool operator==(const Partition&, const Partition&) = default;
};

/// One head of a constructed layer. The weight matrices are block diagonal:
///
///   W^V = diag(a I, A)   W^Q = diag(b I, B)   W^K = diag(c I, C)
///   W^S = diag(s I, S)
///
/// with the scalar blocks acting on the upper rows and the lower-block
/// matrices (lower x lower) on the evolving rows.
struct LayerParams {
  double a = 0.0, b = 0.0, c = 0.0, s = 0.0;
  Matrix A, B, C, S;
  AttentionKernel kernel = AttentionKernel::Linear;

  // All blocks zero; the identity layer.
  static LayerParams zero(Eigen::Index lower, AttentionKernel kernel = AttentionKernel::Linear);

  // Full (upper+lower)^2 matrices, for inspection and tests.
  Matrix value_matrix(const Partition& p) const;
  Matrix query_matrix(const Partition& p) const;
  Matrix key_matrix(const Partition& p) const;
  Matrix skip_matrix(const Partition& p) const;

  void check(const Partition& p) const;
};

struct TokenState {
  Matrix z;  // (upper + lower) x n, column i is token i
  Partition partition;
  std::size_t layer = 0;

  TokenState() = default;
  TokenState(Matrix z_, Partition p) : z(std::move(z_)), partition(p) {}

  auto upper() const { return z.topRows(partition.upper); }
  auto lower() const { return z.bottomRows(partition.lower); }
  Eigen::Index tokens() const { return z.cols(); }
};

// Z' = (I + sum_h W^S_h) Z + sum_h W^V_h Z k_h(W^Q_h Z, W^K_h Z).
// Block-diagonal structure is exploited; the result equals the dense
// formula. When every head has a = s = 0 the upper block is copied through
// untouched.
TokenState layer_update(const TokenState& state, std::span<const LayerParams> heads);
TokenState layer_update(const TokenState& state, const LayerParams& params);

// Scales each row of the lower block to unit Euclidean norm. Throws
// std::runtime_error on a (numerically) zero row.
TokenState normalize_lower_rows(const TokenState& state);

}  // namespace icssl
