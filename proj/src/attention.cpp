#include "icssl/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace icssl {

namespace {

Matrix block_diag(double scalar, const Matrix& lower_block, const Partition& p) {
  Matrix w = Matrix::Zero(p.rows(), p.rows());
  w.topLeftCorner(p.upper, p.upper).diagonal().setConstant(scalar);
  w.bottomRightCorner(p.lower, p.lower) = lower_block;
  return w;
}

void check_block(const Matrix& m, Eigen::Index lower, const char* name) {
  if (m.rows() != lower || m.cols() != lower) {
    throw std::invalid_argument(std::string("LayerParams: block ") + name + " must be " +
                                std::to_string(lower) + "x" + std::to_string(lower));
  }
}

// Rows of W Z for one block-diagonal weight, split by block.
struct Projected {
  Matrix upper;  // empty when the scalar is zero
  Matrix lower;
  bool upper_zero = true;
};

Projected project(double scalar, const Matrix& block, const TokenState& st) {
  Projected out;
  if (scalar != 0.0) {
    out.upper = scalar * st.upper();
    out.upper_zero = false;
  }
  out.lower = block * st.lower();
  return out;
}

Matrix stacked(const Projected& p, const Partition& part, Eigen::Index n) {
  Matrix m(part.rows(), n);
  if (p.upper_zero) {
    m.topRows(part.upper).setZero();
  } else {
    m.topRows(part.upper) = p.upper;
  }
  m.bottomRows(part.lower) = p.lower;
  return m;
}

}  // namespace

Matrix kernel_linear(const Matrix& u, const Matrix& v) {
  if (u.rows() != v.rows()) throw std::invalid_argument("kernel_linear: row counts differ");
  return u.transpose() * v;
}

Matrix kernel_rbf(const Matrix& u, const Matrix& v) {
  if (u.rows() != v.rows()) throw std::invalid_argument("kernel_rbf: row counts differ");
  const Eigen::Index n = u.cols(), m = v.cols();
  Matrix k(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) k(i, j) = -(u.col(i) - v.col(j)).squaredNorm();
    const double shift = k.col(j).maxCoeff();
    k.col(j) = (k.col(j).array() - shift).exp();
    k.col(j) /= k.col(j).sum();
  }
  return k;
}

LayerParams LayerParams::zero(Eigen::Index lower, AttentionKernel kernel) {
  LayerParams p;
  p.A = Matrix::Zero(lower, lower);
  p.B = Matrix::Zero(lower, lower);
  p.C = Matrix::Zero(lower, lower);
  p.S = Matrix::Zero(lower, lower);
  p.kernel = kernel;
  return p;
}

Matrix LayerParams::value_matrix(const Partition& p) const { return block_diag(a, A, p); }
Matrix LayerParams::query_matrix(const Partition& p) const { return block_diag(b, B, p); }
Matrix LayerParams::key_matrix(const Partition& p) const { return block_diag(c, C, p); }
Matrix LayerParams::skip_matrix(const Partition& p) const { return block_diag(s, S, p); }

void LayerParams::check(const Partition& p) const {
  check_block(A, p.lower, "A");
  check_block(B, p.lower, "B");
  check_block(C, p.lower, "C");
  check_block(S, p.lower, "S");
}

TokenState layer_update(const TokenState& state, std::span<const LayerParams> heads) {
  const Partition& part = state.partition;
  if (state.z.rows() != part.rows()) throw std::invalid_argument("TokenState: rows do not match partition");
  const Eigen::Index n = state.tokens();

  TokenState next = state;
  next.layer = state.layer + 1;

  double upper_skip = 0.0;
  Matrix lower_skip = Matrix::Zero(part.lower, part.lower);
  Matrix upper_attn, lower_attn = Matrix::Zero(part.lower, n);
  bool upper_touched = false;

  for (const auto& h : heads) {
    h.check(part);
    upper_skip += h.s;
    lower_skip += h.S;

    const Projected v = project(h.a, h.A, state);
    const Projected q = project(h.b, h.B, state);
    const Projected k = project(h.c, h.C, state);

    auto accumulate = [&](const Matrix& rows_times_kernel, bool upper) {
      if (upper) {
        if (!upper_touched) {
          upper_attn = rows_times_kernel;
          upper_touched = true;
        } else {
          upper_attn += rows_times_kernel;
        }
      } else {
        lower_attn += rows_times_kernel;
      }
    };

    if (h.kernel == AttentionKernel::Linear) {
      // V (Q^T K) evaluated as (V Q^T) K block by block; avoids the n x n
      // kernel and skips zero blocks.
      auto apply = [&](const Matrix& vrows) {
        Matrix out = Matrix::Zero(vrows.rows(), n);
        if (!q.upper_zero && !k.upper_zero) out += (vrows * q.upper.transpose()) * k.upper;
        out += (vrows * q.lower.transpose()) * k.lower;
        return out;
      };
      if (!v.upper_zero) accumulate(apply(v.upper), true);
      accumulate(apply(v.lower), false);
    } else {
      const Matrix kern = kernel_rbf(stacked(q, part, n), stacked(k, part, n));
      if (!v.upper_zero) accumulate(v.upper * kern, true);
      accumulate(v.lower * kern, false);
    }
  }

  if (upper_skip != 0.0) next.z.topRows(part.upper) *= (1.0 + upper_skip);
  if (upper_touched) next.z.topRows(part.upper) += upper_attn;
  next.z.bottomRows(part.lower) = state.lower() + lower_skip * state.lower() + lower_attn;
  return next;
}

TokenState layer_update(const TokenState& state, const LayerParams& params) {
  return layer_update(state, std::span<const LayerParams>(&params, 1));
}

TokenState normalize_lower_rows(const TokenState& state) {
  TokenState out = state;
  auto lower = out.z.bottomRows(state.partition.lower);
  for (Eigen::Index r = 0; r < lower.rows(); ++r) {
    const double norm = lower.row(r).norm();
    if (!(norm > 1e-12) || !std::isfinite(norm)) {
      throw std::runtime_error("degenerate iterate: lower row " + std::to_string(r) +
                               " has zero norm");
    }
    lower.row(r) /= norm;
  }
  return out;
}

}  // namespace icssl
