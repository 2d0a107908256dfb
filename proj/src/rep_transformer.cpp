#include "icssl/rep_transformer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "icssl/manifolds.hpp"
#include "icssl/rng.hpp"

namespace icssl {

LayerParams laplacian_layer(Eigen::Index d, Eigen::Index n, double gamma) {
  (void)d;
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma: must be > 0");
  LayerParams p = LayerParams::zero(n, AttentionKernel::RbfColumnNormalized);
  p.b = std::sqrt(gamma);
  p.c = std::sqrt(gamma);
  p.A = -Matrix::Identity(n, n);
  return p;
}

Matrix tf_laplacian(const Matrix& x, double gamma) {
  const Eigen::Index d = x.rows(), n = x.cols();
  if (n < 2) throw std::invalid_argument("tf_laplacian: need at least 2 tokens");
  Matrix z(d + n, n);
  z.topRows(d) = x;
  z.bottomRows(n).setIdentity();  // M = I
  const TokenState out = layer_update(TokenState(std::move(z), {d, n}), laplacian_layer(d, n, gamma));
  return out.lower();
}

LayerParams power_step_layer(std::size_t k, double mu) {
  const auto kk = static_cast<Eigen::Index>(k);
  LayerParams p = LayerParams::zero(kk, AttentionKernel::Linear);
  p.b = 1.0;
  p.c = 1.0;
  // The attention term contributes -Phi Psi^T Psi, the skip term (mu - 1) Phi.
  p.A = -Matrix::Identity(kk, kk);
  p.S = (mu - 1.0) * Matrix::Identity(kk, kk);
  return p;
}

LayerParams orthogonalization_layer(std::size_t k, std::size_t row) {
  if (row >= k) throw std::invalid_argument("orthogonalization_layer: row out of range");
  const auto kk = static_cast<Eigen::Index>(k);
  LayerParams p = LayerParams::zero(kk, AttentionKernel::Linear);
  p.A(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(row)) = -1.0;
  for (std::size_t j = 0; j < row; ++j) {
    p.B(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = 1.0;
    p.C(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = 1.0;
  }
  return p;
}

Matrix dct_rows(std::size_t k, std::size_t n) {
  Matrix m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
  const double nn = static_cast<double>(n);
  for (std::size_t r = 0; r < k; ++r) {
    const double scale = r == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
    for (std::size_t i = 0; i < n; ++i) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) =
          scale * std::cos(kPi * (static_cast<double>(i) + 0.5) * static_cast<double>(r) / nn);
    }
  }
  return m;
}

EigenmapProgram build_eigenmap_program(std::size_t n, std::size_t k, double mu,
                                       std::size_t sweeps, std::size_t inner_loop,
                                       std::size_t outer_loop) {
  if (k < 1 || k > n) throw std::invalid_argument("k: must satisfy 1 <= k <= n");
  if (!(mu > 0.0)) throw std::invalid_argument("mu: must be > 0");
  if (sweeps < 1) throw std::invalid_argument("sweeps: must be >= 1");
  if (inner_loop < 1 || outer_loop < 1) throw std::invalid_argument("loop counts: must be >= 1");

  EigenmapProgram prog;
  prog.n = n;
  prog.k = k;
  prog.mu = mu;
  prog.sweeps = sweeps;
  prog.inner_loop = inner_loop;
  prog.outer_loop = outer_loop;
  prog.layers.push_back(power_step_layer(k, mu));
  for (std::size_t row = 1; row < k; ++row) prog.layers.push_back(orthogonalization_layer(k, row));
  prog.init = dct_rows(k, n);
  return prog;
}

double estimate_lambda_max(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("estimate_lambda_max: matrix must be square");
  const Eigen::Index n = m.rows();
  if (n == 0) return 0.0;
  Rng rng(0x5eedULL);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.5 * rng.normal();
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector w = m * v;
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (it > 0 && std::fabs(next - lambda) <= 1e-10 * std::fabs(next)) return next;
    lambda = next;
  }
  return lambda;
}

double auto_shift(const Matrix& psi) {
  const double est = estimate_lambda_max(psi.transpose() * psi);
  return est > 0.0 ? 1.05 * est : 1.0;
}

double max_principal_angle(const Matrix& rows_a, const Matrix& rows_b) {
  if (rows_a.cols() != rows_b.cols()) throw std::invalid_argument("max_principal_angle: column counts differ");
  const Eigen::Index n = rows_a.cols();
  auto basis = [n](const Matrix& rows) {
    Eigen::HouseholderQR<Matrix> qr(rows.transpose());
    return Matrix(qr.householderQ() * Matrix::Identity(n, rows.rows()));
  };
  const Matrix qa = basis(rows_a);
  const Matrix qb = basis(rows_b);
  const Matrix residual = qa - qb * (qb.transpose() * qa);
  Eigen::JacobiSVD<Matrix> svd(residual);
  const double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  return std::asin(std::min(1.0, s));
}

EigenmapRun run_eigenmap(const Matrix& psi, const EigenmapProgram& program,
                         const SweepObserver& observer) {
  const Eigen::Index n = psi.cols();
  if (psi.rows() != n) throw std::invalid_argument("tf_eigenmap: Psi must be n x n");
  if (static_cast<std::size_t>(n) != program.n) throw std::invalid_argument("tf_eigenmap: program built for a different n");
  const auto k = static_cast<Eigen::Index>(program.k);
  if (program.init.rows() != k || program.init.cols() != n) {
    throw std::invalid_argument("tf_eigenmap: init must be k x n");
  }

  const double lambda_max = estimate_lambda_max(psi.transpose() * psi);
  if (!(program.mu > lambda_max)) {
    throw std::invalid_argument("power step diverges: mu = " + std::to_string(program.mu) +
                                " does not exceed lambda_max(Psi^T Psi) ~ " + std::to_string(lambda_max));
  }
  {
    Eigen::ColPivHouseholderQR<Matrix> qr(program.init.transpose());
    qr.setThreshold(1e-10);
    if (qr.rank() < k) throw std::invalid_argument("tf_eigenmap: rank-deficient initialization M");
  }

  Matrix z(n + k, n);
  z.topRows(n) = psi;
  z.bottomRows(k) = program.init;
  TokenState state(std::move(z), {n, k});

  EigenmapRun run;
  for (std::size_t pass = 0; pass < program.outer_loop; ++pass) {
    for (std::size_t sweep = 0; sweep < program.sweeps; ++sweep) {
      const Matrix before = state.lower();
      for (const auto& layer : program.layers) {
        for (std::size_t r = 0; r < program.inner_loop; ++r) {
          state = normalize_lower_rows(layer_update(state, layer));
        }
      }
      ++run.sweeps_run;
      run.last_change = max_principal_angle(state.lower(), before);
      if (observer) observer(run.sweeps_run, state.lower());
      if (run.last_change < program.tolerance) {
        run.phi = state.lower();
        run.psi_block = state.upper();
        return run;
      }
    }
  }
  run.phi = state.lower();
  run.psi_block = state.upper();
  return run;
}

Matrix tf_eigenmap(const Matrix& psi, const EigenmapProgram& program, const SweepObserver& observer) {
  return run_eigenmap(psi, program, observer).phi;
}

Matrix tf_rep(const Matrix& x, double gamma, std::size_t k, std::size_t sweeps,
              const SweepObserver& observer) {
  const Matrix psi = tf_laplacian(x, gamma);
  const auto n = static_cast<std::size_t>(x.cols());
  const auto program = build_eigenmap_program(n, k, auto_shift(psi), sweeps, 2, 2);
  return tf_eigenmap(psi, program, observer);
}

}  // namespace icssl
