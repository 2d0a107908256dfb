#include <doctest.h>

#include <cmath>
#include <vector>

#include "icssl/attention.hpp"
#include "icssl/rng.hpp"

using namespace icssl;

namespace {

Matrix randn(std::uint64_t seed, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Rng g(seed);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * g.normal();
  return m;
}

// Dense reference: (I + sum W^S) Z + sum W^V Z k(W^Q Z, W^K Z).
Matrix dense_update(const Matrix& z, const Partition& p, const std::vector<LayerParams>& heads) {
  Matrix skip = Matrix::Identity(z.rows(), z.rows());
  Matrix out = Matrix::Zero(z.rows(), z.cols());
  for (const auto& h : heads) {
    skip += h.skip_matrix(p);
    const Matrix q = h.query_matrix(p) * z, k = h.key_matrix(p) * z;
    Matrix kern(z.cols(), z.cols());
    for (Eigen::Index i = 0; i < z.cols(); ++i)
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        if (h.kernel == AttentionKernel::Linear) {
          kern(i, j) = q.col(i).dot(k.col(j));
        } else {
          double den = 0.0;
          for (Eigen::Index l = 0; l < z.cols(); ++l) den += std::exp(-(q.col(l) - k.col(j)).squaredNorm());
          kern(i, j) = std::exp(-(q.col(i) - k.col(j)).squaredNorm()) / den;
        }
      }
    out += h.value_matrix(p) * z * kern;
  }
  return skip * z + out;
}

LayerParams random_params(std::uint64_t seed, Eigen::Index lower, AttentionKernel kernel, double scale) {
  Rng g(seed);
  LayerParams p = LayerParams::zero(lower, kernel);
  p.a = scale * g.normal();
  p.b = scale * g.normal();
  p.c = scale * g.normal();
  p.s = scale * g.normal();
  p.A = randn(seed + 1, lower, lower, scale);
  p.B = randn(seed + 2, lower, lower, scale);
  p.C = randn(seed + 3, lower, lower, scale);
  p.S = randn(seed + 4, lower, lower, scale);
  return p;
}

}  // namespace

TEST_CASE("linear kernel") {
  const Matrix i2 = Matrix::Identity(2, 2);
  CHECK(kernel_linear(i2, i2) == i2);
  const Matrix u = randn(1, 3, 4), v = randn(2, 3, 4);
  CHECK(kernel_linear(u, Matrix::Zero(3, 4)).isZero());
  CHECK((kernel_linear(u, v).transpose() - kernel_linear(v, u)).norm() == 0.0);
  CHECK_THROWS_AS(kernel_linear(u, Matrix::Zero(2, 4)), std::invalid_argument);
}

TEST_CASE("rbf kernel") {
  const Matrix same = Matrix::Constant(3, 5, 0.7);
  CHECK((kernel_rbf(same, same) - Matrix::Constant(5, 5, 0.2)).cwiseAbs().maxCoeff() < 1e-16);
  CHECK(kernel_rbf(Matrix::Constant(2, 1, 3.0), Matrix::Constant(2, 1, -1.0))(0, 0) == 1.0);
  const Matrix k = kernel_rbf(randn(3, 8, 5), randn(4, 8, 5));
  CHECK((k.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(kernel_rbf(randn(3, 8, 5), randn(4, 7, 5)), std::invalid_argument);

  for (double scale : {1.0, 10.0, 100.0, 1000.0}) {
    const Matrix kk = kernel_rbf(randn(5, 4, 6, scale), randn(6, 4, 6, scale));
    CHECK(kk.allFinite());
    CHECK((kk.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  }
  // matches the unstabilized formula where that one is safe
  const Matrix u = randn(7, 2, 4, 0.5), v = randn(8, 2, 4, 0.5);
  const Matrix got = kernel_rbf(u, v);
  for (Eigen::Index j = 0; j < 4; ++j) {
    double den = 0.0;
    for (Eigen::Index l = 0; l < 4; ++l) den += std::exp(-(u.col(l) - v.col(j)).squaredNorm());
    for (Eigen::Index i = 0; i < 4; ++i)
      CHECK(got(i, j) == doctest::Approx(std::exp(-(u.col(i) - v.col(j)).squaredNorm()) / den).epsilon(1e-14));
  }
}

TEST_CASE("zero layer is the identity") {
  const TokenState s(randn(9, 6, 4), {3, 3});
  for (auto kernel : {AttentionKernel::Linear, AttentionKernel::RbfColumnNormalized}) {
    const TokenState out = layer_update(s, LayerParams::zero(3, kernel));
    CHECK(out.z == s.z);
    CHECK(out.layer == 1);
    CHECK(out.partition == s.partition);
  }
}

TEST_CASE("layer update equals the dense formula") {
  const Partition p{3, 2};
  const Matrix z = randn(10, 5, 6);
  for (auto kernel : {AttentionKernel::Linear, AttentionKernel::RbfColumnNormalized}) {
    const std::vector<LayerParams> heads{random_params(20, 2, kernel, 0.5), random_params(30, 2, kernel, 0.5)};
    const Matrix want = dense_update(z, p, heads);
    CHECK((layer_update(TokenState(z, p), heads).z - want).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((layer_update(TokenState(z, p), heads[0]).z - dense_update(z, p, {heads[0]})).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("power-step algebra, n = 5, k = 2") {
  const double mu = 7.5;
  const Matrix psi = randn(11, 5, 5), phi = randn(12, 2, 5);
  Matrix z(7, 5);
  z << psi, phi;
  LayerParams p = LayerParams::zero(2);
  p.b = p.c = 1.0;
  p.A = -Matrix::Identity(2, 2);
  p.S = (mu - 1.0) * Matrix::Identity(2, 2);
  const TokenState out = layer_update(TokenState(z, {5, 2}), p);
  const Matrix want = phi * (mu * Matrix::Identity(5, 5) - psi.transpose() * psi);
  CHECK((out.lower() - want).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(out.upper() == psi);  // a = s = 0 leaves the upper block bit-identical
}

TEST_CASE("row normalization") {
  Matrix z(3, 2);
  z << 1.0, 2.0, 3.0, 4.0, 0.0, 1.0;
  const TokenState out = normalize_lower_rows(TokenState(z, {1, 2}));
  CHECK(out.z(1, 0) == doctest::Approx(0.6));
  CHECK(out.z(1, 1) == doctest::Approx(0.8));
  CHECK(out.z.row(2) == z.row(2));
  CHECK(out.z.row(0) == z.row(0));

  Matrix zero = z;
  zero.row(2).setZero();
  CHECK_THROWS_AS(normalize_lower_rows(TokenState(zero, {1, 2})), std::runtime_error);
}

TEST_CASE("shape checks") {
  LayerParams bad = LayerParams::zero(3);
  bad.A = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(layer_update(TokenState(randn(1, 5, 4), {2, 3}), bad), std::invalid_argument);
  CHECK_THROWS_AS(layer_update(TokenState(randn(1, 6, 4), {2, 3}), LayerParams::zero(3)), std::invalid_argument);
}
