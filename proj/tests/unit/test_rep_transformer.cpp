#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "icssl/manifolds.hpp"
#include "icssl/oracles.hpp"
#include "icssl/rep_transformer.hpp"
#include "icssl/rng.hpp"
#include "icssl/spectral.hpp"

using namespace icssl;

namespace {

Matrix randn(std::uint64_t seed, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Rng g(seed);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * g.normal();
  return m;
}

double max_diff_vs_oracle(const Matrix& x, double gamma) {
  oracle::Mat cols(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.cols(); ++i) cols[i].assign(x.col(i).data(), x.col(i).data() + x.rows());
  const auto want = oracle::right_normalized_laplacian(cols, gamma);
  const Matrix got = tf_laplacian(x, gamma);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) worst = std::max(worst, std::fabs(got(i, j) - want[i][j]));
  return worst;
}

// Bottom-k eigenvectors of Psi^T Psi, as rows.
Matrix oracle_rows(const Matrix& psi, std::size_t k) {
  return bottom_eigenvectors(psi.transpose() * psi, k).vectors.transpose();
}

}  // namespace

TEST_CASE("laplacian layer") {
  SUBCASE("two points") {
    Matrix x(3, 2);
    x << 0, 1, 0, 0, 0, 0.5;
    const Matrix l = tf_laplacian(x, 2.0);
    CHECK(l.colwise().sum().cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("identical points") {
    const Matrix l = tf_laplacian(Matrix::Constant(3, 4, 0.3), 10.0);
    const Matrix want = Matrix::Identity(4, 4) - Matrix::Constant(4, 4, 0.25);
    CHECK((l - want).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("n = 20 against the oracle and the spectral module") {
    const Matrix x = randn(3, 3, 20);
    CHECK(max_diff_vs_oracle(x, 10.0) < 1e-12);
    const auto set = laplacians(affinity(x.transpose(), 10.0, DiagonalMode::UnitDiagonal));
    CHECK((tf_laplacian(x, 10.0) - set.random_walk).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("50 random clouds") {
    double worst = 0.0;
    int t = 0;
    for (Eigen::Index n : {10, 50, 100})
      for (double gamma : {1.0, 10.0})
        for (int rep = 0; rep < 9 && t < 50; ++rep, ++t) worst = std::max(worst, max_diff_vs_oracle(randn(100 + t, 3, n), gamma));
    CHECK(t == 50);
    CHECK(worst < 1e-10);
  }
  const auto p = laplacian_layer(3, 5, 4.0);
  CHECK(p.b == 2.0);
  CHECK(p.c == 2.0);
  CHECK(p.a == 0.0);
  CHECK(p.s == 0.0);
  CHECK(p.A == -Matrix::Identity(5, 5));
  CHECK(p.B.isZero());
  CHECK(p.kernel == AttentionKernel::RbfColumnNormalized);
  CHECK_THROWS_AS(tf_laplacian(Matrix::Zero(3, 1), 1.0), std::invalid_argument);
}

TEST_CASE("program structure") {
  const auto one = build_eigenmap_program(10, 1, 2.0, 5, 2);
  CHECK(one.layers.size() == 1);  // power step only
  const auto four = build_eigenmap_program(10, 4, 2.0, 5, 2);
  REQUIRE(four.layers.size() == 4);
  CHECK(four.layers[0].S == 1.0 * Matrix::Identity(4, 4));
  CHECK(four.layers[0].A == -Matrix::Identity(4, 4));
  CHECK(four.layers[0].b == 1.0);
  CHECK(four.layers[0].c == 1.0);
  const auto& o = four.layers[3];
  CHECK(o.A(3, 3) == -1.0);
  CHECK(o.A.cwiseAbs().sum() == 1.0);
  CHECK(o.B.diagonal().head(3) == Vector::Ones(3));
  CHECK(o.B(3, 3) == 0.0);
  CHECK(o.C == o.B);
  CHECK(o.a == 0.0);
  CHECK(o.b == 0.0);
  CHECK(four.init.rows() == 4);
  CHECK((four.init * four.init.transpose() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(build_eigenmap_program(3, 4, 1.0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_eigenmap_program(3, 2, 0.0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_eigenmap_program(3, 2, 1.0, 0, 1), std::invalid_argument);
}

TEST_CASE("orthogonalization layer") {
  SUBCASE("parallel rows are a degenerate iterate") {
    Matrix z(4, 2);
    z << Matrix::Identity(2, 2), 1.0, 0.0, 1.0, 0.0;
    const TokenState s(z, {2, 2});
    const TokenState after = layer_update(s, orthogonalization_layer(2, 1));
    CHECK(after.lower().row(1).norm() < 1e-15);
    CHECK_THROWS_AS(normalize_lower_rows(after), std::runtime_error);
  }
  SUBCASE("orthonormal rows are unchanged") {
    Matrix z(5, 3);
    z << randn(1, 3, 3), 0.6, 0.8, 0.0, -0.8, 0.6, 0.0;
    const TokenState after = layer_update(TokenState(z, {3, 2}), orthogonalization_layer(2, 1));
    CHECK((after.z - z).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("subtracts the projection on earlier rows") {
    Matrix z(5, 3);
    z << randn(2, 3, 3), 1.0, 0.0, 0.0, 2.0, 3.0, 4.0;
    const TokenState after = layer_update(TokenState(z, {3, 2}), orthogonalization_layer(2, 1));
    CHECK(after.lower()(1, 0) == 0.0);
    CHECK(after.lower()(1, 1) == 3.0);
    CHECK(after.lower()(1, 2) == 4.0);
  }
}

TEST_CASE("eigenmap on a diagonal") {
  Matrix psi = Matrix::Zero(3, 3);
  psi.diagonal() << 0.1, 0.5, 0.9;
  const auto prog = build_eigenmap_program(3, 2, auto_shift(psi), 60, 2);
  const Matrix phi = tf_eigenmap(psi, prog);
  CHECK(std::fabs(phi(0, 0)) >= 0.999);
  CHECK(std::fabs(phi(1, 1)) >= 0.999);
}

TEST_CASE("eigenmap on a two-component graph") {
  AffinityMatrix a;
  a.weights = Matrix::Zero(7, 7);
  a.weights.topLeftCorner(3, 3).setOnes();
  a.weights.bottomRightCorner(4, 4).setOnes();
  a.weights.diagonal().setZero();
  const Matrix psi = laplacians(a).random_walk;
  const auto prog = build_eigenmap_program(7, 2, auto_shift(psi), 100, 2);
  const Matrix phi = tf_eigenmap(psi, prog);
  Matrix indicators = Matrix::Zero(2, 7);
  indicators.row(0).head(3).setOnes();
  indicators.row(1).tail(4).setOnes();
  CHECK(max_principal_angle(phi, indicators) < 1e-3);
}

TEST_CASE("full basis is orthonormal and psi stays frozen") {
  const Matrix x = randn(5, 2, 8);
  const Matrix psi = tf_laplacian(x, 1.0);
  const auto prog = build_eigenmap_program(8, 8, auto_shift(psi), 400, 2);
  const auto run = run_eigenmap(psi, prog);
  CHECK((run.phi * run.phi.transpose() - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(run.psi_block == psi);
}

TEST_CASE("subspace recovery against the dense oracle") {
  const Matrix psi = tf_laplacian(randn(6, 3, 40, 0.7), 1.0);
  const double mu = auto_shift(psi);
  const auto prog = build_eigenmap_program(40, 3, mu, 100, 2);
  const Matrix phi = tf_eigenmap(psi, prog);
  const auto eig = bottom_eigenvectors(psi.transpose() * psi, 4);
  INFO("shifted gap " << (eig.values(3) - eig.values(2)) / (mu - eig.values(0)));
  CHECK(max_principal_angle(phi, oracle_rows(psi, 3)) < 1e-3);
  CHECK((phi * phi.transpose() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("regular graph: bottom eigenvectors of the normalized laplacian") {
  // cycle on 12 vertices: constant degree, so the right-normalized and
  // symmetric Laplacians share eigenvectors
  AffinityMatrix a;
  a.weights = Matrix::Zero(12, 12);
  for (int i = 0; i < 12; ++i) a.weights(i, (i + 1) % 12) = a.weights((i + 1) % 12, i) = 1.0;
  const auto l = laplacians(a);
  const auto prog = build_eigenmap_program(12, 3, auto_shift(l.random_walk), 200, 2);
  const Matrix phi = tf_eigenmap(l.random_walk, prog);
  const Matrix want = bottom_eigenvectors(l.symmetric, 3).vectors.transpose();
  CHECK(max_principal_angle(phi, want) < 1e-3);
}

TEST_CASE("eigenmap error paths") {
  Matrix psi = Matrix::Zero(3, 3);
  psi.diagonal() << 0.1, 0.5, 0.9;
  const auto small = build_eigenmap_program(3, 2, 0.5, 10, 2);
  CHECK_THROWS_WITH_AS(tf_eigenmap(psi, small), doctest::Contains("power step diverges"), std::invalid_argument);
  auto degenerate = build_eigenmap_program(3, 2, 1.0, 10, 2);
  degenerate.init.row(1) = degenerate.init.row(0);
  CHECK_THROWS_AS(tf_eigenmap(psi, degenerate), std::invalid_argument);
  CHECK_THROWS_AS(tf_eigenmap(Matrix::Identity(4, 4), degenerate), std::invalid_argument);
}

TEST_CASE("two blobs are split by the second feature") {
  Rng r(8);
  Matrix x(2, 60);
  for (int i = 0; i < 60; ++i) {
    const double cx = i < 30 ? -2.0 : 2.0;
    x(0, i) = cx + 0.3 * r.normal();
    x(1, i) = 0.3 * r.normal();
  }
  const Matrix phi = tf_rep(x, 1.0, 2, 100);
  auto agreement = [&](int lo, int hi) {
    int pos = 0;
    for (int i = lo; i < hi; ++i) pos += phi(1, i) > 0.0;
    return std::max(pos, (hi - lo) - pos) / double(hi - lo);
  };
  CHECK(agreement(0, 30) >= 0.95);
  CHECK(agreement(30, 60) >= 0.95);
  CHECK((phi(1, 0) > 0.0) != (phi(1, 59) > 0.0));
  // the oracle Fiedler direction of L^T L agrees
  const Matrix psi = tf_laplacian(x, 1.0);
  CHECK(max_principal_angle(phi, oracle_rows(psi, 2)) < 1e-3);
}

TEST_CASE("permutation equivariance") {
  const Matrix x = randn(9, 3, 15, 0.6);
  std::vector<int> perm(15);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.begin() + 7);
  std::rotate(perm.begin() + 7, perm.begin() + 10, perm.end());
  Eigen::PermutationMatrix<Eigen::Dynamic> p(15);
  for (int j = 0; j < 15; ++j) p.indices()(j) = perm[j];
  // column j of x * P is column perm^{-1}(j); use the matrix form throughout
  const Matrix xp = x * p;
  const Matrix psi = tf_laplacian(x, 1.0), psi_p = tf_laplacian(xp, 1.0);
  CHECK((psi_p - p.transpose() * psi * p).cwiseAbs().maxCoeff() < 1e-13);

  const double mu = auto_shift(psi);
  auto prog = build_eigenmap_program(15, 3, mu, 30, 2);
  auto prog_p = prog;
  prog_p.init = prog.init * p;
  prog.tolerance = prog_p.tolerance = 0.0;
  const Matrix phi = tf_eigenmap(psi, prog), phi_p = tf_eigenmap(psi_p, prog_p);
  CHECK((phi_p - phi * p).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("largest eigenvalue estimate") {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 1.0, 2.0, 5.0;
  CHECK(std::fabs(estimate_lambda_max(d) - 5.0) <= 0.05);
  CHECK(estimate_lambda_max(Matrix::Zero(4, 4)) == 0.0);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Matrix g = randn(40 + s, 10, 10);
    const Matrix psd = g.transpose() * g;
    const double top = bottom_eigenvectors(psd, 10).values(9);
    CHECK(std::fabs(estimate_lambda_max(psd) - top) <= 0.01 * top);
  }
  CHECK(auto_shift(d) == doctest::Approx(1.05 * 25.0).epsilon(0.01));
}

TEST_CASE("principal angles") {
  const Matrix a = randn(1, 2, 6);
  CHECK(max_principal_angle(a, a) < 1e-7);
  Matrix rot(2, 2);
  rot << 0.3, -2.0, 1.0, 0.5;
  CHECK(max_principal_angle(a, rot * a) < 1e-7);
  Matrix e1 = Matrix::Zero(1, 3), e2 = Matrix::Zero(1, 3);
  e1(0, 0) = 1.0;
  e2(0, 1) = 1.0;
  CHECK(max_principal_angle(e1, e2) == doctest::Approx(kPi / 2));
}

TEST_CASE("sweep observer sees every sweep") {
  const Matrix psi = tf_laplacian(randn(2, 3, 12), 1.0);
  auto prog = build_eigenmap_program(12, 2, auto_shift(psi), 7, 2);
  prog.tolerance = 0.0;
  std::vector<std::size_t> seen;
  tf_eigenmap(psi, prog, [&](std::size_t s, const Matrix& phi) {
    seen.push_back(s);
    CHECK(phi.rows() == 2);
  });
  CHECK(seen.size() == 14);
  CHECK(seen.front() == 1);
  CHECK(seen.back() == 14);
}
