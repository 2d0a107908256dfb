#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <Eigen/Eigenvalues>

#include "icssl/oracles.hpp"
#include "icssl/rng.hpp"
#include "icssl/spectral.hpp"

using namespace icssl;

namespace {

Matrix random_cloud(std::uint64_t seed, Eigen::Index n, Eigen::Index d, double spread = 1.0) {
  Rng r(seed);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = spread * r.normal();
  return x;
}

oracle::Mat to_mat(const Matrix& m) {
  oracle::Mat out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

}  // namespace

TEST_CASE("affinity") {
  Matrix x(3, 2);
  x << 0, 0, 0, 0, 1, 1;
  const auto a = affinity(x, 10.0);
  CHECK(a.weights(0, 1) == 1.0);
  CHECK(a.weights(0, 0) == 0.0);
  CHECK(a.weights(0, 2) == doctest::Approx(std::exp(-20.0)));
  CHECK(affinity(x, 10.0, DiagonalMode::UnitDiagonal).weights(2, 2) == 1.0);

  const double gamma = 3.0;
  Matrix y(2, 1);
  y << 0.0, std::sqrt(std::log(2.0) / gamma);
  CHECK(affinity(y, gamma).weights(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(AffinityMatrix{}.gamma == 10.0);
  CHECK_THROWS_AS(affinity(x, 0.0), std::invalid_argument);

  const auto big = affinity(random_cloud(1, 30, 3), 1.0);
  CHECK((big.weights - big.weights.transpose()).norm() == 0.0);
  CHECK(big.weights.minCoeff() >= 0.0);
  CHECK(big.weights.maxCoeff() <= 1.0);
}

TEST_CASE("knn sparsification") {
  const auto a = affinity(random_cloud(2, 25, 3), 1.0);
  CHECK(knn_sparsify(a, 24).weights == a.weights);
  const auto s = knn_sparsify(a, 3);
  CHECK(s.weights == s.weights.transpose());
  for (Eigen::Index i = 0; i < 25; ++i) {
    int kept = 0;
    for (Eigen::Index j = 0; j < 25; ++j) {
      if (s.weights(i, j) > 0.0) {
        ++kept;
        CHECK(s.weights(i, j) == a.weights(i, j));
      }
    }
    CHECK(kept >= 3);
  }
  CHECK_THROWS_AS(knn_sparsify(a, 0), std::invalid_argument);
  CHECK_THROWS_AS(knn_sparsify(a, 25), std::invalid_argument);

  SUBCASE("ties go to the smaller index") {
    AffinityMatrix eq;
    eq.weights = Matrix::Constant(4, 4, 0.5);
    eq.weights.diagonal().setZero();
    const auto t = knn_sparsify(eq, 1);
    // rows 1..3 each pick 0; row 0 picks 1
    CHECK(t.weights(0, 1) == 0.5);
    CHECK(t.weights(0, 2) == 0.5);
    CHECK(t.weights(2, 3) == 0.0);
  }
}

TEST_CASE("laplacians of the complete graph") {
  AffinityMatrix a;
  a.weights = Matrix::Ones(3, 3);
  a.weights.diagonal().setZero();
  const auto l = laplacians(a);
  Matrix want = 2.0 * Matrix::Identity(3, 3) - (Matrix::Ones(3, 3) - Matrix::Identity(3, 3));
  CHECK((l.unnormalized - want).norm() < 1e-15);
  // eigenpairs by hand: 1 -> 0, and (1,-1,0), (1,1,-2) -> 3
  Vector ones = Vector::Ones(3), u(3), v(3);
  u << 1, -1, 0;
  v << 1, 1, -2;
  CHECK((l.unnormalized * ones).norm() < 1e-15);
  CHECK((l.unnormalized * u - 3.0 * u).norm() < 1e-15);
  CHECK((l.unnormalized * v - 3.0 * v).norm() < 1e-15);
  const auto e = bottom_eigenvectors(l.unnormalized, 3);
  CHECK(std::fabs(e.values(0)) < 1e-12);
  CHECK(e.values(2) == doctest::Approx(3.0));
}

TEST_CASE("laplacian invariants on random clouds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = knn_sparsify(affinity(random_cloud(seed, 40, 3), 2.0), 6);
    const auto l = laplacians(a);
    const Vector ones = Vector::Ones(40);
    CHECK((l.unnormalized * ones).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ones.transpose() * l.random_walk).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((l.random_walk * l.degrees).cwiseAbs().maxCoeff() < 1e-12);  // D 1 is a right null vector
    Eigen::SelfAdjointEigenSolver<Matrix> es(l.unnormalized);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
    Eigen::SelfAdjointEigenSolver<Matrix> sym(l.symmetric);
    CHECK(sym.eigenvalues().minCoeff() >= -1e-9);
    CHECK(sym.eigenvalues().maxCoeff() <= 2.0 + 1e-9);
    Eigen::EigenSolver<Matrix> rw(l.random_walk);
    Vector re = rw.eigenvalues().real();
    std::sort(re.data(), re.data() + re.size());
    CHECK(rw.eigenvalues().imag().cwiseAbs().maxCoeff() < 1e-9);
    CHECK((re - sym.eigenvalues()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("zero-eigenvalue multiplicity counts components") {
  // two triangles and an edge
  AffinityMatrix a;
  a.weights = Matrix::Zero(8, 8);
  auto edge = [&](int i, int j, double w) { a.weights(i, j) = a.weights(j, i) = w; };
  edge(0, 1, 1.0); edge(1, 2, 0.5); edge(0, 2, 0.7);
  edge(3, 4, 0.2); edge(4, 5, 0.9); edge(3, 5, 1.0);
  edge(6, 7, 0.3);
  CHECK(connected_components(a.weights) == 3);
  const auto e = bottom_eigenvectors(laplacians(a).unnormalized, 4);
  int zeros = 0;
  for (Eigen::Index i = 0; i < 4; ++i) zeros += std::fabs(e.values(i)) < 1e-10;
  CHECK(zeros == 3);

  a.weights(7, 6) = a.weights(6, 7) = 0.0;
  CHECK_THROWS_WITH_AS(laplacians(a), doctest::Contains("zero degree"), std::invalid_argument);
}

TEST_CASE("bottom eigenvectors") {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3.0, 1.0, 2.0;
  const auto e = bottom_eigenvectors(d, 2);
  CHECK(e.values(0) == 1.0);
  CHECK(e.values(1) == 2.0);
  CHECK(std::fabs(e.vectors(1, 0)) == doctest::Approx(1.0));
  CHECK(std::fabs(e.vectors(2, 1)) == doctest::Approx(1.0));

  const auto l = laplacians(affinity(random_cloud(4, 20, 2), 1.0));
  const auto c = bottom_eigenvectors(l.unnormalized, 1);
  CHECK(std::fabs(c.values(0)) < 1e-12);
  const double first = c.vectors(0, 0);
  for (Eigen::Index i = 0; i < 20; ++i) CHECK(c.vectors(i, 0) == doctest::Approx(first).epsilon(1e-10));

  const Matrix s = l.unnormalized;
  const auto all = bottom_eigenvectors(s, 20);
  for (Eigen::Index j = 0; j < 20; ++j) {
    CHECK((s * all.vectors.col(j) - all.values(j) * all.vectors.col(j)).norm() <= 1e-8 * s.norm());
    CHECK(all.vectors.col(j).norm() == doctest::Approx(1.0));
    if (j) CHECK(all.values(j) >= all.values(j - 1));
  }

  Matrix asym = s;
  asym(0, 1) += 1e-8;
  CHECK_THROWS_AS(bottom_eigenvectors(asym, 2), std::invalid_argument);
  CHECK_THROWS_AS(bottom_eigenvectors(s, 21), std::invalid_argument);
}

TEST_CASE("eigensolver matches characteristic polynomial roots") {
  Rng r(99);
  for (int t = 0; t < 50; ++t) {
    Matrix m(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = r.uniform(-2.0, 2.0);
    const auto e = bottom_eigenvectors(m, 4);
    const auto roots = oracle::charpoly_roots(to_mat(m));
    REQUIRE(roots.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(e.values(i) == doctest::Approx(roots[i]).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("matrix csv round trip") {
  const Matrix m = random_cloud(5, 4, 3);
  const auto path = std::filesystem::temp_directory_path() / "icssl_matrix.csv";
  write_matrix_csv(m, path);
  CHECK(read_matrix_csv(path) == m);
}
