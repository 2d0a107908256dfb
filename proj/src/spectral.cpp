#include "icssl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "icssl/episode_io.hpp"

namespace icssl {

AffinityMatrix affinity(const Matrix& points, double gamma, DiagonalMode mode) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma: must be > 0");
  const Eigen::Index n = points.rows();
  AffinityMatrix a;
  a.gamma = gamma;
  a.diagonal = mode;
  a.weights.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.weights(i, i) = mode == DiagonalMode::UnitDiagonal ? 1.0 : 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double w = std::exp(-gamma * (points.row(i) - points.row(j)).squaredNorm());
      a.weights(i, j) = w;
      a.weights(j, i) = w;
    }
  }
  return a;
}

AffinityMatrix knn_sparsify(const AffinityMatrix& a, std::size_t k) {
  const auto n = static_cast<std::size_t>(a.weights.rows());
  if (k < 1 || k >= n) throw std::invalid_argument("k: must satisfy 1 <= k < n");

  std::vector<std::vector<bool>> keep(n, std::vector<bool>(n, false));
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    order.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    const auto row = static_cast<Eigen::Index>(i);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t x, std::size_t y) {
                        const double wx = a.weights(row, static_cast<Eigen::Index>(x));
                        const double wy = a.weights(row, static_cast<Eigen::Index>(y));
                        return wx > wy || (wx == wy && x < y);
                      });
    for (std::size_t t = 0; t < k; ++t) {
      keep[i][order[t]] = true;
      keep[order[t]][i] = true;
    }
  }

  AffinityMatrix out = a;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && !keep[i][j]) out.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.0;
    }
  }
  return out;
}

LaplacianSet laplacians(const AffinityMatrix& a) {
  const Matrix& w = a.weights;
  const Eigen::Index n = w.rows();
  LaplacianSet out;
  out.degrees = w.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(out.degrees(i) > 0.0)) {
      throw std::invalid_argument("affinity: vertex " + std::to_string(i) + " has zero degree");
    }
  }
  const Matrix identity = Matrix::Identity(n, n);
  out.unnormalized = Matrix(out.degrees.asDiagonal()) - w;
  const Vector inv_sqrt = out.degrees.cwiseSqrt().cwiseInverse();
  out.symmetric = identity - inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal();
  out.random_walk = identity - w * out.degrees.cwiseInverse().asDiagonal();
  return out;
}

EigenPairs bottom_eigenvectors(const Matrix& m, std::size_t k) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix: must be square");
  const auto n = static_cast<std::size_t>(m.rows());
  if (k > n) throw std::invalid_argument("k: exceeds matrix size");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("matrix: not symmetric within 1e-10");
  }
  // Symmetrize the last bits so the solver sees an exactly symmetric input.
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");
  EigenPairs out;
  const auto kk = static_cast<Eigen::Index>(k);
  out.values = solver.eigenvalues().head(kk);
  out.vectors = solver.eigenvectors().leftCols(kk);
  return out;
}

std::size_t connected_components(const Matrix& weights) {
  const Eigen::Index n = weights.rows();
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  };
  std::size_t components = static_cast<std::size_t>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (weights(i, j) > 0.0 || weights(j, i) > 0.0) {
        const auto ri = find(i), rj = find(j);
        if (ri != rj) {
          parent[static_cast<std::size_t>(ri)] = rj;
          --components;
        }
      }
    }
  }
  return components;
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("csv: ragged matrix");
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

}  // namespace icssl
