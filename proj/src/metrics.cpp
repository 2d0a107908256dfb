#include "icssl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace icssl {

double accuracy(std::span<const int> pred, std::span<const int> truth, const std::vector<bool>& mask) {
  if (pred.size() != truth.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (!mask.empty() && mask.size() != pred.size()) throw std::invalid_argument("accuracy: mask length mismatch");
  std::size_t hits = 0, total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    ++total;
    hits += pred[i] == truth[i] ? 1 : 0;
  }
  if (total == 0) throw std::invalid_argument("accuracy: empty mask");
  return static_cast<double>(hits) / static_cast<double>(total);
}

double separation_score(const Matrix& vectors, std::span<const int> labels) {
  const Eigen::Index n = vectors.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw std::invalid_argument("separation_score: length mismatch");
  if (!vectors.allFinite()) throw std::invalid_argument("separation_score: non-finite embedding");

  Matrix unit = vectors;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = unit.row(i).norm();
    if (norm == 0.0) throw std::invalid_argument("separation_score: zero vector at row " + std::to_string(i));
    unit.row(i) /= norm;
  }
  std::map<int, std::vector<Eigen::Index>> classes;
  for (Eigen::Index i = 0; i < n; ++i) classes[labels[static_cast<std::size_t>(i)]].push_back(i);
  if (classes.size() < 2) throw std::invalid_argument("separation_score: need at least 2 classes");
  for (const auto& [c, members] : classes) {
    if (members.size() < 2) {
      throw std::invalid_argument("separation_score: class " + std::to_string(c) + " has a single member");
    }
  }
  const Matrix cos = unit * unit.transpose();

  double intra = 0.0;
  for (const auto& [c, members] : classes) {
    double s = 0.0;
    for (auto i : members)
      for (auto j : members)
        if (i != j) s += cos(i, j);
    const double sz = static_cast<double>(members.size());
    intra += s / (sz * (sz - 1.0));
  }
  intra /= static_cast<double>(classes.size());

  double inter = 0.0;
  double pairs = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) continue;
      inter += cos(i, j);
      pairs += 1.0;
    }
  }
  return intra - inter / pairs;
}

std::vector<std::size_t> knn_indices(const Matrix& x, std::size_t i, std::size_t k) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (i >= n) throw std::invalid_argument("knn_indices: row index out of range");
  if (k < 1 || k >= n) throw std::invalid_argument("k: must satisfy 1 <= k < n");
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    d.emplace_back((x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).squaredNorm(), j);
  }
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t r = 0; r < k; ++r) out[r] = d[r].second;
  return out;
}

double mutual_knn_alignment(const Matrix& a, const Matrix& b, std::size_t k) {
  if (a.rows() != b.rows()) throw std::invalid_argument("mutual_knn_alignment: sample counts differ");
  const auto n = static_cast<std::size_t>(a.rows());
  if (k == 0 || k >= n) throw std::invalid_argument("mutual_knn_alignment: k must satisfy 1 <= k < n");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto na = knn_indices(a, i, k);
    auto nb = knn_indices(b, i, k);
    std::sort(na.begin(), na.end());
    std::sort(nb.begin(), nb.end());
    std::vector<std::size_t> common;
    std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(common));
    total += static_cast<double>(common.size()) / static_cast<double>(k);
  }
  return total / static_cast<double>(n);
}

}  // namespace icssl
