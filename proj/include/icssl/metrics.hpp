#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace icssl {

using Matrix = Eigen::MatrixXd;

// Fraction of masked entries where pred == truth. An empty mask argument
// means every entry.
double accuracy(std::span<const int> pred, std::span<const int> truth,
                const std::vector<bool>& mask = {});

// Mean within-class pairwise cosine (i != j, averaged per class, then over
// classes) minus the mean cosine over pairs from distinct classes.
// vectors: n x k, one embedding per row.
double separation_score(const Matrix& vectors, std::span<const int> labels);

// Indices of the k nearest rows of x to row i (Euclidean, self excluded,
// equal distances resolved toward the smaller index), nearest first.
std::vector<std::size_t> knn_indices(const Matrix& x, std::size_t i, std::size_t k);

// Mean over samples of |N_A(i) ∩ N_B(i)| / k.
double mutual_knn_alignment(const Matrix& a, const Matrix& b, std::size_t k);

}  // namespace icssl
