#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace icssl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Class embeddings w_c, one per column (d' x C).
struct ClassEmbeddings {
  Matrix w;

  static ClassEmbeddings scaled_identity(int num_classes, double beta = 2.0);
  int num_classes() const { return static_cast<int>(w.cols()); }
  Eigen::Index dim() const { return w.rows(); }
};

enum class IclKernelType { Linear, Rbf };
enum class EraseMode { ExactDelta, FiniteLambda };

struct IclConfig {
  double alpha = 1.0;
  std::size_t layers = 20;
  IclKernelType kernel = IclKernelType::Rbf;
  double kernel_gamma = 1.0;  // exp(-gamma |phi_i - phi_j|^2) for Rbf
  EraseMode erase = EraseMode::ExactDelta;
  double lambda = 1e4;        // sharpening of the erase head in FiniteLambda mode
  bool divide_by_m = true;
};

// Token layout per column i: [f; E(w|f); w_{y_i}; phi]. Y columns of
// unlabeled tokens are zero.
struct IclState {
  Matrix f;
  Matrix expectation;
  Matrix y;
  Matrix phi;  // k x n
  std::vector<bool> labeled;
  std::size_t layer = 0;

  Eigen::Index tokens() const { return phi.cols(); }
  std::size_t labeled_count() const;
};

// sum_c w_c softmax_c(w_c^T f).
Vector exact_expectation(const Vector& f, const ClassEmbeddings& emb);

// Class probabilities softmax_c(w_c^T f).
Vector class_probabilities(const Vector& f, const ClassEmbeddings& emb);

// kappa(phi_i, phi_j) for the configured kernel.
double icl_kernel(const IclConfig& cfg, const Eigen::Ref<const Vector>& a,
                  const Eigen::Ref<const Vector>& b);

// labels: one entry per token, kUnlabeled (-1) or a class index.
IclState init_state(const Matrix& phi, std::span<const int> labels, const ClassEmbeddings& emb);

/// One two-head attention layer plus the expectation slot update.
///
/// Head 1 adds (alpha / m) sum_{j labeled} (w_{y_j} - E_j) kappa(phi_i, phi_j)
/// to f_i for every token. Head 2 erases E (exactly, or by the
/// lambda-sharpened RBF readback), and the expectation slot is then rewritten
/// from the updated f.
IclState gd_layer(const IclState& state, const ClassEmbeddings& emb, const IclConfig& cfg);

// Runs init_state and cfg.layers GD layers. Returns n x C probabilities.
Matrix forward(const Matrix& phi, std::span<const int> labels, const ClassEmbeddings& emb,
               const IclConfig& cfg);
// Same, also returning the final state.
Matrix forward(const Matrix& phi, std::span<const int> labels, const ClassEmbeddings& emb,
               const IclConfig& cfg, IclState& final_state);

Matrix probabilities(const IclState& state, const ClassEmbeddings& emb);

// Row-wise argmax; exact ties resolve to the smallest class index.
std::vector<int> predict(const Matrix& probs);

// Mean negative log-likelihood of the true class over tokens flagged in
// `evaluate_mask` (normally the unlabeled ones).
double icl_loss(const Matrix& probs, std::span<const int> true_labels,
                const std::vector<bool>& evaluate_mask);

// Mean cross-entropy on the labeled tokens, the objective head 1 descends.
double labeled_objective(const IclState& state, const ClassEmbeddings& emb,
                         std::span<const int> labels);

}  // namespace icssl
