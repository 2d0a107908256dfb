#include "icssl/icl_head.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "icssl/attention.hpp"
#include "icssl/manifolds.hpp"

namespace icssl {

ClassEmbeddings ClassEmbeddings::scaled_identity(int num_classes, double beta) {
  if (num_classes < 2) throw std::invalid_argument("num_classes: need at least 2 classes");
  ClassEmbeddings e;
  e.w = beta * Matrix::Identity(num_classes, num_classes);
  return e;
}

std::size_t IclState::labeled_count() const {
  std::size_t m = 0;
  for (bool b : labeled) m += b ? 1 : 0;
  return m;
}

Vector class_probabilities(const Vector& f, const ClassEmbeddings& emb) {
  Vector logits = emb.w.transpose() * f;
  logits.array() -= logits.maxCoeff();
  Vector p = logits.array().exp();
  return p / p.sum();
}

Vector exact_expectation(const Vector& f, const ClassEmbeddings& emb) {
  return emb.w * class_probabilities(f, emb);
}

double icl_kernel(const IclConfig& cfg, const Eigen::Ref<const Vector>& a,
                  const Eigen::Ref<const Vector>& b) {
  if (cfg.kernel == IclKernelType::Linear) return a.dot(b);
  return std::exp(-cfg.kernel_gamma * (a - b).squaredNorm());
}

IclState init_state(const Matrix& phi, std::span<const int> labels, const ClassEmbeddings& emb) {
  const Eigen::Index n = phi.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw std::invalid_argument("labels: length must equal the number of tokens");
  }
  IclState st;
  st.phi = phi;
  st.f = Matrix::Zero(emb.dim(), n);
  st.y = Matrix::Zero(emb.dim(), n);
  st.labeled.assign(static_cast<std::size_t>(n), false);
  const Vector e0 = exact_expectation(Vector::Zero(emb.dim()), emb);
  st.expectation = e0.replicate(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y == kUnlabeled) continue;
    if (y < 0 || y >= emb.num_classes()) {
      throw std::invalid_argument("labels: class " + std::to_string(y) + " outside [0, C)");
    }
    st.y.col(i) = emb.w.col(y);
    st.labeled[static_cast<std::size_t>(i)] = true;
  }
  if (st.labeled_count() == 0) throw std::invalid_argument("labels: no labeled tokens");
  return st;
}

namespace {

void check_config(const IclConfig& cfg) {
  if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) throw std::invalid_argument("alpha: must be finite and >= 0");
  if (cfg.kernel == IclKernelType::Rbf && !(cfg.kernel_gamma > 0.0)) {
    throw std::invalid_argument("kernel_gamma: must be > 0");
  }
  if (cfg.erase == EraseMode::FiniteLambda && !(cfg.lambda > 0.0)) throw std::invalid_argument("lambda: must be > 0");
}

}  // namespace

IclState gd_layer(const IclState& state, const ClassEmbeddings& emb, const IclConfig& cfg) {
  check_config(cfg);
  const std::size_t m = state.labeled_count();
  if (m == 0) throw std::invalid_argument("gd_layer: no labeled tokens");
  const Eigen::Index n = state.tokens();
  const double step = cfg.divide_by_m ? cfg.alpha / static_cast<double>(m) : cfg.alpha;

  // Head 1: functional gradient step driven by labeled residuals only.
  Matrix delta = Matrix::Zero(state.f.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!state.labeled[static_cast<std::size_t>(j)]) continue;
    const Vector residual = state.y.col(j) - state.expectation.col(j);
    for (Eigen::Index i = 0; i < n; ++i) {
      delta.col(i) += residual * icl_kernel(cfg, state.phi.col(i), state.phi.col(j));
    }
  }

  IclState next = state;
  next.layer = state.layer + 1;
  next.f = state.f + step * delta;

  // Head 2: erase the previous expectation.
  if (cfg.erase == EraseMode::ExactDelta) {
    next.expectation.setZero();
  } else {
    const Matrix sharpened = kernel_rbf(cfg.lambda * state.phi, cfg.lambda * state.phi);
    next.expectation = state.expectation - state.expectation * sharpened;
  }

  // Expectation slot: write E(w | f_{l+1}) into the cleared space.
  for (Eigen::Index i = 0; i < n; ++i) {
    next.expectation.col(i) += exact_expectation(next.f.col(i), emb);
  }
  return next;
}

Matrix probabilities(const IclState& state, const ClassEmbeddings& emb) {
  Matrix probs(state.tokens(), emb.num_classes());
  for (Eigen::Index i = 0; i < state.tokens(); ++i) {
    probs.row(i) = class_probabilities(state.f.col(i), emb).transpose();
  }
  return probs;
}

Matrix forward(const Matrix& phi, std::span<const int> labels, const ClassEmbeddings& emb,
               const IclConfig& cfg, IclState& final_state) {
  check_config(cfg);
  IclState st = init_state(phi, labels, emb);
  for (std::size_t l = 0; l < cfg.layers; ++l) st = gd_layer(st, emb, cfg);
  Matrix probs = probabilities(st, emb);
  final_state = std::move(st);
  return probs;
}

Matrix forward(const Matrix& phi, std::span<const int> labels, const ClassEmbeddings& emb,
               const IclConfig& cfg) {
  IclState st;
  return forward(phi, labels, emb, cfg, st);
}

std::vector<int> predict(const Matrix& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probs.cols(); ++c) {
      if (probs(i, c) > probs(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double icl_loss(const Matrix& probs, std::span<const int> true_labels,
                const std::vector<bool>& evaluate_mask) {
  if (static_cast<Eigen::Index>(true_labels.size()) != probs.rows() ||
      static_cast<Eigen::Index>(evaluate_mask.size()) != probs.rows()) {
    throw std::invalid_argument("icl_loss: length mismatch");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (!evaluate_mask[static_cast<std::size_t>(i)]) continue;
    const int y = true_labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= probs.cols()) throw std::invalid_argument("icl_loss: true label outside [0, C)");
    total -= std::log(probs(i, y));
    ++count;
  }
  if (count == 0) throw std::invalid_argument("icl_loss: no unlabeled tokens to evaluate");
  return total / static_cast<double>(count);
}

double labeled_objective(const IclState& state, const ClassEmbeddings& emb,
                         std::span<const int> labels) {
  double total = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < state.tokens(); ++i) {
    if (!state.labeled[static_cast<std::size_t>(i)]) continue;
    Vector logits = emb.w.transpose() * state.f.col(i);
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    total += lse - logits(labels[static_cast<std::size_t>(i)]);
    ++count;
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace icssl
