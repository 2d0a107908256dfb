#include "icssl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace icssl {

namespace {

int check_labels(std::span<const int> labels, Eigen::Index rows, int num_classes) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw std::invalid_argument("labels: length must equal the number of rows");
  }
  if (rows < 2) throw std::invalid_argument("fit: need at least 2 labeled samples");
  int max_label = -1;
  for (int y : labels) {
    if (y < 0) throw std::invalid_argument("labels: negative class index");
    max_label = std::max(max_label, y);
  }
  const int c = num_classes > 0 ? num_classes : max_label + 1;
  if (max_label >= c) throw std::invalid_argument("labels: class index >= num_classes");
  std::vector<bool> seen(static_cast<std::size_t>(c), false);
  for (int y : labels) seen[static_cast<std::size_t>(y)] = true;
  const auto present = std::count(seen.begin(), seen.end(), true);
  if (present < 2) throw std::invalid_argument("fit: single-class input");
  if (present < c) throw std::invalid_argument("fit: not every class is present");
  return c;
}

// Row-wise softmax of scores in place, returns the sum of -log p_{y_i} * w_i.
double softmax_rows(Matrix& scores, std::span<const int> labels, std::span<const double> w) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double mx = scores.row(i).maxCoeff();
    scores.row(i) = (scores.row(i).array() - mx).exp();
    const double z = scores.row(i).sum();
    if (!labels.empty()) {
      const double wi = w.empty() ? 1.0 : w[static_cast<std::size_t>(i)];
      loss += wi * (std::log(z) - std::log(scores(i, labels[static_cast<std::size_t>(i)])));
    }
    scores.row(i) /= z;
  }
  return loss;
}

Matrix augment(const Matrix& x) {
  Matrix a(x.rows(), x.cols() + 1);
  a.leftCols(x.cols()) = x;
  a.col(x.cols()).setOnes();
  return a;
}

double total_weight(std::span<const double> w, Eigen::Index m) {
  if (w.empty()) return static_cast<double>(m);
  double s = 0.0;
  for (double v : w) s += v;
  return s;
}

// Parameters packed as one matrix so both models share the optimizer.
struct Problem {
  std::function<double(const Matrix&)> objective;
  std::function<Matrix(const Matrix&)> gradient;
  // Search direction for a given gradient; identity for plain GD.
  std::function<Matrix(const Matrix&, const Matrix&)> direction;
};

struct Solution {
  Matrix theta;
  bool converged = false;
  double grad_norm = 0.0;
  double objective = 0.0;
  std::size_t iterations = 0;
};

// Gradient descent with Armijo backtracking. The trial step starts from the
// Barzilai-Borwein estimate of the previous iteration.
Solution minimize(const Problem& pb, Matrix theta, const FitOptions& opts) {
  Solution out;
  double f = pb.objective(theta);
  Matrix g = pb.gradient(theta);
  Matrix d = pb.direction(theta, g);
  double step = 1.0;
  Matrix prev_theta, prev_d;
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    out.grad_norm = g.norm();
    if (out.grad_norm <= opts.gradient_tolerance) {
      out.converged = true;
      break;
    }
    if (it > 0) {
      const Matrix s = theta - prev_theta;
      const Matrix y = d - prev_d;
      const double sy = (s.array() * y.array()).sum();
      step = sy > 0.0 ? s.squaredNorm() / sy : 1.0;
      step = std::clamp(step, 1e-10, 1e10);
    }
    const double slope = (g.array() * d.array()).sum();
    if (!(slope > 0.0)) break;  // no descent left at machine precision
    Matrix trial;
    double f_trial = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      trial = theta - step * d;
      f_trial = pb.objective(trial);
      // The slack absorbs rounding in f once the decrease nears machine
      // precision, which otherwise stalls the search just short of tolerance.
      const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::fabs(f);
      if (std::isfinite(f_trial) && f_trial <= f - 1e-4 * step * slope + slack) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    prev_theta = std::move(theta);
    prev_d = std::move(d);
    theta = std::move(trial);
    f = f_trial;
    g = pb.gradient(theta);
    d = pb.direction(theta, g);
    ++out.iterations;
  }
  out.grad_norm = g.norm();
  out.converged = out.grad_norm <= opts.gradient_tolerance;
  out.objective = f;
  out.theta = std::move(theta);
  return out;
}

}  // namespace

Matrix rbf_gram(const Matrix& a, const Matrix& b, double gamma) {
  if (a.cols() != b.cols()) throw std::invalid_argument("rbf_gram: dimension mismatch");
  Matrix k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      k(i, j) = std::exp(-gamma * (a.row(i) - b.row(j)).squaredNorm());
    }
  }
  return k;
}

double logreg_objective(const Matrix& features, std::span<const int> labels, int num_classes,
                        double lambda_reg, const Matrix& weights) {
  const Eigen::Index k = features.cols();
  Matrix scores = augment(features) * weights;
  (void)num_classes;
  const double ce = softmax_rows(scores, labels, {}) / static_cast<double>(features.rows());
  return ce + 0.5 * lambda_reg * weights.topRows(k).squaredNorm();
}

Matrix logreg_gradient(const Matrix& features, std::span<const int> labels, int num_classes,
                       double lambda_reg, const Matrix& weights) {
  const Eigen::Index k = features.cols(), m = features.rows();
  const Matrix xa = augment(features);
  Matrix p = xa * weights;
  softmax_rows(p, {}, {});
  for (Eigen::Index i = 0; i < m; ++i) p(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  (void)num_classes;
  Matrix g = xa.transpose() * p / static_cast<double>(m);
  g.topRows(k) += lambda_reg * weights.topRows(k);
  return g;
}

double kernel_logreg_objective(const Matrix& gram, std::span<const int> labels,
                               std::span<const double> sample_weights, int num_classes,
                               double lambda_reg, const Matrix& dual, const Vector& bias) {
  (void)num_classes;
  const Matrix kd = gram * dual;
  Matrix scores = kd.rowwise() + bias.transpose();
  const double ce =
      softmax_rows(scores, labels, sample_weights) / total_weight(sample_weights, gram.rows());
  return ce + 0.5 * lambda_reg * (dual.array() * kd.array()).sum();
}

namespace {

// Weighted residual (P - Y) / sum(w), one row per sample.
Matrix kernel_residual(const Matrix& gram, std::span<const int> labels,
                       std::span<const double> w, const Matrix& dual, const Vector& bias) {
  Matrix p = (gram * dual).rowwise() + bias.transpose();
  softmax_rows(p, {}, {});
  const double total = total_weight(w, gram.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    p(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    p.row(i) *= (w.empty() ? 1.0 : w[static_cast<std::size_t>(i)]) / total;
  }
  return p;
}

}  // namespace

void kernel_logreg_gradient(const Matrix& gram, std::span<const int> labels,
                            std::span<const double> sample_weights, int num_classes,
                            double lambda_reg, const Matrix& dual, const Vector& bias,
                            Matrix& grad_dual, Vector& grad_bias) {
  (void)num_classes;
  const Matrix r = kernel_residual(gram, labels, sample_weights, dual, bias);
  grad_dual = gram * (r + lambda_reg * dual);
  grad_bias = r.colwise().sum().transpose();
}

LogRegModel fit_logreg(const Matrix& features, std::span<const int> labels, double lambda_reg,
                       int num_classes, const FitOptions& opts) {
  if (!(lambda_reg >= 0.0)) throw std::invalid_argument("lambda_reg: must be >= 0");
  const int c = check_labels(labels, features.rows(), num_classes);
  const Eigen::Index k = features.cols();

  Problem pb;
  pb.objective = [&](const Matrix& w) { return logreg_objective(features, labels, c, lambda_reg, w); };
  pb.gradient = [&](const Matrix& w) { return logreg_gradient(features, labels, c, lambda_reg, w); };
  pb.direction = [](const Matrix&, const Matrix& g) { return g; };
  const Solution sol = minimize(pb, Matrix::Zero(k + 1, c), opts);

  LogRegModel model;
  model.weights = sol.theta;
  model.lambda_reg = lambda_reg;
  model.num_classes = c;
  model.converged = sol.converged;
  model.gradient_norm = sol.grad_norm;
  model.objective = sol.objective;
  model.iterations = sol.iterations;
  return model;
}

LogRegModel fit_kernel_logreg(const Matrix& points, std::span<const int> labels, double gamma_b,
                              double lambda_reg, int num_classes,
                              std::span<const double> sample_weights, const FitOptions& opts) {
  if (!(gamma_b >= 0.0)) throw std::invalid_argument("gamma_b: must be >= 0");
  if (!(lambda_reg >= 0.0)) throw std::invalid_argument("lambda_reg: must be >= 0");
  const int c = check_labels(labels, points.rows(), num_classes);
  const Eigen::Index m = points.rows();
  if (!sample_weights.empty()) {
    if (static_cast<Eigen::Index>(sample_weights.size()) != m) {
      throw std::invalid_argument("sample_weights: length must equal the number of rows");
    }
    for (double w : sample_weights) {
      if (!(w > 0.0)) throw std::invalid_argument("sample_weights: must be > 0");
    }
  }
  const Matrix gram = rbf_gram(points, points, gamma_b);

  // theta = [dual; bias^T], (m + 1) x C.
  auto unpack = [m](const Matrix& theta, Matrix& dual, Vector& bias) {
    dual = theta.topRows(m);
    bias = theta.row(m).transpose();
  };
  Problem pb;
  pb.objective = [&](const Matrix& theta) {
    Matrix dual;
    Vector bias;
    unpack(theta, dual, bias);
    return kernel_logreg_objective(gram, labels, sample_weights, c, lambda_reg, dual, bias);
  };
  pb.gradient = [&](const Matrix& theta) {
    Matrix dual, gd;
    Vector bias, gb;
    unpack(theta, dual, bias);
    kernel_logreg_gradient(gram, labels, sample_weights, c, lambda_reg, dual, bias, gd, gb);
    Matrix g(m + 1, c);
    g.topRows(m) = gd;
    g.row(m) = gb.transpose();
    return g;
  };
  // Functional gradient: the dual block of the gradient is K times this
  // direction, so it stays a descent direction while not being squashed by
  // the small eigenvalues of K.
  pb.direction = [&](const Matrix& theta, const Matrix& g) {
    Matrix dual;
    Vector bias;
    unpack(theta, dual, bias);
    Matrix d(m + 1, c);
    d.topRows(m) = kernel_residual(gram, labels, sample_weights, dual, bias) + lambda_reg * dual;
    d.row(m) = g.row(m);
    return d;
  };
  const Solution sol = minimize(pb, Matrix::Zero(m + 1, c), opts);

  LogRegModel model;
  model.kernel = true;
  unpack(sol.theta, model.dual, model.bias);
  model.support = points;
  model.lambda_reg = lambda_reg;
  model.gamma_b = gamma_b;
  model.num_classes = c;
  model.converged = sol.converged;
  model.gradient_norm = sol.grad_norm;
  model.objective = sol.objective;
  model.iterations = sol.iterations;
  return model;
}

Matrix predict_logreg(const LogRegModel& model, const Matrix& x) {
  Matrix scores;
  if (model.kernel) {
    if (x.cols() != model.support.cols()) throw std::invalid_argument("predict_logreg: dimension mismatch");
    scores = (rbf_gram(x, model.support, model.gamma_b) * model.dual).rowwise() + model.bias.transpose();
  } else {
    if (x.cols() + 1 != model.weights.rows()) throw std::invalid_argument("predict_logreg: dimension mismatch");
    scores = augment(x) * model.weights;
  }
  softmax_rows(scores, {}, {});
  return scores;
}

}  // namespace icssl
