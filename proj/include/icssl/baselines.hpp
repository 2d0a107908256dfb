#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace icssl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct FitOptions {
  double gradient_tolerance = 1e-8;
  std::size_t max_iterations = 100000;
};

// Multinomial logistic regression. Linear models keep (k+1) x C weights with
// the bias in the last row; kernel models keep m x C dual coefficients, a
// bias per class and the training points.
struct LogRegModel {
  bool kernel = false;
  Matrix weights;
  Matrix dual;
  Vector bias;
  Matrix support;
  double lambda_reg = 1e-2;
  double gamma_b = 10.0;
  int num_classes = 0;

  bool converged = false;
  double gradient_norm = 0.0;
  double objective = 0.0;
  std::size_t iterations = 0;
};

// Mean cross-entropy + (lambda/2) |W|^2 over the non-bias rows.
double logreg_objective(const Matrix& features, std::span<const int> labels, int num_classes,
                        double lambda_reg, const Matrix& weights);
Matrix logreg_gradient(const Matrix& features, std::span<const int> labels, int num_classes,
                       double lambda_reg, const Matrix& weights);

// Weighted mean cross-entropy of scores K alpha + 1 b^T plus
// (lambda/2) tr(alpha^T K alpha). `sample_weights` empty means all ones.
double kernel_logreg_objective(const Matrix& gram, std::span<const int> labels,
                               std::span<const double> sample_weights, int num_classes,
                               double lambda_reg, const Matrix& dual, const Vector& bias);
void kernel_logreg_gradient(const Matrix& gram, std::span<const int> labels,
                            std::span<const double> sample_weights, int num_classes,
                            double lambda_reg, const Matrix& dual, const Vector& bias,
                            Matrix& grad_dual, Vector& grad_bias);

// exp(-gamma |a_i - b_j|^2), rows are samples.
Matrix rbf_gram(const Matrix& a, const Matrix& b, double gamma);

// features: m x k. num_classes = 0 infers max(label) + 1. Every class must
// appear; a single observed class throws std::invalid_argument.
LogRegModel fit_logreg(const Matrix& features, std::span<const int> labels, double lambda_reg,
                       int num_classes = 0, const FitOptions& opts = {});

LogRegModel fit_kernel_logreg(const Matrix& points, std::span<const int> labels, double gamma_b,
                              double lambda_reg, int num_classes = 0,
                              std::span<const double> sample_weights = {},
                              const FitOptions& opts = {});

// n x C probabilities for feature rows (linear) or point rows (kernel).
Matrix predict_logreg(const LogRegModel& model, const Matrix& x);

}  // namespace icssl
