#pragma once

#include <Eigen/Dense>
#include <span>

namespace debias {

struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

// Label 2 iff w.x + b > 0; an exact tie goes to label 1.
int predict(const LinearModel& model, std::span<const double> x);
int predict(const LinearModel& model, std::span<const float> x);

struct TrainOptions {
  double regularizer_strength = 1.0;
  int max_opt_iters = 1000;
  double grad_tolerance = 1e-6;
};

struct TrainReport {
  int iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double grad_max_norm = 0.0;
  bool converged = false;
  // Single-label training set; the model is the constant predictor.
  bool degenerate = false;
  int constant_label = 0;
};

// Binary logistic loss summed over rows plus (lambda/2)|w|^2; the bias is
// not penalized. Labels are 1/2 and map to targets -1/+1. Parameters are
// packed as [w..., b].
class LogisticObjective {
 public:
  LogisticObjective(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const int> labels,
                    double regularizer_strength);

  Eigen::Index parameter_count() const { return features_.cols() + 1; }
  double value(const Eigen::VectorXd& params) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& params) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& params) const;

 private:
  Eigen::Ref<const Eigen::MatrixXd> features_;
  Eigen::VectorXd targets_;  // +-1
  double lambda_;
};

// Damped Newton from the zero vector until max|grad| <= grad_tolerance or
// max_opt_iters. Deterministic for fixed inputs.
LinearModel train_linear_classifier(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                    std::span<const int> labels, const TrainOptions& options,
                                    TrainReport* report = nullptr);

}  // namespace debias
