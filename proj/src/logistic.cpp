#include "debias/logistic.hpp"

#include <algorithm>
#include <cmath>

#include "debias/error.hpp"

namespace debias {
namespace {

// log(1 + exp(a)) without overflow.
double softplus(double a) { return a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }

double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

template <typename T>
int predict_impl(const LinearModel& model, std::span<const T> x) {
  if (static_cast<Eigen::Index>(x.size()) != model.weights.size())
    throw InvalidArgument("predict: input has " + std::to_string(x.size()) +
                          " features, model expects " + std::to_string(model.weights.size()));
  double z = model.bias;
  for (std::size_t j = 0; j < x.size(); ++j) z += model.weights[static_cast<Eigen::Index>(j)] * x[j];
  return z > 0 ? 2 : 1;
}

}  // namespace

int predict(const LinearModel& model, std::span<const double> x) { return predict_impl(model, x); }
int predict(const LinearModel& model, std::span<const float> x) { return predict_impl(model, x); }

LogisticObjective::LogisticObjective(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                     std::span<const int> labels, double regularizer_strength)
    : features_(features), targets_(static_cast<Eigen::Index>(labels.size())),
      lambda_(regularizer_strength) {
  if (static_cast<Eigen::Index>(labels.size()) != features_.rows())
    throw InvalidArgument("logistic: label count does not match feature rows");
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_))
    throw InvalidArgument("logistic: regularizer strength must be finite and nonnegative");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1 && labels[i] != 2) throw InvalidArgument("logistic: label outside {1,2}");
    targets_[static_cast<Eigen::Index>(i)] = labels[i] == 2 ? 1.0 : -1.0;
  }
}

double LogisticObjective::value(const Eigen::VectorXd& params) const {
  const auto d = features_.cols();
  const Eigen::VectorXd margins =
      ((features_ * params.head(d)).array() + params[d]).matrix().cwiseProduct(targets_);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) loss += softplus(-margins[i]);
  return loss + 0.5 * lambda_ * params.head(d).squaredNorm();
}

Eigen::VectorXd LogisticObjective::gradient(const Eigen::VectorXd& params) const {
  const auto d = features_.cols();
  const Eigen::VectorXd z = (features_ * params.head(d)).array() + params[d];
  Eigen::VectorXd g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) g[i] = -targets_[i] * sigmoid(-targets_[i] * z[i]);
  Eigen::VectorXd grad(d + 1);
  grad.head(d).noalias() = features_.transpose() * g;
  grad.head(d) += lambda_ * params.head(d);
  grad[d] = g.sum();
  return grad;
}

Eigen::MatrixXd LogisticObjective::hessian(const Eigen::VectorXd& params) const {
  const auto d = features_.cols();
  const Eigen::VectorXd z = (features_ * params.head(d)).array() + params[d];
  Eigen::VectorXd curvature(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double s = sigmoid(z[i]);
    curvature[i] = s * (1.0 - s);
  }
  const Eigen::MatrixXd scaled = features_.array().colwise() * curvature.array().sqrt();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d + 1, d + 1);
  h.topLeftCorner(d, d).selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  h.topLeftCorner(d, d) = h.topLeftCorner(d, d).selfadjointView<Eigen::Lower>();
  h.topLeftCorner(d, d).diagonal().array() += lambda_;
  const Eigen::VectorXd cross = features_.transpose() * curvature;
  h.col(d).head(d) = cross;
  h.row(d).head(d) = cross.transpose();
  h(d, d) = curvature.sum();
  return h;
}

LinearModel train_linear_classifier(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                    std::span<const int> labels, const TrainOptions& options,
                                    TrainReport* report) {
  if (features.rows() == 0) throw InvalidArgument("train_linear_classifier: no training rows");
  if (static_cast<Eigen::Index>(labels.size()) != features.rows())
    throw InvalidArgument("train_linear_classifier: label count does not match feature rows");
  if (!features.allFinite()) throw InvalidArgument("train_linear_classifier: non-finite feature");
  if (options.max_opt_iters < 0 || !(options.grad_tolerance > 0))
    throw InvalidArgument("train_linear_classifier: invalid optimizer settings");

  const auto d = features.cols();
  TrainReport local;
  TrainReport& rep = report ? *report : local;
  rep = TrainReport{};

  LinearModel model{Eigen::VectorXd::Zero(d), 0.0};
  const bool all_same = std::all_of(labels.begin(), labels.end(),
                                    [&](int l) { return l == labels.front(); });
  if (all_same && !labels.empty()) {
    rep.degenerate = true;
    rep.constant_label = labels.front();
    rep.converged = true;
    if (labels.front() != 1 && labels.front() != 2)
      throw InvalidArgument("logistic: label outside {1,2}");
    model.bias = labels.front() == 2 ? 1.0 : -1.0;
    return model;
  }

  const LogisticObjective objective(features, labels, options.regularizer_strength);
  Eigen::VectorXd params = Eigen::VectorXd::Zero(d + 1);
  double loss = objective.value(params);
  rep.initial_loss = loss;
  Eigen::VectorXd grad = objective.gradient(params);

  constexpr double kArmijo = 1e-4;
  int iter = 0;
  for (; iter < options.max_opt_iters; ++iter) {
    if (grad.cwiseAbs().maxCoeff() <= options.grad_tolerance) break;
    Eigen::MatrixXd h = objective.hessian(params);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) step = ldlt.solve(grad);
    if (step.size() == 0 || !step.allFinite() || step.dot(grad) <= 0) {
      // Hessian not usable (e.g. unregularized and separable); fall back to
      // a gradient step.
      step = grad;
    }
    const double slope = step.dot(grad);
    const double grad_norm = grad.cwiseAbs().maxCoeff();
    // Loss differences below this are rounding noise; there the step is
    // judged by the gradient instead.
    const double flat = 1e-12 * std::max(1.0, std::abs(loss));
    double t = 1.0;
    Eigen::VectorXd candidate, candidate_grad;
    double candidate_loss = loss;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      candidate = params - t * step;
      candidate_loss = objective.value(candidate);
      if (candidate_loss <= loss - kArmijo * t * slope) {
        accepted = true;
        break;
      }
      if (candidate_loss <= loss + flat) {
        candidate_grad = objective.gradient(candidate);
        if (candidate_grad.cwiseAbs().maxCoeff() < grad_norm) {
          accepted = true;
          break;
        }
        candidate_grad.resize(0);
      }
    }
    if (!accepted) break;  // at the floating-point floor
    params = std::move(candidate);
    loss = candidate_loss;
    grad = candidate_grad.size() ? std::move(candidate_grad) : objective.gradient(params);
  }

  rep.iterations = iter;
  rep.final_loss = loss;
  rep.grad_max_norm = grad.cwiseAbs().maxCoeff();
  rep.converged = rep.grad_max_norm <= options.grad_tolerance;
  model.weights = params.head(d);
  model.bias = params[d];
  return model;
}

}  // namespace debias
