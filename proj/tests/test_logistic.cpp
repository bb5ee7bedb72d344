#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "debias/error.hpp"
#include "debias/logistic.hpp"

using namespace debias;

namespace {

struct Problem {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

Problem random_problem(int rows, int dim, std::uint64_t seed, double noise = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  Problem p{Eigen::MatrixXd(rows, dim), {}};
  Eigen::VectorXd w(dim);
  for (int j = 0; j < dim; ++j) w[j] = n01(gen);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < dim; ++j) p.x(i, j) = n01(gen);
    p.y.push_back(p.x.row(i).dot(w) + noise * n01(gen) > 0 ? 2 : 1);
  }
  return p;
}

// Loss written directly from its definition, for comparison.
double naive_loss(const Problem& p, const Eigen::VectorXd& params, double lambda) {
  const auto d = p.x.cols();
  double s = 0;
  for (Eigen::Index i = 0; i < p.x.rows(); ++i) {
    const double z = p.x.row(i).dot(params.head(d)) + params[d];
    const double prob2 = 1.0 / (1.0 + std::exp(-z));
    s -= std::log(p.y[static_cast<std::size_t>(i)] == 2 ? prob2 : 1.0 - prob2);
  }
  return s + 0.5 * lambda * params.head(d).squaredNorm();
}

}  // namespace

TEST_CASE("two separable points are classified correctly") {
  Eigen::MatrixXd x(2, 1);
  x << -1.0, 1.0;
  const std::vector<int> y = {1, 2};
  TrainReport rep;
  const auto model = train_linear_classifier(x, y, {}, &rep);
  CHECK(rep.converged);
  CHECK_FALSE(rep.degenerate);
  CHECK(predict(model, std::vector<double>{-1.0}) == 1);
  CHECK(predict(model, std::vector<double>{1.0}) == 2);
}

TEST_CASE("single-label training set gives the constant predictor") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 3);
  const std::vector<int> ones(10, 1);
  TrainReport rep;
  const auto model = train_linear_classifier(x, ones, {}, &rep);
  CHECK(rep.degenerate);
  CHECK(rep.constant_label == 1);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd q = Eigen::VectorXd::Random(3) * 100;
    CHECK(predict(model, std::span<const double>(q.data(), 3)) == 1);
  }
  const auto model2 = train_linear_classifier(x, std::vector<int>(10, 2), {});
  CHECK(predict(model2, std::vector<double>{0, 0, 0}) == 2);
}

TEST_CASE("objective value matches the direct formula") {
  const auto p = random_problem(50, 4, 11);
  const LogisticObjective obj(p.x, p.y, 0.7);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXd params(5);
    for (int j = 0; j < 5; ++j) params[j] = n01(gen);
    CHECK(obj.value(params) == doctest::Approx(naive_loss(p, params, 0.7)).epsilon(1e-12));
  }
}

TEST_CASE("gradient agrees with central finite differences") {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> n01;
  for (int prob = 0; prob < 5; ++prob) {
    const auto p = random_problem(50, 4, 100 + static_cast<std::uint64_t>(prob));
    const LogisticObjective obj(p.x, p.y, 1.0);
    for (int pt = 0; pt < 5; ++pt) {
      Eigen::VectorXd params(5);
      for (int j = 0; j < 5; ++j) params[j] = n01(gen);
      const Eigen::VectorXd g = obj.gradient(params);
      const double h = 1e-6;
      for (int j = 0; j < 5; ++j) {
        Eigen::VectorXd a = params, b = params;
        a[j] += h;
        b[j] -= h;
        const double fd = (obj.value(a) - obj.value(b)) / (2 * h);
        CHECK(std::abs(fd - g[j]) / std::max(1.0, std::abs(fd)) < 1e-4);
      }
    }
  }
}

TEST_CASE("hessian agrees with finite differences of the gradient") {
  const auto p = random_problem(40, 3, 7);
  const LogisticObjective obj(p.x, p.y, 0.5);
  Eigen::VectorXd params(4);
  params << 0.3, -0.2, 0.5, 0.1;
  const Eigen::MatrixXd hess = obj.hessian(params);
  const double h = 1e-6;
  for (int j = 0; j < 4; ++j) {
    Eigen::VectorXd a = params, b = params;
    a[j] += h;
    b[j] -= h;
    const Eigen::VectorXd col = (obj.gradient(a) - obj.gradient(b)) / (2 * h);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(col[i] - hess(i, j)) < 1e-5);
  }
}

TEST_CASE("prediction threshold: exact tie goes to label 1") {
  LinearModel m{Eigen::VectorXd::Zero(2), 0.0};
  CHECK(predict(m, std::vector<double>{5, -3}) == 1);
  LinearModel one{Eigen::VectorXd::Ones(1), 0.0};
  CHECK(predict(one, std::vector<double>{3.0}) == 2);
  CHECK(predict(one, std::vector<float>{-3.0f}) == 1);
  LinearModel shifted{Eigen::VectorXd::Ones(1), -3.0};
  CHECK(predict(shifted, std::vector<double>{3.0}) == 1);
}

TEST_CASE("predictions agree with the sigmoid at 0.5 on 1,000 points") {
  const auto p = random_problem(300, 6, 9);
  const auto model = train_linear_classifier(p.x, p.y, {});
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> q(6);
    for (auto& v : q) v = n01(gen);
    double z = model.bias;
    for (int j = 0; j < 6; ++j) z += model.weights[j] * q[static_cast<std::size_t>(j)];
    const double prob = 1.0 / (1.0 + std::exp(-z));
    CHECK(predict(model, q) == (prob > 0.5 ? 2 : 1));
  }
}

TEST_CASE("training decreases the loss and reaches the gradient tolerance") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = random_problem(200, 8, seed, 0.5);
    TrainReport rep;
    train_linear_classifier(p.x, p.y, {}, &rep);
    CHECK(rep.final_loss <= rep.initial_loss);
    CHECK(rep.converged);
    CHECK(rep.grad_max_norm <= 1e-6);
  }
}

TEST_CASE("training is deterministic") {
  const auto p = random_problem(100, 5, 77);
  const auto a = train_linear_classifier(p.x, p.y, {});
  const auto b = train_linear_classifier(p.x, p.y, {});
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
}

TEST_CASE("separable data without regularization still terminates") {
  Eigen::MatrixXd x(4, 1);
  x << -2, -1, 1, 2;
  const std::vector<int> y = {1, 1, 2, 2};
  TrainReport rep;
  const auto model = train_linear_classifier(x, y, {0.0, 50, 1e-6}, &rep);
  CHECK(rep.iterations <= 50);
  CHECK(predict(model, std::vector<double>{2}) == 2);
  CHECK(predict(model, std::vector<double>{-2}) == 1);
}

TEST_CASE("invalid inputs are rejected") {
  LinearModel m{Eigen::VectorXd::Zero(3), 0.0};
  CHECK_THROWS_AS(predict(m, std::vector<double>{1, 2}), InvalidArgument);

  Eigen::MatrixXd x(2, 1);
  x << 1.0, std::nan("");
  CHECK_THROWS_AS(train_linear_classifier(x, std::vector<int>{1, 2}, {}), InvalidArgument);
  x << 1.0, 2.0;
  CHECK_THROWS_AS(train_linear_classifier(x, std::vector<int>{1, 3}, {}), InvalidArgument);
  CHECK_THROWS_AS(train_linear_classifier(x, std::vector<int>{1}, {}), InvalidArgument);
  CHECK_THROWS_AS(train_linear_classifier(Eigen::MatrixXd(0, 1), std::vector<int>{}, {}),
                  InvalidArgument);
  CHECK_THROWS_AS(LogisticObjective(x, std::vector<int>{1, 2}, -1.0), InvalidArgument);
}
