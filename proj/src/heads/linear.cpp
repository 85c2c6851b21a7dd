#include <Eigen/Core>
#include <cmath>

#include "activscope/error.hpp"
#include "activscope/heads.hpp"
#include "activscope/random.hpp"

namespace activscope::heads {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Standardized rows in canonical order, optionally with a trailing 1 column.
Matrix standardized(const FeatureMatrix& X, const Standardizer& s, const std::vector<std::size_t>& order,
                    bool with_bias_column) {
  Matrix Z(static_cast<Eigen::Index>(X.rows), static_cast<Eigen::Index>(X.cols + with_bias_column));
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto row = X.row(order[r]);
    for (std::size_t j = 0; j < X.cols; ++j) Z(r, j) = s.apply(j, row[j]);
    if (with_bias_column) Z(r, X.cols) = 1.0;
  }
  return Z;
}

Vector ordered_labels(const FeatureMatrix& X, const std::vector<std::size_t>& order, bool signs) {
  Vector y(static_cast<Eigen::Index>(X.rows));
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double v = X.labels[order[r]];
    y(r) = signs ? 2.0 * v - 1.0 : v;
  }
  return y;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double linear_score(const std::vector<double>& w, double b, const Standardizer& s,
                    std::span<const float> x) {
  if (x.size() != w.size()) {
    throw Error("dimension_mismatch", "model expects " + std::to_string(w.size()) +
                                          " features but row has " + std::to_string(x.size()));
  }
  double z = b;
  for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * s.apply(j, x[j]);
  return z;
}

}  // namespace

double LogisticModel::decision(std::span<const float> x) const {
  return linear_score(weights, bias, scaler, x);
}

double LogisticModel::probability(std::span<const float> x) const { return sigmoid(decision(x)); }

LogisticModel fit_logistic(const FeatureMatrix& X, const LogisticConfig& cfg) {
  require_two_classes(X);
  if (!(cfg.learning_rate > 0.0) || cfg.iterations < 1 || cfg.l2 < 0.0) {
    throw Error("invalid_config", "logistic needs learning_rate > 0, iterations >= 1, l2 >= 0");
  }
  LogisticModel model;
  model.config = cfg;
  model.scaler = cfg.standardize ? Standardizer::fit(X) : Standardizer::identity(X.cols);
  const auto order = canonical_order(X);
  const Matrix Z = standardized(X, model.scaler, order, false);
  const Vector y = ordered_labels(X, order, false);
  const double n = static_cast<double>(X.rows);

  Vector w = Vector::Zero(static_cast<Eigen::Index>(X.cols));
  double b = 0.0;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    Vector residual = Z * w;
    for (Eigen::Index i = 0; i < residual.size(); ++i) residual(i) = sigmoid(residual(i) + b) - y(i);
    const Vector gw = Z.transpose() * residual / n + cfg.l2 * w;
    const double gb = residual.sum() / n;
    w -= cfg.learning_rate * gw;
    b -= cfg.learning_rate * gb;
  }
  model.weights.assign(w.data(), w.data() + w.size());
  model.bias = b;
  return model;
}

double logistic_objective(const LogisticModel& model, const FeatureMatrix& X,
                          std::vector<double>* gradient) {
  check_dims(model.dims(), X);
  const auto order = canonical_order(X);
  const Matrix Z = standardized(X, model.scaler, order, false);
  const Vector y = ordered_labels(X, order, false);
  const Eigen::Map<const Vector> w(model.weights.data(), static_cast<Eigen::Index>(model.dims()));
  const double n = static_cast<double>(X.rows);
  const Vector z = (Z * w).array() + model.bias;
  double loss = 0.0;
  Vector residual(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    // -[y log p + (1-y) log(1-p)] = softplus(z) - y z
    loss += softplus(z(i)) - y(i) * z(i);
    residual(i) = sigmoid(z(i)) - y(i);
  }
  loss = loss / n + 0.5 * model.config.l2 * w.squaredNorm();
  if (gradient) {
    const Vector gw = Z.transpose() * residual / n + model.config.l2 * w;
    gradient->assign(gw.data(), gw.data() + gw.size());
    gradient->push_back(residual.sum() / n);
  }
  return loss;
}

double LinearSvmModel::decision(std::span<const float> x) const {
  return linear_score(weights, bias, scaler, x);
}

double hinge_loss(double label_sign, double score) { return std::max(0.0, 1.0 - label_sign * score); }

namespace {

double augmented_objective(const Matrix& Z, const Vector& y, const Vector& w, double lambda) {
  const Vector scores = Z * w;
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) hinge += hinge_loss(y(i), scores(i));
  return 0.5 * lambda * w.squaredNorm() + hinge / static_cast<double>(scores.size());
}

}  // namespace

LinearSvmModel fit_svm(const FeatureMatrix& X, const SvmConfig& cfg) {
  require_two_classes(X);
  if (!(cfg.lambda > 0.0) || cfg.epochs < 1) {
    throw Error("invalid_config", "svm needs lambda > 0 and epochs >= 1");
  }
  LinearSvmModel model;
  model.config = cfg;
  model.scaler = cfg.standardize ? Standardizer::fit(X) : Standardizer::identity(X.cols);
  const auto order = canonical_order(X);
  const Matrix Z = standardized(X, model.scaler, order, true);
  const Vector y = ordered_labels(X, order, true);

  const auto dim = Z.cols();
  Vector w = Vector::Zero(dim);
  Vector avg = Vector::Zero(dim);
  const double radius = 1.0 / std::sqrt(cfg.lambda);
  Rng rng(derive_seed(cfg.seed, 0x53564dull));
  std::vector<Eigen::Index> perm(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) perm[i] = static_cast<Eigen::Index>(i);
  double t = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(perm.begin(), perm.end(), rng);
    for (Eigen::Index i : perm) {
      t += 1.0;
      const double eta = 1.0 / (cfg.lambda * t);
      const double margin = y(i) * Z.row(i).dot(w);
      w *= 1.0 - eta * cfg.lambda;
      if (margin < 1.0) w += (eta * y(i)) * Z.row(i).transpose();
      const double norm = w.norm();
      if (norm > radius) w *= radius / norm;
      avg += (w - avg) / t;
    }
    model.objective_trace.push_back(augmented_objective(Z, y, avg, cfg.lambda));
  }
  model.weights.assign(avg.data(), avg.data() + X.cols);
  model.bias = avg(dim - 1);
  return model;
}

double svm_objective(const LinearSvmModel& model, const FeatureMatrix& X) {
  check_dims(model.dims(), X);
  const auto order = canonical_order(X);
  const Matrix Z = standardized(X, model.scaler, order, true);
  const Vector y = ordered_labels(X, order, true);
  Vector w(static_cast<Eigen::Index>(model.dims() + 1));
  for (std::size_t j = 0; j < model.dims(); ++j) w(j) = model.weights[j];
  w(w.size() - 1) = model.bias;
  return augmented_objective(Z, y, w, model.config.lambda);
}

}  // namespace activscope::heads
