#include <algorithm>
#include <cmath>
#include <numeric>

#include "activscope/error.hpp"
#include "activscope/heads.hpp"

namespace activscope::heads {

Standardizer Standardizer::fit(const FeatureMatrix& X) {
  Standardizer s;
  s.mean.assign(X.cols, 0.0);
  s.scale.assign(X.cols, 1.0);
  if (X.rows == 0) return s;
  const auto order = canonical_order(X);
  for (std::size_t i : order)
    for (std::size_t j = 0; j < X.cols; ++j) s.mean[j] += X.at(i, j);
  for (auto& m : s.mean) m /= static_cast<double>(X.rows);
  std::vector<double> var(X.cols, 0.0);
  for (std::size_t i : order) {
    for (std::size_t j = 0; j < X.cols; ++j) {
      const double d = X.at(i, j) - s.mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < X.cols; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(X.rows));
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(std::size_t d) {
  return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
}

std::vector<std::size_t> canonical_order(const FeatureMatrix& X) {
  std::vector<std::size_t> order(X.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (X.labels[a] != X.labels[b]) return X.labels[a] < X.labels[b];
    const auto ra = X.row(a), rb = X.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  return order;
}

void require_two_classes(const FeatureMatrix& X) {
  X.validate();
  const auto positives = static_cast<std::size_t>(std::count(X.labels.begin(), X.labels.end(), 1));
  if (X.rows < 2 || positives == 0 || positives == X.rows) {
    throw Error("single_class", "classifier needs n >= 2 rows with both classes present (n=" +
                                    std::to_string(X.rows) + ", positives=" +
                                    std::to_string(positives) + ")");
  }
}

void check_dims(std::size_t model_dims, const FeatureMatrix& X) {
  if (model_dims != X.cols) {
    throw Error("dimension_mismatch", "model expects " + std::to_string(model_dims) +
                                          " features but matrix has " + std::to_string(X.cols));
  }
}

template <class Model>
std::vector<std::uint8_t> predict(const Model& model, const FeatureMatrix& X) {
  check_dims(model.dims(), X);
  std::vector<std::uint8_t> out(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) out[i] = static_cast<std::uint8_t>(model.predict_row(X.row(i)));
  return out;
}

template <class Model>
double accuracy(const Model& model, const FeatureMatrix& X) {
  const auto predicted = predict(model, X);
  if (X.rows == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < X.rows; ++i) correct += predicted[i] == X.labels[i];
  return static_cast<double>(correct) / static_cast<double>(X.rows);
}

template std::vector<std::uint8_t> predict(const LogisticModel&, const FeatureMatrix&);
template std::vector<std::uint8_t> predict(const LinearSvmModel&, const FeatureMatrix&);
template std::vector<std::uint8_t> predict(const ForestModel&, const FeatureMatrix&);
template double accuracy(const LogisticModel&, const FeatureMatrix&);
template double accuracy(const LinearSvmModel&, const FeatureMatrix&);
template double accuracy(const ForestModel&, const FeatureMatrix&);

}  // namespace activscope::heads
