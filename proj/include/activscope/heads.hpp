#pragma once

// Classical heads that stand in for a CNN's fully connected layers:
// logistic regression, linear SVM and a CART random forest with Gini
// importance. All fitters first put rows into a canonical order, so their
// outputs do not depend on the order rows arrive in.

#include <array>
#include <cstdint>
#include <json.hpp>
#include <span>
#include <vector>

#include "activscope/features.hpp"

namespace activscope::heads {

// Per-column z-scoring fitted on training rows (constant columns keep scale 1).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const FeatureMatrix& X);
  static Standardizer identity(std::size_t d);
  double apply(std::size_t column, float value) const { return (value - mean[column]) / scale[column]; }
  bool operator==(const Standardizer&) const = default;
};

// Row permutation sorting by label, then lexicographically by features.
std::vector<std::size_t> canonical_order(const FeatureMatrix& X);

// Throws Error("single_class") unless both labels occur and n >= 2.
void require_two_classes(const FeatureMatrix& X);

// ---- logistic regression ----------------------------------------------------

struct LogisticConfig {
  double learning_rate = 0.1;
  std::size_t iterations = 500;
  double l2 = 1e-4;
  bool standardize = true;
  bool operator==(const LogisticConfig&) const = default;
};

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  Standardizer scaler;
  LogisticConfig config;

  std::size_t dims() const { return weights.size(); }
  double decision(std::span<const float> x) const;
  double probability(std::span<const float> x) const;
  int predict_row(std::span<const float> x) const { return decision(x) > 0.0 ? 1 : 0; }
};

// Full-batch gradient descent on mean cross-entropy + (l2/2)|w|^2; stops at
// the iteration cap.
LogisticModel fit_logistic(const FeatureMatrix& X, const LogisticConfig& cfg = {});

// Regularized loss and its gradient (d weights, then the bias) for the given
// parameters, evaluated on the model's standardized features.
double logistic_objective(const LogisticModel& model, const FeatureMatrix& X,
                          std::vector<double>* gradient = nullptr);

// ---- linear SVM -------------------------------------------------------------

struct SvmConfig {
  double lambda = 1e-4;
  std::size_t epochs = 30;
  bool standardize = true;
  std::uint64_t seed = 0;
  bool operator==(const SvmConfig&) const = default;
};

struct LinearSvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  Standardizer scaler;
  SvmConfig config;
  std::vector<double> objective_trace;  // averaged-iterate objective after each epoch

  std::size_t dims() const { return weights.size(); }
  double decision(std::span<const float> x) const;
  int predict_row(std::span<const float> x) const { return decision(x) > 0.0 ? 1 : 0; }
};

// Pegasos-style stochastic subgradient descent on lambda/2 |w|^2 + mean
// hinge loss; the bias is an extra constant feature. Epoch order is a seeded
// permutation; the returned model is the average of all iterates.
LinearSvmModel fit_svm(const FeatureMatrix& X, const SvmConfig& cfg = {});

double hinge_loss(double label_sign, double score);
double svm_objective(const LinearSvmModel& model, const FeatureMatrix& X);

// ---- random forest ----------------------------------------------------------

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;           // 0 = grow to purity
  std::size_t features_per_split = 0;  // 0 = ceil(sqrt(d))
  bool bootstrap = true;
  std::uint64_t seed = 0;
  bool operator==(const ForestConfig&) const = default;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  float threshold = 0.0f;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::array<std::uint32_t, 2> counts{0, 0};
  double impurity_decrease = 0.0;  // weighted by node sample fraction
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::uint64_t seed = 0;

  int predict_row(std::span<const float> x) const;
  bool operator==(const Tree&) const = default;
};

struct ForestModel {
  std::vector<Tree> trees;
  ForestConfig config;
  std::size_t n_features = 0;

  std::size_t dims() const { return n_features; }
  // Majority vote over trees; ties go to class 0.
  int predict_row(std::span<const float> x) const;
  bool operator==(const ForestModel&) const = default;
};

double gini(std::array<std::uint32_t, 2> counts);

ForestModel fit_forest(const FeatureMatrix& X, const ForestConfig& cfg = {});

struct ImportanceVector {
  std::vector<double> values;  // nonnegative, sums to 1

  // Feature indices by decreasing importance, ties by ascending index.
  std::vector<std::size_t> ranking() const;
};

// Mean decrease in Gini impurity, averaged over trees and normalized.
// Throws Error("unfitted") for an empty forest and Error("no_splits") when
// no tree ever split.
ImportanceVector importance(const ForestModel& model);

// ---- evaluation -------------------------------------------------------------

template <class Model>
std::vector<std::uint8_t> predict(const Model& model, const FeatureMatrix& X);

template <class Model>
double accuracy(const Model& model, const FeatureMatrix& X);

// Throws Error("dimension_mismatch").
void check_dims(std::size_t model_dims, const FeatureMatrix& X);

// ---- persistence ------------------------------------------------------------

nlohmann::json to_json(const LogisticModel& m);
nlohmann::json to_json(const LinearSvmModel& m);
nlohmann::json to_json(const ForestModel& m);
LogisticModel logistic_from_json(const nlohmann::json& j);
LinearSvmModel svm_from_json(const nlohmann::json& j);
ForestModel forest_from_json(const nlohmann::json& j);

}  // namespace activscope::heads
