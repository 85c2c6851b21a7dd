#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "activscope/error.hpp"
#include "activscope/feature_io.hpp"
#include "activscope/heads.hpp"
#include "activscope/random.hpp"

using namespace activscope;
using namespace activscope::heads;

namespace {

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

FeatureMatrix make_matrix(std::size_t n, std::size_t d) {
  FeatureMatrix X;
  X.rows = n;
  X.cols = d;
  X.data.assign(n * d, 0.0f);
  X.labels.assign(n, 0);
  X.tap = "test";
  for (std::size_t j = 0; j < d; ++j) X.provenance.push_back({static_cast<std::uint32_t>(j), 0});
  return X;
}

// Two 2D clusters separated by a gap of 2 along the first axis.
FeatureMatrix blobs(std::uint64_t seed, std::size_t per_class = 20) {
  Rng rng(seed);
  auto X = make_matrix(2 * per_class, 2);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int y = i < per_class ? 0 : 1;
    const double sign = y ? 1.0 : -1.0;
    X.data[i * 2] = static_cast<float>(sign * uniform(rng, 1.0, 3.0));
    X.data[i * 2 + 1] = static_cast<float>(uniform(rng, -2.0, 2.0));
    X.labels[i] = static_cast<std::uint8_t>(y);
  }
  return X;
}

// Uniform noise in d columns; the label is decided by `rule`.
FeatureMatrix planted(std::uint64_t seed, std::size_t n, std::size_t d,
                      const std::function<bool(const float*)>& rule) {
  Rng rng(seed);
  auto X = make_matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) X.data[i * d + j] = static_cast<float>(uniform(rng, -1.0, 1.0));
    X.labels[i] = rule(&X.data[i * d]) ? 1 : 0;
  }
  return X;
}

FeatureMatrix permute_rows(const FeatureMatrix& X, std::uint64_t seed) {
  std::vector<std::size_t> order(X.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(order.begin(), order.end(), rng);
  auto Y = X;
  for (std::size_t i = 0; i < X.rows; ++i) {
    std::copy_n(X.data.begin() + order[i] * X.cols, X.cols, Y.data.begin() + i * X.cols);
    Y.labels[i] = X.labels[order[i]];
  }
  return Y;
}

std::vector<std::uint8_t> tree_votes_majority(const ForestModel& f, const FeatureMatrix& X) {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < X.rows; ++i) {
    std::size_t ones = 0;
    for (const auto& t : f.trees) ones += t.predict_row(X.row(i)) == 1;
    out.push_back(ones * 2 > f.trees.size() ? 1 : 0);
  }
  return out;
}

}  // namespace

TEST_CASE("separable blobs are fitted exactly by the linear heads") {
  const auto X = blobs(7);
  CHECK(accuracy(fit_logistic(X), X) == 1.0);
  SvmConfig s;
  s.seed = 7;
  CHECK(accuracy(fit_svm(X, s), X) == 1.0);
}

TEST_CASE("zero weights give probability one half") {
  LogisticModel m;
  m.weights = {0.0, 0.0, 0.0};
  m.scaler = Standardizer::identity(3);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    std::vector<float> x{static_cast<float>(uniform(rng, -50, 50)), static_cast<float>(uniform(rng, -5, 5)), 1e6f};
    CHECK(m.probability(x) == 0.5);
  }
}

TEST_CASE("doubling features and halving weights keeps decision scores") {
  LogisticModel m;
  m.weights = {0.75, -1.5, 3.25};
  m.bias = 0.125;
  m.scaler = Standardizer::identity(3);
  LogisticModel h = m;
  for (auto& w : h.weights) w /= 2.0;
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    std::vector<float> x(3), x2(3);
    for (int j = 0; j < 3; ++j) {
      x[j] = static_cast<float>(uniform(rng, -4, 4));
      x2[j] = 2.0f * x[j];
    }
    CHECK(h.decision(x2) == m.decision(x));
  }
}

TEST_CASE("hinge loss vanishes at margin one") {
  CHECK(hinge_loss(1.0, 1.0) == 0.0);
  CHECK(hinge_loss(1.0, 2.5) == 0.0);
  CHECK(hinge_loss(-1.0, -1.0) == 0.0);
  CHECK(hinge_loss(1.0, 0.25) == 0.75);
  CHECK(hinge_loss(-1.0, 0.5) == 1.5);
}

TEST_CASE("averaged SVM objective never increases across epochs") {
  const auto X = planted(11, 80, 4, [](const float* x) { return x[0] + 0.5f * x[1] > 0.1f; });
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SvmConfig cfg;
    cfg.seed = seed;
    cfg.lambda = 0.01;
    const auto m = fit_svm(X, cfg);
    REQUIRE(m.objective_trace.size() == cfg.epochs);
    for (std::size_t e = 1; e < m.objective_trace.size(); ++e) {
      CAPTURE(seed);
      CAPTURE(e);
      CHECK(m.objective_trace[e] <= m.objective_trace[e - 1]);
    }
    CHECK(svm_objective(m, X) == doctest::Approx(m.objective_trace.back()));
  }
}

TEST_CASE("gini impurity") {
  CHECK(gini({7, 0}) == 0.0);
  CHECK(gini({0, 3}) == 0.0);
  CHECK(gini({5, 5}) == 0.5);
  CHECK(gini({1, 3}) == doctest::Approx(0.375));
}

TEST_CASE("one full tree without bootstrap memorizes distinct rows") {
  const auto X = planted(4, 150, 6, [](const float* x) { return std::sin(7 * x[0]) * x[3] > 0.05f * x[5]; });
  ForestConfig cfg;
  cfg.n_trees = 1;
  cfg.bootstrap = false;
  const auto f = fit_forest(X, cfg);
  CHECK(accuracy(f, X) == 1.0);
  for (const auto& n : f.trees[0].nodes) {
    if (n.feature >= 0) CHECK(static_cast<std::size_t>(n.feature) < X.cols);
    else CHECK(n.counts[0] + n.counts[1] > 0);
  }
}

TEST_CASE("the only informative feature ranks first") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto X = planted(seed, 300, 10, [](const float* x) { return x[3] > 0.0f; });
    ForestConfig cfg;
    cfg.seed = seed;
    cfg.n_trees = 50;
    const auto imp = importance(fit_forest(X, cfg));
    CAPTURE(seed);
    CHECK(imp.ranking().front() == 3);
  }
}

TEST_CASE("two informative features hold the top two ranks") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto X = planted(100 + seed, 400, 10, [](const float* x) { return x[1] + x[7] > 0.0f; });
    ForestConfig cfg;
    cfg.seed = seed;
    cfg.n_trees = 50;
    const auto r = importance(fit_forest(X, cfg)).ranking();
    CAPTURE(seed);
    CHECK(std::min(r[0], r[1]) == 1);
    CHECK(std::max(r[0], r[1]) == 7);
  }
}

TEST_CASE("stumps on one feature put all importance there") {
  const auto X = planted(9, 120, 5, [](const float* x) { return x[2] > 0.2f; });
  ForestConfig cfg;
  cfg.max_depth = 1;
  cfg.features_per_split = 5;
  cfg.n_trees = 10;
  const auto f = fit_forest(X, cfg);
  for (const auto& t : f.trees) CHECK(t.nodes[0].feature == 2);
  const auto imp = importance(f);
  for (std::size_t j = 0; j < 5; ++j) CHECK(imp.values[j] == (j == 2 ? 1.0 : 0.0));
}

TEST_CASE("importance is nonnegative and sums to one") {
  const auto X = planted(13, 200, 12, [](const float* x) { return x[0] * x[1] > 0.0f; });
  ForestConfig cfg;
  cfg.n_trees = 30;
  const auto imp = importance(fit_forest(X, cfg));
  double sum = 0.0;
  for (double v : imp.values) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(std::fabs(sum - 1.0) <= 1e-6);
}

TEST_CASE("importance ranking breaks ties by index") {
  ImportanceVector v{{0.25, 0.5, 0.25, 0.0}};
  CHECK(v.ranking() == std::vector<std::size_t>{1, 0, 2, 3});
}

TEST_CASE("fitters ignore row order") {
  const auto X = planted(21, 120, 4, [](const float* x) { return x[0] - x[2] > 0.0f; });
  const auto Y = permute_rows(X, 5);
  const auto T = planted(22, 60, 4, [](const float* x) { return x[0] - x[2] > 0.0f; });
  CHECK(predict(fit_logistic(X), T) == predict(fit_logistic(Y), T));
  CHECK(predict(fit_svm(X), T) == predict(fit_svm(Y), T));
  ForestConfig cfg;
  cfg.n_trees = 15;
  CHECK(fit_forest(X, cfg) == fit_forest(Y, cfg));
}

TEST_CASE("forest prediction is the majority vote with ties to class 0") {
  const auto X = planted(31, 100, 3, [](const float* x) { return x[0] + x[1] > 0.0f; });
  for (std::size_t trees : {4u, 7u}) {
    ForestConfig cfg;
    cfg.n_trees = trees;
    cfg.seed = 3;
    const auto f = fit_forest(X, cfg);
    const auto T = planted(32, 200, 3, [](const float* x) { return x[0] > 0.0f; });
    CHECK(predict(f, T) == tree_votes_majority(f, T));
  }
  ForestModel tie;
  tie.n_features = 1;
  Tree yes, no;
  TreeNode leaf1;
  leaf1.counts = {0, 4};
  TreeNode leaf0;
  leaf0.counts = {4, 0};
  yes.nodes = {leaf1};
  no.nodes = {leaf0};
  tie.trees = {yes, no};
  const std::vector<float> x{0.0f};
  CHECK(tie.predict_row(x) == 0);
  tie.trees.push_back(yes);
  CHECK(tie.predict_row(x) == 1);
}

TEST_CASE("logistic gradient matches central differences") {
  const auto X = planted(41, 60, 5, [](const float* x) { return x[0] + 0.3f * x[4] > 0.0f; });
  LogisticConfig cfg;
  cfg.iterations = 20;
  cfg.l2 = 0.05;
  auto m = fit_logistic(X, cfg);
  std::vector<double> g;
  logistic_objective(m, X, &g);
  REQUIRE(g.size() == 6);
  const double h = 1e-5;
  for (std::size_t k = 0; k < 6; ++k) {
    auto up = m, down = m;
    double& pu = k < 5 ? up.weights[k] : up.bias;
    double& pd = k < 5 ? down.weights[k] : down.bias;
    pu += h;
    pd -= h;
    const double num = (logistic_objective(up, X) - logistic_objective(down, X)) / (2 * h);
    const double rel = std::fabs(num - g[k]) / std::max({std::fabs(num), std::fabs(g[k]), 1e-8});
    CAPTURE(k);
    CHECK(rel <= 1e-6);
  }
}

TEST_CASE("fitting a column subset equals fitting a matrix built from those columns") {
  const auto X = planted(51, 90, 8, [](const float* x) { return x[2] - x[6] > 0.0f; });
  const std::vector<std::size_t> S{6, 2, 5};
  const auto sub = X.select_columns(S);
  auto built = make_matrix(X.rows, S.size());
  built.labels = X.labels;
  for (std::size_t i = 0; i < X.rows; ++i)
    for (std::size_t j = 0; j < S.size(); ++j) built.data[i * S.size() + j] = X.at(i, S[j]);
  built.provenance.clear();
  for (auto c : S) built.provenance.push_back(X.provenance[c]);
  CHECK(sub == built);
  ForestConfig cfg;
  cfg.n_trees = 10;
  CHECK(fit_forest(sub, cfg) == fit_forest(built, cfg));
  CHECK(fit_logistic(sub).weights == fit_logistic(built).weights);
  CHECK(error_code([&] { X.select_columns(std::vector<std::size_t>{8}); }) == "out_of_range");
}

TEST_CASE("accuracy extremes and dimension checks") {
  const auto X = blobs(3);
  LogisticModel perfect;
  perfect.weights = {1.0, 0.0};
  perfect.scaler = Standardizer::identity(2);
  CHECK(accuracy(perfect, X) == 1.0);
  LogisticModel constant;
  constant.weights = {0.0, 0.0};
  constant.bias = -1.0;
  constant.scaler = Standardizer::identity(2);
  CHECK(accuracy(constant, X) == 0.5);
  const auto wide = planted(1, 10, 3, [](const float* x) { return x[0] > 0; });
  CHECK(error_code([&] { accuracy(perfect, wide); }) == "dimension_mismatch");
  ForestConfig cfg;
  cfg.n_trees = 3;
  const auto f = fit_forest(X, cfg);
  CHECK(error_code([&] { predict(f, wide); }) == "dimension_mismatch");
}

TEST_CASE("single-class input and unfitted forests are rejected") {
  auto X = blobs(5);
  std::fill(X.labels.begin(), X.labels.end(), 1);
  CHECK(error_code([&] { fit_logistic(X); }) == "single_class");
  CHECK(error_code([&] { fit_svm(X); }) == "single_class");
  CHECK(error_code([&] { fit_forest(X); }) == "single_class");
  CHECK(error_code([&] { importance(ForestModel{}); }) == "unfitted");
}

TEST_CASE("constant columns keep unit scale") {
  auto X = blobs(6);
  for (std::size_t i = 0; i < X.rows; ++i) X.data[i * 2 + 1] = 4.0f;
  const auto s = Standardizer::fit(X);
  CHECK(s.scale[1] == 1.0);
  CHECK(s.mean[1] == 4.0);
}

TEST_CASE("heads survive a JSON round trip") {
  const auto X = planted(61, 80, 4, [](const float* x) { return x[1] > x[3]; });
  const auto lr = fit_logistic(X);
  const auto lr2 = logistic_from_json(nlohmann::json::parse(to_json(lr).dump()));
  CHECK(lr2.weights == lr.weights);
  CHECK(lr2.bias == lr.bias);
  CHECK(lr2.scaler == lr.scaler);
  const auto sv = fit_svm(X);
  const auto sv2 = svm_from_json(nlohmann::json::parse(to_json(sv).dump()));
  CHECK(sv2.weights == sv.weights);
  CHECK(sv2.objective_trace == sv.objective_trace);
  CHECK(predict(sv2, X) == predict(sv, X));
  ForestConfig cfg;
  cfg.n_trees = 5;
  const auto rf = fit_forest(X, cfg);
  CHECK(forest_from_json(nlohmann::json::parse(to_json(rf).dump())) == rf);
  CHECK(error_code([] { forest_from_json(nlohmann::json{{"kind", "svm"}}); }) == "parse_error");
}

TEST_CASE("feature files round trip and reject bad headers") {
  auto X = planted(71, 12, 5, [](const float* x) { return x[0] > 0; });
  X.tap = "gap";
  const auto bytes = serialize_features(X);
  CHECK(deserialize_features(bytes) == X);
  auto bad = bytes;
  bad[3] = '2';
  CHECK(error_code([&] { deserialize_features(bad); }) == "bad_magic");
  CHECK(error_code([&] { deserialize_features(bytes.substr(0, bytes.size() - 3)); }) == "truncated");
  X.data[4] = NAN;
  CHECK(error_code([&] { X.validate(); }) == "invalid_features");
}
