#include "activscope/error.hpp"
#include "activscope/heads.hpp"

namespace activscope::heads {

using nlohmann::json;

namespace {

json scaler_json(const Standardizer& s) { return {{"mean", s.mean}, {"scale", s.scale}}; }

Standardizer scaler_from(const json& j) {
  Standardizer s{j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
  if (s.mean.size() != s.scale.size()) throw Error("parse_error", "scaler mean/scale length differ");
  return s;
}

void expect_kind(const json& j, const char* kind) {
  if (!j.is_object() || j.value("kind", "") != kind) {
    throw Error("parse_error", std::string("expected a ") + kind + " model");
  }
}

template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error("parse_error", e.what());
  }
}

}  // namespace

json to_json(const LogisticModel& m) {
  return {{"kind", "logistic"},
          {"weights", m.weights},
          {"bias", m.bias},
          {"scaler", scaler_json(m.scaler)},
          {"config",
           {{"learning_rate", m.config.learning_rate},
            {"iterations", m.config.iterations},
            {"l2", m.config.l2},
            {"standardize", m.config.standardize}}}};
}

json to_json(const LinearSvmModel& m) {
  return {{"kind", "svm"},
          {"weights", m.weights},
          {"bias", m.bias},
          {"scaler", scaler_json(m.scaler)},
          {"objective_trace", m.objective_trace},
          {"config",
           {{"lambda", m.config.lambda},
            {"epochs", m.config.epochs},
            {"standardize", m.config.standardize},
            {"seed", m.config.seed}}}};
}

json to_json(const ForestModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.counts[0], n.counts[1], n.impurity_decrease});
    }
    trees.push_back({{"seed", t.seed}, {"nodes", std::move(nodes)}});
  }
  return {{"kind", "forest"},
          {"n_features", m.n_features},
          {"config",
           {{"n_trees", m.config.n_trees},
            {"max_depth", m.config.max_depth},
            {"features_per_split", m.config.features_per_split},
            {"bootstrap", m.config.bootstrap},
            {"seed", m.config.seed}}},
          {"trees", std::move(trees)}};
}

LogisticModel logistic_from_json(const json& j) {
  expect_kind(j, "logistic");
  return guarded([&] {
    LogisticModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.scaler = scaler_from(j.at("scaler"));
    const auto& c = j.at("config");
    m.config = {c.at("learning_rate").get<double>(), c.at("iterations").get<std::size_t>(),
                c.at("l2").get<double>(), c.at("standardize").get<bool>()};
    if (m.scaler.mean.size() != m.weights.size()) throw Error("parse_error", "scaler does not match weights");
    return m;
  });
}

LinearSvmModel svm_from_json(const json& j) {
  expect_kind(j, "svm");
  return guarded([&] {
    LinearSvmModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.scaler = scaler_from(j.at("scaler"));
    m.objective_trace = j.value("objective_trace", std::vector<double>{});
    const auto& c = j.at("config");
    m.config = {c.at("lambda").get<double>(), c.at("epochs").get<std::size_t>(),
                c.at("standardize").get<bool>(), c.at("seed").get<std::uint64_t>()};
    if (m.scaler.mean.size() != m.weights.size()) throw Error("parse_error", "scaler does not match weights");
    return m;
  });
}

ForestModel forest_from_json(const json& j) {
  expect_kind(j, "forest");
  return guarded([&] {
    ForestModel m;
    m.n_features = j.at("n_features").get<std::size_t>();
    const auto& c = j.at("config");
    m.config = {c.at("n_trees").get<std::size_t>(), c.at("max_depth").get<std::size_t>(),
                c.at("features_per_split").get<std::size_t>(), c.at("bootstrap").get<bool>(),
                c.at("seed").get<std::uint64_t>()};
    for (const auto& jt : j.at("trees")) {
      Tree t;
      t.seed = jt.at("seed").get<std::uint64_t>();
      for (const auto& jn : jt.at("nodes")) {
        TreeNode n;
        n.feature = jn.at(0).get<std::int32_t>();
        n.threshold = jn.at(1).get<float>();
        n.left = jn.at(2).get<std::int32_t>();
        n.right = jn.at(3).get<std::int32_t>();
        n.counts = {jn.at(4).get<std::uint32_t>(), jn.at(5).get<std::uint32_t>()};
        n.impurity_decrease = jn.at(6).get<double>();
        t.nodes.push_back(n);
      }
      const auto size = static_cast<std::int32_t>(t.nodes.size());
      if (size == 0) throw Error("parse_error", "tree without nodes");
      for (const auto& n : t.nodes) {
        if (n.feature >= 0 && (n.feature >= static_cast<std::int32_t>(m.n_features) || n.left <= 0 ||
                               n.right <= 0 || n.left >= size || n.right >= size)) {
          throw Error("parse_error", "tree node references out of range");
        }
      }
      m.trees.push_back(std::move(t));
    }
    return m;
  });
}

}  // namespace activscope::heads
