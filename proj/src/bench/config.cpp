#include <set>

#include "activscope/binary_io.hpp"
#include "activscope/bench.hpp"
#include "activscope/error.hpp"

namespace activscope::bench {

using nlohmann::json;

namespace {

// Reads fields of one JSON object, rejecting keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw Error("invalid_config", where_ + " must be an object");
  }
  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw Error("invalid_config", "unknown key '" + qualified(key) + "'");
    }
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw Error("invalid_config", "bad value for '" + qualified(key) + "'");
    }
  }
  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  std::string qualified(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_recipe(const json& j, const std::string& where, synth::MotifRecipe& r) {
  Fields f(j, where);
  f.get("count", r.count);
  f.get("min_size", r.min_size);
  f.get("max_size", r.max_size);
  f.done();
}

json recipe_json(const synth::MotifRecipe& r) {
  return {{"count", r.count}, {"min_size", r.min_size}, {"max_size", r.max_size}};
}

void read_dataset(const json& j, synth::CorpusSpec& d) {
  Fields f(j, "dataset");
  if (const json* s = f.child("scene")) {
    Fields sf(*s, "dataset.scene");
    sf.get("width", d.scene.width);
    sf.get("height", d.scene.height);
    if (const json* r = sf.child("tumor")) read_recipe(*r, "dataset.scene.tumor", d.scene.tumor);
    if (const json* r = sf.child("lymphocyte")) read_recipe(*r, "dataset.scene.lymphocyte", d.scene.lymphocyte);
    if (const json* r = sf.child("collagen")) read_recipe(*r, "dataset.scene.collagen", d.scene.collagen);
    if (const json* r = sf.child("lumen")) read_recipe(*r, "dataset.scene.lumen", d.scene.lumen);
    sf.get("max_attempts", d.scene.max_attempts);
    sf.done();
  }
  f.get("train_scenes", d.train_scenes);
  f.get("test_scenes", d.test_scenes);
  f.get("train_per_class", d.train_per_class);
  f.get("test_per_class", d.test_per_class);
  f.get("tau", d.tau);
  f.get("patch_size", d.patch_size);
  f.get("grid_stride", d.grid_stride);
  f.get("seed", d.seed);
  f.done();
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    (void)nn::preset(model_preset, 0);
  } catch (const Error& e) {
    throw Error("invalid_config", "model_preset: " + std::string(e.what()));
  }
  if (seeds.empty()) throw Error("invalid_config", "seeds must be nonempty");
  if (taps.empty()) throw Error("invalid_config", "taps must be nonempty");
  if (k < 1) throw Error("invalid_config", "k must be at least 1");
  if (classifiers.empty()) throw Error("invalid_config", "classifiers must be nonempty");
  for (const auto& c : classifiers) {
    if (c != "logistic" && c != "svm" && c != "forest") {
      throw Error("invalid_config", "unknown classifier '" + c + "'");
    }
  }
  try {
    train.validate();
  } catch (const Error& e) {
    throw Error("invalid_config", e.what());
  }
  if (dataset.train_scenes < 1 || dataset.test_scenes < 1) {
    throw Error("invalid_config", "dataset needs at least one train and one test scene");
  }
  if (dataset.patch_size < 1 || dataset.grid_stride < 1 || !(dataset.tau > 0.0 && dataset.tau <= 1.0)) {
    throw Error("invalid_config", "dataset needs patch_size, grid_stride >= 1 and tau in (0, 1]");
  }
}

void ExperimentConfig::override_seed(std::uint64_t seed) {
  dataset.seed = seed;
  train.seed = seed;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error("invalid_config", "config must be a JSON object");
  if (!j.contains("model_preset")) throw Error("missing_key", "config is missing 'model_preset'");
  ExperimentConfig c;
  {
    Fields f(j, "");
    f.get("model_preset", c.model_preset);
    if (const json* d = f.child("dataset")) read_dataset(*d, c.dataset);
    if (const json* t = f.child("train")) {
      Fields tf(*t, "train");
      tf.get("learning_rate", c.train.learning_rate);
      tf.get("momentum", c.train.momentum);
      tf.get("batch_size", c.train.batch_size);
      tf.get("epochs", c.train.epochs);
      tf.get("weight_decay", c.train.weight_decay);
      tf.get("seed", c.train.seed);
      tf.done();
    }
    std::vector<std::string> taps;
    f.get("taps", taps);
    if (j.contains("taps")) {
      c.taps.clear();
      for (const auto& t : taps) {
        try {
          c.taps.push_back(nn::parse_tap(t));
        } catch (const Error& e) {
          throw Error("invalid_config", "taps: " + std::string(e.what()));
        }
      }
    }
    f.get("k", c.k);
    f.get("classifiers", c.classifiers);
    if (const json* l = f.child("logistic")) {
      Fields lf(*l, "logistic");
      lf.get("learning_rate", c.logistic.learning_rate);
      lf.get("iterations", c.logistic.iterations);
      lf.get("l2", c.logistic.l2);
      lf.get("standardize", c.logistic.standardize);
      lf.done();
    }
    if (const json* s = f.child("svm")) {
      Fields sf(*s, "svm");
      sf.get("lambda", c.svm.lambda);
      sf.get("epochs", c.svm.epochs);
      sf.get("standardize", c.svm.standardize);
      sf.get("seed", c.svm.seed);
      sf.done();
    }
    if (const json* r = f.child("forest")) {
      Fields rf(*r, "forest");
      rf.get("n_trees", c.forest.n_trees);
      rf.get("max_depth", c.forest.max_depth);
      rf.get("features_per_split", c.forest.features_per_split);
      rf.get("bootstrap", c.forest.bootstrap);
      rf.get("seed", c.forest.seed);
      rf.done();
    }
    f.get("selection_k", c.selection_k);
    f.get("seeds", c.seeds);
    std::string heatmap = std::string(scope::to_string(c.heatmap));
    f.get("heatmap", heatmap);
    try {
      c.heatmap = scope::parse_resize(heatmap);
    } catch (const Error& e) {
      throw Error("invalid_config", "heatmap: " + std::string(e.what()));
    }
    f.done();
  }
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  const auto& d = c.dataset;
  json taps = json::array();
  for (auto t : c.taps) taps.push_back(nn::to_string(t));
  return {
      {"dataset",
       {{"scene",
         {{"width", d.scene.width},
          {"height", d.scene.height},
          {"tumor", recipe_json(d.scene.tumor)},
          {"lymphocyte", recipe_json(d.scene.lymphocyte)},
          {"collagen", recipe_json(d.scene.collagen)},
          {"lumen", recipe_json(d.scene.lumen)},
          {"max_attempts", d.scene.max_attempts}}},
        {"train_scenes", d.train_scenes},
        {"test_scenes", d.test_scenes},
        {"train_per_class", d.train_per_class},
        {"test_per_class", d.test_per_class},
        {"tau", d.tau},
        {"patch_size", d.patch_size},
        {"grid_stride", d.grid_stride},
        {"seed", d.seed}}},
      {"model_preset", c.model_preset},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"momentum", c.train.momentum},
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"weight_decay", c.train.weight_decay},
        {"seed", c.train.seed}}},
      {"taps", taps},
      {"k", c.k},
      {"classifiers", c.classifiers},
      {"logistic",
       {{"learning_rate", c.logistic.learning_rate},
        {"iterations", c.logistic.iterations},
        {"l2", c.logistic.l2},
        {"standardize", c.logistic.standardize}}},
      {"svm",
       {{"lambda", c.svm.lambda},
        {"epochs", c.svm.epochs},
        {"standardize", c.svm.standardize},
        {"seed", c.svm.seed}}},
      {"forest",
       {{"n_trees", c.forest.n_trees},
        {"max_depth", c.forest.max_depth},
        {"features_per_split", c.forest.features_per_split},
        {"bootstrap", c.forest.bootstrap},
        {"seed", c.forest.seed}}},
      {"selection_k", c.selection_k},
      {"seeds", c.seeds},
      {"heatmap", scope::to_string(c.heatmap)},
  };
}

ExperimentConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error("missing_file", "missing config " + path.string());
  json j;
  try {
    j = json::parse(binio::read_file(path));
  } catch (const json::exception& e) {
    throw Error("parse_error", path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace activscope::bench
