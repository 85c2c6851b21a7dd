#include "activscope/binary_io.hpp"
#include "activscope/bench.hpp"
#include "activscope/dataset_io.hpp"
#include "activscope/error.hpp"
#include "activscope/feature_io.hpp"
#include "activscope/model_io.hpp"

namespace activscope::bench {

using nlohmann::json;

namespace {

std::string dataset_key(const ExperimentConfig& c) { return to_json(c).at("dataset").dump(); }

std::string model_key(const ExperimentConfig& c) {
  const json j = to_json(c);
  return json{{"dataset", j.at("dataset")}, {"model_preset", j.at("model_preset")}, {"train", j.at("train")}}.dump();
}

bool key_matches(const fs::path& path, const std::string& key) {
  if (!fs::exists(path)) return false;
  try {
    return binio::read_file(path) == key + "\n";
  } catch (const Error&) {
    return false;
  }
}

void write_key(const fs::path& path, const std::string& key) { binio::write_file(path, key + "\n"); }

std::size_t split_index(synth::Split s) { return s == synth::Split::train ? 0 : 1; }

}  // namespace

Workspace::Workspace(fs::path root, ExperimentConfig cfg, Log log)
    : root_(std::move(root)), cfg_(std::move(cfg)), log_(std::move(log)) {
  cfg_.validate();
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error("io_error", "cannot create " + root_.string() + ": " + ec.message());
}

const synth::Corpus& Workspace::corpus() {
  if (corpus_) return *corpus_;
  const auto dir = root_ / "dataset";
  const auto key_path = root_ / "dataset.key";
  const std::string key = dataset_key(cfg_);
  if (key_matches(key_path, key)) {
    log("dataset: reading " + dir.string());
    corpus_ = synth::read_dataset(dir);
    return *corpus_;
  }
  log("dataset: generating " + std::to_string(cfg_.dataset.train_scenes + cfg_.dataset.test_scenes) + " scenes");
  corpus_ = synth::build_corpus(cfg_.dataset);
  fs::remove(key_path);
  fs::remove_all(dir);
  synth::write_dataset(dir, *corpus_);
  write_key(key_path, key);
  return *corpus_;
}

const std::vector<Tensor>& Workspace::inputs(synth::Split split) {
  auto& slot = inputs_[split_index(split)];
  if (slot.empty()) slot = synth::to_tensors(split == synth::Split::train ? corpus().train : corpus().test);
  return slot;
}

const std::vector<int>& Workspace::labels(synth::Split split) {
  auto& slot = labels_[split_index(split)];
  if (slot.empty()) slot = synth::to_labels(split == synth::Split::train ? corpus().train : corpus().test);
  return slot;
}

const nn::ModelSpec& Workspace::model() {
  if (model_) return *model_;
  const auto path = root_ / "model.asm";
  const auto key_path = root_ / "model.key";
  const std::string key = model_key(cfg_);
  if (key_matches(key_path, key)) {
    log("model: loading " + path.string());
    model_ = nn::load_model(path);
    const json t = json::parse(binio::read_file(root_ / "train.json"));
    loss_ = t.at("epoch_loss").get<std::vector<double>>();
    return *model_;
  }
  const auto& x = inputs(synth::Split::train);
  const auto& y = labels(synth::Split::train);
  log("model: training " + cfg_.model_preset + " for " + std::to_string(cfg_.train.epochs) + " epochs on " +
      std::to_string(x.size()) + " patches");
  auto result = nn::train_sgd(nn::preset(cfg_.model_preset, cfg_.train.seed), x, y, cfg_.train);
  model_ = std::move(result.model);
  loss_ = std::move(result.epoch_loss);
  fs::remove(key_path);
  nn::save_model(path, *model_);
  binio::write_file(root_ / "train.json", json{{"epoch_loss", loss_}}.dump(1) + "\n");
  write_key(key_path, key);
  return *model_;
}

const std::vector<double>& Workspace::train_loss() {
  model();
  return loss_;
}

const nn::ModelSpec& Workspace::gap_model() {
  if (!gap_) gap_ = nn::swap_pooling(model(), nn::final_pool_index(model()));
  return *gap_;
}

const nn::ModelSpec& Workspace::model_for(nn::Tap tap) { return tap == nn::Tap::gap ? gap_model() : model(); }

const FeatureMatrix& Workspace::features(nn::Tap tap, synth::Split split) {
  const std::string name = std::string(nn::to_string(tap)) + "_" + std::string(synth::to_string(split));
  if (auto it = features_.find(name); it != features_.end()) return it->second;
  const auto dir = root_ / "features";
  const auto path = dir / (name + ".afm");
  const auto key_path = dir / (name + ".key");
  const std::string key = model_key(cfg_);
  const auto& m = model_for(tap);
  if (key_matches(key_path, key) && fs::exists(path)) {
    return features_[name] = load_features(path);
  }
  log("features: extracting " + name);
  FeatureMatrix X = nn::extract_features(m, tap, inputs(split), labels(split));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("io_error", "cannot create " + dir.string() + ": " + ec.message());
  save_features(path, X);
  write_key(key_path, key);
  return features_[name] = std::move(X);
}

}  // namespace activscope::bench
