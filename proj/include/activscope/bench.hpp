#pragma once

// Experiment harness: configuration, a cached on-disk workspace, the four
// experiments and their reports.

#include <array>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "activscope/features.hpp"
#include "activscope/heads.hpp"
#include "activscope/nncore.hpp"
#include "activscope/scope.hpp"
#include "activscope/synthlab.hpp"

namespace activscope::bench {

namespace fs = std::filesystem;

struct ExperimentConfig {
  synth::CorpusSpec dataset;
  std::string model_preset;  // required
  nn::TrainConfig train;
  std::vector<nn::Tap> taps{nn::Tap::fc1};
  std::size_t k = scope::kDefaultTopK;
  std::vector<std::string> classifiers{"logistic", "svm", "forest"};
  heads::LogisticConfig logistic;
  heads::SvmConfig svm;
  heads::ForestConfig forest;
  std::size_t selection_k = 0;  // 0 = number of tumor/lymphocyte channels
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  scope::Resize heatmap = scope::Resize::bilinear;

  // Throws Error("invalid_config").
  void validate() const;
  // Dataset and training seeds follow `seed`.
  void override_seed(std::uint64_t seed);
};

// Missing "model_preset" throws Error("missing_key"); unknown keys and bad
// values throw Error("invalid_config").
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const fs::path& path);

// ---- reports ----------------------------------------------------------------

struct AccuracyRow {
  std::string structure;
  std::size_t dim = 0;
  double in_sample = 0.0;
  double out_sample = 0.0;
  double seconds = 0.0;  // classifier train+eval wall clock
  bool operator==(const AccuracyRow&) const = default;
};

// Published figures shown next to ours; never compared against.
struct ReferenceRow {
  std::string structure;
  double in_sample = 0.0;
  double out_sample = 0.0;
  bool operator==(const ReferenceRow&) const = default;
};

struct Report {
  std::string experiment;
  std::string title;
  std::vector<AccuracyRow> rows;
  std::vector<ReferenceRow> reference;
  nlohmann::json details = nlohmann::json::object();
  std::vector<std::string> warnings;
  bool operator==(const Report&) const = default;
};

nlohmann::json to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);
std::string render_text(const Report& r);
// Writes report.json and report.txt into dir.
void write_report(const fs::path& dir, const Report& r);
Report read_report(const fs::path& dir);

// Copy of a report JSON without wall-clock fields ("seconds", "timing").
nlohmann::json strip_timing(const nlohmann::json& j);

// ---- workspace ----------------------------------------------------------------

using Log = std::function<void(const std::string&)>;

// Artifacts of one configuration under a root directory: dataset/,
// model.asm, features/. Artifacts left by an identical configuration are
// reused; a different configuration rebuilds them.
class Workspace {
 public:
  Workspace(fs::path root, ExperimentConfig cfg, Log log = {});

  const ExperimentConfig& config() const { return cfg_; }
  const fs::path& root() const { return root_; }

  const synth::Corpus& corpus();
  const std::vector<Tensor>& inputs(synth::Split split);
  const std::vector<int>& labels(synth::Split split);
  const nn::ModelSpec& model();
  const std::vector<double>& train_loss();
  // Model with the final maxpool replaced by a full-extent average pool.
  const nn::ModelSpec& gap_model();
  const nn::ModelSpec& model_for(nn::Tap tap);
  const FeatureMatrix& features(nn::Tap tap, synth::Split split);

  void log(const std::string& msg) const {
    if (log_) log_(msg);
  }

 private:
  fs::path root_;
  ExperimentConfig cfg_;
  Log log_;
  std::optional<synth::Corpus> corpus_;
  std::vector<Tensor> inputs_[2];
  std::vector<int> labels_[2];
  std::optional<nn::ModelSpec> model_;
  std::vector<double> loss_;
  std::optional<nn::ModelSpec> gap_;
  std::map<std::string, FeatureMatrix> features_;
};

// ---- heads ----------------------------------------------------------------------

struct HeadScore {
  double in_sample = 0.0;
  double out_sample = 0.0;
  double seconds = 0.0;
};

// Fits one classifier ("logistic", "svm", "forest") on train and scores both
// splits. `seed` replaces the classifier's configured seed.
HeadScore fit_head(const std::string& name, const FeatureMatrix& train, const FeatureMatrix& test,
                   const ExperimentConfig& cfg, std::uint64_t seed);

std::string head_label(const std::string& name);

// ---- purity -----------------------------------------------------------------------

struct ChannelPurity {
  int channel = 0;
  std::array<double, 4> purity{};  // fraction of top-k containing each planted motif
  bool degenerate = false;         // every top-k score equal, so the order is only the tie rule
  scope::ChannelTag suggested = scope::ChannelTag::unrecognizable;
};

struct PurityTable {
  std::array<double, 4> base_rate{};  // over all scored patches
  std::vector<ChannelPurity> channels;
};

// Motif presence for every patch of the corpus, train records first.
std::vector<std::array<bool, 4>> motif_presence(const synth::Corpus& corpus);

// Purity of each ranking against per-patch motif presence; suggested tags
// come from the motif with the largest purity lift over its base rate;
// degenerate channels are left unrecognizable.
PurityTable purity_table(std::span<const scope::ChannelRanking> rankings,
                         std::span<const std::array<bool, 4>> presence);

// Assigned-layer maps of all corpus patches (train first) and their ranking.
struct ScoredCorpus {
  std::size_t layer = 0;
  scope::FovMap fov;
  std::vector<Tensor> maps;
  std::vector<scope::ChannelRanking> rankings;
};
ScoredCorpus score_corpus(const nn::ModelSpec& model, const synth::Corpus& corpus, std::size_t k);

// ---- experiments -----------------------------------------------------------------

Report run_exp1(Workspace& ws);
Report run_exp2(Workspace& ws);
Report run_exp3(Workspace& ws);
// With no tag file the exp2 suggested tags are used.
Report run_exp4(Workspace& ws, const std::optional<scope::TagFile>& tags);

// Exp #4 feature sets built from importance and tags, exposed for checking.
struct SelectionSets {
  std::vector<std::size_t> cell;
  std::vector<std::size_t> unrecognizable;
  std::vector<std::size_t> important;
};
SelectionSets selection_sets(const std::vector<scope::ChannelTag>& tags, const heads::ImportanceVector& importance,
                             std::size_t k, std::uint64_t seed);

}  // namespace activscope::bench
