#include <chrono>
#include <cmath>
#include <numeric>

#include "activscope/bench.hpp"
#include "activscope/error.hpp"
#include "activscope/parallel.hpp"
#include "activscope/random.hpp"

namespace activscope::bench {

using nlohmann::json;
using synth::Split;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

constexpr const char* kAssignedTap = "assigned";

const char* motif_key(std::size_t m) {
  static constexpr const char* keys[] = {"tumor", "lymphocyte", "collagen", "lumen"};
  return keys[m];
}

scope::ChannelTag motif_tag(std::size_t m) {
  static constexpr scope::ChannelTag tags[] = {scope::ChannelTag::tumor, scope::ChannelTag::lymphocyte,
                                               scope::ChannelTag::collagen, scope::ChannelTag::other_structure};
  return tags[m];
}

std::string with_dim(const std::string& label, std::size_t dim) { return label + " (" + std::to_string(dim) + ")"; }

double cnn_accuracy(const nn::ModelSpec& model, const std::vector<Tensor>& x, const std::vector<int>& y) {
  std::vector<int> hit(x.size());
  parallel_for(x.size(), [&](std::size_t i) { hit[i] = nn::predict_class(model, x[i]) == y[i]; });
  return x.empty() ? 0.0 : static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) / x.size();
}

json geometry_json(const scope::LayerGeometry& g) { return {{"r", g.r}, {"j", g.j}, {"start", g.start}}; }

scope::TagFile suggested_tags(const PurityTable& table, const std::string& model_name) {
  scope::TagFile t{model_name, kAssignedTap, {}, {}};
  for (const auto& c : table.channels) t.tags[c.channel] = c.suggested;
  return t;
}

}  // namespace

std::string head_label(const std::string& name) {
  if (name == "logistic") return "CNN + Logistic Regression";
  if (name == "svm") return "CNN + SVM";
  if (name == "forest") return "CNN + Random Forest";
  throw Error("invalid_config", "unknown classifier '" + name + "'");
}

HeadScore fit_head(const std::string& name, const FeatureMatrix& train, const FeatureMatrix& test,
                   const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto t0 = Clock::now();
  HeadScore s;
  if (name == "logistic") {
    const auto m = heads::fit_logistic(train, cfg.logistic);
    s = {heads::accuracy(m, train), heads::accuracy(m, test), 0.0};
  } else if (name == "svm") {
    auto c = cfg.svm;
    c.seed = seed;
    const auto m = heads::fit_svm(train, c);
    s = {heads::accuracy(m, train), heads::accuracy(m, test), 0.0};
  } else if (name == "forest") {
    auto c = cfg.forest;
    c.seed = seed;
    const auto m = heads::fit_forest(train, c);
    s = {heads::accuracy(m, train), heads::accuracy(m, test), 0.0};
  } else {
    throw Error("invalid_config", "unknown classifier '" + name + "'");
  }
  s.seconds = seconds_since(t0);
  return s;
}

// ---- purity ---------------------------------------------------------------------

std::vector<std::array<bool, 4>> motif_presence(const synth::Corpus& corpus) {
  std::vector<std::array<bool, 4>> out;
  for (const auto* split : {&corpus.train, &corpus.test}) {
    for (const auto& r : split->records) {
      const auto& inv = corpus.inventory(r.scene_id);
      std::array<bool, 4> p{};
      for (std::size_t m = 0; m < 4; ++m) p[m] = synth::patch_contains(r, inv, synth::kPlantedMotifs[m]);
      out.push_back(p);
    }
  }
  return out;
}

PurityTable purity_table(std::span<const scope::ChannelRanking> rankings,
                         std::span<const std::array<bool, 4>> presence) {
  PurityTable t;
  for (const auto& p : presence)
    for (std::size_t m = 0; m < 4; ++m) t.base_rate[m] += p[m];
  for (auto& b : t.base_rate) b = presence.empty() ? 0.0 : b / static_cast<double>(presence.size());
  for (const auto& r : rankings) {
    ChannelPurity c;
    c.channel = r.channel;
    for (const auto& e : r.entries) {
      if (e.patch >= presence.size()) throw Error("out_of_range", "ranking refers to patch " + std::to_string(e.patch));
      for (std::size_t m = 0; m < 4; ++m) c.purity[m] += presence[e.patch][m];
    }
    c.degenerate = r.entries.empty() || r.entries.front().score == r.entries.back().score;
    double best_lift = 0.1;
    for (std::size_t m = 0; m < 4; ++m) {
      if (!r.entries.empty()) c.purity[m] /= static_cast<double>(r.entries.size());
      const double lift = c.purity[m] - t.base_rate[m];
      if (!c.degenerate && c.purity[m] >= 0.8 && lift >= best_lift) {
        best_lift = lift;
        c.suggested = motif_tag(m);
      }
    }
    t.channels.push_back(c);
  }
  return t;
}

ScoredCorpus score_corpus(const nn::ModelSpec& model, const synth::Corpus& corpus, std::size_t k) {
  ScoredCorpus s;
  s.layer = nn::assigned_layer(model);
  s.fov = scope::fov_map(model, s.layer);
  std::vector<const synth::PatchRecord*> records;
  for (const auto& r : corpus.train.records) records.push_back(&r);
  for (const auto& r : corpus.test.records) records.push_back(&r);
  s.maps.resize(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    auto outs = nn::forward_prefix(model, synth::to_tensor(records[i]->image), s.layer + 1);
    s.maps[i] = std::move(outs.back());
  });
  s.rankings = scope::rank_channels(s.maps, k, s.fov);
  return s;
}

// ---- experiments -------------------------------------------------------------------

Report run_exp1(Workspace& ws) {
  const auto& cfg = ws.config();
  const nn::Tap tap = cfg.taps.front();
  const auto& model = ws.model();
  Report r;
  r.experiment = "exp1";
  r.title = "feature extraction: end-to-end CNN vs classifier heads on tapped features";

  const auto& train = ws.features(tap, Split::train);
  const auto& test = ws.features(tap, Split::test);
  ws.log("exp1: scoring end-to-end model");
  const auto t0 = Clock::now();
  const double cnn_in = cnn_accuracy(model, ws.inputs(Split::train), ws.labels(Split::train));
  const double cnn_out = cnn_accuracy(model, ws.inputs(Split::test), ws.labels(Split::test));
  r.rows.push_back({with_dim("CNN end-to-end", train.cols), train.cols, cnn_in, cnn_out, seconds_since(t0)});
  for (const auto& name : cfg.classifiers) {
    ws.log("exp1: fitting " + name);
    const auto s = fit_head(name, train, test, cfg, name == "svm" ? cfg.svm.seed : cfg.forest.seed);
    r.rows.push_back({with_dim(head_label(name), train.cols), train.cols, s.in_sample, s.out_sample, s.seconds});
  }
  r.reference = {{"AlexNet (4096)", 0.9987, 0.978},
                 {"CNN + Logistic Regression (4096)", 1.0, 0.98},
                 {"CNN + SVM (4096)", 1.0, 0.974},
                 {"CNN + Random Forest (4096)", 1.0, 0.966}};
  double lo = 1.0, hi = 0.0;
  for (const auto& row : r.rows) {
    lo = std::min(lo, row.out_sample);
    hi = std::max(hi, row.out_sample);
  }
  r.details = {{"tap", nn::to_string(tap)},
               {"model_name", model.name},
               {"train_patches", train.rows},
               {"test_patches", test.rows},
               {"min_out_sample", lo},
               {"out_sample_spread", hi - lo},
               {"final_train_loss", ws.train_loss().empty() ? 0.0 : ws.train_loss().back()}};
  write_report(ws.root() / "exp1", r);
  return r;
}

Report run_exp2(Workspace& ws) {
  const auto& cfg = ws.config();
  const auto& model = ws.model();
  const auto& corpus = ws.corpus();
  ws.log("exp2: scoring " + std::to_string(corpus.train.records.size() + corpus.test.records.size()) + " patches");
  const ScoredCorpus scored = score_corpus(model, corpus, cfg.k);
  const auto presence = motif_presence(corpus);
  const PurityTable table = purity_table(scored.rankings, presence);

  std::vector<RgbImage> patches;
  for (const auto* split : {&corpus.train, &corpus.test})
    for (const auto& rec : split->records) patches.push_back(rec.image);
  const auto dir = ws.root() / "exp2";
  ws.log("exp2: exporting gallery");
  const auto gallery = scope::export_gallery(scored.rankings, patches, scored.maps,
                                             {cfg.k, kAssignedTap, model.name, cfg.heatmap}, dir / "gallery");
  const auto tags = suggested_tags(table, model.name);
  scope::save_tags(dir / "tags.suggested.json", tags);

  Report r;
  r.experiment = "exp2";
  r.title = "visualization: top-k patches per channel at the assigned layer";
  json purity = json::array();
  int best_channel = -1;
  double best_tumor = -1.0;
  for (const auto& c : table.channels) {
    json row{{"channel", c.channel}, {"suggested_tag", scope::to_string(c.suggested)}, {"degenerate", c.degenerate}};
    for (std::size_t m = 0; m < 4; ++m) row[motif_key(m)] = c.purity[m];
    purity.push_back(std::move(row));
    if (!c.degenerate && c.purity[0] > best_tumor) {
      best_tumor = c.purity[0];
      best_channel = c.channel;
    }
  }
  json base = json::object();
  for (std::size_t m = 0; m < 4; ++m) base[motif_key(m)] = table.base_rate[m];
  std::map<std::string, int> tag_counts;
  for (const auto& [c, t] : tags.tags) ++tag_counts[std::string(scope::to_string(t))];
  const auto& shape = scored.maps.front().shape;
  r.details = {{"layer", scored.layer},
               {"map", {shape.channels, shape.height, shape.width}},
               {"geometry", geometry_json(scored.fov.geometry)},
               {"k", cfg.k},
               {"model_name", model.name},
               {"gallery", "gallery/gallery.json"},
               {"suggested_tags", "tags.suggested.json"},
               {"heatmap_size", {corpus.train.patch_size, corpus.train.patch_size}},
               {"heatmap_mode", scope::to_string(cfg.heatmap)},
               {"channels", gallery.channels.size()},
               {"base_rate", base},
               {"purity", purity},
               {"best_tumor_channel", best_channel},
               {"best_tumor_purity", best_tumor},
               {"tag_counts", tag_counts}};
  write_report(dir, r);
  return r;
}

Report run_exp3(Workspace& ws) {
  const auto& cfg = ws.config();
  const auto& before_tr = ws.features(nn::Tap::flat_conv, Split::train);
  const auto& before_te = ws.features(nn::Tap::flat_conv, Split::test);
  const auto& after_tr = ws.features(nn::Tap::gap, Split::train);
  const auto& after_te = ws.features(nn::Tap::gap, Split::test);

  Report r;
  r.experiment = "exp3";
  r.title = "feature reduction: average pooling over the assigned map";
  double t_before = 0.0, t_after = 0.0, max_drop = -1.0;
  for (const auto& name : cfg.classifiers) {
    const auto seed = name == "svm" ? cfg.svm.seed : cfg.forest.seed;
    ws.log("exp3: fitting " + name);
    const auto b = fit_head(name, before_tr, before_te, cfg, seed);
    const auto a = fit_head(name, after_tr, after_te, cfg, seed);
    r.rows.push_back({with_dim(head_label(name), before_tr.cols), before_tr.cols, b.in_sample, b.out_sample, b.seconds});
    r.rows.push_back({with_dim(head_label(name), after_tr.cols), after_tr.cols, a.in_sample, a.out_sample, a.seconds});
    t_before += b.seconds;
    t_after += a.seconds;
    max_drop = std::max(max_drop, b.out_sample - a.out_sample);
  }
  r.reference = {{"AlexNet (4096)", 0.9987, 0.978},
                 {"CNN + Logistic Regression (4096)", 1.0, 0.98},
                 {"CNN + Logistic Regression (256)", 0.9854, 0.979},
                 {"CNN + SVM (4096)", 1.0, 0.974},
                 {"CNN + SVM (256)", 0.99, 0.9755},
                 {"CNN + Random Forest (4096)", 1.0, 0.966},
                 {"CNN + Random Forest (256)", 1.0, 0.978}};

  const auto& model = ws.model();
  const auto shapes = nn::chain_shapes(model.input, model.layers);
  const auto& map = shapes[nn::assigned_layer(model)];

  // Same reduction on the AlexNet schedule, by shape arithmetic only.
  const auto alex = nn::alexnet_preset(0);
  auto alex_layers = alex.layers;
  const auto pool = nn::final_pool_index(alex);
  const auto alex_in = nn::chain_shapes(alex.input, alex.layers);
  const auto alex_map = alex_in[pool - 1];
  alex_layers[pool] = nn::LayerSpec::avgpool(alex_map.height, alex_map.height);
  const auto alex_out = nn::chain_shapes(alex.input, alex_layers);
  const auto alex_before = alex_in[pool + 1].size();
  const auto alex_after = alex_out[pool + 1].size();

  r.details = {
      {"dim_before", before_tr.cols},
      {"dim_after", after_tr.cols},
      {"dim_ratio", before_tr.cols / after_tr.cols},
      {"map_area", map.height * map.width},
      {"final_pool_map_area", shapes[nn::final_pool_index(model)].height * shapes[nn::final_pool_index(model)].width},
      {"alexnet", {{"dim_before", alex_before}, {"dim_after", alex_after}, {"dim_ratio", alex_before / alex_after}}},
      {"max_out_sample_drop", max_drop},
      {"published_speedup", "23% faster (whole detection system)"},
      {"timing",
       {{"scope", "classifier train+eval only"},
        {"before_seconds", t_before},
        {"after_seconds", t_after},
        {"speedup", t_after > 0.0 ? t_before / t_after : 0.0}}}};
  write_report(ws.root() / "exp3", r);
  return r;
}

SelectionSets selection_sets(const std::vector<scope::ChannelTag>& tags, const heads::ImportanceVector& importance,
                             std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> cell, unrec;
  for (std::size_t c = 0; c < tags.size(); ++c) {
    if (scope::is_cell_structure(tags[c])) cell.push_back(c);
    if (tags[c] == scope::ChannelTag::unrecognizable) unrec.push_back(c);
  }
  if (k == 0 || cell.size() < k || unrec.size() < k || importance.values.size() < k) {
    throw Error("insufficient_channels", "selection needs k=" + std::to_string(k) +
                                             " channels per set but found " + std::to_string(cell.size()) +
                                             " tumor/lymphocyte and " + std::to_string(unrec.size()) +
                                             " unrecognizable of " + std::to_string(tags.size()));
  }
  auto pick = [&](std::vector<std::size_t> from, std::uint64_t stream) {
    if (from.size() > k) {
      Rng rng(derive_seed(seed, stream));
      shuffle(from.begin(), from.end(), rng);
      from.resize(k);
      std::sort(from.begin(), from.end());
    }
    return from;
  };
  SelectionSets s;
  s.cell = pick(cell, 1);
  s.unrecognizable = pick(unrec, 2);
  const auto ranking = importance.ranking();
  s.important.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(k));
  return s;
}

Report run_exp4(Workspace& ws, const std::optional<scope::TagFile>& tag_file) {
  const auto& cfg = ws.config();
  const auto& train = ws.features(nn::Tap::gap, Split::train);
  const auto& test = ws.features(nn::Tap::gap, Split::test);
  const int channels = static_cast<int>(train.cols);

  Report r;
  r.experiment = "exp4";
  r.title = "feature selection: tagged, random unrecognizable and top-importance channels";

  scope::TagFile tags_in;
  std::string tag_source;
  if (tag_file) {
    tags_in = *tag_file;
    tag_source = "tag file";
  } else {
    ws.log("exp4: deriving channel tags from motif purity");
    const auto scored = score_corpus(ws.model(), ws.corpus(), cfg.k);
    const auto table = purity_table(scored.rankings, motif_presence(ws.corpus()));
    tags_in = suggested_tags(table, ws.model().name);
    tag_source = "motif purity";
  }
  const auto tags = scope::resolve_tags(tags_in, channels, &r.warnings);
  std::size_t n_cell = 0, n_unrec = 0;
  for (auto t : tags) {
    n_cell += scope::is_cell_structure(t);
    n_unrec += t == scope::ChannelTag::unrecognizable;
  }
  const std::size_t k = cfg.selection_k > 0 ? cfg.selection_k : n_cell;
  if (k == 0 || n_cell < k || n_unrec < k) {
    throw Error("insufficient_channels", "selection needs k=" + std::to_string(k) + " but tags give " +
                                             std::to_string(n_cell) + " tumor/lymphocyte and " +
                                             std::to_string(n_unrec) + " unrecognizable of " +
                                             std::to_string(channels) + " channels");
  }

  struct Sums {
    double in = 0, out = 0, sec = 0;
    void add(const HeadScore& s) {
      in += s.in_sample;
      out += s.out_sample;
      sec += s.seconds;
    }
  } all, cell, random, important;
  json per_seed = json::array();
  json composition = json::array();
  std::vector<double> mean_importance(train.cols, 0.0);
  double max_sum_error = 0.0;
  for (const auto seed : cfg.seeds) {
    ws.log("exp4: seed " + std::to_string(seed));
    auto fc = cfg.forest;
    fc.seed = seed;
    const auto t0 = Clock::now();
    const auto forest = heads::fit_forest(train, fc);
    HeadScore s_all{heads::accuracy(forest, train), heads::accuracy(forest, test), 0.0};
    s_all.seconds = seconds_since(t0);
    const auto imp = heads::importance(forest);
    const double sum = std::accumulate(imp.values.begin(), imp.values.end(), 0.0);
    max_sum_error = std::max(max_sum_error, std::fabs(sum - 1.0));
    for (std::size_t j = 0; j < train.cols; ++j) mean_importance[j] += imp.values[j] / cfg.seeds.size();

    const auto sets = selection_sets(tags, imp, k, seed);
    auto run = [&](const std::vector<std::size_t>& cols) {
      return fit_head("forest", train.select_columns(cols), test.select_columns(cols), cfg, seed);
    };
    const auto s_cell = run(sets.cell);
    const auto s_rand = run(sets.unrecognizable);
    const auto s_imp = run(sets.important);
    all.add(s_all);
    cell.add(s_cell);
    random.add(s_rand);
    important.add(s_imp);

    std::size_t rec = 0, cs = 0;
    for (auto c : sets.important) {
      rec += scope::is_recognizable(tags[c]);
      cs += scope::is_cell_structure(tags[c]);
    }
    per_seed.push_back({{"seed", seed},
                        {"all", s_all.out_sample},
                        {"cell", s_cell.out_sample},
                        {"random_unrecognizable", s_rand.out_sample},
                        {"top_importance", s_imp.out_sample}});
    composition.push_back({{"seed", seed}, {"recognizable", rec}, {"cell_structure", cs}, {"unrecognizable", k - rec}});
  }
  const double n = static_cast<double>(cfg.seeds.size());
  auto row = [&](const std::string& label, std::size_t dim, const Sums& s) {
    r.rows.push_back({label, dim, s.in / n, s.out / n, s.sec / n});
  };
  const std::string ks = std::to_string(k);
  row(with_dim("CNN + Random Forest", train.cols), train.cols, all);
  row("CNN + Random Forest (" + ks + " tumor/lymphocyte)", k, cell);
  row("CNN + Random Forest (" + ks + " random unrecognizable)", k, random);
  row("CNN + Random Forest (*" + ks + " top importance)", k, important);
  r.reference = {{"AlexNet (4096)", 0.9987, 0.978},        {"CNN + Random Forest (4096)", 1.0, 0.966},
                 {"CNN + Random Forest (256)", 1.0, 0.978}, {"CNN + Random Forest (43)", 1.0, 0.961},
                 {"CNN + Random Forest (random 43)", 1.0, 0.947}, {"CNN + Random Forest (*43)", 1.0, 0.974}};

  heads::ImportanceVector consensus{mean_importance};
  const auto ranking = consensus.ranking();
  std::size_t rec = 0, cs = 0;
  for (std::size_t i = 0; i < k; ++i) {
    rec += scope::is_recognizable(tags[ranking[i]]);
    cs += scope::is_cell_structure(tags[ranking[i]]);
  }
  std::map<std::string, int> tag_counts;
  for (auto t : tags) ++tag_counts[std::string(scope::to_string(t))];
  r.details = {{"k", k},
               {"seeds", cfg.seeds},
               {"tag_source", tag_source},
               {"tag_counts", tag_counts},
               {"per_seed_out_sample", per_seed},
               {"top_importance_composition", composition},
               {"mean_importance_composition", {{"recognizable", rec}, {"cell_structure", cs}, {"unrecognizable", k - rec}}},
               {"published_composition", {{"k", 43}, {"recognizable", 33}, {"cell_structure", 14}, {"unrecognizable", 10}}},
               {"importance_sum_max_error", max_sum_error}};
  write_report(ws.root() / "exp4", r);
  return r;
}

}  // namespace activscope::bench
