// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--work DIR] [criterion ...]
//
// Without --work a scratch directory is used and removed afterwards.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "activscope/bench.hpp"
#include "activscope/binary_io.hpp"
#include "activscope/dataset_io.hpp"
#include "activscope/error.hpp"
#include "activscope/feature_io.hpp"
#include "activscope/heads.hpp"
#include "activscope/model_io.hpp"
#include "activscope/scope.hpp"
#include "support/oracles.hpp"
#include "support/tiny.hpp"

using namespace activscope;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& p) { return binio::read_file(p); }

// Shared state for the seed-42 run used by criteria 4 to 7.
struct Shared {
  fs::path work;
  std::optional<bench::Workspace> main;
  std::optional<bench::Report> exp2;

  bench::Workspace& workspace() {
    if (!main) {
      bench::ExperimentConfig cfg;
      cfg.model_preset = "mini_alex";
      cfg.override_seed(42);
      main.emplace(work / "main", cfg, [](const std::string& m) { std::fprintf(stderr, "  .. %s\n", m.c_str()); });
    }
    return *main;
  }
  const bench::Report& exp2_report() {
    if (!exp2) exp2 = bench::run_exp2(workspace());
    return *exp2;
  }
};

// ---- 1 -------------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  Rng rng(derive_seed(2024, 1));
  double worst = 0.0;
  int cases = 0;
  for (auto kind : {nn::LayerKind::conv, nn::LayerKind::maxpool, nn::LayerKind::avgpool, nn::LayerKind::fc}) {
    for (int i = 0; i < 50; ++i, ++cases) {
      const auto c = oracle::random_layer_case(kind, rng);
      worst = std::max(worst, oracle::max_abs_diff(nn::layer_forward(c.spec, c.params, c.input), oracle::oracle_forward(c)));
    }
  }
  const double s = since(t0);
  return {worst <= 1e-5 && s < 10.0,
          fmt("%d random conv/maxpool/avgpool/fc shapes, max abs diff %.2e (<= 1e-5), %.1f s (< 10 s)", cases, worst, s)};
}

// ---- 2 -------------------------------------------------------------------------

Outcome gradient_check() {
  const auto t0 = Clock::now();
  const auto m = nn::mini_alex_preset(42);
  const auto g = nn::swap_pooling(m, nn::final_pool_index(m));
  Rng rng(5);
  double worst = 0.0;
  bool ok = true;
  std::set<std::string> kinds;
  std::size_t checked = 0, skipped = 0;
  for (const auto* model : {&m, &g}) {
    for (int label = 0; label < 2; ++label) {
      const auto x = oracle::random_tensor<float>(model->input, rng, 0.0, 1.0);
      const auto rep = nn::grad_check(*model, x, label, 1e-4, 1e-3, 32, 7 + label);
      ok = ok && rep.passed();
      worst = std::max(worst, rep.max_relative_error());
      for (const auto& grp : rep.groups) {
        checked += grp.checked;
        skipped += grp.skipped_switches;
      }
    }
    for (const auto& l : model->layers) kinds.insert(std::string(nn::to_string(l.kind)));
  }
  std::string kind_list;
  for (const auto& k : kinds) kind_list += (kind_list.empty() ? "" : ",") + k;
  const double s = since(t0);
  return {ok && worst <= 1e-3 && s < 30.0,
          fmt("MiniAlex and its pooled variant (%s), %zu coordinates, %zu switch-straddling skipped, max rel err "
              "%.2e (<= 1e-3), %.1f s (< 30 s)",
              kind_list.c_str(), checked, skipped, worst, s)};
}

// ---- 3 -------------------------------------------------------------------------

// Neurons of one layer whose value changes when pixels outside their box are
// redrawn; counted over `n` random neurons against a single baseline.
int containment_failures(const nn::ModelSpec& m, std::size_t layer, int n, Rng& rng) {
  const auto fov = scope::fov_map(m, layer);
  const auto x = oracle::random_tensor<float>(m.input, rng, 0.0, 1.0);
  const auto base = oracle::layer_output(m, x, layer);
  int failures = 0;
  for (int t = 0; t < n; ++t) {
    const int row = static_cast<int>(uniform_index(rng, fov.map_height));
    const int col = static_cast<int>(uniform_index(rng, fov.map_width));
    const auto box = fov.box(row, col);
    Tensor y = x;
    for (int c = 0; c < y.shape.channels; ++c)
      for (int i = 0; i < y.shape.height; ++i)
        for (int j = 0; j < y.shape.width; ++j)
          if (!box.contains(i, j)) y.at(c, i, j) = static_cast<float>(uniform(rng, -2.0, 2.0));
    const auto out = oracle::layer_output(m, y, layer);
    if (oracle::neuron_column(out, row, col) != oracle::neuron_column(base, row, col)) ++failures;
  }
  return failures;
}

// With nonnegative weights, zero biases and a black image, a single lit pixel
// reaches exactly the neurons whose receptive field holds it: every path is
// positive and every max window picks it up. Returns the number of interior
// neurons whose box corners are unreachable or whose outside neighbours are.
int extent_failures(nn::ModelSpec m, std::size_t layer, int n, Rng& rng) {
  for (auto& p : m.params) {
    for (auto& w : p.weight) w = std::fabs(w);
    std::fill(p.bias.begin(), p.bias.end(), 0.0f);
  }
  const auto fov = scope::fov_map(m, layer);
  const Tensor black(m.input, 0.0f);
  auto lit = [&](int py, int px, int row, int col) {
    if (py < 0 || px < 0 || py >= m.input.height || px >= m.input.width) return false;
    Tensor y = black;
    for (int c = 0; c < 3; ++c) y.at(c, py, px) = 1.0f;
    const auto v = oracle::neuron_column(oracle::layer_output(m, y, layer), row, col);
    return std::any_of(v.begin(), v.end(), [](float a) { return a != 0.0f; });
  };
  int failures = 0, tried = 0;
  while (tried < n) {
    const int row = static_cast<int>(uniform_index(rng, fov.map_height));
    const int col = static_cast<int>(uniform_index(rng, fov.map_width));
    const auto u = fov.unclipped(row, col);
    if (!(fov.box(row, col) == u)) continue;
    ++tried;
    const int y0 = u.y, y1 = u.y + u.h - 1, x0 = u.x, x1 = u.x + u.w - 1;
    const bool inside = lit(y0, x0, row, col) && lit(y0, x1, row, col) && lit(y1, x0, row, col) && lit(y1, x1, row, col);
    const bool outside = lit(y0 - 1, x0, row, col) || lit(y1 + 1, x1, row, col) || lit(y0, x0 - 1, row, col) ||
                         lit(y1, x1 + 1, row, col);
    if (!inside || outside) ++failures;
  }
  return failures;
}

Outcome receptive_fields() {
  const auto t0 = Clock::now();
  const auto mini = nn::mini_alex_preset(42);
  const auto alex = nn::alexnet_preset(42);
  const auto g3 = scope::layer_geometry(mini, 6);
  const auto g5 = scope::layer_geometry(alex, 10);
  const auto gp = scope::layer_geometry(alex, 12);
  const bool values = g3.r == 24 && g3.j == 4 && g5.r == 163 && g5.j == 16 && gp.r == 195 && gp.j == 32;
  Rng rng(derive_seed(42, 3));
  const int c_mini = containment_failures(mini, 6, 100, rng);
  const int c_conv5 = containment_failures(alex, 10, 100, rng);
  const int c_pool5 = containment_failures(alex, 12, 100, rng);
  const int e_mini = extent_failures(mini, 6, 10, rng);
  const int e_conv5 = extent_failures(alex, 10, 5, rng);
  const int e_pool5 = extent_failures(alex, 12, 5, rng);
  const double s = since(t0);
  const bool ok = values && c_mini + c_conv5 + c_pool5 == 0 && e_mini + e_conv5 + e_pool5 == 0 && s < 60.0;
  return {ok, fmt("MiniAlex conv3 r=%d j=%d, AlexNet conv5 r=%d j=%d, pool5 r=%d j=%d; containment violations "
                  "%d/%d/%d of 100 neurons each; exact-extent violations %d/%d/%d; %.1f s (< 60 s)",
                  g3.r, g3.j, g5.r, g5.j, gp.r, gp.j, c_mini, c_conv5, c_pool5, e_mini, e_conv5, e_pool5, s)};
}

// ---- 4 -------------------------------------------------------------------------

Outcome exp1(Shared& sh) {
  const auto t0 = Clock::now();
  auto& ws = sh.workspace();
  const auto r = bench::run_exp1(ws);
  double lo = 1.0, hi = 0.0;
  std::string rows;
  for (const auto& row : r.rows) {
    lo = std::min(lo, row.out_sample);
    hi = std::max(hi, row.out_sample);
    rows += fmt(" %s=%.4f", row.structure.c_str(), row.out_sample);
  }
  const auto& c = ws.corpus();
  const bool sizes = c.train.records.size() == 2000 && c.test.records.size() == 1000;
  return {r.rows.size() == 4 && sizes && lo >= 0.90 && hi - lo <= 0.05,
          fmt("seed 42, %zu/%zu patches, out-sample%s; min %.4f (>= 0.90), spread %.4f (<= 0.05), %.0f s",
              c.train.records.size(), c.test.records.size(), rows.c_str(), lo, hi - lo, since(t0))};
}

// ---- 5 -------------------------------------------------------------------------

Outcome exp3(Shared& sh) {
  const auto t0 = Clock::now();
  const auto r = bench::run_exp3(sh.workspace());
  const auto& d = r.details;
  const auto& a = d["alexnet"];
  const bool alex = a["dim_before"] == 9216 && a["dim_after"] == 256 && a["dim_ratio"] == 36;
  const bool mini = d["dim_ratio"] == d["final_pool_map_area"] &&
                    d["dim_before"].get<std::size_t>() == d["dim_after"].get<std::size_t>() * d["dim_ratio"].get<std::size_t>();
  const double drop = d["max_out_sample_drop"];
  const double speedup = d["timing"]["speedup"];
  return {alex && mini && drop <= 0.02 && speedup > 1.0,
          fmt("AlexNet %d -> %d (ratio %d), MiniAlex %zu -> %zu (ratio %zu = pooled map area %zu); max out-sample "
              "drop %.4f (<= 0.02); classifier train+eval speedup %.1fx (> 1), %.0f s",
              a["dim_before"].get<int>(), a["dim_after"].get<int>(), a["dim_ratio"].get<int>(),
              d["dim_before"].get<std::size_t>(), d["dim_after"].get<std::size_t>(), d["dim_ratio"].get<std::size_t>(),
              d["final_pool_map_area"].get<std::size_t>(), drop, speedup, since(t0))};
}

// ---- 6 -------------------------------------------------------------------------

Outcome exp4(Shared& sh) {
  const auto t0 = Clock::now();
  sh.exp2_report();
  const auto tags = scope::load_tags(sh.work / "main" / "exp2" / "tags.suggested.json");
  std::size_t n_cell = 0, n_unrec = 0;
  for (const auto& [c, t] : tags.tags) {
    n_cell += scope::is_cell_structure(t);
    n_unrec += t == scope::ChannelTag::unrecognizable;
  }
  auto cfg = sh.workspace().config();
  cfg.selection_k = std::min(n_cell, n_unrec);
  bench::Workspace ws(sh.work / "main", cfg);
  const auto r = bench::run_exp4(ws, tags);
  const double all = r.rows[0].out_sample, cell = r.rows[1].out_sample, rnd = r.rows[2].out_sample,
               imp = r.rows[3].out_sample;
  const double sum_err = r.details["importance_sum_max_error"];

  int planted_first = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(derive_seed(seed, 6));
    FeatureMatrix X;
    X.rows = 300;
    X.cols = 10;
    X.tap = "planted";
    for (std::uint32_t j = 0; j < 10; ++j) X.provenance.push_back({j, 0});
    for (std::size_t i = 0; i < X.rows; ++i) {
      for (int j = 0; j < 10; ++j) X.data.push_back(static_cast<float>(uniform(rng, -1, 1)));
      X.labels.push_back(X.data[i * 10 + 3] > 0.0f ? 1 : 0);
    }
    heads::ForestConfig fc;
    fc.seed = seed;
    planted_first += heads::importance(heads::fit_forest(X, fc)).ranking().front() == 3;
  }
  const bool ok = imp >= rnd && cell >= rnd && sum_err <= 1e-6 && planted_first == 5 && cfg.seeds.size() == 5;
  return {ok, fmt("k=%zu (%zu tumor/lymphocyte, %zu unrecognizable purity tags), mean out-sample over %zu seeds: all "
                  "%.4f, tagged-cell %.4f, random-unrecognizable %.4f, top-importance %.4f; importance sum error "
                  "%.1e (<= 1e-6); planted feature ranked first %d/5, %.0f s",
                  cfg.selection_k, n_cell, n_unrec, cfg.seeds.size(), all, cell, rnd, imp, sum_err, planted_first,
                  since(t0))};
}

// ---- 7 -------------------------------------------------------------------------

Outcome exp2(Shared& sh) {
  const auto t0 = Clock::now();
  auto& ws = sh.workspace();
  const auto& corpus = ws.corpus();

  // Hand-set matched filter on channel 0.
  const auto filter = oracle::matched_filter_model();
  const auto scored = bench::score_corpus(filter, corpus, 100);
  std::vector<const synth::PatchRecord*> records;
  for (const auto* split : {&corpus.train, &corpus.test})
    for (const auto& r : split->records) records.push_back(&r);
  int with_dot = 0;
  for (const auto& e : scored.rankings[0].entries) {
    const auto& rec = *records[e.patch];
    with_dot += synth::patch_contains(rec, corpus.inventory(rec.scene_id), synth::MotifClass::lymphocyte_dot);
  }

  // Trained models on five seeds, at reduced scale.
  int seeds_ok = 0;
  std::string purities;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    bench::ExperimentConfig cfg;
    cfg.model_preset = "mini_alex";
    cfg.dataset.train_per_class = 300;
    cfg.dataset.test_per_class = 100;
    cfg.train.epochs = 8;
    cfg.override_seed(seed);
    bench::Workspace w(sh.work / ("exp2_seed" + std::to_string(seed)), cfg);
    const auto r = bench::run_exp2(w);
    const double p = r.details["best_tumor_purity"];
    seeds_ok += p >= 0.8;
    purities += fmt(" %.2f", p);
  }

  // Heatmap dimensions of the seed-42 gallery.
  const auto& main2 = sh.exp2_report();
  const auto gdir = sh.work / "main" / "exp2" / "gallery";
  const auto g = scope::load_gallery(gdir / "gallery.json");
  std::size_t heatmaps = 0, bad_dims = 0;
  const int ps = corpus.train.patch_size;
  for (const auto& ch : g.channels)
    for (const auto& e : ch.entries) {
      const auto h = read_png_rgb(gdir / e.heatmap);
      ++heatmaps;
      bad_dims += h.width != ps || h.height != ps;
    }
  const bool ok = with_dot >= 90 && seeds_ok >= 4 && heatmaps == 32 * 100 && bad_dims == 0;
  return {ok, fmt("matched filter: %d/100 top patches contain a lymphocyte dot (>= 90); trained best tumor purity by "
                  "seed 1-5:%s (>= 0.8 on %d/5, need 4); seed-42 best %.2f; %zu heatmaps, %zu not %dx%d, %.0f s",
                  with_dot, purities.c_str(), seeds_ok, main2.details["best_tumor_purity"].get<double>(), heatmaps,
                  bad_dims, ps, ps, since(t0))};
}

// ---- 8 -------------------------------------------------------------------------

void run_all(const fs::path& root) {
  bench::Workspace ws(root, tiny::config());
  bench::run_exp1(ws);
  bench::run_exp2(ws);
  bench::run_exp3(ws);
  bench::run_exp4(ws, tiny::tags());
  bench::run_exp4(ws, std::nullopt);
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).generic_string();
    const auto name = e.path().filename().string();
    if (name == "report.txt") continue;
    if (name == "report.json") files[rel] = bench::strip_timing(json::parse(slurp(e.path()))).dump();
    else files[rel] = slurp(e.path());
  }
  return files;
}

Outcome determinism(const fs::path& work) {
  const auto t0 = Clock::now();
  std::string exp4_note;
  try {
    run_all(work / "det_a");
  } catch (const Error& e) {
    exp4_note = e.code();
  }
  try {
    run_all(work / "det_b");
  } catch (const Error& e) {
    if (exp4_note != e.code()) exp4_note += "/" + e.code();
  }
  const auto a = tree(work / "det_a"), b = tree(work / "det_b");
  std::size_t differ = 0, features = 0, pngs = 0;
  std::string first;
  for (const auto& [rel, bytes] : a) {
    auto it = b.find(rel);
    if (it == b.end() || it->second != bytes) {
      if (first.empty()) first = rel;
      ++differ;
    }
    features += rel.ends_with(".afm");
    pngs += rel.ends_with(".png");
  }
  differ += b.size() > a.size() ? b.size() - a.size() : 0;
  const double s = since(t0);
  return {differ == 0 && a.size() == b.size() && features > 0 && s < 300.0,
          fmt("two fresh runs of exp1-4: %zu files (%zu feature files, %zu PNGs, manifests, model, reports without "
              "timing), %zu differ%s%s; %.0f s (< 300 s)",
              a.size(), features, pngs, differ, first.empty() ? "" : (", first " + first).c_str(),
              exp4_note.empty() ? "" : (", purity-tag exp4: " + exp4_note).c_str(), s)};
}

// ---- 9 -------------------------------------------------------------------------

Outcome persistence(const fs::path& work) {
  const auto t0 = Clock::now();
  const auto dir = work / "persist";
  fs::create_directories(dir);
  std::vector<std::string> failed;
  auto expect = [&](const std::string& what, bool ok) {
    if (!ok) failed.push_back(what);
  };
  auto expect_error = [&](const std::string& what, const std::string& code, const std::function<void()>& f) {
    try {
      f();
      failed.push_back(what + " (no error)");
    } catch (const Error& e) {
      if (e.code() != code) failed.push_back(what + " (" + e.code() + ")");
    } catch (const std::exception& e) {
      failed.push_back(what + " (unstructured: " + e.what() + ")");
    }
  };

  auto spec = tiny::config().dataset;
  spec.train_per_class = 5;
  spec.test_per_class = 5;
  const auto corpus = synth::build_corpus(spec);
  synth::write_dataset(dir / "dataset", corpus);
  expect("dataset", synth::read_dataset(dir / "dataset") == corpus);

  const auto model = nn::mini_alex_preset(42);
  nn::save_model(dir / "model.asm", model);
  expect("model", nn::load_model(dir / "model.asm") == model);

  const auto tensors = synth::to_tensors(corpus.train);
  const auto X = nn::extract_features(model, nn::Tap::flat_conv, tensors, synth::to_labels(corpus.train));
  save_features(dir / "x.afm", X);
  expect("features", load_features(dir / "x.afm") == X);

  std::vector<Tensor> maps;
  std::vector<RgbImage> patches;
  for (const auto& r : corpus.train.records) {
    patches.push_back(r.image);
    maps.push_back(oracle::layer_output(model, synth::to_tensor(r.image), 7));
  }
  const auto fov = scope::fov_map(model, 7);
  const auto g = scope::export_gallery(scope::rank_channels(maps, 5, fov), patches, maps, {5, "assigned", model.name},
                                       dir / "gallery");
  expect("gallery", scope::load_gallery(dir / "gallery" / "gallery.json") == g);
  scope::save_gallery(dir / "gallery2.json", g);
  expect("gallery bytes", slurp(dir / "gallery2.json") == slurp(dir / "gallery" / "gallery.json"));

  auto tags = tiny::tags();
  tags.tags.erase(31);
  tags.untagged = {31};
  scope::save_tags(dir / "tags.json", tags);
  expect("tags", scope::load_tags(dir / "tags.json") == tags);

  auto corrupt = [&](const fs::path& src, const std::string& name, const std::function<void(std::string&)>& edit) {
    auto bytes = slurp(src);
    edit(bytes);
    binio::write_file(dir / name, bytes);
    return dir / name;
  };
  const auto m1 = corrupt(dir / "model.asm", "m1.asm", [](std::string& b) { b[1] = 'X'; });
  expect_error("model magic", "bad_magic", [&] { nn::load_model(m1); });
  const auto m2 = corrupt(dir / "model.asm", "m2.asm", [](std::string& b) { b.resize(6); });
  expect_error("model header length", "truncated", [&] { nn::load_model(m2); });
  const auto m3 = corrupt(dir / "model.asm", "m3.asm", [](std::string& b) { b[9] = '#'; });
  expect_error("model header json", "parse_error", [&] { nn::load_model(m3); });
  const auto m4 = corrupt(dir / "model.asm", "m4.asm", [](std::string& b) { b.resize(b.size() - 10); });
  expect_error("model weights", "truncated", [&] { nn::load_model(m4); });
  const auto f1 = corrupt(dir / "x.afm", "f1.afm", [](std::string& b) { b[0] = 'B'; });
  expect_error("features magic", "bad_magic", [&] { load_features(f1); });
  const auto f2 = corrupt(dir / "x.afm", "f2.afm", [](std::string& b) { b.resize(10); });
  expect_error("features header", "truncated", [&] { load_features(f2); });
  const auto j1 = corrupt(dir / "gallery" / "gallery.json", "g1.json", [](std::string& b) { b = b.substr(0, 40); });
  expect_error("gallery json", "parse_error", [&] { scope::load_gallery(j1); });
  const auto t1 = corrupt(dir / "tags.json", "t1.json", [](std::string& b) { b = "{\"model_name\": 3}"; });
  expect_error("tags json", "parse_error", [&] { scope::load_tags(t1); });
  fs::copy(dir / "dataset", dir / "dataset_bad", fs::copy_options::recursive);
  binio::write_file(dir / "dataset_bad" / "dataset.json", "{\"tau\": ");
  expect_error("dataset header", "parse_error", [&] { synth::read_dataset(dir / "dataset_bad"); });
  fs::remove_all(dir / "dataset_bad");
  fs::copy(dir / "dataset", dir / "dataset_bad", fs::copy_options::recursive);
  auto manifest = slurp(dir / "dataset_bad" / "manifest.jsonl");
  manifest.replace(manifest.find("\"y\":"), 4, "\"y\" ");
  binio::write_file(dir / "dataset_bad" / "manifest.jsonl", manifest);
  expect_error("dataset manifest", "parse_error", [&] { synth::read_dataset(dir / "dataset_bad"); });

  const double s = since(t0);
  std::string list;
  for (const auto& f : failed) list += " " + f + ";";
  return {failed.empty() && s < 10.0,
          fmt("dataset, model, AFM1 features, gallery.json, tags.json equal after write/read; 10 corrupted inputs "
              "raise structured errors; %s%.1f s (< 10 s)",
              failed.empty() ? "" : ("failures:" + list + " ").c_str(), s)};
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<fs::path> work_arg;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work" && i + 1 < argc) work_arg = argv[++i];
    else only.insert(std::stoi(a));
  }
  std::optional<oracle::TempDir> scratch;
  if (!work_arg) scratch.emplace("acceptance");
  Shared sh{work_arg ? *work_arg : scratch->path(), {}, {}};
  fs::create_directories(sh.work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"gradient check", gradient_check},
      {"receptive fields", receptive_fields},
      {"classifier heads on CNN features", [&] { return exp1(sh); }},
      {"average-pool feature reduction", [&] { return exp3(sh); }},
      {"feature selection ordering", [&] { return exp4(sh); }},
      {"channel visualization", [&] { return exp2(sh); }},
      {"determinism", [&] { return determinism(sh.work); }},
      {"persistence", [&] { return persistence(sh.work); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
