// activscope command line: one subcommand per pipeline stage.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#include "activscope/bench.hpp"
#include "activscope/binary_io.hpp"
#include "activscope/error.hpp"
#include "activscope/feature_io.hpp"

using namespace activscope;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "activscope_out";
};

bench::ExperimentConfig resolve_config(const Common& c) {
  bench::ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = bench::load_config(c.config);
  } else {
    cfg.model_preset = "mini_alex";
  }
  if (c.seed) cfg.override_seed(*c.seed);
  return cfg;
}

bench::Workspace workspace(const Common& c, const bench::ExperimentConfig& cfg) {
  return bench::Workspace(c.out, cfg, [](const std::string& msg) { std::cerr << "[activscope] " << msg << "\n"; });
}

void write_scenes(const fs::path& dir, const bench::ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("io_error", "cannot create " + dir.string());
  synth::SceneSpec spec = cfg.dataset.scene;
  spec.seed = cfg.dataset.seed;
  const int total = cfg.dataset.train_scenes + cfg.dataset.test_scenes;
  json inventory = json::array();
  for (int id = 0; id < total; ++id) {
    const auto scene = synth::generate_scene(spec, id);
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03d", id);
    write_png(dir / (std::string(name) + ".png"), scene.image);
    GrayImage mask = scene.mask;
    for (auto& p : mask.pixels) p = p ? 255 : 0;
    write_png(dir / (std::string(name) + "_mask.png"), mask);
    json motifs = json::array();
    for (const auto& m : scene.inventory) {
      motifs.push_back({{"kind", synth::to_string(m.kind)},
                        {"cy", m.cy},
                        {"cx", m.cx},
                        {"size", m.size},
                        {"box", {m.box.y, m.box.x, m.box.h, m.box.w}}});
    }
    inventory.push_back({{"scene_id", id},
                         {"split", id < cfg.dataset.train_scenes ? "train" : "test"},
                         {"image", std::string(name) + ".png"},
                         {"motifs", motifs}});
  }
  binio::write_file(dir / "scenes.json", inventory.dump(1) + "\n");
}

int exit_code(const Error& e) {
  const auto& c = e.code();
  return c == "missing_key" || c == "invalid_config" || c == "unknown_preset" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"activscope: CNN activation-feature workbench on synthetic histology"};
  app.require_subcommand(1);
  Common common;
  std::size_t viz_k = 0;
  std::string exp4_tags;
  std::vector<std::string> extract_taps;

  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--seed", common.seed, "Dataset and training seed");
    sub->add_option("--config", common.config, "ExperimentConfig JSON file");
    sub->add_option("--out", common.out, "Output directory")->capture_default_str();
    return sub;
  };
  auto* synth_cmd = add("synth", "Generate annotated scenes (PNG + inventory)");
  auto* patch_cmd = add("patch", "Sample the balanced patch dataset");
  auto* train_cmd = add("train", "Train the CNN on the dataset");
  auto* extract_cmd = add("extract", "Extract tap features (AFM1 files)");
  extract_cmd->add_option("--tap", extract_taps, "Taps to extract (flat_conv, fc1, gap)");
  auto* viz_cmd = add("viz", "Rank channels and export the top-k gallery");
  viz_cmd->add_option("--k", viz_k, "Patches per channel");
  auto* exp1_cmd = add("exp1", "CNN vs classifier heads on tapped features");
  auto* exp2_cmd = add("exp2", "Channel gallery and motif purity");
  auto* exp3_cmd = add("exp3", "Average-pool feature reduction");
  auto* exp4_cmd = add("exp4", "Feature selection by tags and importance");
  exp4_cmd->add_option("--tags", exp4_tags, "tags.json (defaults to purity-derived tags)");
  auto* report_cmd = add("report", "Collect experiment reports under --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    auto cfg = resolve_config(common);
    auto print = [](const bench::Report& r) { std::cout << bench::render_text(r); };
    if (synth_cmd->parsed()) {
      write_scenes(fs::path(common.out) / "scenes", cfg);
    } else if (patch_cmd->parsed()) {
      auto ws = workspace(common, cfg);
      const auto& c = ws.corpus();
      std::cout << "train " << c.train.records.size() << " test " << c.test.records.size() << " patches in "
                << (fs::path(common.out) / "dataset").string() << "\n";
    } else if (train_cmd->parsed()) {
      auto ws = workspace(common, cfg);
      ws.model();
      const auto& loss = ws.train_loss();
      for (std::size_t e = 0; e < loss.size(); ++e) std::printf("epoch %zu loss %.6f\n", e + 1, loss[e]);
    } else if (extract_cmd->parsed()) {
      if (!extract_taps.empty()) {
        cfg.taps.clear();
        for (const auto& t : extract_taps) cfg.taps.push_back(nn::parse_tap(t));
      }
      auto ws = workspace(common, cfg);
      for (auto tap : cfg.taps) {
        for (auto split : {synth::Split::train, synth::Split::test}) {
          const auto& X = ws.features(tap, split);
          std::cout << nn::to_string(tap) << " " << synth::to_string(split) << " " << X.rows << "x" << X.cols << "\n";
        }
      }
    } else if (viz_cmd->parsed()) {
      if (viz_k > 0) cfg.k = viz_k;
      auto ws = workspace(common, cfg);
      const auto& model = ws.model();
      const auto& corpus = ws.corpus();
      const auto scored = bench::score_corpus(model, corpus, cfg.k);
      std::vector<RgbImage> patches;
      for (const auto* split : {&corpus.train, &corpus.test})
        for (const auto& r : split->records) patches.push_back(r.image);
      const auto g = scope::export_gallery(scored.rankings, patches, scored.maps,
                                           {cfg.k, "assigned", model.name, cfg.heatmap},
                                           fs::path(common.out) / "gallery");
      std::cout << g.channels.size() << " channels, k=" << g.k << ", "
                << (fs::path(common.out) / "gallery" / "gallery.json").string() << "\n";
    } else if (exp1_cmd->parsed()) {
      auto ws = workspace(common, cfg);
      print(bench::run_exp1(ws));
    } else if (exp2_cmd->parsed()) {
      auto ws = workspace(common, cfg);
      print(bench::run_exp2(ws));
    } else if (exp3_cmd->parsed()) {
      auto ws = workspace(common, cfg);
      print(bench::run_exp3(ws));
    } else if (exp4_cmd->parsed()) {
      std::optional<scope::TagFile> tags;
      if (!exp4_tags.empty()) tags = scope::load_tags(exp4_tags);
      auto ws = workspace(common, cfg);
      const auto r = bench::run_exp4(ws, tags);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      print(r);
    } else if (report_cmd->parsed()) {
      std::string text;
      for (const char* name : {"exp1", "exp2", "exp3", "exp4"}) {
        const auto dir = fs::path(common.out) / name;
        if (fs::exists(dir / "report.json")) text += bench::render_text(bench::read_report(dir)) + "\n";
      }
      if (text.empty()) throw Error("missing_file", "no experiment reports under " + common.out);
      binio::write_file(fs::path(common.out) / "report.txt", text);
      std::cout << text;
    }
  } catch (const Error& e) {
    std::cerr << e.one_line() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
