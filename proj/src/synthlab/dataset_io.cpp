#include "activscope/dataset_io.hpp"

#include <zlib.h>

#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "activscope/binary_io.hpp"
#include "activscope/error.hpp"

namespace activscope::synth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Crc {
 public:
  void add(const void* data, std::size_t n) {
    value_ = crc32(value_, static_cast<const Bytef*>(data), static_cast<uInt>(n));
  }
  std::string hex() const {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08lx", value_);
    return buf;
  }

 private:
  uLong value_ = crc32(0L, Z_NULL, 0);
};

json counts_json(const DatasetManifest& m) {
  const auto c = m.counts();
  return {{"positive", c.positive}, {"negative", c.negative}};
}

json motif_json(const PlantedMotif& m) {
  return {{"kind", to_string(m.kind)},
          {"box", {{"y", m.box.y}, {"x", m.box.x}, {"h", m.box.h}, {"w", m.box.w}}},
          {"cy", m.cy},
          {"cx", m.cx},
          {"size", m.size}};
}

PlantedMotif motif_from(const json& j) {
  const auto& b = j.at("box");
  return {parse_motif(j.at("kind").get<std::string>()),
          {b.at("y").get<int>(), b.at("x").get<int>(), b.at("h").get<int>(), b.at("w").get<int>()},
          j.at("cy").get<double>(),
          j.at("cx").get<double>(),
          j.at("size").get<double>()};
}

json read_json(const fs::path& path) {
  if (!fs::exists(path)) throw Error("missing_file", "missing " + path.string());
  try {
    return json::parse(binio::read_file(path));
  } catch (const json::exception& e) {
    throw Error("parse_error", path.filename().string() + ": " + e.what());
  }
}

}  // namespace

std::string patch_filename(const PatchRecord& r) {
  return std::to_string(r.scene_id) + "_" + std::to_string(r.y) + "_" + std::to_string(r.x) + "_" +
         std::string(to_string(r.label)) + ".png";
}

void write_dataset(const fs::path& dir, const Corpus& corpus) {
  std::error_code ec;
  fs::create_directories(dir / "patches", ec);
  if (ec) throw Error("io_error", "cannot create " + (dir / "patches").string() + ": " + ec.message());

  std::string manifest;
  for (const auto* m : {&corpus.train, &corpus.test}) {
    for (const auto& r : m->records) {
      manifest += json{{"scene_id", r.scene_id},
                       {"y", r.y},
                       {"x", r.x},
                       {"label", to_string(r.label)},
                       {"overlap", r.overlap},
                       {"split", to_string(r.split)}}
                      .dump();
      manifest += '\n';
      write_png(dir / "patches" / patch_filename(r), r.image);
    }
  }
  binio::write_file(dir / "manifest.jsonl", manifest);

  Crc crc;
  crc.add(manifest.data(), manifest.size());
  for (const auto* m : {&corpus.train, &corpus.test})
    for (const auto& r : m->records) crc.add(r.image.pixels.data(), r.image.pixels.size());

  const json meta{{"tau", corpus.train.tau},
                  {"seed", corpus.train.seed},
                  {"patch_size", corpus.train.patch_size},
                  {"grid_stride", corpus.train.grid_stride},
                  {"counts", {{"train", counts_json(corpus.train)}, {"test", counts_json(corpus.test)}}},
                  {"checksum", crc.hex()}};
  binio::write_file(dir / "dataset.json", meta.dump(2) + "\n");

  json scenes = json::array();
  for (const auto& s : corpus.scenes) {
    json motifs = json::array();
    for (const auto& m : s.motifs) motifs.push_back(motif_json(m));
    scenes.push_back({{"scene_id", s.scene_id}, {"split", to_string(s.split)}, {"motifs", motifs}});
  }
  binio::write_file(dir / "scenes.json", scenes.dump() + "\n");
}

Corpus read_dataset(const fs::path& dir) {
  const json meta = read_json(dir / "dataset.json");
  const fs::path manifest_path = dir / "manifest.jsonl";
  if (!fs::exists(manifest_path)) throw Error("missing_file", "missing " + manifest_path.string());
  const std::string manifest = binio::read_file(manifest_path);

  Corpus corpus;
  try {
    for (auto* m : {&corpus.train, &corpus.test}) {
      m->tau = meta.at("tau").get<double>();
      m->seed = meta.at("seed").get<std::uint64_t>();
      m->patch_size = meta.at("patch_size").get<int>();
      m->grid_stride = meta.at("grid_stride").get<int>();
    }
  } catch (const json::exception& e) {
    throw Error("parse_error", std::string("dataset.json: ") + e.what());
  }
  corpus.train.split = Split::train;
  corpus.test.split = Split::test;

  std::istringstream lines(manifest);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    PatchRecord r;
    try {
      const json j = json::parse(line);
      if (j.size() != 6) throw Error("parse_error", "expected exactly 6 fields");
      r.scene_id = j.at("scene_id").get<int>();
      r.y = j.at("y").get<int>();
      r.x = j.at("x").get<int>();
      r.label = parse_label(j.at("label").get<std::string>());
      r.overlap = j.at("overlap").get<double>();
      r.split = parse_split(j.at("split").get<std::string>());
    } catch (const json::exception& e) {
      throw Error("parse_error", "manifest.jsonl line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("parse_error", "manifest.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
    const fs::path png = dir / "patches" / patch_filename(r);
    if (!fs::exists(png)) throw Error("missing_file", "missing patch " + png.string());
    r.image = read_png_rgb(png);
    (r.split == Split::train ? corpus.train : corpus.test).records.push_back(std::move(r));
  }

  try {
    const auto& counts = meta.at("counts");
    for (const auto* m : {&corpus.train, &corpus.test}) {
      const auto& expected = counts.at(std::string(to_string(m->split)));
      const auto c = m->counts();
      if (expected.at("positive").get<std::size_t>() != c.positive ||
          expected.at("negative").get<std::size_t>() != c.negative) {
        throw Error("count_mismatch", std::string(to_string(m->split)) +
                                          " split counts disagree with dataset.json");
      }
    }
  } catch (const json::exception& e) {
    throw Error("parse_error", std::string("dataset.json counts: ") + e.what());
  }

  Crc crc;
  crc.add(manifest.data(), manifest.size());
  for (const auto* m : {&corpus.train, &corpus.test})
    for (const auto& r : m->records) crc.add(r.image.pixels.data(), r.image.pixels.size());
  const auto stored = meta.value("checksum", std::string{});
  if (stored != crc.hex()) {
    throw Error("checksum_mismatch", "dataset checksum " + crc.hex() + " does not match stored " + stored);
  }

  const json scenes = read_json(dir / "scenes.json");
  try {
    for (const auto& s : scenes) {
      SceneInventory inv{s.at("scene_id").get<int>(), parse_split(s.at("split").get<std::string>()), {}};
      for (const auto& m : s.at("motifs")) inv.motifs.push_back(motif_from(m));
      corpus.scenes.push_back(std::move(inv));
    }
  } catch (const json::exception& e) {
    throw Error("parse_error", std::string("scenes.json: ") + e.what());
  }
  return corpus;
}

}  // namespace activscope::synth
