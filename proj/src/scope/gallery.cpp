#include <cstdio>
#include <sstream>

#include "activscope/binary_io.hpp"
#include "activscope/error.hpp"
#include "activscope/parallel.hpp"
#include "activscope/scope.hpp"

namespace activscope::scope {

namespace fs = std::filesystem;
using nlohmann::json;

json to_json(const GalleryManifest& g) {
  json channels = json::array();
  for (const auto& c : g.channels) {
    json entries = json::array();
    for (const auto& e : c.entries) {
      entries.push_back({{"patch", e.patch},
                         {"patch_id", e.patch_id},
                         {"score", e.score},
                         {"box", {{"y", e.box.y}, {"x", e.box.x}, {"h", e.box.h}, {"w", e.box.w}}},
                         {"heatmap", e.heatmap}});
    }
    channels.push_back({{"index", c.index}, {"entries", std::move(entries)}});
  }
  return {{"channels", std::move(channels)}, {"k", g.k}, {"tap", g.tap}, {"model_name", g.model_name}};
}

GalleryManifest gallery_from_json(const json& j) {
  try {
    GalleryManifest g;
    g.k = j.at("k").get<std::size_t>();
    g.tap = j.at("tap").get<std::string>();
    g.model_name = j.at("model_name").get<std::string>();
    for (const auto& jc : j.at("channels")) {
      GalleryChannel c;
      c.index = jc.at("index").get<int>();
      for (const auto& je : jc.at("entries")) {
        GalleryEntry e;
        e.patch = je.at("patch").get<std::string>();
        e.patch_id = je.value("patch_id", std::size_t{0});
        e.score = je.at("score").get<float>();
        const auto& b = je.at("box");
        e.box = {b.at("y").get<int>(), b.at("x").get<int>(), b.at("h").get<int>(), b.at("w").get<int>()};
        e.heatmap = je.at("heatmap").get<std::string>();
        c.entries.push_back(std::move(e));
      }
      g.channels.push_back(std::move(c));
    }
    return g;
  } catch (const json::exception& e) {
    throw Error("parse_error", std::string("gallery.json: ") + e.what());
  }
}

void save_gallery(const fs::path& path, const GalleryManifest& g) {
  binio::write_file(path, to_json(g).dump(1) + "\n");
}

GalleryManifest load_gallery(const fs::path& path) {
  if (!fs::exists(path)) throw Error("missing_file", "missing " + path.string());
  json j;
  try {
    j = json::parse(binio::read_file(path));
  } catch (const json::exception& e) {
    throw Error("parse_error", path.string() + ": " + e.what());
  }
  return gallery_from_json(j);
}

namespace {

std::string entry_stem(int channel, std::size_t rank, std::size_t patch) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "c%03d/r%03zu_p%zu", channel, rank, patch);
  return buf;
}

std::string index_html(const GalleryManifest& g) {
  std::ostringstream o;
  o << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" << g.model_name << " " << g.tap
    << " gallery</title>\n<style>body{font-family:sans-serif}img{image-rendering:pixelated;width:96px;"
       "margin:1px}h2{font-size:1em}</style></head><body>\n<h1>"
    << g.model_name << " / " << g.tap << " / top " << g.k << "</h1>\n";
  for (const auto& c : g.channels) {
    o << "<h2 id=\"c" << c.index << "\">channel " << c.index << "</h2>\n<div>";
    for (const auto& e : c.entries) o << "<img src=\"" << e.patch << "\" title=\"" << e.score << "\">";
    o << "</div>\n<div>";
    for (const auto& e : c.entries) o << "<img src=\"" << e.heatmap << "\">";
    o << "</div>\n";
  }
  o << "</body></html>\n";
  return o.str();
}

}  // namespace

GalleryManifest export_gallery(std::span<const ChannelRanking> rankings, std::span<const RgbImage> patches,
                               std::span<const Tensor> maps, const GalleryOptions& options,
                               const fs::path& out_dir) {
  if (patches.size() != maps.size()) {
    throw Error("shape_mismatch", std::to_string(patches.size()) + " patches but " + std::to_string(maps.size()) +
                                      " maps");
  }
  GalleryManifest g;
  g.k = options.k;
  g.tap = options.tap;
  g.model_name = options.model_name;
  g.channels.resize(rankings.size());

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("io_error", "cannot create " + out_dir.string() + ": " + ec.message());
  for (const auto& r : rankings) {
    const auto dir = (out_dir / entry_stem(r.channel, 0, 0)).parent_path();
    fs::create_directories(dir, ec);
    if (ec) throw Error("io_error", "cannot create " + dir.string() + ": " + ec.message());
  }

  parallel_for(rankings.size(), [&](std::size_t i) {
    const auto& r = rankings[i];
    auto& channel = g.channels[i];
    channel.index = r.channel;
    const std::size_t n = std::min(options.k, r.entries.size());
    for (std::size_t rank = 0; rank < n; ++rank) {
      const auto& e = r.entries[rank];
      if (e.patch >= patches.size()) {
        throw Error("out_of_range", "ranking refers to patch " + std::to_string(e.patch));
      }
      const auto& patch = patches[e.patch];
      const std::string stem = entry_stem(r.channel, rank, e.patch);
      RgbImage boxed = patch;
      draw_box(boxed, e.box.y, e.box.x, e.box.h, e.box.w, kBoxColor);
      write_png(out_dir / (stem + ".png"), boxed);
      const Heatmap heat = render_heatmap(maps[e.patch], r.channel, patch.height, patch.width, options.mode);
      write_png(out_dir / (stem + "_heat.png"), overlay(patch, heat));
      channel.entries.push_back({stem + ".png", e.patch, e.score, e.box, stem + "_heat.png"});
    }
  });

  save_gallery(out_dir / "gallery.json", g);
  binio::write_file(out_dir / "index.html", index_html(g));
  return g;
}

}  // namespace activscope::scope
