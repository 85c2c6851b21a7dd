#pragma once

// Interpretability core: receptive-field geometry, per-channel activation
// scoring and ranking, heatmaps, and gallery/tag files.

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "activscope/image.hpp"
#include "activscope/nncore.hpp"

namespace activscope::scope {

// Receptive field of one neuron in a layer's output map, in input pixels.
struct LayerGeometry {
  int r = 1;           // field size
  int j = 1;           // jump between neighbouring neurons
  double start = 0.0;  // center of neuron (0, 0)
  bool operator==(const LayerGeometry&) const = default;
};

// Geometry after each of layers[0..=layer_index]. relu passes through; pools
// follow the conv rule. Throws Error("not_spatial") at or past a flatten/fc.
std::vector<LayerGeometry> geometry_chain(std::span<const nn::LayerSpec> layers, std::size_t layer_index);
LayerGeometry layer_geometry(std::span<const nn::LayerSpec> layers, std::size_t layer_index);
LayerGeometry layer_geometry(const nn::ModelSpec& model, std::size_t layer_index);

struct FovBox {
  int y = 0;
  int x = 0;
  int h = 0;
  int w = 0;
  bool contains(int py, int px) const { return py >= y && px >= x && py < y + h && px < x + w; }
  bool operator==(const FovBox&) const = default;
};

// Geometry of one map together with its size and the patch it sits on.
struct FovMap {
  LayerGeometry geometry;
  int map_height = 0;
  int map_width = 0;
  int patch_height = 0;
  int patch_width = 0;

  // r x r box centred on the neuron, clipped to the patch. Throws
  // Error("neuron_out_of_range").
  FovBox box(int row, int col) const;
  FovBox unclipped(int row, int col) const;
};

FovMap fov_map(const nn::ModelSpec& model, std::size_t layer_index);

// ---- scoring and ranking ---------------------------------------------------

struct ChannelScore {
  std::size_t patch = 0;
  int channel = 0;
  float score = 0.0f;  // spatial max
  int row = 0;         // row-major-first argmax
  int col = 0;
  bool operator==(const ChannelScore&) const = default;
};

// One score per channel of a spatial map.
std::vector<ChannelScore> score_channels(const Tensor& map, std::size_t patch);

struct RankEntry {
  std::size_t patch = 0;
  float score = 0.0f;
  int row = 0;
  int col = 0;
  FovBox box;
  bool operator==(const RankEntry&) const = default;
};

struct ChannelRanking {
  int channel = 0;
  std::vector<RankEntry> entries;  // score descending, ties by ascending patch
  bool operator==(const ChannelRanking&) const = default;
};

inline constexpr std::size_t kDefaultTopK = 100;

// Top min(k, n) of one channel's scores. Throws Error("invalid_k") for k == 0
// and Error("mixed_channels") when scores disagree on the channel.
ChannelRanking rank_top_k(std::span<const ChannelScore> scores, std::size_t k, const FovMap& fov);

// Scores every map and ranks each channel; maps[i] belongs to patch i.
std::vector<ChannelRanking> rank_channels(std::span<const Tensor> maps, std::size_t k, const FovMap& fov);

// ---- heatmaps -------------------------------------------------------------

enum class Resize { bilinear, nearest };

std::string_view to_string(Resize mode);
Resize parse_resize(std::string_view name);

struct Heatmap {
  int height = 0;
  int width = 0;
  std::vector<float> values;  // row-major, in [0, 1]
  float min = 0.0f;           // raw map range used for normalization
  float max = 0.0f;

  float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Min-max normalizes the map (a flat map becomes 0.5) and resizes it to
// out_h x out_w. Bilinear uses pixel-center alignment with edge clamping.
Heatmap render_heatmap(std::span<const float> map, int map_h, int map_w, int out_h, int out_w,
                       Resize mode = Resize::bilinear);
Heatmap render_heatmap(const Tensor& map, int channel, int out_h, int out_w, Resize mode = Resize::bilinear);

GrayImage to_gray(const Heatmap& heatmap);
Rgb heat_color(float v);
// Alpha-blends the colored heatmap over the patch.
RgbImage overlay(const RgbImage& patch, const Heatmap& heatmap, float alpha = 0.45f);

inline constexpr Rgb kBoxColor{255, 255, 0};

// ---- gallery --------------------------------------------------------------

struct GalleryEntry {
  std::string patch;    // relative path of the boxed patch image
  std::size_t patch_id = 0;
  float score = 0.0f;
  FovBox box;
  std::string heatmap;  // relative path of the overlay image
  bool operator==(const GalleryEntry&) const = default;
};

struct GalleryChannel {
  int index = 0;
  std::vector<GalleryEntry> entries;
  bool operator==(const GalleryChannel&) const = default;
};

struct GalleryManifest {
  std::vector<GalleryChannel> channels;
  std::size_t k = kDefaultTopK;
  std::string tap;
  std::string model_name;
  bool operator==(const GalleryManifest&) const = default;
};

nlohmann::json to_json(const GalleryManifest& g);
GalleryManifest gallery_from_json(const nlohmann::json& j);
void save_gallery(const std::filesystem::path& path, const GalleryManifest& g);
GalleryManifest load_gallery(const std::filesystem::path& path);

struct GalleryOptions {
  std::size_t k = kDefaultTopK;
  std::string tap;
  std::string model_name;
  Resize mode = Resize::bilinear;
};

// Writes boxed patches, heatmap overlays, gallery.json and index.html under
// out_dir. maps[i] is the tapped map of patches[i]. Throws Error("io_error")
// when out_dir cannot be written.
GalleryManifest export_gallery(std::span<const ChannelRanking> rankings, std::span<const RgbImage> patches,
                               std::span<const Tensor> maps, const GalleryOptions& options,
                               const std::filesystem::path& out_dir);

// ---- channel tags ---------------------------------------------------------

enum class ChannelTag { tumor, lymphocyte, collagen, other_structure, unrecognizable };

std::string_view to_string(ChannelTag tag);
ChannelTag parse_tag(std::string_view name);  // Error("invalid_tag")
bool is_cell_structure(ChannelTag tag);       // tumor or lymphocyte
bool is_recognizable(ChannelTag tag);         // anything but unrecognizable

struct TagFile {
  std::string model_name;
  std::string tap;
  std::map<int, ChannelTag> tags;
  std::vector<int> untagged;
  bool operator==(const TagFile&) const = default;
};

nlohmann::json to_json(const TagFile& t);
TagFile tags_from_json(const nlohmann::json& j);
void save_tags(const std::filesystem::path& path, const TagFile& t);
TagFile load_tags(const std::filesystem::path& path);

// One tag per channel. Indices outside [0, channels) throw
// Error("tag_out_of_range"); missing channels become unrecognizable and add
// one warning each.
std::vector<ChannelTag> resolve_tags(const TagFile& t, int channels, std::vector<std::string>* warnings);

}  // namespace activscope::scope
