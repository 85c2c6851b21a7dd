#pragma once

// Synthetic histology-like scenes with planted motifs and a lesion mask, and
// the balanced patching protocol that turns them into labelled datasets.

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "activscope/image.hpp"
#include "activscope/tensor.hpp"

namespace activscope::synth {

enum class MotifClass { tumor_blob, lymphocyte_dot, collagen_stripe, lumen_hole, background };

inline constexpr std::array<MotifClass, 4> kPlantedMotifs = {
    MotifClass::tumor_blob, MotifClass::lymphocyte_dot, MotifClass::collagen_stripe,
    MotifClass::lumen_hole};

std::string_view to_string(MotifClass motif);
MotifClass parse_motif(std::string_view name);

// size means radius for blobs and dots, half-length for stripes and the
// semi-major axis for lumen ellipses.
struct MotifRecipe {
  int count = 0;
  double min_size = 1.0;
  double max_size = 1.0;
};

struct SceneSpec {
  int width = 512;
  int height = 512;
  MotifRecipe tumor{3, 56.0, 84.0};
  MotifRecipe lymphocyte{70, 2.5, 4.0};
  MotifRecipe collagen{8, 40.0, 90.0};
  MotifRecipe lumen{5, 10.0, 22.0};
  std::uint64_t seed = 0;
  int max_attempts = 4000;  // placement retries per motif

  const MotifRecipe& recipe(MotifClass motif) const;
  MotifRecipe& recipe(MotifClass motif);
  // Throws Error("invalid_spec"); min_extent is the patch size that must fit.
  void validate(int min_extent = 1) const;
};

struct Box {
  int y = 0;
  int x = 0;
  int h = 0;
  int w = 0;

  bool contains(double py, double px) const { return py >= y && px >= x && py < y + h && px < x + w; }
  bool intersects(const Box& o) const {
    return y < o.y + o.h && o.y < y + h && x < o.x + o.w && o.x < x + w;
  }
  bool operator==(const Box&) const = default;
};

struct PlantedMotif {
  MotifClass kind = MotifClass::background;
  Box box;          // inclusive extent of painted pixels
  double cy = 0.0;  // center
  double cx = 0.0;
  double size = 0.0;
  bool operator==(const PlantedMotif&) const = default;
};

struct AnnotatedScene {
  int id = 0;
  RgbImage image;
  GrayImage mask;  // 1 inside a planted tumor blob, else 0
  std::vector<PlantedMotif> inventory;
};

// Deterministic in (spec, scene_id). Throws Error("placement_failed") naming
// the motif class when the retry budget runs out.
AnnotatedScene generate_scene(const SceneSpec& spec, int scene_id = 0);

// Whether a patch shows a planted motif: dots count when their center lies
// in the patch, everything else when its painted extent intersects the patch.
// For tumor presence prefer the exact mask overlap (see patch_contains).
bool contains_motif(const PlantedMotif& motif, const Box& patch);

enum class Label : std::uint8_t { negative = 0, positive = 1 };
enum class Split { train, test };

std::string_view to_string(Label label);
std::string_view to_string(Split split);
Label parse_label(std::string_view name);
Split parse_split(std::string_view name);

struct PatchRecord {
  RgbImage image;
  Label label = Label::negative;
  int scene_id = 0;
  int y = 0;
  int x = 0;
  double overlap = 0.0;  // lesion pixels / patch pixels
  Split split = Split::train;
  bool operator==(const PatchRecord&) const = default;
};

struct ClassCounts {
  std::size_t positive = 0;
  std::size_t negative = 0;
  bool operator==(const ClassCounts&) const = default;
};

struct DatasetManifest {
  std::vector<PatchRecord> records;
  Split split = Split::train;
  double tau = 0.8;
  std::uint64_t seed = 0;
  int patch_size = 64;
  int grid_stride = 8;

  ClassCounts counts() const;
  bool balanced() const {
    const auto c = counts();
    return c.positive == c.negative;
  }
  void append(DatasetManifest&& other);
  bool operator==(const DatasetManifest&) const = default;
};

// Exact fraction of lesion pixels in the patch at (y, x).
double lesion_overlap(const GrayImage& mask, int y, int x, int patch_size);

// Samples top-left corners on a grid (stride `grid_stride`) without
// replacement: positives need overlap >= tau, negatives overlap 0, anything
// in between is never emitted. Throws Error("insufficient_patches") listing
// the achievable counts.
DatasetManifest sample_patches(const AnnotatedScene& scene, int patch_size, std::size_t n_pos,
                               std::size_t n_neg, double tau, std::uint64_t seed,
                               Split split = Split::train, int grid_stride = 8);

// ---- multi-scene corpus ---------------------------------------------------

struct SceneInventory {
  int scene_id = 0;
  Split split = Split::train;
  std::vector<PlantedMotif> motifs;
  bool operator==(const SceneInventory&) const = default;
};

struct CorpusSpec {
  SceneSpec scene;
  int train_scenes = 8;
  int test_scenes = 4;
  std::size_t train_per_class = 1000;
  std::size_t test_per_class = 500;
  double tau = 0.8;
  int patch_size = 64;
  int grid_stride = 8;
  std::uint64_t seed = 42;
};

// Train and test patches come from disjoint scenes.
struct Corpus {
  DatasetManifest train;
  DatasetManifest test;
  std::vector<SceneInventory> scenes;

  const SceneInventory& inventory(int scene_id) const;
  bool operator==(const Corpus&) const = default;
};

// Scenes are generated in parallel; scene i uses seed derive_seed(seed, i).
Corpus build_corpus(const CorpusSpec& spec);

// Motif presence for a sampled patch: tumor_blob uses the stored lesion
// overlap (> 0), other classes use contains_motif over the scene inventory.
bool patch_contains(const PatchRecord& record, const SceneInventory& scene, MotifClass motif);

// ---- model inputs ---------------------------------------------------------

// RGB bytes scaled to [0, 1], channel-major.
Tensor to_tensor(const RgbImage& patch);
std::vector<Tensor> to_tensors(const DatasetManifest& manifest);
std::vector<int> to_labels(const DatasetManifest& manifest);

}  // namespace activscope::synth
