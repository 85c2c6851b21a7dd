#include <algorithm>

#include "activscope/error.hpp"
#include "activscope/parallel.hpp"
#include "activscope/random.hpp"
#include "activscope/synthlab.hpp"

namespace activscope::synth {

std::string_view to_string(Label label) {
  return label == Label::positive ? "positive" : "negative";
}

std::string_view to_string(Split split) { return split == Split::train ? "train" : "test"; }

Label parse_label(std::string_view name) {
  if (name == "positive") return Label::positive;
  if (name == "negative") return Label::negative;
  throw Error("parse_error", "unknown label '" + std::string(name) + "'");
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  throw Error("parse_error", "unknown split '" + std::string(name) + "'");
}

ClassCounts DatasetManifest::counts() const {
  ClassCounts c;
  for (const auto& r : records) (r.label == Label::positive ? c.positive : c.negative)++;
  return c;
}

void DatasetManifest::append(DatasetManifest&& other) {
  records.insert(records.end(), std::make_move_iterator(other.records.begin()),
                 std::make_move_iterator(other.records.end()));
}

double lesion_overlap(const GrayImage& mask, int y, int x, int patch_size) {
  if (y < 0 || x < 0 || y + patch_size > mask.height || x + patch_size > mask.width) {
    throw Error("out_of_bounds", "patch at (" + std::to_string(y) + ", " + std::to_string(x) +
                                     ") leaves the scene");
  }
  std::size_t count = 0;
  for (int r = y; r < y + patch_size; ++r)
    for (int c = x; c < x + patch_size; ++c) count += mask.at(r, c) != 0;
  return static_cast<double>(count) / (static_cast<double>(patch_size) * patch_size);
}

DatasetManifest sample_patches(const AnnotatedScene& scene, int patch_size, std::size_t n_pos,
                               std::size_t n_neg, double tau, std::uint64_t seed, Split split,
                               int grid_stride) {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error("invalid_argument", "tau must lie in (0, 1]");
  if (patch_size < 1 || grid_stride < 1) {
    throw Error("invalid_argument", "patch_size and grid_stride must be >= 1");
  }
  const int w = scene.image.width, h = scene.image.height;
  if (patch_size > w || patch_size > h) {
    throw Error("invalid_argument", "patch of " + std::to_string(patch_size) +
                                        " pixels does not fit the scene");
  }

  // Summed-area table of the mask gives exact per-patch lesion counts.
  std::vector<std::size_t> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  auto s = [&](int y, int x) -> std::size_t& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      s(y + 1, x + 1) = s(y, x + 1) + s(y + 1, x) - s(y, x) + (scene.mask.at(y, x) != 0);
  const double area = static_cast<double>(patch_size) * patch_size;

  struct Candidate {
    int y, x;
    double overlap;
  };
  std::vector<Candidate> positives, negatives;
  for (int y = 0; y + patch_size <= h; y += grid_stride) {
    for (int x = 0; x + patch_size <= w; x += grid_stride) {
      const std::size_t count = s(y + patch_size, x + patch_size) - s(y, x + patch_size) -
                                s(y + patch_size, x) + s(y, x);
      const double overlap = static_cast<double>(count) / area;
      if (count == 0) {
        negatives.push_back({y, x, 0.0});
      } else if (overlap >= tau) {
        positives.push_back({y, x, overlap});
      }
    }
  }
  if (positives.size() < n_pos || negatives.size() < n_neg) {
    throw Error("insufficient_patches",
                "scene " + std::to_string(scene.id) + " requested " + std::to_string(n_pos) +
                    " positive / " + std::to_string(n_neg) + " negative, achievable " +
                    std::to_string(positives.size()) + " positive / " + std::to_string(negatives.size()) +
                    " negative");
  }

  Rng rng(derive_seed(seed, 0x5041544348ull + static_cast<std::uint64_t>(scene.id)));
  shuffle(positives.begin(), positives.end(), rng);
  shuffle(negatives.begin(), negatives.end(), rng);

  DatasetManifest out;
  out.split = split;
  out.tau = tau;
  out.seed = seed;
  out.patch_size = patch_size;
  out.grid_stride = grid_stride;
  out.records.reserve(n_pos + n_neg);
  auto emit = [&](const Candidate& c, Label label) {
    out.records.push_back({scene.image.crop(c.y, c.x, patch_size, patch_size), label, scene.id,
                           c.y, c.x, c.overlap, split});
  };
  for (std::size_t i = 0; i < n_pos; ++i) emit(positives[i], Label::positive);
  for (std::size_t i = 0; i < n_neg; ++i) emit(negatives[i], Label::negative);
  return out;
}

const SceneInventory& Corpus::inventory(int scene_id) const {
  for (const auto& s : scenes) {
    if (s.scene_id == scene_id) return s;
  }
  throw Error("unknown_scene", "no inventory for scene " + std::to_string(scene_id));
}

Corpus build_corpus(const CorpusSpec& spec) {
  if (spec.train_scenes < 1 || spec.test_scenes < 1) {
    throw Error("invalid_spec", "corpus needs at least one train and one test scene");
  }
  spec.scene.validate(spec.patch_size);
  const int total = spec.train_scenes + spec.test_scenes;
  SceneSpec scene_spec = spec.scene;
  scene_spec.seed = spec.seed;

  std::vector<DatasetManifest> parts(static_cast<std::size_t>(total));
  std::vector<SceneInventory> inventories(static_cast<std::size_t>(total));
  parallel_for(static_cast<std::size_t>(total), [&](std::size_t i) {
    const int id = static_cast<int>(i);
    const bool is_train = id < spec.train_scenes;
    const int scenes_in_split = is_train ? spec.train_scenes : spec.test_scenes;
    const int index_in_split = is_train ? id : id - spec.train_scenes;
    const std::size_t per_class = is_train ? spec.train_per_class : spec.test_per_class;
    // Spread the per-class count evenly; earlier scenes take the remainder.
    const std::size_t share = per_class / scenes_in_split +
                              (static_cast<std::size_t>(index_in_split) < per_class % scenes_in_split);
    const auto scene = generate_scene(scene_spec, id);
    const Split split = is_train ? Split::train : Split::test;
    parts[i] = sample_patches(scene, spec.patch_size, share, share, spec.tau, spec.seed, split,
                              spec.grid_stride);
    inventories[i] = {id, split, scene.inventory};
  });

  Corpus corpus;
  for (auto* m : {&corpus.train, &corpus.test}) {
    m->tau = spec.tau;
    m->seed = spec.seed;
    m->patch_size = spec.patch_size;
    m->grid_stride = spec.grid_stride;
  }
  corpus.train.split = Split::train;
  corpus.test.split = Split::test;
  for (int id = 0; id < total; ++id) {
    auto& target = id < spec.train_scenes ? corpus.train : corpus.test;
    target.append(std::move(parts[static_cast<std::size_t>(id)]));
  }
  corpus.scenes = std::move(inventories);
  return corpus;
}

bool patch_contains(const PatchRecord& record, const SceneInventory& scene, MotifClass motif) {
  if (motif == MotifClass::tumor_blob) return record.overlap > 0.0;
  const int size = record.image.width;
  const Box patch{record.y, record.x, size, size};
  return std::any_of(scene.motifs.begin(), scene.motifs.end(), [&](const PlantedMotif& m) {
    return m.kind == motif && contains_motif(m, patch);
  });
}

Tensor to_tensor(const RgbImage& patch) {
  Tensor t({3, patch.height, patch.width});
  const std::size_t plane = static_cast<std::size_t>(patch.height) * patch.width;
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) t.data[c * plane + p] = patch.pixels[p * 3 + c] / 255.0f;
  }
  return t;
}

std::vector<Tensor> to_tensors(const DatasetManifest& manifest) {
  std::vector<Tensor> out;
  out.reserve(manifest.records.size());
  for (const auto& r : manifest.records) out.push_back(to_tensor(r.image));
  return out;
}

std::vector<int> to_labels(const DatasetManifest& manifest) {
  std::vector<int> out;
  out.reserve(manifest.records.size());
  for (const auto& r : manifest.records) out.push_back(static_cast<int>(r.label));
  return out;
}

}  // namespace activscope::synth
