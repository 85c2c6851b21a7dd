#pragma once

#include <filesystem>

#include "activscope/synthlab.hpp"

namespace activscope::synth {

// Dataset directory layout:
//   patches/<scene>_<y>_<x>_<label>.png
//   manifest.jsonl  one object per patch: scene_id, y, x, label, overlap, split
//   dataset.json    tau, seed, patch_size, grid_stride, counts, checksum
//   scenes.json     planted-motif inventory per scene
// The checksum is a CRC-32 over manifest.jsonl followed by every patch's
// pixels in manifest order.
void write_dataset(const std::filesystem::path& dir, const Corpus& corpus);

// Throws Error with code missing_file, parse_error (naming the manifest
// line), count_mismatch or checksum_mismatch.
Corpus read_dataset(const std::filesystem::path& dir);

std::string patch_filename(const PatchRecord& record);

}  // namespace activscope::synth
