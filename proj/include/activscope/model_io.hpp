#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "activscope/nncore.hpp"

namespace activscope::nn {

// "ASM1", u32 little-endian header length, UTF-8 JSON header (name, input,
// seed, layer schedule, shapes, blob sizes), then per layer the weight and
// bias blobs as little-endian f32.
std::string serialize_model(const ModelSpec& model);
ModelSpec deserialize_model(std::string_view bytes);

void save_model(const std::filesystem::path& path, const ModelSpec& model);
ModelSpec load_model(const std::filesystem::path& path);

}  // namespace activscope::nn
