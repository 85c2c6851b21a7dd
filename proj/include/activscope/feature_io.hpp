#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "activscope/features.hpp"

namespace activscope {

// "AFM1", u32 n, u32 d, u32-length-prefixed tap name, d provenance pairs
// (u32 channel, u32 position), n*d f32 row-major, n u8 labels. All
// integers and floats little-endian.
std::string serialize_features(const FeatureMatrix& X);
FeatureMatrix deserialize_features(std::string_view bytes);

void save_features(const std::filesystem::path& path, const FeatureMatrix& X);
FeatureMatrix load_features(const std::filesystem::path& path);

}  // namespace activscope
