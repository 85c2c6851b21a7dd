#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace activscope {

// Where a feature column came from: conv channel and flat spatial position
// within that channel (0 for pooled or fully connected taps).
struct FeatureProvenance {
  std::uint32_t channel = 0;
  std::uint32_t position = 0;
  bool operator==(const FeatureProvenance&) const = default;
};

// n x d feature rows tapped from a model, with binary labels.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;  // row-major
  std::vector<std::uint8_t> labels;
  std::string tap;
  std::vector<FeatureProvenance> provenance;

  std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  float at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  // Throws Error("invalid_features") when sizes disagree or a value is non-finite.
  void validate() const;

  // Column subset in the given order; provenance follows the columns.
  FeatureMatrix select_columns(std::span<const std::size_t> columns) const;

  bool operator==(const FeatureMatrix&) const = default;
};

}  // namespace activscope
