#include "activscope/features.hpp"

#include <cmath>

#include "activscope/error.hpp"

namespace activscope {

void FeatureMatrix::validate() const {
  if (data.size() != rows * cols) {
    throw Error("invalid_features", "data holds " + std::to_string(data.size()) + " values, expected " +
                                        std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (labels.size() != rows) {
    throw Error("invalid_features", std::to_string(labels.size()) + " labels for " +
                                        std::to_string(rows) + " rows");
  }
  if (provenance.size() != cols) {
    throw Error("invalid_features", std::to_string(provenance.size()) + " provenance entries for " +
                                        std::to_string(cols) + " columns");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw Error("invalid_features", "non-finite value at row " + std::to_string(i / cols) +
                                          ", column " + std::to_string(i % cols));
    }
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (labels[i] > 1) throw Error("invalid_features", "label of row " + std::to_string(i) + " not in {0,1}");
  }
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> columns) const {
  FeatureMatrix out;
  out.rows = rows;
  out.cols = columns.size();
  out.labels = labels;
  out.tap = tap;
  out.provenance.reserve(columns.size());
  for (std::size_t c : columns) {
    if (c >= cols) {
      throw Error("out_of_range", "column " + std::to_string(c) + " >= " + std::to_string(cols));
    }
    out.provenance.push_back(provenance[c]);
  }
  out.data.resize(rows * out.cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) out.data[i * out.cols + j] = data[i * cols + columns[j]];
  }
  return out;
}

}  // namespace activscope
