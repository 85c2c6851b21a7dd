#pragma once

#include "activscope/nncore.hpp"

namespace activscope::nn {

// Re-initializes one layer exactly as build_model would for this model.
LayerParams<float> reinit_layer(const ModelSpec& model, std::size_t index);

}  // namespace activscope::nn
