#include "activscope/error.hpp"
#include "activscope/nncore.hpp"
#include "activscope/parallel.hpp"
#include "internal.hpp"

namespace activscope::nn {

namespace {

std::size_t flatten_index(const ModelSpec& model) {
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (model.layers[i].kind == LayerKind::flatten) return i;
  }
  throw Error("unknown_tap", "model '" + model.name + "' has no flatten layer");
}

}  // namespace

std::size_t final_pool_index(const ModelSpec& model) {
  const std::size_t flat = flatten_index(model);
  for (std::size_t i = flat; i-- > 0;) {
    const auto kind = model.layers[i].kind;
    if (kind == LayerKind::maxpool || kind == LayerKind::avgpool) return i;
    if (kind == LayerKind::conv) break;
  }
  throw Error("not_maxpool", "no pooling layer between the last conv and flatten");
}

std::size_t assigned_layer(const ModelSpec& model) {
  const std::size_t flat = flatten_index(model);
  for (std::size_t i = flat; i-- > 0;) {
    if (model.layers[i].kind != LayerKind::conv) continue;
    if (i + 1 < model.layers.size() && model.layers[i + 1].kind == LayerKind::relu) return i + 1;
    return i;
  }
  throw Error("unknown_tap", "model '" + model.name + "' has no conv layer");
}

ModelSpec swap_pooling(const ModelSpec& model, std::size_t layer_index) {
  if (layer_index >= model.layers.size() || model.layers[layer_index].kind != LayerKind::maxpool) {
    throw Error("not_maxpool", "layer " + std::to_string(layer_index) + " is not a maxpool");
  }
  const auto shapes = model.shapes();
  const Shape in = layer_index == 0 ? model.input : shapes[layer_index - 1];
  if (in.height != in.width) {
    throw Error("shape_mismatch", "average pool over the full map needs a square map, got " +
                                      in.str());
  }
  ModelSpec out = model;
  out.name = model.name + "_gap";
  out.layers[layer_index] = LayerSpec::avgpool(in.height, in.height);
  const auto new_shapes = out.shapes();
  for (std::size_t i = layer_index + 1; i < out.layers.size(); ++i) {
    if (!out.layers[i].has_params()) continue;
    if (new_shapes[i - 1] != shapes[i - 1]) out.params[i] = reinit_layer(out, i);
  }
  return out;
}

std::string_view to_string(Tap tap) {
  switch (tap) {
    case Tap::flat_conv: return "flat_conv";
    case Tap::fc1: return "fc1";
    case Tap::gap: return "gap";
  }
  return "unknown";
}

Tap parse_tap(std::string_view name) {
  for (auto tap : {Tap::flat_conv, Tap::fc1, Tap::gap}) {
    if (to_string(tap) == name) return tap;
  }
  throw Error("unknown_tap", "unknown tap '" + std::string(name) + "'");
}

std::size_t tap_layer(const ModelSpec& model, Tap tap) {
  const std::size_t flat = flatten_index(model);
  switch (tap) {
    case Tap::flat_conv:
      return flat;
    case Tap::gap: {
      const auto shapes = model.shapes();
      if (flat == 0 || model.layers[flat - 1].kind != LayerKind::avgpool ||
          !shapes[flat - 1].is_flat()) {
        throw Error("unknown_tap", "tap gap requires a swapped model (global average pool)");
      }
      return flat;
    }
    case Tap::fc1:
      for (std::size_t i = flat; i < model.layers.size(); ++i) {
        if (model.layers[i].kind != LayerKind::fc) continue;
        if (i + 1 < model.layers.size() && model.layers[i + 1].kind == LayerKind::relu) return i + 1;
        return i;
      }
      throw Error("unknown_tap", "model '" + model.name + "' has no fc layer");
  }
  throw Error("unknown_tap", "unknown tap");
}

FeatureMatrix extract_features(const ModelSpec& model, Tap tap, std::span<const Tensor> inputs,
                               std::span<const int> labels) {
  if (inputs.size() != labels.size()) {
    throw Error("shape_mismatch", std::to_string(inputs.size()) + " inputs but " +
                                      std::to_string(labels.size()) + " labels");
  }
  const std::size_t layer = tap_layer(model, tap);
  const auto shapes = model.shapes();
  const std::size_t d = shapes[layer].size();

  FeatureMatrix fm;
  fm.rows = inputs.size();
  fm.cols = d;
  fm.tap = std::string(to_string(tap));
  fm.data.resize(fm.rows * d);
  fm.labels.resize(fm.rows);
  fm.provenance.resize(d);
  if (tap == Tap::flat_conv) {
    const Shape map = shapes[layer - 1];
    for (std::size_t j = 0; j < d; ++j) {
      fm.provenance[j] = {static_cast<std::uint32_t>(j / map.plane()),
                          static_cast<std::uint32_t>(j % map.plane())};
    }
  } else {
    for (std::size_t j = 0; j < d; ++j) fm.provenance[j] = {static_cast<std::uint32_t>(j), 0};
  }

  parallel_for(inputs.size(), [&](std::size_t i) {
    const auto outputs = forward_prefix(model, inputs[i], layer + 1);
    std::copy(outputs.back().data.begin(), outputs.back().data.end(), fm.data.begin() + i * d);
  });
  for (std::size_t i = 0; i < labels.size(); ++i) {
    fm.labels[i] = static_cast<std::uint8_t>(labels[i]);
  }
  return fm;
}

}  // namespace activscope::nn
