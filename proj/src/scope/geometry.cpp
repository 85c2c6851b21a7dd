#include <cmath>

#include "activscope/error.hpp"
#include "activscope/scope.hpp"

namespace activscope::scope {

using nn::LayerKind;

std::vector<LayerGeometry> geometry_chain(std::span<const nn::LayerSpec> layers, std::size_t layer_index) {
  if (layer_index >= layers.size()) {
    throw Error("not_spatial", "layer " + std::to_string(layer_index) + " is past the end of the schedule");
  }
  std::vector<LayerGeometry> chain;
  LayerGeometry g{1, 1, 0.0};
  for (std::size_t i = 0; i <= layer_index; ++i) {
    const auto& l = layers[i];
    if (l.kind == LayerKind::flatten || l.kind == LayerKind::fc || l.kind == LayerKind::softmax) {
      throw Error("not_spatial", "layer " + std::to_string(layer_index) + " is at or past the flatten (layer " +
                                     std::to_string(i) + " is " + std::string(nn::to_string(l.kind)) + ")");
    }
    if (l.is_spatial_window()) {
      g.start += ((l.kernel - 1) / 2.0 - l.padding) * g.j;
      g.r += (l.kernel - 1) * g.j;
      g.j *= l.stride;
    }
    chain.push_back(g);
  }
  return chain;
}

LayerGeometry layer_geometry(std::span<const nn::LayerSpec> layers, std::size_t layer_index) {
  return geometry_chain(layers, layer_index).back();
}

LayerGeometry layer_geometry(const nn::ModelSpec& model, std::size_t layer_index) {
  return layer_geometry(model.layers, layer_index);
}

FovBox FovMap::unclipped(int row, int col) const {
  if (row < 0 || col < 0 || row >= map_height || col >= map_width) {
    throw Error("neuron_out_of_range", "neuron (" + std::to_string(row) + "," + std::to_string(col) +
                                           ") outside " + std::to_string(map_height) + "x" +
                                           std::to_string(map_width) + " map");
  }
  const double half = (geometry.r - 1) / 2.0;
  const auto top = static_cast<int>(std::floor(geometry.start + row * geometry.j - half + 0.5));
  const auto left = static_cast<int>(std::floor(geometry.start + col * geometry.j - half + 0.5));
  return {top, left, geometry.r, geometry.r};
}

FovBox FovMap::box(int row, int col) const {
  const FovBox u = unclipped(row, col);
  const int y0 = std::max(0, u.y), x0 = std::max(0, u.x);
  const int y1 = std::min(patch_height, u.y + u.h), x1 = std::min(patch_width, u.x + u.w);
  return {y0, x0, std::max(0, y1 - y0), std::max(0, x1 - x0)};
}

FovMap fov_map(const nn::ModelSpec& model, std::size_t layer_index) {
  const auto shapes = nn::chain_shapes(model.input, model.layers);
  const auto g = layer_geometry(model, layer_index);
  const auto& s = shapes[layer_index];
  return {g, s.height, s.width, model.input.height, model.input.width};
}

}  // namespace activscope::scope
