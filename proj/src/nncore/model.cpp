#include <algorithm>
#include <cmath>

#include "activscope/error.hpp"
#include "activscope/nncore.hpp"
#include "activscope/random.hpp"
#include "internal.hpp"

namespace activscope::nn {

namespace {

// He-scaled uniform: U(-a, a) with a = sqrt(6 / fan_in).
LayerParams<float> init_layer(const LayerSpec& spec, const Shape& in, std::uint64_t seed,
                              std::size_t index) {
  LayerParams<float> p;
  if (!spec.has_params()) return p;
  const std::size_t fan_in = spec.kind == LayerKind::conv
                                 ? static_cast<std::size_t>(in.channels) * spec.kernel * spec.kernel
                                 : in.size();
  const std::size_t count = static_cast<std::size_t>(spec.out_channels) * fan_in;
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Rng rng(derive_seed(seed, index));
  p.weight.resize(count);
  for (auto& w : p.weight) w = static_cast<float>(uniform(rng, -bound, bound));
  p.bias.assign(static_cast<std::size_t>(spec.out_channels), 0.0f);
  return p;
}

}  // namespace

template <class T>
std::size_t BasicModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.weight.size() + p.bias.size();
  return n;
}

template struct BasicModel<float>;
template struct BasicModel<double>;

ModelSpec build_model(std::string name, Shape input, std::vector<LayerSpec> layers,
                      std::uint64_t seed) {
  ModelSpec model;
  model.name = std::move(name);
  model.input = input;
  model.layers = std::move(layers);
  model.seed = seed;
  const auto shapes = model.shapes();
  model.params.resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Shape& in = i == 0 ? input : shapes[i - 1];
    model.params[i] = init_layer(model.layers[i], in, seed, i);
  }
  return model;
}

// Re-initializes one layer exactly as build_model would.
LayerParams<float> reinit_layer(const ModelSpec& model, std::size_t index) {
  const auto shapes = model.shapes();
  const Shape& in = index == 0 ? model.input : shapes[index - 1];
  return init_layer(model.layers[index], in, model.seed, index);
}

ModelSpec alexnet_preset(std::uint64_t seed) {
  using L = LayerSpec;
  return build_model("alexnet", {3, 227, 227},
                     {L::conv(96, 11, 4, 0), L::relu(), L::maxpool(3, 2),
                      L::conv(256, 5, 1, 2), L::relu(), L::maxpool(3, 2),
                      L::conv(384, 3, 1, 1), L::relu(),
                      L::conv(384, 3, 1, 1), L::relu(),
                      L::conv(256, 3, 1, 1), L::relu(), L::maxpool(3, 2),
                      L::flatten(), L::fc(4096), L::relu(), L::fc(4096), L::relu(), L::fc(2),
                      L::softmax()},
                     seed);
}

ModelSpec mini_alex_preset(std::uint64_t seed) {
  using L = LayerSpec;
  return build_model("mini_alex", {3, 64, 64},
                     {L::conv(16, 5, 1, 2), L::relu(), L::maxpool(2, 2),
                      L::conv(32, 5, 1, 2), L::relu(), L::maxpool(2, 2),
                      L::conv(32, 3, 1, 1), L::relu(), L::maxpool(2, 2),
                      L::flatten(), L::fc(128), L::relu(), L::fc(2), L::softmax()},
                     seed);
}

ModelSpec preset(std::string_view name, std::uint64_t seed) {
  if (name == "mini_alex") return mini_alex_preset(seed);
  if (name == "alexnet") return alexnet_preset(seed);
  throw Error("unknown_preset", "unknown model preset '" + std::string(name) + "'");
}

template <class T>
std::vector<BasicTensor<T>> forward_prefix(const BasicModel<T>& model, const BasicTensor<T>& input,
                                           std::size_t layer_count) {
  if (input.shape != model.input || input.data.size() != model.input.size()) {
    throw Error("input_mismatch",
                "model expects input " + model.input.str() + " but got " + input.shape.str());
  }
  layer_count = std::min(layer_count, model.layers.size());
  std::vector<BasicTensor<T>> outputs;
  outputs.reserve(layer_count);
  for (std::size_t i = 0; i < layer_count; ++i) {
    const BasicTensor<T>& in = i == 0 ? input : outputs.back();
    outputs.push_back(layer_forward(model.layers[i], model.params[i], in));
  }
  return outputs;
}

Activations forward(const ModelSpec& model, const Tensor& patch) {
  return {forward_prefix(model, patch, model.layers.size())};
}

int predict_class(const ModelSpec& model, const Tensor& patch) {
  const auto act = forward(model, patch);
  const auto& p = act.probabilities().data;
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

template <class T>
std::vector<LayerParams<T>> zero_gradients(const BasicModel<T>& model) {
  std::vector<LayerParams<T>> grad(model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    grad[i].weight.assign(model.params[i].weight.size(), T(0));
    grad[i].bias.assign(model.params[i].bias.size(), T(0));
  }
  return grad;
}

template <class T>
double sample_loss(const BasicModel<T>& model, const BasicTensor<T>& input, int label) {
  const auto outputs = forward_prefix(model, input, model.layers.size());
  const auto& p = outputs.back().data;
  if (label < 0 || static_cast<std::size_t>(label) >= p.size()) {
    throw Error("invalid_label", "label " + std::to_string(label) + " out of range");
  }
  return -std::log(std::max(static_cast<double>(p[label]), 1e-300));
}

template <class T>
double accumulate_gradients(const BasicModel<T>& model, const BasicTensor<T>& input, int label,
                            std::vector<LayerParams<T>>& grad, BasicTensor<T>* input_grad) {
  const auto outputs = forward_prefix(model, input, model.layers.size());
  const auto& p = outputs.back();
  if (label < 0 || static_cast<std::size_t>(label) >= p.data.size()) {
    throw Error("invalid_label", "label " + std::to_string(label) + " out of range");
  }
  const double loss = -std::log(std::max(static_cast<double>(p.data[label]), 1e-300));

  // Softmax + cross-entropy: dL/dlogits = p - onehot.
  BasicTensor<T> g = p;
  g.data[static_cast<std::size_t>(label)] -= T(1);
  for (std::size_t i = model.layers.size() - 1; i-- > 0;) {
    const BasicTensor<T>& in = i == 0 ? input : outputs[i - 1];
    g = layer_backward(model.layers[i], model.params[i], in, outputs[i], g, grad[i],
                       i > 0 || input_grad != nullptr);
  }
  if (input_grad) *input_grad = std::move(g);
  return loss;
}

#define ACTIVSCOPE_INSTANTIATE(T)                                                              \
  template std::vector<BasicTensor<T>> forward_prefix<T>(const BasicModel<T>&,                \
                                                         const BasicTensor<T>&, std::size_t); \
  template std::vector<LayerParams<T>> zero_gradients<T>(const BasicModel<T>&);               \
  template double sample_loss<T>(const BasicModel<T>&, const BasicTensor<T>&, int);           \
  template double accumulate_gradients<T>(const BasicModel<T>&, const BasicTensor<T>&, int,   \
                                          std::vector<LayerParams<T>>&, BasicTensor<T>*);

ACTIVSCOPE_INSTANTIATE(float)
ACTIVSCOPE_INSTANTIATE(double)
#undef ACTIVSCOPE_INSTANTIATE

}  // namespace activscope::nn
