#pragma once

// From-scratch CNN engine: layer schedule, forward/backward passes, SGD
// training, finite-difference gradient checking, pooling surgery and
// feature taps.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "activscope/features.hpp"
#include "activscope/tensor.hpp"

namespace activscope::nn {

enum class LayerKind { conv, maxpool, avgpool, relu, fc, flatten, softmax };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int out_channels = 0;  // conv and fc only

  static LayerSpec conv(int out_channels, int kernel, int stride, int padding) {
    return {LayerKind::conv, kernel, stride, padding, out_channels};
  }
  static LayerSpec maxpool(int kernel, int stride) { return {LayerKind::maxpool, kernel, stride, 0, 0}; }
  static LayerSpec avgpool(int kernel, int stride) { return {LayerKind::avgpool, kernel, stride, 0, 0}; }
  static LayerSpec relu() { return {LayerKind::relu, 1, 1, 0, 0}; }
  static LayerSpec fc(int out_features) { return {LayerKind::fc, 1, 1, 0, out_features}; }
  static LayerSpec flatten() { return {LayerKind::flatten, 1, 1, 0, 0}; }
  static LayerSpec softmax() { return {LayerKind::softmax, 1, 1, 0, 0}; }

  bool has_params() const { return kind == LayerKind::conv || kind == LayerKind::fc; }
  bool is_spatial_window() const {
    return kind == LayerKind::conv || kind == LayerKind::maxpool || kind == LayerKind::avgpool;
  }
  bool operator==(const LayerSpec&) const = default;
};

// Output shape of one layer; throws Error("shape_mismatch") naming both
// shapes when the layer cannot consume `in`.
Shape output_shape(const LayerSpec& layer, const Shape& in);

// Output shape of every layer. Also enforces that the schedule ends with
// the only softmax.
std::vector<Shape> chain_shapes(const Shape& input, std::span<const LayerSpec> layers);

// conv: weight is out x in x k x k, bias is out. fc: weight is out x in.
template <class T>
struct LayerParams {
  std::vector<T> weight;
  std::vector<T> bias;
  bool operator==(const LayerParams&) const = default;
};

template <class T>
struct BasicModel {
  std::string name;
  Shape input;
  std::vector<LayerSpec> layers;
  std::vector<LayerParams<T>> params;  // one slot per layer, empty when parameterless
  std::uint64_t seed = 0;

  std::vector<Shape> shapes() const { return chain_shapes(input, layers); }
  std::size_t parameter_count() const;
  bool operator==(const BasicModel&) const = default;
};

using ModelSpec = BasicModel<float>;

// Builds a model with He-scaled uniform weights drawn from `seed`; biases zero.
ModelSpec build_model(std::string name, Shape input, std::vector<LayerSpec> layers,
                      std::uint64_t seed);

// Geometry-scale AlexNet (3x227x227, no LRN).
ModelSpec alexnet_preset(std::uint64_t seed);
// Desk-scale five-layer net on 3x64x64 patches.
ModelSpec mini_alex_preset(std::uint64_t seed);
ModelSpec preset(std::string_view name, std::uint64_t seed);

template <class To, class From>
BasicModel<To> convert(const BasicModel<From>& model) {
  BasicModel<To> out;
  out.name = model.name;
  out.input = model.input;
  out.layers = model.layers;
  out.seed = model.seed;
  out.params.resize(model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    out.params[i].weight.assign(model.params[i].weight.begin(), model.params[i].weight.end());
    out.params[i].bias.assign(model.params[i].bias.begin(), model.params[i].bias.end());
  }
  return out;
}

// ---- single-layer kernels -------------------------------------------------

// Cross-correlation with zero padding, plus bias.
template <class T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const LayerParams<T>& kernel,
                              const LayerSpec& spec);

template <class T>
BasicTensor<T> layer_forward(const LayerSpec& spec, const LayerParams<T>& params,
                             const BasicTensor<T>& input);

// Given dL/d(output), returns dL/d(input) and adds parameter gradients into
// `grad`. Softmax is not handled here: the loss folds it into the logits.
// With need_input_grad false a conv layer returns a zero input gradient.
template <class T>
BasicTensor<T> layer_backward(const LayerSpec& spec, const LayerParams<T>& params,
                              const BasicTensor<T>& input, const BasicTensor<T>& output,
                              const BasicTensor<T>& grad_output, LayerParams<T>& grad,
                              bool need_input_grad = true);

// ---- whole-model passes ---------------------------------------------------

// Outputs of layers [0, layer_count). Throws Error("input_mismatch") when the
// input shape differs from the model's.
template <class T>
std::vector<BasicTensor<T>> forward_prefix(const BasicModel<T>& model, const BasicTensor<T>& input,
                                           std::size_t layer_count);

struct Activations {
  std::vector<Tensor> outputs;  // outputs[i] is the output of layer i
  const Tensor& probabilities() const { return outputs.back(); }
};

Activations forward(const ModelSpec& model, const Tensor& patch);

// Cross-entropy loss of one labelled sample; parameter gradients are added
// into `grad` (same layout as model.params). When `input_grad` is given it
// receives dL/d(input).
template <class T>
double accumulate_gradients(const BasicModel<T>& model, const BasicTensor<T>& input, int label,
                            std::vector<LayerParams<T>>& grad, BasicTensor<T>* input_grad = nullptr);

template <class T>
double sample_loss(const BasicModel<T>& model, const BasicTensor<T>& input, int label);

template <class T>
std::vector<LayerParams<T>> zero_gradients(const BasicModel<T>& model);

int predict_class(const ModelSpec& model, const Tensor& patch);

// ---- training -------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  double weight_decay = 1e-4;
  std::uint64_t seed = 42;

  void validate() const;
};

struct TrainResult {
  ModelSpec model;
  std::vector<double> epoch_loss;  // mean sample loss per epoch
};

// Mini-batch SGD with momentum. Shuffle order and any initialization derive
// from cfg.seed only, so identical inputs give bit-identical weights.
TrainResult train_sgd(ModelSpec model, std::span<const Tensor> inputs, std::span<const int> labels,
                      const TrainConfig& cfg);

// ---- gradient check -------------------------------------------------------

struct GradCheckGroup {
  std::string name;  // e.g. "conv1.weight", "input"
  LayerKind kind = LayerKind::conv;
  std::size_t checked = 0;
  std::size_t skipped_switches = 0;  // coordinates whose +-epsilon crossed a ReLU/maxpool switch
  double max_relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double tolerance = 1e-3;

  double max_relative_error() const;
  // Every group must have at least one usable coordinate.
  bool passed() const;
};

// Compares backprop against central differences in double precision.
// Up to `entries_per_group` coordinates of every parameter group (and of
// the input) are checked, chosen by `seed`. A coordinate whose +-epsilon
// evaluation flips any ReLU or maxpool selection is not differentiable on
// that interval; it is skipped, counted, and replaced by another
// coordinate. Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckReport grad_check(const ModelSpec& model, const Tensor& sample, int label, double epsilon,
                           double tolerance = 1e-3, std::size_t entries_per_group = 32,
                           std::uint64_t seed = 0);

inline constexpr double kGradCheckFloor = 1e-6;

// ---- surgery and taps -----------------------------------------------------

// Replaces the maxpool at `layer_index` by an average pool spanning the
// incoming map. Conv weights are kept; fc layers whose input size changes are
// re-initialized from the model seed.
ModelSpec swap_pooling(const ModelSpec& model, std::size_t layer_index);

// Index of the last maxpool whose input is the assigned conv map.
std::size_t final_pool_index(const ModelSpec& model);

// The assigned layer: output of the last conv block (its ReLU if present).
std::size_t assigned_layer(const ModelSpec& model);

enum class Tap { flat_conv, fc1, gap };

std::string_view to_string(Tap tap);
Tap parse_tap(std::string_view name);

// Layer whose output is the tap. Throws Error("unknown_tap") when the model
// has no such tap (gap requires a swapped model).
std::size_t tap_layer(const ModelSpec& model, Tap tap);

// Row i is the tap activation of inputs[i]. Rows are computed in parallel.
FeatureMatrix extract_features(const ModelSpec& model, Tap tap, std::span<const Tensor> inputs,
                               std::span<const int> labels);

}  // namespace activscope::nn
