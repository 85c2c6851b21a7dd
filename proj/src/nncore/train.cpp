#include <cmath>
#include <numeric>

#include "activscope/error.hpp"
#include "activscope/nncore.hpp"
#include "activscope/random.hpp"

namespace activscope::nn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("invalid_config", "learning_rate must be > 0");
  if (batch_size < 1) throw Error("invalid_config", "batch_size must be >= 1");
  if (epochs < 1) throw Error("invalid_config", "epochs must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0) throw Error("invalid_config", "momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw Error("invalid_config", "weight_decay must be >= 0");
}

TrainResult train_sgd(ModelSpec model, std::span<const Tensor> inputs, std::span<const int> labels,
                      const TrainConfig& cfg) {
  cfg.validate();
  if (inputs.empty()) throw Error("empty_dataset", "cannot train on an empty dataset");
  if (inputs.size() != labels.size()) {
    throw Error("shape_mismatch", std::to_string(inputs.size()) + " inputs but " +
                                      std::to_string(labels.size()) + " labels");
  }
  const int classes = model.shapes().back().channels;
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw Error("invalid_label", "label " + std::to_string(y) + " outside [0, " +
                                       std::to_string(classes) + ")");
    }
  }

  Rng rng(derive_seed(cfg.seed, 0x5347440000ull));
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto velocity = zero_gradients(model);
  auto grad = zero_gradients(model);

  const float lr = static_cast<float>(cfg.learning_rate);
  const float mu = static_cast<float>(cfg.momentum);
  const float decay = static_cast<float>(cfg.weight_decay);

  TrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (auto& g : grad) {
        std::fill(g.weight.begin(), g.weight.end(), 0.0f);
        std::fill(g.bias.begin(), g.bias.end(), 0.0f);
      }
      for (std::size_t b = start; b < stop; ++b) {
        epoch_loss += accumulate_gradients(model, inputs[order[b]], labels[order[b]], grad);
      }
      const float scale = 1.0f / static_cast<float>(stop - start);
      for (std::size_t l = 0; l < model.params.size(); ++l) {
        auto& p = model.params[l];
        for (std::size_t i = 0; i < p.weight.size(); ++i) {
          float& v = velocity[l].weight[i];
          v = mu * v - lr * (grad[l].weight[i] * scale + decay * p.weight[i]);
          p.weight[i] += v;
        }
        for (std::size_t i = 0; i < p.bias.size(); ++i) {
          float& v = velocity[l].bias[i];
          v = mu * v - lr * grad[l].bias[i] * scale;
          p.bias[i] += v;
        }
      }
    }
    const double mean = epoch_loss / static_cast<double>(inputs.size());
    if (!std::isfinite(mean)) {
      throw Error("non_finite_loss", "loss became non-finite in epoch " + std::to_string(epoch + 1));
    }
    result.epoch_loss.push_back(mean);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace activscope::nn
