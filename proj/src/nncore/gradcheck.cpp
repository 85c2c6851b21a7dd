#include <algorithm>
#include <cmath>
#include <numeric>

#include "activscope/error.hpp"
#include "activscope/nncore.hpp"
#include "activscope/random.hpp"

namespace activscope::nn {

double GradCheckReport::max_relative_error() const {
  double worst = 0.0;
  for (const auto& g : groups) worst = std::max(worst, g.max_relative_error);
  return worst;
}

bool GradCheckReport::passed() const {
  for (const auto& g : groups) {
    if (g.checked == 0) return false;
  }
  return max_relative_error() <= tolerance;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t size, Rng& rng) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

// Which side of every piecewise-linear switch the sample sits on: ReLU
// on/off per unit and the selected cell of every maxpool window. A central
// difference is only meaningful when all three evaluation points agree.
std::vector<std::uint32_t> switch_pattern(const BasicModel<double>& model,
                                          const BasicTensor<double>& input,
                                          const std::vector<BasicTensor<double>>& outputs) {
  std::vector<std::uint32_t> pattern;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& spec = model.layers[l];
    const auto& in = l == 0 ? input : outputs[l - 1];
    if (spec.kind == LayerKind::relu) {
      for (double v : in.data) pattern.push_back(v > 0.0 ? 1u : 0u);
    } else if (spec.kind == LayerKind::maxpool) {
      const Shape& os = outputs[l].shape;
      for (int c = 0; c < os.channels; ++c) {
        for (int oy = 0; oy < os.height; ++oy) {
          for (int ox = 0; ox < os.width; ++ox) {
            std::uint32_t best_k = 0;
            double best = in.at(c, oy * spec.stride, ox * spec.stride);
            for (int ky = 0; ky < spec.kernel; ++ky) {
              for (int kx = 0; kx < spec.kernel; ++kx) {
                const double v = in.at(c, oy * spec.stride + ky, ox * spec.stride + kx);
                if (v > best) {
                  best = v;
                  best_k = static_cast<std::uint32_t>(ky * spec.kernel + kx);
                }
              }
            }
            pattern.push_back(best_k);
          }
        }
      }
    }
  }
  return pattern;
}

struct Evaluation {
  double loss;
  std::vector<std::uint32_t> pattern;
};

Evaluation evaluate(const BasicModel<double>& model, const BasicTensor<double>& input, int label) {
  const auto outputs = forward_prefix(model, input, model.layers.size());
  const double p = outputs.back().data[static_cast<std::size_t>(label)];
  return {-std::log(std::max(p, 1e-300)), switch_pattern(model, input, outputs)};
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

GradCheckReport grad_check(const ModelSpec& model, const Tensor& sample, int label, double epsilon,
                           double tolerance, std::size_t entries_per_group, std::uint64_t seed) {
  if (!(epsilon >= 1e-5 && epsilon <= 1e-2)) {
    throw Error("invalid_argument", "epsilon must lie in [1e-5, 1e-2]");
  }
  auto m = convert<double>(model);
  BasicTensor<double> x(sample.shape);
  x.data.assign(sample.data.begin(), sample.data.end());

  auto grad = zero_gradients(m);
  BasicTensor<double> input_grad;
  accumulate_gradients(m, x, label, grad, &input_grad);

  GradCheckReport report;
  report.tolerance = tolerance;
  Rng rng(derive_seed(seed, 0x4743));

  const auto base_pattern = evaluate(m, x, label).pattern;

  auto check = [&](std::string name, LayerKind kind, std::vector<double>& values,
                   const std::vector<double>& analytic) {
    GradCheckGroup group{std::move(name), kind, 0, 0, 0.0};
    // Candidates beyond the budget replace coordinates whose difference
    // straddles a switch.
    for (std::size_t i : shuffled_indices(values.size(), rng)) {
      if (group.checked == entries_per_group) break;
      const double saved = values[i];
      values[i] = saved + epsilon;
      const auto up = evaluate(m, x, label);
      values[i] = saved - epsilon;
      const auto down = evaluate(m, x, label);
      values[i] = saved;
      if (up.pattern != base_pattern || down.pattern != base_pattern) {
        ++group.skipped_switches;
        continue;
      }
      const double numeric = (up.loss - down.loss) / (2.0 * epsilon);
      group.max_relative_error =
          std::max(group.max_relative_error, relative_error(analytic[i], numeric));
      ++group.checked;
    }
    report.groups.push_back(std::move(group));
  };

  int conv_ordinal = 0;
  int fc_ordinal = 0;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& spec = m.layers[l];
    if (!spec.has_params()) continue;
    const std::string prefix = spec.kind == LayerKind::conv ? "conv" + std::to_string(++conv_ordinal)
                                                            : "fc" + std::to_string(++fc_ordinal);
    check(prefix + ".weight", spec.kind, m.params[l].weight, grad[l].weight);
    check(prefix + ".bias", spec.kind, m.params[l].bias, grad[l].bias);
  }
  // The input gradient flows through every layer, parameterless ones included.
  check("input", m.layers.front().kind, x.data, input_grad.data);
  return report;
}

}  // namespace activscope::nn
