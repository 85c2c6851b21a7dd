#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "activscope/error.hpp"
#include "activscope/nncore.hpp"

namespace activscope::nn {

namespace {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <class T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

int window_count(int in, int kernel, int stride, int padding) {
  const int span = in + 2 * padding - kernel;
  if (span < 0) return 0;
  return span / stride + 1;
}

// Patch matrix: row (c, ky, kx), column (oy, ox).
template <class T>
void im2col(const BasicTensor<T>& in, int kernel, int stride, int padding, const Shape& out,
            std::vector<T>& col) {
  const int ho = out.height;
  const int wo = out.width;
  col.assign(static_cast<std::size_t>(in.shape.channels) * kernel * kernel * ho * wo, T(0));
  std::size_t row = 0;
  for (int c = 0; c < in.shape.channels; ++c) {
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx, ++row) {
        T* dst = col.data() + row * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - padding + ky;
          if (iy < 0 || iy >= in.shape.height) continue;
          const T* src = in.data.data() + (static_cast<std::size_t>(c) * in.shape.height + iy) *
                                              in.shape.width;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - padding + kx;
            if (ix >= 0 && ix < in.shape.width) dst[oy * wo + ox] = src[ix];
          }
        }
      }
    }
  }
}

template <class T>
void col2im(const std::vector<T>& col, int kernel, int stride, int padding, const Shape& out,
            BasicTensor<T>& grad_in) {
  const int ho = out.height;
  const int wo = out.width;
  std::size_t row = 0;
  for (int c = 0; c < grad_in.shape.channels; ++c) {
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx, ++row) {
        const T* src = col.data() + row * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - padding + ky;
          if (iy < 0 || iy >= grad_in.shape.height) continue;
          T* dst = grad_in.data.data() +
                   (static_cast<std::size_t>(c) * grad_in.shape.height + iy) * grad_in.shape.width;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - padding + kx;
            if (ix >= 0 && ix < grad_in.shape.width) dst[ix] += src[oy * wo + ox];
          }
        }
      }
    }
  }
}

template <class T>
void check_params(const LayerSpec& spec, const LayerParams<T>& params, const Shape& in) {
  std::size_t expected_weight = 0;
  std::string expected;
  if (spec.kind == LayerKind::conv) {
    expected_weight = static_cast<std::size_t>(spec.out_channels) * in.channels * spec.kernel *
                      spec.kernel;
    expected = std::to_string(spec.out_channels) + "x" + std::to_string(in.channels) + "x" +
               std::to_string(spec.kernel) + "x" + std::to_string(spec.kernel);
  } else {
    expected_weight = static_cast<std::size_t>(spec.out_channels) * in.size();
    expected = std::to_string(spec.out_channels) + "x" + std::to_string(in.size());
  }
  if (params.weight.size() != expected_weight ||
      params.bias.size() != static_cast<std::size_t>(spec.out_channels)) {
    throw Error("shape_mismatch", std::string(to_string(spec.kind)) + " weights hold " +
                                      std::to_string(params.weight.size()) + " values (+" +
                                      std::to_string(params.bias.size()) +
                                      " bias) but input " + in.str() + " needs " + expected);
  }
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::avgpool: return "avgpool";
    case LayerKind::relu: return "relu";
    case LayerKind::fc: return "fc";
    case LayerKind::flatten: return "flatten";
    case LayerKind::softmax: return "softmax";
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (auto kind : {LayerKind::conv, LayerKind::maxpool, LayerKind::avgpool, LayerKind::relu,
                    LayerKind::fc, LayerKind::flatten, LayerKind::softmax}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error("parse_error", "unknown layer kind '" + std::string(name) + "'");
}

Shape output_shape(const LayerSpec& layer, const Shape& in) {
  auto mismatch = [&](const std::string& why) {
    return Error("shape_mismatch", std::string(to_string(layer.kind)) + " layer cannot consume " +
                                       in.str() + ": " + why);
  };
  if (layer.kernel < 1 || layer.stride < 1 || layer.padding < 0) {
    throw Error("invalid_layer", std::string(to_string(layer.kind)) +
                                     " needs kernel >= 1, stride >= 1, padding >= 0");
  }
  if (in.size() == 0) throw mismatch("empty input");
  switch (layer.kind) {
    case LayerKind::conv:
    case LayerKind::maxpool:
    case LayerKind::avgpool: {
      if (layer.kind != LayerKind::conv && layer.padding != 0) {
        throw mismatch("pooling windows may not overrun the border (padding must be 0)");
      }
      if (layer.kind == LayerKind::conv && layer.out_channels < 1) {
        throw Error("invalid_layer", "conv needs out_channels >= 1");
      }
      const int ho = window_count(in.height, layer.kernel, layer.stride, layer.padding);
      const int wo = window_count(in.width, layer.kernel, layer.stride, layer.padding);
      if (ho < 1 || wo < 1) {
        throw mismatch("kernel " + std::to_string(layer.kernel) + " exceeds padded extent");
      }
      return {layer.kind == LayerKind::conv ? layer.out_channels : in.channels, ho, wo};
    }
    case LayerKind::relu:
      return in;
    case LayerKind::fc:
      if (!in.is_flat()) throw mismatch("fc expects a flat input (insert flatten)");
      if (layer.out_channels < 1) throw Error("invalid_layer", "fc needs out_channels >= 1");
      return {layer.out_channels, 1, 1};
    case LayerKind::flatten:
      return {static_cast<int>(in.size()), 1, 1};
    case LayerKind::softmax:
      if (!in.is_flat()) throw mismatch("softmax expects a flat input");
      return in;
  }
  throw mismatch("unknown layer kind");
}

std::vector<Shape> chain_shapes(const Shape& input, std::span<const LayerSpec> layers) {
  std::vector<Shape> shapes;
  shapes.reserve(layers.size());
  Shape current = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::softmax && i + 1 != layers.size()) {
      throw Error("invalid_schedule", "softmax must be the final layer (found at " +
                                          std::to_string(i) + ")");
    }
    try {
      current = output_shape(layers[i], current);
    } catch (const Error& e) {
      throw Error(e.code(), "layer " + std::to_string(i) + ": " + e.what());
    }
    shapes.push_back(current);
  }
  if (layers.empty() || layers.back().kind != LayerKind::softmax) {
    throw Error("invalid_schedule", "schedule must end with exactly one softmax");
  }
  return shapes;
}

template <class T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const LayerParams<T>& kernel,
                              const LayerSpec& spec) {
  const Shape out_shape = output_shape(spec, input.shape);
  check_params(spec, kernel, input.shape);
  BasicTensor<T> out(out_shape);
  std::vector<T> col;
  im2col(input, spec.kernel, spec.stride, spec.padding, out_shape, col);
  const auto rows = static_cast<Eigen::Index>(input.shape.channels) * spec.kernel * spec.kernel;
  const auto cols = static_cast<Eigen::Index>(out_shape.plane());
  ConstMatrixMap<T> w(kernel.weight.data(), spec.out_channels, rows);
  ConstMatrixMap<T> c(col.data(), rows, cols);
  MatrixMap<T> y(out.data.data(), spec.out_channels, cols);
  y.noalias() = w * c;
  for (int o = 0; o < spec.out_channels; ++o) y.row(o).array() += kernel.bias[o];
  return out;
}

template <class T>
BasicTensor<T> layer_forward(const LayerSpec& spec, const LayerParams<T>& params,
                             const BasicTensor<T>& input) {
  switch (spec.kind) {
    case LayerKind::conv:
      return conv2d_forward(input, params, spec);
    case LayerKind::maxpool:
    case LayerKind::avgpool: {
      const Shape os = output_shape(spec, input.shape);
      BasicTensor<T> out(os);
      const T area = T(spec.kernel * spec.kernel);
      for (int c = 0; c < os.channels; ++c) {
        for (int oy = 0; oy < os.height; ++oy) {
          for (int ox = 0; ox < os.width; ++ox) {
            T best = -std::numeric_limits<T>::infinity();
            T sum = T(0);
            for (int ky = 0; ky < spec.kernel; ++ky) {
              for (int kx = 0; kx < spec.kernel; ++kx) {
                const T v = input.at(c, oy * spec.stride + ky, ox * spec.stride + kx);
                best = std::max(best, v);
                sum += v;
              }
            }
            out.at(c, oy, ox) = spec.kind == LayerKind::maxpool ? best : sum / area;
          }
        }
      }
      return out;
    }
    case LayerKind::relu: {
      BasicTensor<T> out = input;
      for (auto& v : out.data) v = std::max(v, T(0));
      return out;
    }
    case LayerKind::fc: {
      const Shape os = output_shape(spec, input.shape);
      check_params(spec, params, input.shape);
      BasicTensor<T> out(os);
      // Plain loops: Eigen's vectorized dot products peel by buffer address,
      // which would make the summation order allocation-dependent.
      const std::size_t d = input.data.size();
      for (int o = 0; o < spec.out_channels; ++o) {
        const T* w = params.weight.data() + static_cast<std::size_t>(o) * d;
        double acc = params.bias[o];
        for (std::size_t i = 0; i < d; ++i) acc += static_cast<double>(w[i]) * input.data[i];
        out.data[o] = static_cast<T>(acc);
      }
      return out;
    }
    case LayerKind::flatten: {
      BasicTensor<T> out = input;
      out.shape = output_shape(spec, input.shape);
      return out;
    }
    case LayerKind::softmax: {
      output_shape(spec, input.shape);
      BasicTensor<T> out = input;
      const T peak = *std::max_element(out.data.begin(), out.data.end());
      T total = T(0);
      for (auto& v : out.data) {
        v = std::exp(v - peak);
        total += v;
      }
      for (auto& v : out.data) v /= total;
      return out;
    }
  }
  throw Error("invalid_layer", "unknown layer kind");
}

template <class T>
BasicTensor<T> layer_backward(const LayerSpec& spec, const LayerParams<T>& params,
                              const BasicTensor<T>& input, const BasicTensor<T>& output,
                              const BasicTensor<T>& grad_output, LayerParams<T>& grad,
                              bool need_input_grad) {
  BasicTensor<T> grad_in(input.shape);
  switch (spec.kind) {
    case LayerKind::conv: {
      std::vector<T> col;
      im2col(input, spec.kernel, spec.stride, spec.padding, output.shape, col);
      const auto rows = static_cast<Eigen::Index>(input.shape.channels) * spec.kernel * spec.kernel;
      const auto cols = static_cast<Eigen::Index>(output.shape.plane());
      ConstMatrixMap<T> w(params.weight.data(), spec.out_channels, rows);
      ConstMatrixMap<T> c(col.data(), rows, cols);
      ConstMatrixMap<T> dy(grad_output.data.data(), spec.out_channels, cols);
      MatrixMap<T> dw(grad.weight.data(), spec.out_channels, rows);
      dw.noalias() += dy * c.transpose();
      for (int o = 0; o < spec.out_channels; ++o) {
        T acc = T(0);
        for (Eigen::Index i = 0; i < cols; ++i) acc += dy(o, i);
        grad.bias[o] += acc;
      }
      if (!need_input_grad) return grad_in;
      std::vector<T> dcol(col.size());
      MatrixMap<T> dc(dcol.data(), rows, cols);
      dc.noalias() = w.transpose() * dy;
      col2im(dcol, spec.kernel, spec.stride, spec.padding, output.shape, grad_in);
      return grad_in;
    }
    case LayerKind::maxpool:
    case LayerKind::avgpool: {
      const T area = T(spec.kernel * spec.kernel);
      const Shape& os = output.shape;
      for (int c = 0; c < os.channels; ++c) {
        for (int oy = 0; oy < os.height; ++oy) {
          for (int ox = 0; ox < os.width; ++ox) {
            const T g = grad_output.at(c, oy, ox);
            if (spec.kind == LayerKind::avgpool) {
              for (int ky = 0; ky < spec.kernel; ++ky)
                for (int kx = 0; kx < spec.kernel; ++kx)
                  grad_in.at(c, oy * spec.stride + ky, ox * spec.stride + kx) += g / area;
              continue;
            }
            // Route to the row-major-first maximizer.
            int by = 0, bx = 0;
            T best = -std::numeric_limits<T>::infinity();
            for (int ky = 0; ky < spec.kernel; ++ky) {
              for (int kx = 0; kx < spec.kernel; ++kx) {
                const T v = input.at(c, oy * spec.stride + ky, ox * spec.stride + kx);
                if (v > best) {
                  best = v;
                  by = ky;
                  bx = kx;
                }
              }
            }
            grad_in.at(c, oy * spec.stride + by, ox * spec.stride + bx) += g;
          }
        }
      }
      return grad_in;
    }
    case LayerKind::relu:
      for (std::size_t i = 0; i < grad_in.data.size(); ++i) {
        grad_in.data[i] = input.data[i] > T(0) ? grad_output.data[i] : T(0);
      }
      return grad_in;
    case LayerKind::fc: {
      const auto in_dim = static_cast<Eigen::Index>(input.shape.size());
      const auto d = static_cast<std::size_t>(in_dim);
      std::fill(grad_in.data.begin(), grad_in.data.end(), T(0));
      for (int o = 0; o < spec.out_channels; ++o) {
        const T g = grad_output.data[o];
        const T* w = params.weight.data() + static_cast<std::size_t>(o) * d;
        T* dw = grad.weight.data() + static_cast<std::size_t>(o) * d;
        for (std::size_t i = 0; i < d; ++i) {
          dw[i] += g * input.data[i];
          grad_in.data[i] += w[i] * g;
        }
        grad.bias[o] += g;
      }
      return grad_in;
    }
    case LayerKind::flatten:
      grad_in.data = grad_output.data;
      return grad_in;
    case LayerKind::softmax:
      throw Error("invalid_layer", "softmax backward is folded into the cross-entropy loss");
  }
  throw Error("invalid_layer", "unknown layer kind");
}

#define ACTIVSCOPE_INSTANTIATE(T)                                                               \
  template BasicTensor<T> conv2d_forward<T>(const BasicTensor<T>&, const LayerParams<T>&,      \
                                            const LayerSpec&);                                 \
  template BasicTensor<T> layer_forward<T>(const LayerSpec&, const LayerParams<T>&,            \
                                           const BasicTensor<T>&);                             \
  template BasicTensor<T> layer_backward<T>(const LayerSpec&, const LayerParams<T>&,           \
                                            const BasicTensor<T>&, const BasicTensor<T>&,      \
                                            const BasicTensor<T>&, LayerParams<T>&, bool);

ACTIVSCOPE_INSTANTIATE(float)
ACTIVSCOPE_INSTANTIATE(double)
#undef ACTIVSCOPE_INSTANTIATE

}  // namespace activscope::nn
