#include <algorithm>
#include <cmath>

#include "activscope/error.hpp"
#include "activscope/scope.hpp"

namespace activscope::scope {

std::string_view to_string(Resize mode) { return mode == Resize::bilinear ? "bilinear" : "nearest"; }

Resize parse_resize(std::string_view name) {
  if (name == "bilinear") return Resize::bilinear;
  if (name == "nearest") return Resize::nearest;
  throw Error("parse_error", "unknown resize mode '" + std::string(name) + "'");
}

Heatmap render_heatmap(std::span<const float> map, int map_h, int map_w, int out_h, int out_w, Resize mode) {
  if (map_h < 1 || map_w < 1 || map.size() != static_cast<std::size_t>(map_h) * map_w) {
    throw Error("empty_map", "heatmap needs a nonempty map matching its " + std::to_string(map_h) + "x" +
                                 std::to_string(map_w) + " dims");
  }
  if (out_h < 1 || out_w < 1) throw Error("shape_mismatch", "heatmap output dims must be positive");
  Heatmap h;
  h.height = out_h;
  h.width = out_w;
  const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
  h.min = *lo;
  h.max = *hi;
  std::vector<float> norm(map.size(), 0.5f);
  if (h.max > h.min) {
    const double range = static_cast<double>(h.max) - h.min;
    for (std::size_t i = 0; i < map.size(); ++i) norm[i] = static_cast<float>((map[i] - static_cast<double>(h.min)) / range);
  }

  h.values.resize(static_cast<std::size_t>(out_h) * out_w);
  const double sy = static_cast<double>(map_h) / out_h;
  const double sx = static_cast<double>(map_w) / out_w;
  auto cell = [&](int y, int x) { return static_cast<double>(norm[static_cast<std::size_t>(y) * map_w + x]); };
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double v;
      if (mode == Resize::nearest) {
        const int iy = std::min(map_h - 1, static_cast<int>(std::floor((y + 0.5) * sy)));
        const int ix = std::min(map_w - 1, static_cast<int>(std::floor((x + 0.5) * sx)));
        v = cell(iy, ix);
      } else {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, map_h - 1.0);
        const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, map_w - 1.0);
        const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
        const int y1 = std::min(y0 + 1, map_h - 1), x1 = std::min(x0 + 1, map_w - 1);
        const double ty = fy - y0, tx = fx - x0;
        v = (1 - ty) * ((1 - tx) * cell(y0, x0) + tx * cell(y0, x1)) +
            ty * ((1 - tx) * cell(y1, x0) + tx * cell(y1, x1));
      }
      h.values[static_cast<std::size_t>(y) * out_w + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return h;
}

Heatmap render_heatmap(const Tensor& map, int channel, int out_h, int out_w, Resize mode) {
  if (channel < 0 || channel >= map.shape.channels) {
    throw Error("channel_out_of_range", "channel " + std::to_string(channel) + " outside map " + map.shape.str());
  }
  return render_heatmap(map.channel(channel), map.shape.height, map.shape.width, out_h, out_w, mode);
}

GrayImage to_gray(const Heatmap& heatmap) {
  GrayImage g(heatmap.width, heatmap.height);
  for (std::size_t i = 0; i < heatmap.values.size(); ++i)
    g.pixels[i] = static_cast<std::uint8_t>(std::lround(heatmap.values[i] * 255.0f));
  return g;
}

Rgb heat_color(float v) {
  auto ramp = [](float t) { return static_cast<std::uint8_t>(std::lround(255.0f * std::clamp(1.5f - std::fabs(t), 0.0f, 1.0f))); };
  return {ramp(4.0f * v - 3.0f), ramp(4.0f * v - 2.0f), ramp(4.0f * v - 1.0f)};
}

RgbImage overlay(const RgbImage& patch, const Heatmap& heatmap, float alpha) {
  if (patch.width != heatmap.width || patch.height != heatmap.height) {
    throw Error("shape_mismatch", "heatmap " + std::to_string(heatmap.height) + "x" + std::to_string(heatmap.width) +
                                      " does not cover patch " + std::to_string(patch.height) + "x" +
                                      std::to_string(patch.width));
  }
  RgbImage out = patch;
  for (int y = 0; y < patch.height; ++y) {
    for (int x = 0; x < patch.width; ++x) {
      const Rgb p = patch.at(y, x), c = heat_color(heatmap.at(y, x));
      Rgb o;
      for (int k = 0; k < 3; ++k) o[k] = static_cast<std::uint8_t>(std::lround((1 - alpha) * p[k] + alpha * c[k]));
      out.set(y, x, o);
    }
  }
  return out;
}

}  // namespace activscope::scope
