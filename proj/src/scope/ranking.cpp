#include <algorithm>

#include "activscope/error.hpp"
#include "activscope/parallel.hpp"
#include "activscope/scope.hpp"

namespace activscope::scope {

std::vector<ChannelScore> score_channels(const Tensor& map, std::size_t patch) {
  const auto& s = map.shape;
  std::vector<ChannelScore> out;
  out.reserve(static_cast<std::size_t>(s.channels));
  for (int c = 0; c < s.channels; ++c) {
    const float* v = map.data.data() + static_cast<std::size_t>(c) * s.plane();
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.plane(); ++i)
      if (v[i] > v[best]) best = i;
    out.push_back({patch, c, v[best], static_cast<int>(best / s.width), static_cast<int>(best % s.width)});
  }
  return out;
}

namespace {

bool ranks_before(const ChannelScore& a, const ChannelScore& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.patch < b.patch;
}

}  // namespace

ChannelRanking rank_top_k(std::span<const ChannelScore> scores, std::size_t k, const FovMap& fov) {
  if (k == 0) throw Error("invalid_k", "k must be at least 1");
  ChannelRanking out;
  if (scores.empty()) return out;
  out.channel = scores.front().channel;
  for (const auto& s : scores) {
    if (s.channel != out.channel) {
      throw Error("mixed_channels", "scores for channels " + std::to_string(out.channel) + " and " +
                                        std::to_string(s.channel) + " passed to one ranking");
    }
  }
  std::vector<ChannelScore> sorted(scores.begin(), scores.end());
  const auto n = std::min(k, sorted.size());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n), sorted.end(), ranks_before);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = sorted[i];
    out.entries.push_back({s.patch, s.score, s.row, s.col, fov.box(s.row, s.col)});
  }
  return out;
}

std::vector<ChannelRanking> rank_channels(std::span<const Tensor> maps, std::size_t k, const FovMap& fov) {
  if (maps.empty()) return {};
  const auto channels = static_cast<std::size_t>(maps.front().shape.channels);
  std::vector<std::vector<ChannelScore>> per_patch(maps.size());
  parallel_for(maps.size(), [&](std::size_t i) {
    if (maps[i].shape != maps.front().shape) {
      throw Error("shape_mismatch", "map " + std::to_string(i) + " has shape " + maps[i].shape.str() +
                                        ", expected " + maps.front().shape.str());
    }
    per_patch[i] = score_channels(maps[i], i);
  });
  std::vector<ChannelRanking> out(channels);
  parallel_for(channels, [&](std::size_t c) {
    std::vector<ChannelScore> column;
    column.reserve(maps.size());
    for (const auto& p : per_patch) column.push_back(p[c]);
    out[c] = rank_top_k(column, k, fov);
  });
  return out;
}

}  // namespace activscope::scope
