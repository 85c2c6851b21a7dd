#include <algorithm>
#include <cmath>
#include <numeric>

#include "activscope/error.hpp"
#include "activscope/heads.hpp"
#include "activscope/parallel.hpp"
#include "activscope/random.hpp"

namespace activscope::heads {

double gini(std::array<std::uint32_t, 2> counts) {
  const double n = static_cast<double>(counts[0]) + counts[1];
  if (n == 0.0) return 0.0;
  const double p = counts[1] / n;
  return 2.0 * p * (1.0 - p);
}

int Tree::predict_row(std::span<const float> x) const {
  std::size_t at = 0;
  while (nodes[at].feature >= 0) {
    const auto& node = nodes[at];
    at = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                              : node.right);
  }
  return nodes[at].counts[1] > nodes[at].counts[0] ? 1 : 0;
}

int ForestModel::predict_row(std::span<const float> x) const {
  if (x.size() != n_features) {
    throw Error("dimension_mismatch", "forest expects " + std::to_string(n_features) +
                                          " features but row has " + std::to_string(x.size()));
  }
  std::size_t ones = 0;
  for (const auto& t : trees) ones += static_cast<std::size_t>(t.predict_row(x));
  return 2 * ones > trees.size() ? 1 : 0;
}

namespace {

struct Columns {
  std::size_t n = 0;
  std::vector<float> values;  // column-major over canonical rows
  std::vector<std::uint8_t> labels;
  float at(std::size_t row, std::size_t col) const { return values[col * n + row]; }
};

struct Split {
  bool found = false;
  std::size_t feature = 0;
  float threshold = 0.0f;
  double score = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Columns& data, const ForestConfig& cfg, std::size_t mtry, std::uint64_t seed)
      : data_(data), cfg_(cfg), mtry_(mtry), rng_(seed) {}

  Tree build() {
    Tree tree;
    tree.seed = 0;
    std::vector<std::size_t> rows(data_.n);
    if (cfg_.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(uniform_index(rng_, data_.n));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    const double root_n = static_cast<double>(rows.size());

    struct Work {
      std::size_t node, begin, end, depth;
    };
    tree.nodes.emplace_back();
    std::vector<Work> stack{{0, 0, rows.size(), 0}};
    while (!stack.empty()) {
      const Work w = stack.back();
      stack.pop_back();
      std::array<std::uint32_t, 2> counts{0, 0};
      for (std::size_t i = w.begin; i < w.end; ++i) ++counts[data_.labels[rows[i]]];
      tree.nodes[w.node].counts = counts;
      const bool pure = counts[0] == 0 || counts[1] == 0;
      const bool depth_cap = cfg_.max_depth > 0 && w.depth >= cfg_.max_depth;
      if (pure || depth_cap || w.end - w.begin < 2) continue;

      const Split split = find_split(rows, w.begin, w.end, counts);
      if (!split.found) continue;

      const auto mid = static_cast<std::size_t>(
          std::partition(rows.begin() + static_cast<std::ptrdiff_t>(w.begin),
                         rows.begin() + static_cast<std::ptrdiff_t>(w.end),
                         [&](std::size_t r) { return data_.at(r, split.feature) <= split.threshold; }) -
          rows.begin());
      std::array<std::uint32_t, 2> left{0, 0}, right{0, 0};
      for (std::size_t i = w.begin; i < mid; ++i) ++left[data_.labels[rows[i]]];
      for (std::size_t i = mid; i < w.end; ++i) ++right[data_.labels[rows[i]]];
      const double n = static_cast<double>(w.end - w.begin);
      const double child = (static_cast<double>(mid - w.begin) * gini(left) +
                            static_cast<double>(w.end - mid) * gini(right)) / n;

      const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[w.node];
      node.feature = static_cast<std::int32_t>(split.feature);
      node.threshold = split.threshold;
      node.left = left_id;
      node.right = left_id + 1;
      node.impurity_decrease = (n / root_n) * (gini(counts) - child);
      stack.push_back({static_cast<std::size_t>(left_id + 1), mid, w.end, w.depth + 1});
      stack.push_back({static_cast<std::size_t>(left_id), w.begin, mid, w.depth + 1});
    }
    return tree;
  }

 private:
  Split find_split(const std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
                   std::array<std::uint32_t, 2> total) {
    const std::size_t d = data_.values.size() / data_.n;
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order.begin(), order.end(), rng_);

    Split best;
    // Candidates are drawn mtry at a time; later batches only matter when no
    // feature in the earlier ones separates the node.
    for (std::size_t start = 0; start < d && !best.found; start += mtry_) {
      const std::size_t stop = std::min(d, start + mtry_);
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(stop));
      std::sort(batch.begin(), batch.end());
      for (std::size_t f : batch) scan_feature(rows, begin, end, total, f, best);
    }
    return best;
  }

  void scan_feature(const std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
                    std::array<std::uint32_t, 2> total, std::size_t f, Split& best) {
    pairs_.clear();
    for (std::size_t i = begin; i < end; ++i) pairs_.emplace_back(data_.at(rows[i], f), data_.labels[rows[i]]);
    std::sort(pairs_.begin(), pairs_.end());
    std::array<double, 2> left{0, 0};
    const double n = static_cast<double>(pairs_.size());
    for (std::size_t i = 0; i + 1 < pairs_.size(); ++i) {
      left[pairs_[i].second] += 1.0;
      if (!(pairs_[i].first < pairs_[i + 1].first)) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = n - nl;
      const double r0 = total[0] - left[0], r1 = total[1] - left[1];
      const double score = (left[0] * left[0] + left[1] * left[1]) / nl + (r0 * r0 + r1 * r1) / nr;
      if (!best.found || score > best.score) {
        const float lo = pairs_[i].first, hi = pairs_[i + 1].first;
        float thr = lo + (hi - lo) / 2.0f;
        if (!(thr >= lo && thr < hi)) thr = lo;
        best = {true, f, thr, score};
      }
    }
  }

  const Columns& data_;
  const ForestConfig& cfg_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<std::pair<float, std::uint8_t>> pairs_;
};

}  // namespace

ForestModel fit_forest(const FeatureMatrix& X, const ForestConfig& cfg) {
  require_two_classes(X);
  if (cfg.n_trees < 1) throw Error("invalid_config", "forest needs n_trees >= 1");
  if (cfg.features_per_split > X.cols) {
    throw Error("invalid_config", "features_per_split " + std::to_string(cfg.features_per_split) +
                                      " exceeds feature count " + std::to_string(X.cols));
  }
  const auto order = canonical_order(X);
  Columns data;
  data.n = X.rows;
  data.values.resize(X.rows * X.cols);
  data.labels.resize(X.rows);
  for (std::size_t r = 0; r < order.size(); ++r) {
    data.labels[r] = X.labels[order[r]];
    for (std::size_t j = 0; j < X.cols; ++j) data.values[j * X.rows + r] = X.at(order[r], j);
  }
  const std::size_t mtry = cfg.features_per_split > 0
                               ? cfg.features_per_split
                               : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(X.cols))));

  ForestModel model;
  model.config = cfg;
  model.n_features = X.cols;
  model.trees.resize(cfg.n_trees);
  parallel_for(cfg.n_trees, [&](std::size_t t) {
    const auto seed = derive_seed(cfg.seed, t);
    TreeBuilder builder(data, cfg, mtry, seed);
    model.trees[t] = builder.build();
    model.trees[t].seed = seed;
  });
  return model;
}

std::vector<std::size_t> ImportanceVector::ranking() const {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return idx;
}

ImportanceVector importance(const ForestModel& model) {
  if (model.trees.empty()) throw Error("unfitted", "forest has no trees");
  ImportanceVector out;
  out.values.assign(model.n_features, 0.0);
  for (const auto& tree : model.trees)
    for (const auto& node : tree.nodes)
      if (node.feature >= 0) out.values[static_cast<std::size_t>(node.feature)] += node.impurity_decrease;
  const double total = std::accumulate(out.values.begin(), out.values.end(), 0.0);
  if (!(total > 0.0)) throw Error("no_splits", "no tree in the forest reduced impurity");
  for (auto& v : out.values) v = std::max(0.0, v / total);
  return out;
}

}  // namespace activscope::heads
