#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "activscope/error.hpp"
#include "activscope/model_io.hpp"
#include "activscope/nncore.hpp"
#include "support/oracles.hpp"

using namespace activscope;
using nn::LayerKind;
using nn::LayerSpec;

namespace {

template <class T>
BasicTensor<T> random_input(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  return oracle::random_tensor<T>(s, rng);
}

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

// 16 patches with a dark disc at a random spot, 16 pale ones.
void toy_set(std::vector<Tensor>& xs, std::vector<int>& ys) {
  Rng rng(99);
  for (int i = 0; i < 32; ++i) {
    const int label = i % 2;
    Tensor t({3, 64, 64});
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) t.at(c, y, x) = 0.85f + 0.05f * static_cast<float>(uniform(rng, -1, 1));
    if (label == 1) {
      const double cy = uniform(rng, 16, 48), cx = uniform(rng, 16, 48);
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
          if ((y - cy) * (y - cy) + (x - cx) * (x - cx) < 100.0) {
            t.at(0, y, x) = 0.35f;
            t.at(1, y, x) = 0.1f;
            t.at(2, y, x) = 0.45f;
          }
    }
    xs.push_back(std::move(t));
    ys.push_back(label);
  }
}

}  // namespace

TEST_CASE("conv with a centre-one kernel copies the input") {
  Tensor x = random_input<float>({1, 6, 6}, 1);
  nn::LayerParams<float> p{std::vector<float>(9, 0.0f), {0.0f}};
  p.weight[4] = 1.0f;
  const auto y = nn::conv2d_forward(x, p, LayerSpec::conv(1, 3, 1, 1));
  CHECK(y == x);
}

TEST_CASE("3x3 ones kernel on a ones input sums nine") {
  Tensor x({1, 5, 5}, 1.0f);
  nn::LayerParams<float> p{std::vector<float>(9, 1.0f), {0.0f}};
  const auto y = nn::conv2d_forward(x, p, LayerSpec::conv(1, 3, 1, 0));
  CHECK(y.shape == Shape{1, 3, 3});
  for (float v : y.data) CHECK(v == 9.0f);
}

TEST_CASE("forward kernels match direct loops on random layers") {
  Rng rng(2024);
  for (auto kind : {LayerKind::conv, LayerKind::maxpool, LayerKind::avgpool, LayerKind::fc}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto c = oracle::random_layer_case(kind, rng);
      const auto got = nn::layer_forward(c.spec, c.params, c.input);
      const auto want = oracle::oracle_forward(c);
      CAPTURE(nn::to_string(kind));
      CHECK(oracle::max_abs_diff(got, want) <= 1e-5);
    }
  }
}

TEST_CASE("64-bit conv and fc agree with the oracle to 1e-10") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int C = 1 + static_cast<int>(uniform_index(rng, 4)), k = 1 + static_cast<int>(uniform_index(rng, 4));
    const int s = 1 + static_cast<int>(uniform_index(rng, 2)), pad = static_cast<int>(uniform_index(rng, k));
    const int out = 1 + static_cast<int>(uniform_index(rng, 5));
    auto x = oracle::random_tensor<double>({C, k + 7, k + 5}, rng);
    nn::LayerParams<double> p{oracle::random_vector<double>(static_cast<std::size_t>(out * C * k * k), rng),
                              oracle::random_vector<double>(static_cast<std::size_t>(out), rng)};
    const auto got = nn::conv2d_forward(x, p, LayerSpec::conv(out, k, s, pad));
    CHECK(oracle::max_abs_diff(got, oracle::conv(x, p.weight, p.bias, out, k, s, pad)) <= 1e-10);

    auto v = oracle::random_tensor<double>({20, 1, 1}, rng);
    nn::LayerParams<double> q{oracle::random_vector<double>(static_cast<std::size_t>(out) * 20, rng),
                              oracle::random_vector<double>(static_cast<std::size_t>(out), rng)};
    CHECK(oracle::max_abs_diff(nn::layer_forward(LayerSpec::fc(out), q, v), oracle::fc(v, q.weight, q.bias, out)) <=
          1e-10);
  }
}

TEST_CASE("shape errors name both shapes") {
  try {
    nn::output_shape(LayerSpec::conv(4, 7, 1, 0), Shape{3, 5, 5});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == "shape_mismatch");
    CHECK(std::string(e.what()).find("3x5x5") != std::string::npos);
  }
  CHECK(error_code([] { nn::output_shape(LayerSpec::fc(3), Shape{2, 4, 4}); }) == "shape_mismatch");
}

TEST_CASE("AlexNet preset shapes") {
  const auto m = nn::alexnet_preset(1);
  const auto shapes = m.shapes();
  const auto pool5 = nn::final_pool_index(m);
  CHECK(shapes[pool5] == Shape{256, 6, 6});
  CHECK(shapes[nn::tap_layer(m, nn::Tap::flat_conv)].size() == 9216);
  CHECK(shapes[nn::tap_layer(m, nn::Tap::fc1)].size() == 4096);
  const auto swapped = nn::swap_pooling(m, pool5);
  CHECK(swapped.shapes()[nn::tap_layer(swapped, nn::Tap::gap)].size() == 256);
  CHECK(swapped.layers[pool5] == LayerSpec::avgpool(13, 13));
  CHECK(9216 / 256 == 36);
  CHECK(error_code([&] { nn::tap_layer(m, nn::Tap::gap); }) == "unknown_tap");
}

TEST_CASE("MiniAlex preset schedule and swap ratio") {
  const auto m = nn::mini_alex_preset(1);
  const auto shapes = m.shapes();
  CHECK(nn::assigned_layer(m) == 7);
  CHECK(shapes[7] == Shape{32, 16, 16});
  CHECK(shapes[nn::tap_layer(m, nn::Tap::flat_conv)].size() == 2048);
  CHECK(shapes[nn::tap_layer(m, nn::Tap::fc1)].size() == 128);
  const auto g = nn::swap_pooling(m, nn::final_pool_index(m));
  const auto gap = g.shapes()[nn::tap_layer(g, nn::Tap::gap)].size();
  CHECK(gap == 32);
  CHECK(2048 / gap == 64);
}

TEST_CASE("softmax output lies in (0,1) and sums to one") {
  const auto m = nn::mini_alex_preset(3);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto x = random_input<float>(m.input, 100 + s);
    const auto acts = nn::forward(m, x);
    const auto& p = acts.probabilities();
    double sum = 0.0;
    for (float v : p.data) {
      CHECK(v > 0.0f);
      CHECK(v < 1.0f);
      sum += v;
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-6);
  }
  const auto big = nn::preset("alexnet", 2);
  const auto acts = nn::forward(big, random_input<float>(big.input, 7));
  const auto& p = acts.probabilities();
  CHECK(std::fabs(double(p.data[0]) + p.data[1] - 1.0) <= 1e-6);
}

TEST_CASE("forward rejects a wrongly sized patch") {
  const auto m = nn::mini_alex_preset(3);
  CHECK(error_code([&] { nn::forward(m, Tensor({3, 32, 32})); }) == "input_mismatch");
}

TEST_CASE("constant gray patch: gap tap is the channel mean of the assigned map") {
  const auto m = nn::mini_alex_preset(11);
  const auto g = nn::swap_pooling(m, nn::final_pool_index(m));
  const Tensor gray(m.input, 0.5f);
  const auto acts = nn::forward(g, gray);
  const auto& map = acts.outputs[nn::assigned_layer(g)];
  const auto& tap = acts.outputs[nn::tap_layer(g, nn::Tap::gap)];
  REQUIRE(tap.data.size() == 32);
  for (int c = 0; c < 32; ++c) {
    const auto ch = map.channel(c);
    const double mean = std::accumulate(ch.begin(), ch.end(), 0.0) / ch.size();
    CHECK(tap.data[c] == doctest::Approx(mean).epsilon(1e-5));
  }
}

TEST_CASE("ReLU is nonnegative and maxpool dominates avgpool") {
  Rng rng(8);
  auto x = oracle::random_tensor<float>({4, 12, 12}, rng, -2, 2);
  const auto r = nn::layer_forward(LayerSpec::relu(), {}, x);
  CHECK(std::all_of(r.data.begin(), r.data.end(), [](float v) { return v >= 0.0f; }));
  const auto mx = nn::layer_forward(LayerSpec::maxpool(3, 2), {}, r);
  const auto av = nn::layer_forward(LayerSpec::avgpool(3, 2), {}, r);
  for (std::size_t i = 0; i < mx.data.size(); ++i) CHECK(mx.data[i] >= av.data[i]);
}

TEST_CASE("average pool of a constant map returns the constant per channel") {
  Tensor x({3, 13, 13});
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 169; ++i) x.data[c * 169 + i] = 0.25f * (c + 1);
  const auto y = nn::layer_forward(LayerSpec::avgpool(13, 13), {}, x);
  REQUIRE(y.shape == Shape{3, 1, 1});
  for (int c = 0; c < 3; ++c) CHECK(y.data[c] == doctest::Approx(0.25 * (c + 1)));
}

TEST_CASE("swap_pooling keeps conv weights and earlier layers") {
  const auto m = nn::alexnet_preset(4);
  const auto idx = nn::final_pool_index(m);
  const auto s = nn::swap_pooling(m, idx);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    if (m.layers[i].kind == LayerKind::conv) CHECK(s.params[i] == m.params[i]);
    if (i < idx) {
      CHECK(s.layers[i] == m.layers[i]);
      CHECK(s.params[i] == m.params[i]);
    }
  }
  CHECK(error_code([&] { nn::swap_pooling(m, 0); }) == "not_maxpool");
}

TEST_CASE("single fc layer: weight gradient is input times output error") {
  auto m = nn::build_model("fc", Shape{5, 1, 1}, {LayerSpec::fc(3), LayerSpec::softmax()}, 1);
  Rng rng(12);
  m.params[0].weight = oracle::random_vector<float>(15, rng);
  m.params[0].bias = oracle::random_vector<float>(3, rng);
  const auto md = nn::convert<double>(m);
  const auto x = oracle::random_tensor<double>({5, 1, 1}, rng);
  auto grad = nn::zero_gradients(md);
  nn::accumulate_gradients(md, x, 1, grad);

  const auto z = oracle::fc(x, md.params[0].weight, md.params[0].bias, 3);
  const double mx = *std::max_element(z.data.begin(), z.data.end());
  double denom = 0.0;
  for (double v : z.data) denom += std::exp(v - mx);
  for (int i = 0; i < 3; ++i) {
    const double err = std::exp(z.data[i] - mx) / denom - (i == 1 ? 1.0 : 0.0);
    CHECK(grad[0].bias[i] == doctest::Approx(err).epsilon(1e-12));
    for (int j = 0; j < 5; ++j) CHECK(grad[0].weight[i * 5 + j] == doctest::Approx(x.data[j] * err).epsilon(1e-12));
  }
}

TEST_CASE("all-zero input gives zero conv weight gradients") {
  const auto md = nn::convert<double>(nn::mini_alex_preset(5));
  auto grad = nn::zero_gradients(md);
  nn::accumulate_gradients(md, BasicTensor<double>(md.input, 0.0), 0, grad);
  const auto& w1 = grad[0].weight;
  CHECK(std::all_of(w1.begin(), w1.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("MiniAlex gradient check at epsilon 1e-4") {
  const auto m = nn::mini_alex_preset(21);
  const auto x = random_input<float>(m.input, 77);
  const auto rep = nn::grad_check(m, x, 1, 1e-4, 1e-3, 16, 3);
  for (const auto& g : rep.groups) {
    CAPTURE(g.name);
    CHECK(g.checked > 0);
    CHECK(g.max_relative_error <= 1e-3);
  }
  CHECK(rep.passed());
  CHECK(error_code([&] { nn::grad_check(m, x, 1, 0.5); }) == "invalid_argument");
}

TEST_CASE("training is deterministic, reduces loss and fits a toy set") {
  std::vector<Tensor> xs;
  std::vector<int> ys;
  toy_set(xs, ys);
  nn::TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 8;
  cfg.seed = 42;
  const auto a = nn::train_sgd(nn::mini_alex_preset(42), xs, ys, cfg);
  const auto b = nn::train_sgd(nn::mini_alex_preset(42), xs, ys, cfg);
  CHECK(a.model == b.model);
  CHECK(a.epoch_loss == b.epoch_loss);
  CHECK(a.epoch_loss.back() < a.epoch_loss.front());
  MESSAGE(a.epoch_loss.front() << " -> " << a.epoch_loss.back());
  int correct = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) correct += nn::predict_class(a.model, xs[i]) == ys[i];
  CHECK(correct == 32);
}

TEST_CASE("training rejects empty data and bad labels") {
  nn::TrainConfig cfg;
  const auto m = nn::mini_alex_preset(1);
  CHECK(error_code([&] { nn::train_sgd(m, {}, {}, cfg); }) == "empty_dataset");
  std::vector<Tensor> xs{Tensor(m.input, 0.5f)};
  std::vector<int> ys{3};
  CHECK(error_code([&] { nn::train_sgd(m, xs, ys, cfg); }) == "invalid_label");
}

TEST_CASE("same seed gives the same initialization") {
  CHECK(nn::mini_alex_preset(9) == nn::mini_alex_preset(9));
  CHECK_FALSE(nn::mini_alex_preset(9) == nn::mini_alex_preset(10));
}

TEST_CASE("feature extraction rows match per-patch forward passes") {
  const auto m = nn::mini_alex_preset(6);
  std::vector<Tensor> xs;
  std::vector<int> ys;
  for (int i = 0; i < 6; ++i) {
    xs.push_back(random_input<float>(m.input, 200 + i));
    ys.push_back(i % 2);
  }
  const auto X = nn::extract_features(m, nn::Tap::fc1, xs, ys);
  CHECK(X.rows == 6);
  CHECK(X.cols == 128);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto want = nn::forward(m, xs[i]).outputs[nn::tap_layer(m, nn::Tap::fc1)];
    CHECK(std::equal(want.data.begin(), want.data.end(), X.row(i).begin()));
    CHECK(X.labels[i] == ys[i]);
  }
  const auto F = nn::extract_features(m, nn::Tap::flat_conv, xs, ys);
  CHECK(F.cols == 2048);
  CHECK(F.provenance[65] == FeatureProvenance{1, 1});
}

TEST_CASE("model files round trip and reject corruption") {
  const auto m = nn::mini_alex_preset(13);
  const auto bytes = nn::serialize_model(m);
  CHECK(nn::deserialize_model(bytes) == m);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK(error_code([&] { nn::deserialize_model(bad); }) == "bad_magic");
  CHECK(error_code([&] { nn::deserialize_model(bytes.substr(0, bytes.size() - 7)); }) == "truncated");
  CHECK(error_code([&] { nn::deserialize_model(bytes.substr(0, 20)); }) != "");
}
