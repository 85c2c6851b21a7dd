#include "activscope/model_io.hpp"

#include <json.hpp>

#include "activscope/binary_io.hpp"
#include "activscope/error.hpp"

namespace activscope::nn {

namespace {

constexpr std::string_view kMagic = "ASM1";

nlohmann::json shape_json(const Shape& s) { return {s.channels, s.height, s.width}; }

Shape shape_from(const nlohmann::json& j) {
  return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()};
}

}  // namespace

std::string serialize_model(const ModelSpec& model) {
  const auto shapes = model.shapes();
  nlohmann::json header;
  header["name"] = model.name;
  header["input"] = shape_json(model.input);
  header["seed"] = model.seed;
  auto& layers = header["layers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    layers.push_back({{"kind", to_string(l.kind)},
                      {"kernel", l.kernel},
                      {"stride", l.stride},
                      {"padding", l.padding},
                      {"out_channels", l.out_channels},
                      {"output", shape_json(shapes[i])},
                      {"weights", model.params[i].weight.size()},
                      {"biases", model.params[i].bias.size()}});
  }
  const std::string text = header.dump();
  std::string out(kMagic);
  binio::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const auto& p : model.params) {
    for (float w : p.weight) binio::put_f32(out, w);
    for (float b : p.bias) binio::put_f32(out, b);
  }
  return out;
}

ModelSpec deserialize_model(std::string_view bytes) {
  binio::Reader in(bytes);
  if (in.take(std::min<std::size_t>(4, bytes.size()), "magic") != kMagic) {
    throw Error("bad_magic", "model file does not start with ASM1");
  }
  const std::uint32_t header_len = in.u32("header length");
  const auto text = in.take(header_len, "JSON header");
  ModelSpec model;
  std::vector<std::pair<std::size_t, std::size_t>> blob_sizes;
  try {
    const auto header = nlohmann::json::parse(text);
    model.name = header.at("name").get<std::string>();
    model.input = shape_from(header.at("input"));
    model.seed = header.at("seed").get<std::uint64_t>();
    for (const auto& l : header.at("layers")) {
      model.layers.push_back({parse_layer_kind(l.at("kind").get<std::string>()),
                              l.at("kernel").get<int>(), l.at("stride").get<int>(),
                              l.at("padding").get<int>(), l.at("out_channels").get<int>()});
      blob_sizes.emplace_back(l.at("weights").get<std::size_t>(), l.at("biases").get<std::size_t>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse_error", std::string("model header: ") + e.what());
  }
  const auto shapes = model.shapes();
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    const Shape in = i == 0 ? model.input : shapes[i - 1];
    std::size_t weights = 0;
    if (l.kind == LayerKind::conv) {
      weights = static_cast<std::size_t>(l.out_channels) * in.channels * l.kernel * l.kernel;
    } else if (l.kind == LayerKind::fc) {
      weights = static_cast<std::size_t>(l.out_channels) * in.size();
    }
    const std::size_t biases = l.has_params() ? static_cast<std::size_t>(l.out_channels) : 0;
    if (blob_sizes[i].first != weights || blob_sizes[i].second != biases) {
      throw Error("corrupt_model",
                  "layer " + std::to_string(i) + " blob size disagrees with schedule");
    }
  }
  model.params.resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    auto& p = model.params[i];
    p.weight.resize(blob_sizes[i].first);
    p.bias.resize(blob_sizes[i].second);
    in.f32s(p.weight.data(), p.weight.size(), "weights of layer " + std::to_string(i));
    in.f32s(p.bias.data(), p.bias.size(), "biases of layer " + std::to_string(i));
  }
  if (in.remaining() != 0) {
    throw Error("corrupt_model", std::to_string(in.remaining()) + " trailing bytes after weights");
  }
  return model;
}

void save_model(const std::filesystem::path& path, const ModelSpec& model) {
  binio::write_file(path, serialize_model(model));
}

ModelSpec load_model(const std::filesystem::path& path) {
  return deserialize_model(binio::read_file(path));
}

}  // namespace activscope::nn
