#include "activscope/feature_io.hpp"

#include "activscope/binary_io.hpp"
#include "activscope/error.hpp"

namespace activscope {

namespace {
constexpr std::string_view kMagic = "AFM1";
}

std::string serialize_features(const FeatureMatrix& X) {
  X.validate();
  std::string out(kMagic);
  binio::put_u32(out, static_cast<std::uint32_t>(X.rows));
  binio::put_u32(out, static_cast<std::uint32_t>(X.cols));
  binio::put_u32(out, static_cast<std::uint32_t>(X.tap.size()));
  out += X.tap;
  for (const auto& p : X.provenance) {
    binio::put_u32(out, p.channel);
    binio::put_u32(out, p.position);
  }
  out.reserve(out.size() + X.data.size() * 4 + X.rows);
  for (float v : X.data) binio::put_f32(out, v);
  for (auto y : X.labels) out.push_back(static_cast<char>(y));
  return out;
}

FeatureMatrix deserialize_features(std::string_view bytes) {
  binio::Reader in(bytes);
  if (in.take(std::min<std::size_t>(4, bytes.size()), "magic") != kMagic) {
    throw Error("bad_magic", "feature file does not start with AFM1");
  }
  FeatureMatrix X;
  X.rows = in.u32("row count");
  X.cols = in.u32("column count");
  const std::uint32_t tap_len = in.u32("tap name length");
  X.tap = std::string(in.take(tap_len, "tap name"));
  // Size check before allocating anything proportional to the header.
  const std::size_t needed = X.cols * 8 + X.rows * X.cols * 4 + X.rows;
  if (in.remaining() != needed) {
    throw Error(in.remaining() < needed ? "truncated" : "corrupt_features",
                "header declares " + std::to_string(X.rows) + "x" + std::to_string(X.cols) +
                    " but payload holds " + std::to_string(in.remaining()) + " bytes (expected " +
                    std::to_string(needed) + ")");
  }
  X.provenance.resize(X.cols);
  for (auto& p : X.provenance) {
    p.channel = in.u32("provenance");
    p.position = in.u32("provenance");
  }
  X.data.resize(X.rows * X.cols);
  in.f32s(X.data.data(), X.data.size(), "feature data");
  X.labels.resize(X.rows);
  for (auto& y : X.labels) y = in.u8("labels");
  X.validate();
  return X;
}

void save_features(const std::filesystem::path& path, const FeatureMatrix& X) {
  binio::write_file(path, serialize_features(X));
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  return deserialize_features(binio::read_file(path));
}

}  // namespace activscope
