#include <charconv>

#include "activscope/binary_io.hpp"
#include "activscope/error.hpp"
#include "activscope/scope.hpp"

namespace activscope::scope {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::pair<ChannelTag, std::string_view>, 5> kTagNames{{
    {ChannelTag::tumor, "tumor"},
    {ChannelTag::lymphocyte, "lymphocyte"},
    {ChannelTag::collagen, "collagen"},
    {ChannelTag::other_structure, "other_structure"},
    {ChannelTag::unrecognizable, "unrecognizable"},
}};

int parse_index(const std::string& key) {
  int v = -1;
  const auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), v);
  if (ec != std::errc{} || end != key.data() + key.size() || key.empty() || v < 0) {
    throw Error("parse_error", "tag key '" + key + "' is not a channel index");
  }
  return v;
}

}  // namespace

std::string_view to_string(ChannelTag tag) {
  for (const auto& [t, name] : kTagNames)
    if (t == tag) return name;
  return "unrecognizable";
}

ChannelTag parse_tag(std::string_view name) {
  for (const auto& [t, n] : kTagNames)
    if (n == name) return t;
  throw Error("invalid_tag", "unknown channel tag '" + std::string(name) + "'");
}

bool is_cell_structure(ChannelTag tag) { return tag == ChannelTag::tumor || tag == ChannelTag::lymphocyte; }
bool is_recognizable(ChannelTag tag) { return tag != ChannelTag::unrecognizable; }

json to_json(const TagFile& t) {
  json tags = json::object();
  for (const auto& [index, tag] : t.tags) tags[std::to_string(index)] = to_string(tag);
  json j{{"model_name", t.model_name}, {"tap", t.tap}, {"tags", std::move(tags)}};
  if (!t.untagged.empty()) j["untagged"] = t.untagged;
  return j;
}

TagFile tags_from_json(const json& j) {
  try {
    TagFile t;
    t.model_name = j.at("model_name").get<std::string>();
    t.tap = j.at("tap").get<std::string>();
    for (const auto& [key, value] : j.at("tags").items()) {
      t.tags[parse_index(key)] = parse_tag(value.get<std::string>());
    }
    if (j.contains("untagged")) t.untagged = j.at("untagged").get<std::vector<int>>();
    for (int u : t.untagged) {
      if (t.tags.contains(u)) {
        throw Error("parse_error", "channel " + std::to_string(u) + " is both tagged and untagged");
      }
    }
    return t;
  } catch (const json::exception& e) {
    throw Error("parse_error", std::string("tags.json: ") + e.what());
  }
}

void save_tags(const fs::path& path, const TagFile& t) { binio::write_file(path, to_json(t).dump(1) + "\n"); }

TagFile load_tags(const fs::path& path) {
  if (!fs::exists(path)) throw Error("missing_file", "missing " + path.string());
  json j;
  try {
    j = json::parse(binio::read_file(path));
  } catch (const json::exception& e) {
    throw Error("parse_error", path.string() + ": " + e.what());
  }
  return tags_from_json(j);
}

std::vector<ChannelTag> resolve_tags(const TagFile& t, int channels, std::vector<std::string>* warnings) {
  for (const auto& [index, tag] : t.tags) {
    if (index >= channels) {
      throw Error("tag_out_of_range", "tag for channel " + std::to_string(index) + " but the layer has " +
                                          std::to_string(channels) + " channels");
    }
  }
  std::vector<ChannelTag> out(static_cast<std::size_t>(channels), ChannelTag::unrecognizable);
  for (int c = 0; c < channels; ++c) {
    const auto it = t.tags.find(c);
    if (it != t.tags.end()) {
      out[static_cast<std::size_t>(c)] = it->second;
    } else if (warnings) {
      warnings->push_back("channel " + std::to_string(c) + " untagged, treated as unrecognizable");
    }
  }
  return out;
}

}  // namespace activscope::scope
