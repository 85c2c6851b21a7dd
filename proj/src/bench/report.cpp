#include <cstdio>
#include <sstream>

#include "activscope/bench.hpp"
#include "activscope/binary_io.hpp"
#include "activscope/error.hpp"

namespace activscope::bench {

using nlohmann::json;

json to_json(const Report& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"structure", row.structure},
                    {"dim", row.dim},
                    {"in_sample", row.in_sample},
                    {"out_sample", row.out_sample},
                    {"seconds", row.seconds}});
  }
  json reference = json::array();
  for (const auto& row : r.reference) {
    reference.push_back({{"structure", row.structure}, {"in_sample", row.in_sample}, {"out_sample", row.out_sample}});
  }
  return {{"experiment", r.experiment}, {"title", r.title},       {"rows", rows},
          {"reference", reference},     {"details", r.details}, {"warnings", r.warnings}};
}

Report report_from_json(const json& j) {
  try {
    Report r;
    r.experiment = j.at("experiment").get<std::string>();
    r.title = j.at("title").get<std::string>();
    for (const auto& row : j.at("rows")) {
      r.rows.push_back({row.at("structure").get<std::string>(), row.at("dim").get<std::size_t>(),
                        row.at("in_sample").get<double>(), row.at("out_sample").get<double>(),
                        row.at("seconds").get<double>()});
    }
    for (const auto& row : j.at("reference")) {
      r.reference.push_back({row.at("structure").get<std::string>(), row.at("in_sample").get<double>(),
                             row.at("out_sample").get<double>()});
    }
    r.details = j.at("details");
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw Error("parse_error", std::string("report: ") + e.what());
  }
}

namespace {

std::string scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v.get<double>());
    return buf;
  }
  return v.dump();
}

bool flat_object(const json& v) {
  if (!v.is_object()) return false;
  for (const auto& [k, x] : v.items())
    if (x.is_structured()) return false;
  return true;
}

// Left-aligned first column, right-aligned others.
std::string aligned(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width;
  for (const auto& row : cells) {
    if (row.size() > width.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream o;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      line += c == 0 ? row[c] + pad : "  " + pad + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    o << line << "\n";
  }
  return o.str();
}

void render_value(std::ostringstream& o, const std::string& key, const json& v) {
  if (v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), flat_object)) {
    std::vector<std::string> columns;
    for (const auto& [k, x] : v.front().items()) columns.push_back(k);
    std::vector<std::vector<std::string>> cells{columns};
    for (const auto& item : v) {
      std::vector<std::string> row;
      for (const auto& c : columns) row.push_back(item.contains(c) ? scalar(item.at(c)) : "");
      cells.push_back(std::move(row));
    }
    o << key << ":\n" << aligned(cells);
  } else if (v.is_object()) {
    for (const auto& [k, x] : v.items()) render_value(o, key + "." + k, x);
  } else if (v.is_array()) {
    std::string joined;
    for (const auto& x : v) joined += (joined.empty() ? "" : " ") + scalar(x);
    o << key << ": " << joined << "\n";
  } else {
    o << key << ": " << scalar(v) << "\n";
  }
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

}  // namespace

std::string render_text(const Report& r) {
  std::ostringstream o;
  o << r.experiment << ": " << r.title << "\n";
  if (!r.rows.empty()) {
    std::vector<std::vector<std::string>> cells{{"structure", "dim", "in-sample", "out-sample", "time(s)"}};
    for (const auto& row : r.rows) {
      char t[32];
      std::snprintf(t, sizeof t, "%.3f", row.seconds);
      cells.push_back({row.structure, std::to_string(row.dim), percent(row.in_sample), percent(row.out_sample), t});
    }
    o << "\n" << aligned(cells);
  }
  if (!r.reference.empty()) {
    std::vector<std::vector<std::string>> cells{{"published", "in-sample", "out-sample"}};
    for (const auto& row : r.reference) cells.push_back({row.structure, percent(row.in_sample), percent(row.out_sample)});
    o << "\n" << aligned(cells);
  }
  if (!r.details.empty()) {
    o << "\n";
    for (const auto& [k, v] : r.details.items()) render_value(o, k, v);
  }
  if (!r.warnings.empty()) {
    o << "\n";
    for (const auto& w : r.warnings) o << "warning: " << w << "\n";
  }
  return o.str();
}

void write_report(const fs::path& dir, const Report& r) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("io_error", "cannot create " + dir.string() + ": " + ec.message());
  binio::write_file(dir / "report.json", to_json(r).dump(2) + "\n");
  binio::write_file(dir / "report.txt", render_text(r));
}

Report read_report(const fs::path& dir) {
  const auto path = dir / "report.json";
  if (!fs::exists(path)) throw Error("missing_file", "missing " + path.string());
  try {
    return report_from_json(json::parse(binio::read_file(path)));
  } catch (const json::parse_error& e) {
    throw Error("parse_error", path.string() + ": " + e.what());
  }
}

json strip_timing(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) {
      if (k == "seconds" || k == "timing") continue;
      out[k] = strip_timing(v);
    }
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(strip_timing(v));
    return out;
  }
  return j;
}

}  // namespace activscope::bench
