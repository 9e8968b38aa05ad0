#pragma once

// File formats: graph and vertex-function JSON, CSV tables, SHA-256 digests.

#include <fraclab/energy.hpp>
#include <fraclab/error.hpp>
#include <fraclab/prefractal.hpp>

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fraclab::io {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

inline Json read_json(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in " + path + ": " + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(1) + "\n"; }

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tables

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const {
    std::string s;
    for (std::size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
    s += "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + format_double(r[i]);
      s += "\n";
    }
    return s;
  }
};

/// Long format: one row per (key, quantity). Column 0 of `t` is the key.
/// Rows are sorted by key; `quantities` selects columns (all when empty).
inline std::string emit_plotdata(const Table& t, const std::vector<std::string>& quantities = {}) {
  std::string s = (t.columns.empty() ? std::string("key") : t.columns[0]) + ",quantity,value\n";
  std::vector<std::size_t> cols;
  for (std::size_t c = 1; c < t.columns.size(); ++c)
    if (quantities.empty() || std::find(quantities.begin(), quantities.end(), t.columns[c]) != quantities.end())
      cols.push_back(c);
  auto rows = t.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a[0] < b[0]; });
  for (const auto& r : rows)
    for (auto c : cols) s += format_double(r[0]) + "," + t.columns[c] + "," + format_double(r[c]) + "\n";
  return s;
}

inline Table energy_table(const EnergyReport& rep) {
  Table t;
  t.columns = {"level", "raw_E", "weighted_a"};
  for (double b : rep.betas) t.columns.push_back("besov_beta_" + format_double(b));
  for (std::size_t i = 0; i < rep.levels.size(); ++i) {
    std::vector<double> row{static_cast<double>(rep.levels[i]), rep.raw[i], rep.weighted[i]};
    for (std::size_t b = 0; b < rep.betas.size(); ++b) row.push_back(rep.partial[b][i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Graphs

inline Json graph_to_json(const PrefractalGraph& g) {
  Json j;
  j["kind"] = to_string(g.kind);
  j["level"] = g.level;
  Json verts = Json::array();
  for (std::size_t i = 0; i < g.vertex_count(); ++i) {
    const auto p = g.vertex(i).reduced();
    verts.push_back({p.x, p.y, p.den});
  }
  j["vertices"] = std::move(verts);
  std::vector<std::pair<const std::string, Json>> cells;
  cells.reserve(g.cell_count());
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    Json ids = Json::array();
    for (auto v : g.cell(c)) ids.push_back(v);
    cells.emplace_back(g.cell_word(c).to_string(), std::move(ids));
  }
  // Cell words are distinct, so the object is built without key lookups.
  j["cells"] = Json::object_t(cells.begin(), cells.end());
  Json edges = Json::array();
  for (const auto& e : g.edges) edges.push_back({e.a, e.b, g.cell_word(e.cell).to_string()});
  j["edges"] = std::move(edges);
  return j;
}

/// Rebuilds the graph named by a graph file and checks it against the file.
inline PrefractalGraph graph_from_json(const Json& j) {
  try {
    const Kind kind = parse_kind(j.at("kind").get<std::string>());
    const int level = j.at("level").get<int>();
    auto g = build_graph(kind, level);
    const auto& verts = j.at("vertices");
    if (verts.size() != g.vertex_count() || j.at("edges").size() != g.edges.size())
      throw IoError("graph file does not match the " + std::string(to_string(kind)) + " level " +
                    std::to_string(level) + " graph");
    for (std::size_t i = 0; i < g.vertex_count(); ++i) {
      const LatticePoint p{verts[i][0].get<std::int64_t>(), verts[i][1].get<std::int64_t>(),
                           verts[i][2].get<std::int64_t>()};
      if (!(p == g.vertex(i))) throw IoError("graph file vertex " + std::to_string(i) + " differs from the rebuild");
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed graph file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Vertex functions: {"kind": "sg", "levels": {"1": [...], "2": [...]}}

inline Json function_to_json(Kind kind, const std::map<int, std::vector<double>>& levels) {
  Json j;
  j["kind"] = to_string(kind);
  Json lv = Json::object();
  for (const auto& [n, v] : levels) lv[std::to_string(n)] = v;
  j["levels"] = std::move(lv);
  return j;
}

/// A level is either [v0, v1, ...] or {"index": value, ...} covering 0..n-1.
inline std::vector<double> level_values(const Json& val) {
  if (val.is_array()) return val.get<std::vector<double>>();
  std::vector<double> out(val.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& [key, v] : val.items()) {
    const auto i = static_cast<std::size_t>(std::stoul(key));
    if (i >= out.size()) throw IoError("vertex index " + key + " out of range in function file");
    out[i] = v.get<double>();
  }
  for (double v : out)
    if (std::isnan(v)) throw IoError("function file level has missing vertex indices");
  return out;
}

struct FunctionFile {
  std::optional<Kind> kind;
  std::map<int, std::vector<double>> levels;
};

/// Accepts the levels form above or a bare array (one level, given by context).
inline FunctionFile function_from_json(const Json& j, int bare_level) {
  FunctionFile f;
  try {
    if (j.is_array()) {
      f.levels[bare_level] = j.get<std::vector<double>>();
      return f;
    }
    if (j.contains("kind")) f.kind = parse_kind(j.at("kind").get<std::string>());
    for (const auto& [key, val] : j.at("levels").items()) f.levels[std::stoi(key)] = level_values(val);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed function file: ") + e.what());
  } catch (const std::logic_error&) {
    throw IoError("function file keys must be integers");
  }
  return f;
}

}  // namespace fraclab::io
