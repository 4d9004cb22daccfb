#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "nst/coupling.hpp"
#include "nst/tree.hpp"

namespace nst {

namespace detail {

// Shortest decimal string that parses back to exactly the same double.
inline std::string shortest_decimal(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw std::logic_error("double formatting failed");
  return std::string(buf, res.ptr);
}

inline double parse_decimal(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad decimal string: " + s);
  return v;
}

inline nlohmann::json tree_fields(const GrowthTree& t) {
  nlohmann::json doc;
  doc["alpha"] = shortest_decimal(t.alpha());
  doc["n"] = t.step();
  auto& edges = doc["edges"] = nlohmann::json::array();
  for (const Edge& e : t.edges()) edges.push_back({e.a, e.b});
  doc["leaf_order"] = t.leaf_order();
  return doc;
}

inline nlohmann::json color_map(const std::vector<std::uint8_t>& blue) {
  nlohmann::json m = nlohmann::json::object();
  for (std::size_t i = 0; i < blue.size(); ++i)
    m[std::to_string(i)] = blue[i] ? "blue" : "red";
  return m;
}

}  // namespace detail

// One JSON object per document, keys sorted, single trailing newline. Bytes
// are a pure function of the tree, so digests of equal trees match.
inline std::string serialize(const GrowthTree& t) {
  return detail::tree_fields(t).dump() + "\n";
}

inline std::string serialize(const ColoredTree& t) {
  nlohmann::json doc = detail::tree_fields(t.tree());
  doc["edge_colors"] = detail::color_map(t.edge_colors());
  doc["vertex_colors"] = detail::color_map(t.vertex_colors());
  return doc.dump() + "\n";
}

struct TreeDocument {
  GrowthTree tree;
  bool has_colors = false;
  std::vector<std::uint8_t> edge_blue;    // empty unless has_colors
  std::vector<std::uint8_t> vertex_blue;
};

namespace detail {

inline std::vector<std::uint8_t> parse_color_map(const nlohmann::json& m, std::size_t size,
                                                 const char* what) {
  if (!m.is_object()) throw std::invalid_argument(std::string(what) + " must be an object");
  std::vector<std::uint8_t> blue(size, 0);
  std::vector<std::uint8_t> seen(size, 0);
  for (const auto& [key, val] : m.items()) {
    std::size_t id = 0;
    const auto res = std::from_chars(key.data(), key.data() + key.size(), id);
    if (res.ec != std::errc{} || res.ptr != key.data() + key.size() || id >= size)
      throw std::invalid_argument(std::string(what) + ": bad id '" + key + "'");
    if (seen[id]) throw std::invalid_argument(std::string(what) + ": duplicate id " + key);
    seen[id] = 1;
    const std::string c = val.get<std::string>();
    if (c == "blue")
      blue[id] = 1;
    else if (c != "red")
      throw std::invalid_argument(std::string(what) + ": bad color '" + c + "'");
  }
  for (std::size_t i = 0; i < size; ++i)
    if (!seen[i])
      throw std::invalid_argument(std::string(what) + ": missing id " + std::to_string(i));
  return blue;
}

}  // namespace detail

// Parse failures carry the byte offset; semantic violations throw
// invalid_argument from the tree validator.
inline TreeDocument deserialize(const std::string& text) {
  const nlohmann::json doc = nlohmann::json::parse(text);  // throws with location on bad input
  if (!doc.is_object()) throw std::invalid_argument("document must be a JSON object");
  for (const char* field : {"alpha", "n", "edges", "leaf_order"})
    if (!doc.contains(field))
      throw std::invalid_argument(std::string("missing field '") + field + "'");
  const double alpha = detail::parse_decimal(doc["alpha"].get<std::string>());
  const auto n = doc["n"].get<std::uint32_t>();
  std::vector<Edge> edges;
  for (const auto& pair : doc["edges"]) {
    if (!pair.is_array() || pair.size() != 2)
      throw std::invalid_argument("edges entries must be [u,v] pairs");
    edges.push_back({pair[0].get<VertexId>(), pair[1].get<VertexId>()});
  }
  auto leaf_order = doc["leaf_order"].get<std::vector<VertexId>>();
  TreeDocument out{GrowthTree(alpha, n, std::move(edges), std::move(leaf_order))};
  const bool has_edge_colors = doc.contains("edge_colors");
  const bool has_vertex_colors = doc.contains("vertex_colors");
  if (has_edge_colors != has_vertex_colors)
    throw std::invalid_argument("edge_colors and vertex_colors must come together");
  if (has_edge_colors) {
    out.has_colors = true;
    out.edge_blue =
        detail::parse_color_map(doc["edge_colors"], out.tree.edge_count(), "edge_colors");
    out.vertex_blue =
        detail::parse_color_map(doc["vertex_colors"], out.tree.vertex_count(), "vertex_colors");
  }
  return out;
}

// The document format carries no alpha_prime; the caller supplies it and the
// colored invariants are validated on construction.
inline ColoredTree to_colored(TreeDocument doc, double alpha_prime) {
  if (!doc.has_colors) throw std::invalid_argument("document has no color maps");
  return ColoredTree(std::move(doc.tree), alpha_prime, std::move(doc.edge_blue),
                     std::move(doc.vertex_blue));
}

}  // namespace nst
