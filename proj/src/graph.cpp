#include "dslad/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace dslad {

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::int64_t line_no,
                             const std::string& what) {
  throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

bool blank_or_comment(const std::string& line) {
  for (char ch : line) {
    if (ch == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

}  // namespace

std::span<const NodeId> AttributedGraph::neighbors(NodeId v) const {
  if (v < 0 || v >= num_nodes) throw BoundsError("node id out of range: " + std::to_string(v));
  const auto begin = std::size_t(row_offsets[std::size_t(v)]);
  const auto end = std::size_t(row_offsets[std::size_t(v) + 1]);
  return {col_indices.data() + begin, end - begin};
}

std::int64_t AttributedGraph::degree(NodeId v) const {
  if (v < 0 || v >= num_nodes) throw BoundsError("node id out of range: " + std::to_string(v));
  return row_offsets[std::size_t(v) + 1] - row_offsets[std::size_t(v)];
}

bool AttributedGraph::has_edge(NodeId u, NodeId v) const {
  const auto ns = neighbors(u);
  if (v < 0 || v >= num_nodes) throw BoundsError("node id out of range: " + std::to_string(v));
  return std::binary_search(ns.begin(), ns.end(), v);
}

void AttributedGraph::validate() const {
  if (std::int64_t(row_offsets.size()) != num_nodes + 1)
    throw ValidationError("row_offsets length must be num_nodes + 1");
  if (row_offsets.front() != 0) throw ValidationError("row_offsets must start at 0");
  for (std::size_t i = 0; i + 1 < row_offsets.size(); ++i)
    if (row_offsets[i] > row_offsets[i + 1])
      throw ValidationError("row_offsets must be nondecreasing");
  if (row_offsets.back() != std::int64_t(col_indices.size()))
    throw ValidationError("row_offsets end must equal directed edge count");
  if (std::int64_t(attributes.rows) != num_nodes)
    throw ValidationError("attribute row count must equal num_nodes");
  if (!attributes.all_finite()) throw ValidationError("attributes contain non-finite values");
  if (!labels.empty() && std::int64_t(labels.size()) != num_nodes)
    throw ValidationError("labels length must equal num_nodes");
  for (std::uint8_t l : labels)
    if (l > 1) throw ValidationError("labels must be 0 or 1");
  for (NodeId v = 0; v < num_nodes; ++v) {
    const auto ns = neighbors(v);
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const NodeId u = ns[i];
      if (u < 0 || u >= num_nodes) throw ValidationError("column index out of range");
      if (u == v) throw ValidationError("self-loop stored at node " + std::to_string(v));
      if (i > 0 && ns[i - 1] >= u)
        throw ValidationError("column indices must be strictly increasing per row");
      if (!has_edge(u, v))
        throw ValidationError("adjacency not symmetric at (" + std::to_string(v) + "," +
                              std::to_string(u) + ")");
    }
  }
}

AttributedGraph build_graph(std::int64_t num_nodes,
                            std::span<const std::pair<NodeId, NodeId>> edges,
                            Matrix attributes, std::vector<std::uint8_t> labels) {
  if (attributes.rows != num_nodes)
    throw ValidationError("attribute row count must equal num_nodes");
  std::vector<std::pair<NodeId, NodeId>> directed;
  directed.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes)
      throw BoundsError("edge endpoint out of range: (" + std::to_string(u) + "," +
                        std::to_string(v) + ")");
    if (u == v) continue;
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  AttributedGraph g;
  g.num_nodes = num_nodes;
  g.row_offsets.assign(std::size_t(num_nodes) + 1, 0);
  g.col_indices.reserve(directed.size());
  for (auto [u, v] : directed) {
    g.row_offsets[std::size_t(u) + 1] += 1;
    g.col_indices.push_back(v);
  }
  for (std::size_t i = 1; i < g.row_offsets.size(); ++i)
    g.row_offsets[i] += g.row_offsets[i - 1];
  g.attributes = std::move(attributes);
  g.labels = std::move(labels);
  g.validate();
  return g;
}

AttributedGraph load_graph(const std::filesystem::path& edges_path,
                           const std::filesystem::path& features_path,
                           const std::optional<std::filesystem::path>& labels_path) {
  // Features first: their row count defines N.
  std::ifstream ff(features_path);
  if (!ff) throw IoError("cannot open features file: " + features_path.string());
  Matrix attrs;
  std::vector<double> values;
  std::string line;
  std::int64_t line_no = 0;
  int width = -1;
  std::int64_t n_rows = 0;
  while (std::getline(ff, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    int count = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      const char* tok_end = std::find(p, end, ',');
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, tok_end, v);
      if (ec != std::errc() || ptr != tok_end)
        parse_fail(features_path, line_no, "malformed feature value");
      if (!std::isfinite(v))
        throw ValidationError(features_path.string() + ":" + std::to_string(line_no) +
                              ": non-finite feature value");
      values.push_back(v);
      ++count;
      p = tok_end < end ? tok_end + 1 : end;
    }
    if (width < 0)
      width = count;
    else if (count != width)
      parse_fail(features_path, line_no, "inconsistent feature row width");
    ++n_rows;
  }
  if (n_rows == 0) throw ParseError(features_path.string() + ": empty features file");
  attrs.rows = int(n_rows);
  attrs.cols = width;
  attrs.data = std::move(values);

  // Edge list: "u<TAB>v" per line, '#' comments ignored.
  std::ifstream ef(edges_path);
  if (!ef) throw IoError("cannot open edges file: " + edges_path.string());
  std::vector<std::pair<NodeId, NodeId>> edges;
  line_no = 0;
  while (std::getline(ef, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank_or_comment(line)) continue;
    std::istringstream ls(line);
    NodeId u, v;
    if (!(ls >> u >> v)) parse_fail(edges_path, line_no, "expected two integer node ids");
    std::string extra;
    if (ls >> extra) parse_fail(edges_path, line_no, "trailing tokens after edge");
    if (u < 0 || v < 0 || u >= n_rows || v >= n_rows)
      throw BoundsError(edges_path.string() + ":" + std::to_string(line_no) +
                        ": node id outside [0," + std::to_string(n_rows) + ")");
    edges.emplace_back(u, v);
  }

  std::vector<std::uint8_t> labels;
  if (labels_path) {
    std::ifstream lf(*labels_path);
    if (!lf) throw IoError("cannot open labels file: " + labels_path->string());
    line_no = 0;
    while (std::getline(lf, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line != "0" && line != "1") parse_fail(*labels_path, line_no, "label must be 0 or 1");
      labels.push_back(line == "1" ? 1 : 0);
    }
    if (std::int64_t(labels.size()) != n_rows)
      throw ValidationError(labels_path->string() + ": expected " + std::to_string(n_rows) +
                            " labels, got " + std::to_string(labels.size()));
  }

  return build_graph(n_rows, edges, std::move(attrs), std::move(labels));
}

void save_graph(const AttributedGraph& g, const std::filesystem::path& edges_path,
                const std::filesystem::path& features_path,
                const std::optional<std::filesystem::path>& labels_path) {
  std::ofstream ef(edges_path);
  if (!ef) throw IoError("cannot write edges file: " + edges_path.string());
  for (NodeId u = 0; u < g.num_nodes; ++u)
    for (NodeId v : g.neighbors(u))
      if (u < v) ef << u << '\t' << v << '\n';

  std::ofstream ff(features_path);
  if (!ff) throw IoError("cannot write features file: " + features_path.string());
  char buf[64];
  for (int r = 0; r < g.attributes.rows; ++r) {
    for (int c = 0; c < g.attributes.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", g.attributes.at(r, c));
      if (c) ff << ',';
      ff << buf;
    }
    ff << '\n';
  }

  if (labels_path) {
    if (!g.has_labels()) throw StateError("graph has no labels to save");
    std::ofstream lf(*labels_path);
    if (!lf) throw IoError("cannot write labels file: " + labels_path->string());
    for (std::uint8_t l : g.labels) lf << int(l) << '\n';
  }
}

SubgraphView induced_subgraph(const AttributedGraph& g, std::span<const NodeId> node_ids) {
  if (node_ids.empty()) throw BoundsError("induced_subgraph: empty node list");
  const int k = int(node_ids.size());
  SubgraphView sub;
  sub.node_ids.assign(node_ids.begin(), node_ids.end());
  sub.local_adjacency = Matrix(k, k);
  sub.local_attributes = Matrix(k, g.feature_dim());
  for (int p = 0; p < k; ++p) {
    const NodeId gp = node_ids[std::size_t(p)];
    if (gp < 0 || gp >= g.num_nodes)
      throw BoundsError("induced_subgraph: node id out of range: " + std::to_string(gp));
    for (int c = 0; c < g.feature_dim(); ++c)
      sub.local_attributes.at(p, c) = g.attributes.at(int(gp), c);
  }
  for (int p = 0; p < k; ++p) {
    for (int q = p + 1; q < k; ++q) {
      const NodeId gp = node_ids[std::size_t(p)];
      const NodeId gq = node_ids[std::size_t(q)];
      // Padding copies of the same global node stay disconnected.
      if (gp != gq && g.has_edge(gp, gq)) {
        sub.local_adjacency.at(p, q) = 1.0;
        sub.local_adjacency.at(q, p) = 1.0;
      }
    }
  }
  return sub;
}

std::int64_t degree(const AttributedGraph& g, NodeId v) { return g.degree(v); }

}  // namespace dslad
