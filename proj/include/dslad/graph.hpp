#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dslad/tensor.hpp"

namespace dslad {

using NodeId = std::int64_t;

// Undirected attributed graph: CSR adjacency (symmetric, self-loop free,
// sorted column indices) plus a dense feature matrix and optional binary
// anomaly labels. Immutable after construction; safe for concurrent reads.
struct AttributedGraph {
  std::int64_t num_nodes = 0;
  std::vector<std::int64_t> row_offsets;  // length num_nodes + 1
  std::vector<NodeId> col_indices;        // sorted within each row
  Matrix attributes;                      // num_nodes x feature_dim
  std::vector<std::uint8_t> labels;       // empty, or one 0/1 per node

  int feature_dim() const { return attributes.cols; }
  std::int64_t num_undirected_edges() const { return std::int64_t(col_indices.size()) / 2; }

  std::span<const NodeId> neighbors(NodeId v) const;
  std::int64_t degree(NodeId v) const;
  bool has_edge(NodeId u, NodeId v) const;
  bool has_labels() const { return !labels.empty(); }

  // Checks every structural invariant; throws ValidationError.
  void validate() const;
};

// Node-induced subgraph in local index space. node_ids[0] is always the
// target; repeated ids are padding copies and carry no edges between them.
struct SubgraphView {
  std::vector<NodeId> node_ids;
  Matrix local_adjacency;  // KxK 0/1, symmetric, zero diagonal
  Matrix local_attributes;

  std::int64_t size() const { return std::int64_t(node_ids.size()); }
};

// Builds a graph from an arbitrary edge list; duplicates, reversed copies
// and self-loops are dropped, then both directions are stored.
AttributedGraph build_graph(std::int64_t num_nodes,
                            std::span<const std::pair<NodeId, NodeId>> edges,
                            Matrix attributes,
                            std::vector<std::uint8_t> labels = {});

AttributedGraph load_graph(const std::filesystem::path& edges_path,
                           const std::filesystem::path& features_path,
                           const std::optional<std::filesystem::path>& labels_path = {});

void save_graph(const AttributedGraph& g, const std::filesystem::path& edges_path,
                const std::filesystem::path& features_path,
                const std::optional<std::filesystem::path>& labels_path = {});

SubgraphView induced_subgraph(const AttributedGraph& g, std::span<const NodeId> node_ids);

std::int64_t degree(const AttributedGraph& g, NodeId v);

}  // namespace dslad
