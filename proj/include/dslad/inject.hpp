#pragma once

#include <unordered_set>

#include "dslad/graph.hpp"

namespace dslad {

// Anomaly contamination settings. Structural anomalies are clique_count
// cliques of clique_size nodes each; attribute anomalies overwrite a
// node's features with the most distant row among candidate_pool
// uniformly sampled donors.
struct InjectionConfig {
  std::int64_t clique_count = 0;
  std::int64_t clique_size = 15;
  std::int64_t attr_anomaly_count = 0;
  std::int64_t candidate_pool = 50;
  std::uint64_t seed = 0;

  std::int64_t total_anomalies() const {
    return clique_count * clique_size + attr_anomaly_count;
  }
  void validate(std::int64_t num_nodes) const;
};

struct InjectionReport {
  std::vector<NodeId> structural_nodes;
  std::vector<NodeId> attribute_nodes;
  std::int64_t edges_added = 0;
  std::int64_t edges_before = 0;
  std::int64_t edges_after = 0;
  std::uint64_t seed = 0;
};

struct StructuralInjection {
  AttributedGraph graph;
  std::vector<NodeId> nodes;
  std::int64_t edges_added = 0;
};

struct AttributeInjection {
  AttributedGraph graph;
  std::vector<NodeId> nodes;
};

struct InjectionResult {
  AttributedGraph graph;  // labels filled in
  std::vector<std::uint8_t> labels;
  InjectionReport report;
};

StructuralInjection inject_structural(const AttributedGraph& g, const InjectionConfig& cfg,
                                      rng::Engine& eng);

AttributeInjection inject_attribute(const AttributedGraph& g, const InjectionConfig& cfg,
                                    const std::unordered_set<NodeId>& exclude,
                                    rng::Engine& eng);

// Structural then attribute injection on disjoint node sets; labels are 1
// exactly on the union.
InjectionResult inject(const AttributedGraph& g, const InjectionConfig& cfg);

}  // namespace dslad
