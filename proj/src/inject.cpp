#include "dslad/inject.hpp"

#include <algorithm>
#include <cmath>

namespace dslad {

namespace {

// Partial Fisher-Yates: k distinct draws from pool, consuming one engine
// call per draw so tests can replay the stream.
std::vector<NodeId> sample_distinct(std::vector<NodeId> pool, std::int64_t k,
                                    rng::Engine& eng) {
  std::vector<NodeId> out;
  out.reserve(std::size_t(k));
  for (std::int64_t i = 0; i < k; ++i) {
    const std::size_t j = std::size_t(rng::uniform_index(eng, pool.size() - std::size_t(i)));
    std::swap(pool[std::size_t(i) + j], pool[std::size_t(i)]);
    out.push_back(pool[std::size_t(i)]);
  }
  return out;
}

std::vector<std::pair<NodeId, NodeId>> edge_list(const AttributedGraph& g) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(std::size_t(g.num_undirected_edges()));
  for (NodeId u = 0; u < g.num_nodes; ++u)
    for (NodeId v : g.neighbors(u))
      if (u < v) edges.emplace_back(u, v);
  return edges;
}

}  // namespace

void InjectionConfig::validate(std::int64_t num_nodes) const {
  if (clique_count < 0 || clique_size < 0 || attr_anomaly_count < 0 || candidate_pool < 0)
    throw ConfigError("injection counts must be nonnegative");
  if (clique_count > 0 && clique_size < 2)
    throw ConfigError("clique size must be at least 2");
  if (total_anomalies() > num_nodes)
    throw ConfigError("requested anomalies exceed node count: " +
                      std::to_string(total_anomalies()) + " > " + std::to_string(num_nodes));
}

StructuralInjection inject_structural(const AttributedGraph& g, const InjectionConfig& cfg,
                                      rng::Engine& eng) {
  const std::int64_t need = cfg.clique_count * cfg.clique_size;
  if (need > g.num_nodes)
    throw ConfigError("not enough nodes for structural injection");
  StructuralInjection out;
  if (need == 0) {
    out.graph = g;
    return out;
  }

  std::vector<NodeId> pool(static_cast<std::size_t>(g.num_nodes));
  for (std::int64_t i = 0; i < g.num_nodes; ++i) pool[std::size_t(i)] = i;
  out.nodes = sample_distinct(std::move(pool), need, eng);

  auto edges = edge_list(g);
  for (std::int64_t c = 0; c < cfg.clique_count; ++c) {
    const std::size_t base = std::size_t(c * cfg.clique_size);
    for (std::int64_t i = 0; i < cfg.clique_size; ++i) {
      for (std::int64_t j = i + 1; j < cfg.clique_size; ++j) {
        const NodeId u = out.nodes[base + std::size_t(i)];
        const NodeId v = out.nodes[base + std::size_t(j)];
        if (!g.has_edge(u, v)) {
          edges.emplace_back(u, v);
          out.edges_added += 1;
        }
      }
    }
  }
  out.graph = build_graph(g.num_nodes, edges, g.attributes, g.labels);
  return out;
}

AttributeInjection inject_attribute(const AttributedGraph& g, const InjectionConfig& cfg,
                                    const std::unordered_set<NodeId>& exclude,
                                    rng::Engine& eng) {
  AttributeInjection out;
  out.graph = g;
  if (cfg.attr_anomaly_count == 0) return out;
  if (cfg.candidate_pool < 1) throw ConfigError("candidate pool must be at least 1");
  if (cfg.candidate_pool > g.num_nodes - 1)
    throw ConfigError("candidate pool exhausted: need " + std::to_string(cfg.candidate_pool) +
                      " donors from " + std::to_string(g.num_nodes - 1) + " nodes");

  std::vector<NodeId> eligible;
  eligible.reserve(std::size_t(g.num_nodes));
  for (NodeId v = 0; v < g.num_nodes; ++v)
    if (!exclude.contains(v)) eligible.push_back(v);
  if (std::int64_t(eligible.size()) < cfg.attr_anomaly_count)
    throw ConfigError("not enough nodes available for attribute injection");

  out.nodes = sample_distinct(std::move(eligible), cfg.attr_anomaly_count, eng);

  // Donor rows come from a snapshot of the pre-injection attributes so the
  // outcome does not depend on victim processing order.
  const Matrix original = g.attributes;
  const int d = g.feature_dim();
  std::vector<NodeId> pool(std::size_t(g.num_nodes) - 1);
  for (NodeId victim : out.nodes) {
    std::size_t w = 0;
    for (NodeId v = 0; v < g.num_nodes; ++v)
      if (v != victim) pool[w++] = v;
    const std::vector<NodeId> candidates =
        sample_distinct(pool, cfg.candidate_pool, eng);
    NodeId best = candidates.front();
    double best_dist = -1.0;
    for (NodeId cand : candidates) {
      double dist = 0.0;
      for (int c = 0; c < d; ++c) {
        const double diff = original.at(int(victim), c) - original.at(int(cand), c);
        dist += diff * diff;
      }
      if (dist > best_dist) {
        best_dist = dist;
        best = cand;
      }
    }
    for (int c = 0; c < d; ++c)
      out.graph.attributes.at(int(victim), c) = original.at(int(best), c);
  }
  return out;
}

InjectionResult inject(const AttributedGraph& g, const InjectionConfig& cfg) {
  cfg.validate(g.num_nodes);
  rng::Engine eng = rng::stream(cfg.seed, rng::tag::inject);

  InjectionResult res;
  res.report.seed = cfg.seed;
  res.report.edges_before = g.num_undirected_edges();

  StructuralInjection st = inject_structural(g, cfg, eng);
  std::unordered_set<NodeId> exclude(st.nodes.begin(), st.nodes.end());
  AttributeInjection at = inject_attribute(st.graph, cfg, exclude, eng);

  res.labels.assign(std::size_t(g.num_nodes), 0);
  for (NodeId v : st.nodes) res.labels[std::size_t(v)] = 1;
  for (NodeId v : at.nodes) res.labels[std::size_t(v)] = 1;

  res.graph = std::move(at.graph);
  res.graph.labels = res.labels;
  res.report.structural_nodes = std::move(st.nodes);
  res.report.attribute_nodes = std::move(at.nodes);
  res.report.edges_added = st.edges_added;
  res.report.edges_after = res.graph.num_undirected_edges();
  return res;
}

}  // namespace dslad
