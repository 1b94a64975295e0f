#include "dslad/sampler.hpp"

#include <algorithm>
#include <unordered_set>

namespace dslad {

void RwrConfig::validate() const {
  if (subgraph_size < 2) throw ConfigError("subgraph size must be at least 2");
  if (!(restart_prob > 0.0 && restart_prob < 1.0))
    throw ConfigError("restart probability must lie in (0,1)");
  if (effective_max_steps() < subgraph_size)
    throw ConfigError("max steps must be at least the subgraph size");
}

std::vector<NodeId> rwr_sample(const AttributedGraph& g, NodeId start, const RwrConfig& cfg,
                               rng::Engine& eng) {
  if (start < 0 || start >= g.num_nodes)
    throw BoundsError("rwr_sample: start node out of range");
  const std::int64_t k = cfg.subgraph_size;
  const std::int64_t max_steps = cfg.effective_max_steps();

  std::vector<NodeId> out;
  out.reserve(std::size_t(k));
  out.push_back(start);
  std::unordered_set<NodeId> visited{start};

  NodeId cur = start;
  for (std::int64_t step = 0; step < max_steps && std::int64_t(out.size()) < k; ++step) {
    if (rng::uniform_real(eng) < cfg.restart_prob) {
      cur = start;
    } else {
      const auto ns = g.neighbors(cur);
      if (ns.empty())
        cur = start;
      else
        cur = ns[std::size_t(rng::uniform_index(eng, ns.size()))];
    }
    if (visited.insert(cur).second) out.push_back(cur);
  }
  while (std::int64_t(out.size()) < k) out.push_back(start);
  return out;
}

SubgraphView mask_target(SubgraphView sub) {
  for (int c = 0; c < sub.local_attributes.cols; ++c) sub.local_attributes.at(0, c) = 0.0;
  return sub;
}

SubgraphView sample_masked_subgraph(const AttributedGraph& g, NodeId root,
                                    const RwrConfig& cfg, rng::Engine& eng) {
  const std::vector<NodeId> ids = rwr_sample(g, root, cfg, eng);
  SubgraphView sub = induced_subgraph(g, ids);
  for (int p = 1; p < int(ids.size()); ++p) {
    if (ids[std::size_t(p)] != root) continue;
    for (int c = 0; c < sub.local_attributes.cols; ++c) sub.local_attributes.at(p, c) = 0.0;
  }
  return mask_target(std::move(sub));
}

std::vector<DiscriminationPair> build_pairs(const AttributedGraph& g,
                                            std::span<const NodeId> batch,
                                            const RwrConfig& cfg, rng::Engine& eng,
                                            bool fresh_negatives) {
  cfg.validate();
  if (batch.size() < 2)
    throw ConfigError("batch must contain at least 2 targets to form negatives");
  const std::size_t n = batch.size();

  std::vector<SubgraphView> positives;
  positives.reserve(n);
  for (NodeId target : batch)
    positives.push_back(sample_masked_subgraph(g, target, cfg, eng));

  std::vector<DiscriminationPair> pairs;
  pairs.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    pairs.push_back({batch[i], positives[i], Polarity::positive});
    const std::size_t j = (i + 1) % n;
    SubgraphView neg = fresh_negatives
                           ? sample_masked_subgraph(g, batch[j], cfg, eng)
                           : positives[j];
    pairs.push_back({batch[i], std::move(neg), Polarity::negative});
  }
  return pairs;
}

EpochPlan make_epoch_plan(std::int64_t num_nodes, std::int64_t batch_size, rng::Engine& eng) {
  if (num_nodes < 1) throw ConfigError("epoch plan needs at least one node");
  if (batch_size < 2) throw ConfigError("batch size must be at least 2");
  std::vector<NodeId> order(static_cast<std::size_t>(num_nodes));
  for (std::int64_t i = 0; i < num_nodes; ++i) order[std::size_t(i)] = i;
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[std::size_t(rng::uniform_index(eng, i))]);

  EpochPlan plan;
  for (std::size_t pos = 0; pos < order.size(); pos += std::size_t(batch_size)) {
    const std::size_t end = std::min(order.size(), pos + std::size_t(batch_size));
    plan.batches.emplace_back(order.begin() + std::int64_t(pos), order.begin() + std::int64_t(end));
  }
  // A trailing singleton cannot form a negative pair; rebalance with the
  // previous batch.
  if (plan.batches.size() > 1 && plan.batches.back().size() == 1) {
    auto& prev = plan.batches[plan.batches.size() - 2];
    plan.batches.back().insert(plan.batches.back().begin(), prev.back());
    prev.pop_back();
  }
  return plan;
}

}  // namespace dslad
