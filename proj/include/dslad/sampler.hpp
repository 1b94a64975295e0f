#pragma once

#include "dslad/graph.hpp"

namespace dslad {

// Random-walk-with-restart subgraph sampling settings.
struct RwrConfig {
  std::int64_t subgraph_size = 4;  // K
  double restart_prob = 0.1;
  std::int64_t max_steps = 0;  // 0 = 50 * K

  std::int64_t effective_max_steps() const {
    return max_steps > 0 ? max_steps : 50 * subgraph_size;
  }
  void validate() const;
};

enum class Polarity { positive, negative };

// A target node paired with a fixed-size masked subgraph. Positive pairs
// are rooted at the target; negative pairs reuse another target's
// subgraph. Row 0 of the attributes is always the zero vector.
struct DiscriminationPair {
  NodeId target = 0;
  SubgraphView subgraph;
  Polarity polarity = Polarity::positive;
};

// Shuffled partition of all nodes into batches of at most batch_size.
struct EpochPlan {
  std::vector<std::vector<NodeId>> batches;
};

// Walk from start, restarting with restart_prob each step; newly visited
// distinct nodes are appended until K are collected or max_steps elapse,
// then the list is padded with the start node.
std::vector<NodeId> rwr_sample(const AttributedGraph& g, NodeId start, const RwrConfig& cfg,
                               rng::Engine& eng);

// Zeroes the target's attribute row (local index 0); other rows untouched.
SubgraphView mask_target(SubgraphView sub);

// rwr_sample + induced_subgraph + masking; padding copies of the target
// are zeroed as well so duplicated rows leak no target information.
SubgraphView sample_masked_subgraph(const AttributedGraph& g, NodeId root,
                                    const RwrConfig& cfg, rng::Engine& eng);

// One positive and one negative pair per batch target, interleaved
// [pos_0, neg_0, pos_1, neg_1, ...]. Negatives reuse the positive subgraph
// of the cyclically next target, or are freshly sampled when
// fresh_negatives is set.
std::vector<DiscriminationPair> build_pairs(const AttributedGraph& g,
                                            std::span<const NodeId> batch,
                                            const RwrConfig& cfg, rng::Engine& eng,
                                            bool fresh_negatives = false);

EpochPlan make_epoch_plan(std::int64_t num_nodes, std::int64_t batch_size, rng::Engine& eng);

}  // namespace dslad
