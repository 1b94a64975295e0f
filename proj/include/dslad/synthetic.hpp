#pragma once

#include "dslad/graph.hpp"

namespace dslad {

// Desk-scale community-structured random graph with Gaussian
// community-specific features; a stand-in dataset generator for
// experiments that would otherwise need external downloads.
AttributedGraph gen_synthetic(std::int64_t n_nodes, int n_features, int communities,
                              std::uint64_t seed);

}  // namespace dslad
