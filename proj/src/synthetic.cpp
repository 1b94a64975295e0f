#include "dslad/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace dslad {

AttributedGraph gen_synthetic(std::int64_t n_nodes, int n_features, int communities,
                              std::uint64_t seed) {
  if (n_nodes < 20) throw ConfigError("gen_synthetic: need at least 20 nodes");
  if (n_features < 1) throw ConfigError("gen_synthetic: need at least 1 feature");
  if (communities < 1 || std::int64_t(communities) > n_nodes)
    throw ConfigError("gen_synthetic: invalid community count");

  rng::Engine eng = rng::stream(seed, rng::tag::synthetic);
  rng::Normal gauss;

  // Contiguous community blocks; expected intra/inter degrees stay fixed
  // as the graph grows.
  auto community_of = [&](std::int64_t v) {
    return int(v * communities / n_nodes);
  };
  std::vector<std::int64_t> comm_size(std::size_t(communities), 0);
  for (std::int64_t v = 0; v < n_nodes; ++v) comm_size[std::size_t(community_of(v))] += 1;

  constexpr double kIntraDegree = 8.0;
  constexpr double kInterDegree = 1.0;
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::int64_t u = 0; u < n_nodes; ++u) {
    const int cu = community_of(u);
    for (std::int64_t v = u + 1; v < n_nodes; ++v) {
      const bool same = community_of(v) == cu;
      const double denom = same ? std::max<double>(1.0, double(comm_size[std::size_t(cu)] - 1))
                                : double(n_nodes - comm_size[std::size_t(cu)]);
      const double p = std::min(1.0, (same ? kIntraDegree : kInterDegree) / denom);
      if (rng::uniform_real(eng) < p) edges.emplace_back(u, v);
    }
  }

  // Sparse nonnegative community centroids, all scaled to the same L2
  // radius so no community is distinguishable by feature norm alone;
  // node features = centroid + N(0, 0.2^2).
  constexpr double kRadius = 3.0;
  constexpr double kActiveProb = 0.3;
  constexpr double kNoise = 0.2;
  Matrix centroids(communities, n_features);
  for (int c = 0; c < communities; ++c) {
    double norm_sq = 0.0;
    while (norm_sq == 0.0) {
      for (int f = 0; f < n_features; ++f) {
        const double v = rng::uniform_real(eng) < kActiveProb
                             ? rng::uniform_real(eng, 0.5, 1.5)
                             : 0.0;
        centroids.at(c, f) = v;
        norm_sq += v * v;
      }
    }
    const double scale = kRadius / std::sqrt(norm_sq);
    for (int f = 0; f < n_features; ++f) centroids.at(c, f) *= scale;
  }
  Matrix attrs(int(n_nodes), n_features);
  for (std::int64_t v = 0; v < n_nodes; ++v) {
    const int c = community_of(v);
    for (int f = 0; f < n_features; ++f)
      attrs.at(int(v), f) = centroids.at(c, f) + kNoise * gauss(eng);
  }

  return build_graph(n_nodes, edges, std::move(attrs));
}

}  // namespace dslad
