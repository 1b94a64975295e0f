#pragma once

#include <filesystem>
#include <optional>

#include "dslad/graph.hpp"
#include "dslad/sampler.hpp"
#include "dslad/tensor.hpp"

namespace dslad {

// Positive-sample strategy for representation learning: masked-subgraph
// readout (local) or the node's row of an unmasked whole-graph encoding
// (global).
enum class Aug { local, global };

// Shape of the weight pi(beta) that shifts training from representation
// learning toward anomaly discrimination.
enum class PiKind { constant, linear, one_minus_exp, sigmoid, tanh };

// Ablation switches: no_cl trains with pi == 1 and no contrastive term;
// no_con / no_rec drop one score family from both the loss and the fusion.
enum class Variant { full, no_cl, no_con, no_rec };

struct ModelConfig {
  int hidden_dim = 64;
  int encoder_layers = 1;
  double alpha = 0.6;
  double lambda_cl = 1.0;
  double tau = 0.5;
  Aug aug = Aug::local;
  PiKind pi_kind = PiKind::linear;
  std::int64_t epochs = 100;
  std::int64_t batch_size = 300;
  bool normalize_embeddings = false;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

const char* to_string(Aug a);
const char* to_string(PiKind k);
const char* to_string(Variant v);
Aug aug_from_string(const std::string& s);
PiKind pi_kind_from_string(const std::string& s);
Variant variant_from_string(const std::string& s);

// All trainable state: encoder stack, autoencoder stacks, and the
// bilinear discriminator weight. Encoder and autoencoder weights are
// disjoint parameter sets.
struct ModelParams {
  std::vector<Parameter> encoder;     // input_dim -> d -> ... -> d
  std::vector<Parameter> ae_encoder;  // input_dim -> d -> ... -> d
  std::vector<Parameter> ae_decoder;  // d -> ... -> d -> input_dim
  Parameter disc_weight;              // d x d
  int input_dim = 0;

  static ModelParams init(int input_dim, const ModelConfig& cfg, std::uint64_t seed);

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
};

void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::filesystem::path& path);
// Refuses to load when the stored config or input dimension disagrees
// with what the caller expects.
ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);
std::pair<ModelParams, ModelConfig> load_checkpoint(const std::filesystem::path& path);

// Parameter leaves bound to one tape for a forward/backward pass.
struct BoundParams {
  std::vector<Tensor> encoder;
  std::vector<Tensor> ae_encoder;
  std::vector<Tensor> ae_decoder;
  Tensor disc_weight;
};

BoundParams bind_params(Tape& tape, ModelParams& params);

// Symmetrically normalized adjacency with self-loops, dense (subgraph)
// and CSR (whole graph) forms. Constants: no gradient flows through them.
Matrix norm_adjacency_dense(const SubgraphView& sub);
CsrMatrix norm_adjacency_csr(const AttributedGraph& g);

// Single-node encoding: the propagation rule collapses to an MLP.
Tensor embed_node(Tape& tape, const BoundParams& bp, const Matrix& x);
// K applications of relu(S H W) over the subgraph with the encoder stack.
Tensor embed_subgraph(Tape& tape, const BoundParams& bp, const SubgraphView& sub);
// Mean of all rows except the target row (local index 0).
Tensor readout(Tape& tape, Tensor z);
// sigmoid(g W_d e^T), strictly inside (0,1).
Tensor disc(Tape& tape, Tensor g, Tensor e, Tensor wd);
std::pair<Tensor, Tensor> context_scores(Tape& tape, const BoundParams& bp, Tensor e,
                                         Tensor g_pos, Tensor g_neg);
// -(1/2n) sum [log s_pos + log(1 - s_neg)], scores clamped away from {0,1}.
Tensor loss_con(Tape& tape, Tensor s_pos, Tensor s_neg);
// Autoencoder reconstruction of the masked subgraph, K x input_dim.
Tensor reconstruct(Tape& tape, const BoundParams& bp, const SubgraphView& sub);
// Mean squared reconstruction error of the target rows.
Tensor loss_rec(Tape& tape, Tensor u_rows, Tensor x_rows);
// Whole-graph encoder pass (no masking), N x d.
Tensor global_embeddings(Tape& tape, const BoundParams& bp, const AttributedGraph& g);
Tensor positive_embedding(Tape& tape, const BoundParams& bp, NodeId target,
                          const SubgraphView& sub, const AttributedGraph& g, Aug aug);
// InfoNCE over one positive and one negative per row, stabilized via
// softplus of the logit difference.
Tensor loss_cl(Tape& tape, Tensor e, Tensor e_pos, Tensor e_neg, double tau,
               bool normalize = false);

double pi_schedule(PiKind kind, double beta);

// pi * (alpha * L_con + (1-alpha) * L_rec) + lambda * (1-pi) * L_cl
Tensor total_loss(Tape& tape, Tensor l_con, Tensor l_rec, Tensor l_cl, double alpha,
                  double lambda, double pi);

// Fusion weight actually used by a variant (no_con -> 0, no_rec -> 1).
double effective_alpha(Variant v, double alpha);

}  // namespace dslad
