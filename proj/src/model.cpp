#include "dslad/model.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dslad {

void ModelConfig::validate() const {
  if (hidden_dim < 1) throw ConfigError("hidden dimension must be positive");
  if (encoder_layers < 1) throw ConfigError("encoder layers must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  if (!(lambda_cl > 0.0)) throw ConfigError("lambda must be positive");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (batch_size < 2) throw ConfigError("batch size must be at least 2");
}

const char* to_string(Aug a) { return a == Aug::local ? "local_aug" : "global_aug"; }

const char* to_string(PiKind k) {
  switch (k) {
    case PiKind::constant: return "constant";
    case PiKind::linear: return "linear";
    case PiKind::one_minus_exp: return "one_minus_exp";
    case PiKind::sigmoid: return "sigmoid";
    case PiKind::tanh: return "tanh";
  }
  return "?";
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_cl: return "no_cl";
    case Variant::no_con: return "no_con";
    case Variant::no_rec: return "no_rec";
  }
  return "?";
}

Aug aug_from_string(const std::string& s) {
  if (s == "local_aug" || s == "local") return Aug::local;
  if (s == "global_aug" || s == "global") return Aug::global;
  throw ConfigError("unknown augmentation strategy '" + s + "'");
}

PiKind pi_kind_from_string(const std::string& s) {
  if (s == "constant") return PiKind::constant;
  if (s == "linear") return PiKind::linear;
  if (s == "one_minus_exp") return PiKind::one_minus_exp;
  if (s == "sigmoid") return PiKind::sigmoid;
  if (s == "tanh") return PiKind::tanh;
  throw ConfigError("unknown pi schedule '" + s + "'");
}

Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "no_cl") return Variant::no_cl;
  if (s == "no_con") return Variant::no_con;
  if (s == "no_rec") return Variant::no_rec;
  throw ConfigError("unknown variant '" + s + "'");
}

ModelParams ModelParams::init(int input_dim, const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (input_dim < 1) throw ConfigError("input dimension must be positive");
  rng::Engine eng = rng::stream(seed, rng::tag::init);
  const int L = cfg.encoder_layers;
  const int d = cfg.hidden_dim;

  ModelParams p;
  p.input_dim = input_dim;
  auto dims_in = [&](int l) { return l == 0 ? input_dim : d; };
  for (int l = 0; l < L; ++l)
    p.encoder.emplace_back("encoder.w" + std::to_string(l),
                           xavier_init(dims_in(l), d, eng));
  for (int l = 0; l < L; ++l)
    p.ae_encoder.emplace_back("ae_encoder.w" + std::to_string(l),
                              xavier_init(dims_in(l), d, eng));
  for (int l = 0; l < L; ++l) {
    const int out = (l == L - 1) ? input_dim : d;
    p.ae_decoder.emplace_back("ae_decoder.w" + std::to_string(l), xavier_init(d, out, eng));
  }
  p.disc_weight = Parameter("disc.w", xavier_init(d, d, eng));
  return p;
}

std::vector<Parameter*> ModelParams::all() {
  std::vector<Parameter*> out;
  for (auto& w : encoder) out.push_back(&w);
  for (auto& w : ae_encoder) out.push_back(&w);
  for (auto& w : ae_decoder) out.push_back(&w);
  out.push_back(&disc_weight);
  return out;
}

std::vector<const Parameter*> ModelParams::all() const {
  std::vector<const Parameter*> out;
  for (auto& w : encoder) out.push_back(&w);
  for (auto& w : ae_encoder) out.push_back(&w);
  for (auto& w : ae_decoder) out.push_back(&w);
  out.push_back(&disc_weight);
  return out;
}

namespace {

constexpr const char* kCheckpointMagic = "dslad-checkpoint v1";

void write_config(std::ofstream& out, const ModelConfig& cfg, int input_dim) {
  out << kCheckpointMagic << '\n';
  out << "input_dim " << input_dim << '\n';
  out << "hidden_dim " << cfg.hidden_dim << '\n';
  out << "encoder_layers " << cfg.encoder_layers << '\n';
  char buf[64];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << key << ' ' << buf << '\n';
  };
  put("alpha", cfg.alpha);
  put("lambda", cfg.lambda_cl);
  put("tau", cfg.tau);
  out << "aug " << to_string(cfg.aug) << '\n';
  out << "pi " << to_string(cfg.pi_kind) << '\n';
  out << "epochs " << cfg.epochs << '\n';
  out << "batch_size " << cfg.batch_size << '\n';
  out << "normalize_embeddings " << (cfg.normalize_embeddings ? 1 : 0) << '\n';
}

}  // namespace

void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  write_config(out, cfg, params.input_dim);
  char buf[64];
  for (const Parameter* p : params.all()) {
    out << "tensor " << p->name << ' ' << p->value.rows << ' ' << p->value.cols << '\n';
    for (int r = 0; r < p->value.rows; ++r) {
      for (int c = 0; c < p->value.cols; ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", p->value.at(r, c));
        if (c) out << ' ';
        out << buf;
      }
      out << '\n';
    }
  }
}

std::pair<ModelParams, ModelConfig> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic)
    throw ParseError(path.string() + ": not a recognized checkpoint file");

  ModelConfig cfg;
  int input_dim = 0;
  std::string key;
  for (int i = 0; i < 11; ++i) {
    if (!std::getline(in, line)) throw ParseError(path.string() + ": truncated header");
    std::istringstream ls(line);
    std::string value;
    if (!(ls >> key >> value)) throw ParseError(path.string() + ": malformed header line");
    if (key == "input_dim") input_dim = std::stoi(value);
    else if (key == "hidden_dim") cfg.hidden_dim = std::stoi(value);
    else if (key == "encoder_layers") cfg.encoder_layers = std::stoi(value);
    else if (key == "alpha") cfg.alpha = std::stod(value);
    else if (key == "lambda") cfg.lambda_cl = std::stod(value);
    else if (key == "tau") cfg.tau = std::stod(value);
    else if (key == "aug") cfg.aug = aug_from_string(value);
    else if (key == "pi") cfg.pi_kind = pi_kind_from_string(value);
    else if (key == "epochs") cfg.epochs = std::stoll(value);
    else if (key == "batch_size") cfg.batch_size = std::stoll(value);
    else if (key == "normalize_embeddings") cfg.normalize_embeddings = value == "1";
    else throw ParseError(path.string() + ": unknown header key '" + key + "'");
  }

  ModelParams params = ModelParams::init(input_dim, cfg, 0);
  for (Parameter* p : params.all()) {
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing tensor block");
    std::istringstream ls(line);
    std::string tag, name;
    int rows = 0, cols = 0;
    if (!(ls >> tag >> name >> rows >> cols) || tag != "tensor")
      throw ParseError(path.string() + ": malformed tensor header");
    if (name != p->name || rows != p->value.rows || cols != p->value.cols)
      throw ParseError(path.string() + ": tensor '" + name + "' does not match expected '" +
                       p->name + "'");
    for (int r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) throw ParseError(path.string() + ": truncated tensor data");
      std::istringstream row(line);
      for (int c = 0; c < cols; ++c)
        if (!(row >> p->value.at(r, c)))
          throw ParseError(path.string() + ": malformed tensor row");
    }
  }
  return {std::move(params), cfg};
}

ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  auto [params, cfg] = load_checkpoint(path);
  if (!(cfg == expected))
    throw ConfigError("checkpoint config mismatch: " + path.string() +
                      " was trained with different model settings");
  return std::move(params);
}

BoundParams bind_params(Tape& tape, ModelParams& params) {
  BoundParams bp;
  for (auto& w : params.encoder) bp.encoder.push_back(tape.param(w));
  for (auto& w : params.ae_encoder) bp.ae_encoder.push_back(tape.param(w));
  for (auto& w : params.ae_decoder) bp.ae_decoder.push_back(tape.param(w));
  bp.disc_weight = tape.param(params.disc_weight);
  return bp;
}

Matrix norm_adjacency_dense(const SubgraphView& sub) {
  const int k = int(sub.size());
  Matrix a = sub.local_adjacency;
  for (int i = 0; i < k; ++i) a.at(i, i) += 1.0;  // self-loops
  std::vector<double> dinv(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    double deg = 0.0;
    for (int j = 0; j < k; ++j) deg += a.at(i, j);
    dinv[std::size_t(i)] = 1.0 / std::sqrt(deg);
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) a.at(i, j) *= dinv[std::size_t(i)] * dinv[std::size_t(j)];
  return a;
}

CsrMatrix norm_adjacency_csr(const AttributedGraph& g) {
  const std::int64_t n = g.num_nodes;
  CsrMatrix out;
  out.rows = n;
  out.cols = n;
  out.offsets.assign(std::size_t(n) + 1, 0);
  std::vector<double> dinv(static_cast<std::size_t>(n), 0.0);
  for (NodeId v = 0; v < n; ++v) dinv[std::size_t(v)] = 1.0 / std::sqrt(double(g.degree(v) + 1));
  for (NodeId v = 0; v < n; ++v) {
    // Row = neighbors plus the self-loop, kept sorted.
    const auto ns = g.neighbors(v);
    std::size_t i = 0;
    bool self_emitted = false;
    while (i < ns.size() || !self_emitted) {
      NodeId u;
      if (!self_emitted && (i >= ns.size() || v < ns[i])) {
        u = v;
        self_emitted = true;
      } else {
        u = ns[i++];
      }
      out.col_indices.push_back(u);
      out.values.push_back(dinv[std::size_t(v)] * dinv[std::size_t(u)]);
    }
    out.offsets[std::size_t(v) + 1] = std::int64_t(out.col_indices.size());
  }
  return out;
}

namespace {

Tensor gcn_stack_dense(Tape& tape, std::span<const Tensor> weights, Tensor h,
                       const Matrix& norm_adj) {
  Tensor s = tape.leaf(norm_adj);
  for (Tensor w : weights) h = relu(matmul(s, matmul(h, w)));
  return h;
}

}  // namespace

Tensor embed_node(Tape& tape, const BoundParams& bp, const Matrix& x) {
  Tensor h = tape.leaf(x);
  for (Tensor w : bp.encoder) h = relu(matmul(h, w));
  return h;
}

Tensor embed_subgraph(Tape& tape, const BoundParams& bp, const SubgraphView& sub) {
  Tensor h = tape.leaf(sub.local_attributes);
  return gcn_stack_dense(tape, bp.encoder, h, norm_adjacency_dense(sub));
}

Tensor readout(Tape& tape, Tensor z) {
  (void)tape;
  if (z.rows < 2) throw ConfigError("readout needs a subgraph of at least 2 nodes");
  return row_mean_excluding(z, 0);
}

Tensor disc(Tape& tape, Tensor g, Tensor e, Tensor wd) {
  (void)tape;
  return sigmoid(matmul(matmul(g, wd), transpose(e)));
}

std::pair<Tensor, Tensor> context_scores(Tape& tape, const BoundParams& bp, Tensor e,
                                         Tensor g_pos, Tensor g_neg) {
  return {disc(tape, g_pos, e, bp.disc_weight), disc(tape, g_neg, e, bp.disc_weight)};
}

Tensor loss_con(Tape& tape, Tensor s_pos, Tensor s_neg) {
  constexpr double kEps = 1e-12;
  if (s_pos.rows != s_neg.rows || s_pos.cols != 1 || s_neg.cols != 1)
    throw ShapeError("loss_con expects matching n x 1 score columns");
  const int n = s_pos.rows;
  Tensor one = tape.leaf(Matrix::full(n, 1, 1.0));
  Tensor lp = log(clamp(s_pos, kEps, 1.0 - kEps));
  Tensor ln = log(clamp(sub(one, s_neg), kEps, 1.0 - kEps));
  return mul_scalar(sum(add(lp, ln)), -1.0 / (2.0 * double(n)));
}

Tensor reconstruct(Tape& tape, const BoundParams& bp, const SubgraphView& sub) {
  const Matrix norm_adj = norm_adjacency_dense(sub);
  Tensor h = tape.leaf(sub.local_attributes);
  h = gcn_stack_dense(tape, bp.ae_encoder, h, norm_adj);
  return gcn_stack_dense(tape, bp.ae_decoder, h, norm_adj);
}

Tensor loss_rec(Tape& tape, Tensor u_rows, Tensor x_rows) {
  (void)tape;
  return mean(l2_norm_sq_rows(sub(u_rows, x_rows)));
}

Tensor global_embeddings(Tape& tape, const BoundParams& bp, const AttributedGraph& g) {
  const CsrMatrix norm_adj = norm_adjacency_csr(g);
  Tensor h = tape.leaf(g.attributes);
  for (Tensor w : bp.encoder) h = relu(spmm(norm_adj, matmul(h, w)));
  return h;
}

Tensor positive_embedding(Tape& tape, const BoundParams& bp, NodeId target,
                          const SubgraphView& sub, const AttributedGraph& g, Aug aug) {
  if (aug == Aug::local) return readout(tape, embed_subgraph(tape, bp, sub));
  return row_select(global_embeddings(tape, bp, g), int(target));
}

Tensor loss_cl(Tape& tape, Tensor e, Tensor e_pos, Tensor e_neg, double tau,
               bool normalize) {
  (void)tape;
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (normalize) {
    e = row_l2_normalize(e);
    e_pos = row_l2_normalize(e_pos);
    e_neg = row_l2_normalize(e_neg);
  }
  // -log(exp(a)/(exp(a)+exp(b))) == softplus(b - a); no overflow for
  // large logits.
  Tensor a = mul_scalar(dot_rows(e, e_pos), 1.0 / tau);
  Tensor b = mul_scalar(dot_rows(e, e_neg), 1.0 / tau);
  return mean(softplus(sub(b, a)));
}

double pi_schedule(PiKind kind, double beta) {
  if (beta < 0.0 || beta > 1.0) throw ConfigError("beta must lie in [0,1]");
  switch (kind) {
    case PiKind::constant: return 0.5;
    case PiKind::linear: return beta;
    case PiKind::one_minus_exp: return 1.0 - std::exp(-beta);
    case PiKind::sigmoid: return 1.0 / (1.0 + std::exp(-beta));
    case PiKind::tanh: return std::tanh(beta);
  }
  throw ConfigError("unknown pi schedule");
}

Tensor total_loss(Tape& tape, Tensor l_con, Tensor l_rec, Tensor l_cl, double alpha,
                  double lambda, double pi) {
  (void)tape;
  Tensor disc_term = add(mul_scalar(l_con, alpha), mul_scalar(l_rec, 1.0 - alpha));
  return add(mul_scalar(disc_term, pi), mul_scalar(l_cl, lambda * (1.0 - pi)));
}

double effective_alpha(Variant v, double alpha) {
  if (v == Variant::no_con) return 0.0;
  if (v == Variant::no_rec) return 1.0;
  return alpha;
}

}  // namespace dslad
