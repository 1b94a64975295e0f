#include "dslad/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <thread>

namespace dslad {

double epoch_beta(std::int64_t epoch, std::int64_t total_epochs) {
  if (total_epochs <= 1) return 1.0;
  return double(epoch) / double(total_epochs - 1);
}

namespace {

struct BatchLosses {
  double total = 0.0, con = 0.0, rec = 0.0, cl = 0.0;
};

BatchLosses train_batch(ModelParams& params, const AttributedGraph& g,
                        const ModelConfig& cfg, const RwrConfig& rwr,
                        std::span<const NodeId> batch, rng::Engine& eng, double pi,
                        Variant variant, bool fresh_negatives) {
  const auto pairs = build_pairs(g, batch, rwr, eng, fresh_negatives);
  const std::size_t n = batch.size();

  Tape tape;
  BoundParams bp = bind_params(tape, params);

  // Whole-graph pass shared by the batch when the global strategy is on.
  std::optional<Tensor> z_full;
  if (variant != Variant::no_cl && cfg.aug == Aug::global)
    z_full = global_embeddings(tape, bp, g);

  std::vector<Tensor> e_rows, s_pos_list, s_neg_list, u_rows, x_rows, e_pos_rows, e_neg_rows;
  for (std::size_t i = 0; i < n; ++i) {
    const DiscriminationPair& pos = pairs[2 * i];
    const DiscriminationPair& neg = pairs[2 * i + 1];
    const NodeId target = pos.target;

    Matrix x(1, g.feature_dim());
    for (int c = 0; c < g.feature_dim(); ++c) x.at(0, c) = g.attributes.at(int(target), c);

    Tensor e = embed_node(tape, bp, x);
    Tensor g_pos = readout(tape, embed_subgraph(tape, bp, pos.subgraph));
    Tensor g_neg = readout(tape, embed_subgraph(tape, bp, neg.subgraph));
    e_rows.push_back(e);

    if (variant != Variant::no_con) {
      auto [s_pos, s_neg] = context_scores(tape, bp, e, g_pos, g_neg);
      s_pos_list.push_back(s_pos);
      s_neg_list.push_back(s_neg);
    }
    if (variant != Variant::no_rec) {
      u_rows.push_back(row_select(reconstruct(tape, bp, pos.subgraph), 0));
      x_rows.push_back(tape.leaf(x));
    }
    if (variant != Variant::no_cl) {
      Tensor e_pos = cfg.aug == Aug::local ? g_pos : row_select(*z_full, int(target));
      e_pos_rows.push_back(e_pos);
      e_neg_rows.push_back(g_neg);
    }
  }

  Tensor zero = tape.leaf(Matrix::zeros(1, 1));
  Tensor l_con = zero, l_rec = zero, l_cl = zero;
  if (variant != Variant::no_con)
    l_con = loss_con(tape, concat_rows(s_pos_list), concat_rows(s_neg_list));
  if (variant != Variant::no_rec)
    l_rec = loss_rec(tape, concat_rows(u_rows), concat_rows(x_rows));
  if (variant != Variant::no_cl)
    l_cl = loss_cl(tape, concat_rows(e_rows), concat_rows(e_pos_rows),
                   concat_rows(e_neg_rows), cfg.tau, cfg.normalize_embeddings);

  const double alpha = effective_alpha(variant, cfg.alpha);
  Tensor loss = total_loss(tape, l_con, l_rec, l_cl, alpha, cfg.lambda_cl, pi);

  tape.backward(loss);
  const auto ps = params.all();
  adam_step(std::span<Parameter* const>(ps.data(), ps.size()));

  return {scalar_value(loss), scalar_value(l_con), scalar_value(l_rec), scalar_value(l_cl)};
}

}  // namespace

TrainResult train(const AttributedGraph& g, const ModelConfig& cfg, const RwrConfig& rwr,
                  std::uint64_t seed, Variant variant, bool fresh_negatives) {
  cfg.validate();
  rwr.validate();
  TrainResult result{ModelParams::init(g.feature_dim(), cfg, seed), {}};

  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double beta = epoch_beta(epoch, cfg.epochs);
    const double pi = variant == Variant::no_cl ? 1.0 : pi_schedule(cfg.pi_kind, beta);

    rng::Engine plan_eng = rng::stream(seed, rng::tag::plan, std::uint64_t(epoch));
    const EpochPlan plan = make_epoch_plan(g.num_nodes, cfg.batch_size, plan_eng);

    LossRecord rec{epoch, beta, pi, 0, 0, 0, 0};
    std::int64_t seen = 0;
    for (std::size_t b = 0; b < plan.batches.size(); ++b) {
      rng::Engine pair_eng = rng::stream(seed, rng::tag::pairs, std::uint64_t(epoch), b);
      const auto& batch = plan.batches[b];
      const BatchLosses bl = train_batch(result.params, g, cfg, rwr, batch, pair_eng, pi,
                                         variant, fresh_negatives);
      const double w = double(batch.size());
      rec.total += bl.total * w;
      rec.con += bl.con * w;
      rec.rec += bl.rec * w;
      rec.cl += bl.cl * w;
      seen += std::int64_t(batch.size());
    }
    if (seen > 0) {
      rec.total /= double(seen);
      rec.con /= double(seen);
      rec.rec /= double(seen);
      rec.cl /= double(seen);
    }
    result.history.push_back(rec);
  }
  return result;
}

RoundScores infer_round(ModelParams& params, const AttributedGraph& g,
                        const RwrConfig& rwr, std::uint64_t seed, std::int64_t round) {
  rwr.validate();
  const std::int64_t n = g.num_nodes;
  if (n < 2) throw ConfigError("scoring needs at least 2 nodes");

  // Positive subgraphs first, each from its own (seed, round, node) stream;
  // negatives reuse the positive subgraph of a uniformly drawn other node.
  std::vector<SubgraphView> positives(static_cast<std::size_t>(n));
  std::vector<std::size_t> neg_root(static_cast<std::size_t>(n));
  for (NodeId v = 0; v < n; ++v) {
    rng::Engine eng = rng::stream(seed, rng::tag::infer, std::uint64_t(round), std::uint64_t(v));
    positives[std::size_t(v)] = sample_masked_subgraph(g, v, rwr, eng);
    neg_root[std::size_t(v)] =
        std::size_t((v + 1 + rng::uniform_index(eng, std::uint64_t(n - 1))) % n);
  }

  RoundScores out;
  out.con_raw.resize(std::size_t(n));
  out.rec_raw.resize(std::size_t(n));
  for (NodeId v = 0; v < n; ++v) {
    Tape tape;
    BoundParams bp = bind_params(tape, params);
    Matrix x(1, g.feature_dim());
    for (int c = 0; c < g.feature_dim(); ++c) x.at(0, c) = g.attributes.at(int(v), c);

    Tensor e = embed_node(tape, bp, x);
    Tensor g_pos = readout(tape, embed_subgraph(tape, bp, positives[std::size_t(v)]));
    Tensor g_neg =
        readout(tape, embed_subgraph(tape, bp, positives[neg_root[std::size_t(v)]]));
    auto [s_pos, s_neg] = context_scores(tape, bp, e, g_pos, g_neg);
    out.con_raw[std::size_t(v)] = scalar_value(s_neg) - scalar_value(s_pos);

    Tensor u0 = row_select(reconstruct(tape, bp, positives[std::size_t(v)]), 0);
    Tensor diff = sub(u0, tape.leaf(x));
    out.rec_raw[std::size_t(v)] = scalar_value(sum(l2_norm_sq_rows(diff)));
  }
  return out;
}

std::vector<double> minmax(std::span<const double> scores) {
  if (scores.empty()) throw ConfigError("minmax needs at least one score");
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(scores.size(), 0.0);
  if (hi > lo) {
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - lo) * inv;
  }
  return out;
}

namespace {

void parallel_rounds(std::int64_t rounds, int jobs,
                     const std::function<void(std::int64_t)>& body) {
  jobs = std::max(1, std::min<int>(jobs, int(rounds)));
  if (jobs == 1) {
    for (std::int64_t r = 0; r < rounds; ++r) body(r);
    return;
  }
  std::vector<std::thread> workers;
  std::atomic<std::int64_t> next{0};
  for (int t = 0; t < jobs; ++t)
    workers.emplace_back([&]() {
      for (std::int64_t r = next.fetch_add(1); r < rounds; r = next.fetch_add(1)) body(r);
    });
  for (auto& w : workers) w.join();
}

std::vector<double> scale_with(std::span<const double> scores, double lo, double hi) {
  std::vector<double> out(scores.size(), 0.0);
  if (hi > lo) {
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - lo) * inv;
  }
  return out;
}

}  // namespace

ScoreTable score_all(ModelParams& params, const AttributedGraph& g, const ModelConfig& cfg,
                     const RwrConfig& rwr, std::int64_t rounds, std::uint64_t seed,
                     const ScoreOptions& opts) {
  if (rounds < 1) throw ConfigError("scoring needs at least one round");
  const std::size_t n = std::size_t(g.num_nodes);
  const double alpha = cfg.alpha;

  std::vector<RoundScores> raw(static_cast<std::size_t>(rounds));
  // Parameters are read-only here; each round owns its RNG streams, so
  // any thread count produces the same table.
  parallel_rounds(rounds, opts.jobs, [&](std::int64_t r) {
    raw[std::size_t(r)] = infer_round(params, g, rwr, seed, r);
  });

  double con_lo = 0, con_hi = 0, rec_lo = 0, rec_hi = 0;
  if (opts.pooled_minmax) {
    con_lo = rec_lo = std::numeric_limits<double>::infinity();
    con_hi = rec_hi = -std::numeric_limits<double>::infinity();
    for (const auto& rs : raw) {
      for (double v : rs.con_raw) { con_lo = std::min(con_lo, v); con_hi = std::max(con_hi, v); }
      for (double v : rs.rec_raw) { rec_lo = std::min(rec_lo, v); rec_hi = std::max(rec_hi, v); }
    }
  }

  ScoreTable table;
  table.rounds_used = rounds;
  table.s_con_raw.assign(n, 0.0);
  table.s_rec_raw.assign(n, 0.0);
  table.s_con_scaled.assign(n, 0.0);
  table.s_rec_scaled.assign(n, 0.0);
  table.s_final.assign(n, 0.0);

  for (const auto& rs : raw) {
    const std::vector<double> con_scaled =
        opts.pooled_minmax ? scale_with(rs.con_raw, con_lo, con_hi) : minmax(rs.con_raw);
    const std::vector<double> rec_scaled =
        opts.pooled_minmax ? scale_with(rs.rec_raw, rec_lo, rec_hi) : minmax(rs.rec_raw);
    for (std::size_t i = 0; i < n; ++i) {
      table.s_con_raw[i] += rs.con_raw[i];
      table.s_rec_raw[i] += rs.rec_raw[i];
      table.s_con_scaled[i] += con_scaled[i];
      table.s_rec_scaled[i] += rec_scaled[i];
    }
  }
  const double inv_r = 1.0 / double(rounds);
  for (std::size_t i = 0; i < n; ++i) {
    table.s_con_raw[i] *= inv_r;
    table.s_rec_raw[i] *= inv_r;
    table.s_con_scaled[i] *= inv_r;
    table.s_rec_scaled[i] *= inv_r;
    table.s_final[i] = alpha * table.s_con_scaled[i] + (1.0 - alpha) * table.s_rec_scaled[i];
  }
  return table;
}

void write_scores_csv(const ScoreTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scores file: " + path.string());
  out << "node_id,s_con,s_rec,s_final\n";
  char buf[160];
  for (std::size_t i = 0; i < table.s_final.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", i, table.s_con_scaled[i],
                  table.s_rec_scaled[i], table.s_final[i]);
    out << buf;
  }
}

ScoreTable read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scores file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("node_id,s_con,s_rec,s_final", 0) != 0)
    throw ParseError(path.string() + ": missing scores header");
  ScoreTable table;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t id = 0;
    double con = 0, rec = 0, fin = 0;
    if (std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf", &id, &con, &rec, &fin) != 4)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    if (id != table.s_final.size())
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": node ids must be consecutive from 0");
    table.s_con_scaled.push_back(con);
    table.s_rec_scaled.push_back(rec);
    table.s_final.push_back(fin);
  }
  table.rounds_used = 0;  // unknown from file
  return table;
}

void write_loss_history_csv(std::span<const LossRecord> history,
                            const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write loss history: " + path.string());
  out << "epoch,beta,pi,loss_total,loss_con,loss_rec,loss_cl\n";
  char buf[240];
  for (const LossRecord& r : history) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(r.epoch), r.beta, r.pi, r.total, r.con, r.rec, r.cl);
    out << buf;
  }
}

}  // namespace dslad
