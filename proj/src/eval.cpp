#include "dslad/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace dslad {

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size())
    throw EvalError("scores and labels must have equal length");
  const std::size_t n = scores.size();
  std::int64_t n_anom = 0;
  for (std::uint8_t l : labels) n_anom += l ? 1 : 0;
  const std::int64_t n_norm = std::int64_t(n) - n_anom;
  if (n_anom == 0 || n_norm == 0)
    throw EvalError("AUC needs both classes present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups, 1-based.
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * double(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }

  double anom_rank_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (labels[k]) anom_rank_sum += rank[k];
  return (anom_rank_sum - 0.5 * double(n_anom) * double(n_anom + 1)) /
         (double(n_anom) * double(n_norm));
}

EvalResult run_variant(const AttributedGraph& g, const EvalSetup& setup, Variant variant,
                       std::span<const std::uint64_t> seeds) {
  if (!g.has_labels()) throw EvalError("graph has no ground-truth labels");
  if (seeds.empty()) throw ConfigError("at least one seed required");
  const auto t0 = std::chrono::steady_clock::now();

  EvalResult res;
  res.seeds.assign(seeds.begin(), seeds.end());
  for (std::uint8_t l : g.labels) res.n_anomalies += l ? 1 : 0;
  res.n_normal = g.num_nodes - res.n_anomalies;

  // The training path reads the variant directly; the scoring copy takes
  // the variant's fusion weight (0 for no_con, 1 for no_rec).
  ModelConfig score_cfg = setup.model;
  score_cfg.alpha = effective_alpha(variant, setup.model.alpha);
  const ScoreOptions opts{setup.pooled_minmax, setup.jobs};
  for (std::uint64_t seed : seeds) {
    TrainResult tr = train(g, setup.model, setup.rwr, seed, variant, setup.fresh_negatives);
    ScoreTable table =
        score_all(tr.params, g, score_cfg, setup.rwr, setup.rounds, seed, opts);
    res.aucs.push_back(roc_auc(table.s_final, g.labels));
  }

  res.auc_mean = std::accumulate(res.aucs.begin(), res.aucs.end(), 0.0) / double(res.aucs.size());
  if (res.aucs.size() > 1) {
    double ss = 0.0;
    for (double a : res.aucs) ss += (a - res.auc_mean) * (a - res.auc_mean);
    res.auc_std = std::sqrt(ss / double(res.aucs.size() - 1));
  }
  res.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::map<std::string, EvalResult> run_ablation(const AttributedGraph& g,
                                               const EvalSetup& setup,
                                               std::span<const Variant> variants,
                                               std::span<const std::uint64_t> seeds) {
  if (variants.empty()) throw ConfigError("no ablation variants requested");
  std::map<std::string, EvalResult> out;
  for (Variant v : variants) out[to_string(v)] = run_variant(g, setup, v, seeds);
  return out;
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "K" || s == "subgraph-size" || s == "subgraph_size") return SweepAxis::subgraph_size;
  if (s == "alpha") return SweepAxis::alpha;
  if (s == "lambda") return SweepAxis::lambda;
  if (s == "pi" || s == "pi_kind") return SweepAxis::pi_kind;
  if (s == "aug") return SweepAxis::aug;
  throw ConfigError("unknown sweep axis '" + s + "'");
}

const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::subgraph_size: return "K";
    case SweepAxis::alpha: return "alpha";
    case SweepAxis::lambda: return "lambda";
    case SweepAxis::pi_kind: return "pi";
    case SweepAxis::aug: return "aug";
  }
  return "?";
}

std::vector<SweepRow> run_sweep(const AttributedGraph& g, const EvalSetup& setup,
                                SweepAxis axis, std::span<const std::string> values,
                                std::span<const std::uint64_t> seeds) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<SweepRow> rows;
  for (const std::string& value : values) {
    EvalSetup s = setup;
    switch (axis) {
      case SweepAxis::subgraph_size: s.rwr.subgraph_size = std::stoll(value); break;
      case SweepAxis::alpha: s.model.alpha = std::stod(value); break;
      case SweepAxis::lambda: s.model.lambda_cl = std::stod(value); break;
      case SweepAxis::pi_kind: s.model.pi_kind = pi_kind_from_string(value); break;
      case SweepAxis::aug: s.model.aug = aug_from_string(value); break;
    }
    rows.push_back({value, run_variant(g, s, Variant::full, seeds)});
  }
  return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write sweep file: " + path.string());
  out << "value,mean_auc,std_auc\n";
  char buf[96];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", r.value.c_str(), r.result.auc_mean,
                  r.result.auc_std);
    out << buf;
  }
}

}  // namespace dslad
