#pragma once

#include <map>
#include <string>

#include "dslad/trainer.hpp"

namespace dslad {

// ROC-AUC via the rank-sum estimator with average ranks on ties.
// Throws EvalError unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct EvalResult {
  double auc_mean = 0.0;
  double auc_std = 0.0;
  std::vector<double> aucs;
  std::vector<std::uint64_t> seeds;
  std::int64_t n_anomalies = 0;
  std::int64_t n_normal = 0;
  double runtime_s = 0.0;
};

struct EvalSetup {
  ModelConfig model;
  RwrConfig rwr;
  std::int64_t rounds = 256;
  bool fresh_negatives = false;
  bool pooled_minmax = false;
  int jobs = 1;
};

// Train + score + AUC for one variant across seeds.
EvalResult run_variant(const AttributedGraph& g, const EvalSetup& setup, Variant variant,
                       std::span<const std::uint64_t> seeds);

// Table 'variant name -> result' over the requested ablation variants.
std::map<std::string, EvalResult> run_ablation(const AttributedGraph& g,
                                               const EvalSetup& setup,
                                               std::span<const Variant> variants,
                                               std::span<const std::uint64_t> seeds);

enum class SweepAxis { subgraph_size, alpha, lambda, pi_kind, aug };

SweepAxis sweep_axis_from_string(const std::string& s);
const char* to_string(SweepAxis a);

struct SweepRow {
  std::string value;
  EvalResult result;
};

// One EvalResult per axis value; value strings are parsed per axis.
std::vector<SweepRow> run_sweep(const AttributedGraph& g, const EvalSetup& setup,
                                SweepAxis axis, std::span<const std::string> values,
                                std::span<const std::uint64_t> seeds);

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path);

}  // namespace dslad
