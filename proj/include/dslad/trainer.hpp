#pragma once

#include "dslad/model.hpp"

namespace dslad {

struct LossRecord {
  std::int64_t epoch = 0;
  double beta = 0.0;
  double pi = 0.0;
  double total = 0.0;
  double con = 0.0;
  double rec = 0.0;
  double cl = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<LossRecord> history;
};

// Full training loop: shuffled batches each epoch, discrimination pairs
// per batch, combined loss weighted by the pi schedule, Adam updates.
// Deterministic given (graph, config, seed).
TrainResult train(const AttributedGraph& g, const ModelConfig& cfg, const RwrConfig& rwr,
                  std::uint64_t seed, Variant variant = Variant::full,
                  bool fresh_negatives = false);

// Raw per-node scores of one stochastic inference round.
struct RoundScores {
  std::vector<double> con_raw;  // s_neg - s_pos, in (-1,1)
  std::vector<double> rec_raw;  // squared reconstruction error, >= 0
};

RoundScores infer_round(ModelParams& params, const AttributedGraph& g,
                        const RwrConfig& rwr, std::uint64_t seed, std::int64_t round);

// (s - min) / (max - min); a constant input maps to all zeros.
std::vector<double> minmax(std::span<const double> scores);

// Per-node score families averaged over rounds. s_final always equals
// alpha * s_con_scaled + (1 - alpha) * s_rec_scaled.
struct ScoreTable {
  std::vector<double> s_con_raw;
  std::vector<double> s_rec_raw;
  std::vector<double> s_con_scaled;
  std::vector<double> s_rec_scaled;
  std::vector<double> s_final;
  std::int64_t rounds_used = 0;
};

struct ScoreOptions {
  bool pooled_minmax = false;  // scale with min/max pooled over all rounds
  int jobs = 1;
};

ScoreTable score_all(ModelParams& params, const AttributedGraph& g, const ModelConfig& cfg,
                     const RwrConfig& rwr, std::int64_t rounds, std::uint64_t seed,
                     const ScoreOptions& opts = {});

void write_scores_csv(const ScoreTable& table, const std::filesystem::path& path);
ScoreTable read_scores_csv(const std::filesystem::path& path);
void write_loss_history_csv(std::span<const LossRecord> history,
                            const std::filesystem::path& path);

// Training-progress ratio for a 0-based epoch index: 0 at the first
// epoch, 1 at the last.
double epoch_beta(std::int64_t epoch, std::int64_t total_epochs);

}  // namespace dslad
