#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dslad/config.hpp"
#include "dslad/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace dslad::cli {

namespace {

// Ordered key=value assignments collected from the config file and then
// from flags, so later entries win.
struct Assignments {
  std::vector<std::pair<std::string, std::string>> items;
  std::string config_path;

  RunConfig resolve(std::set<std::string>* touched = nullptr) const {
    RunConfig cfg;
    if (const char* env_seed = std::getenv("DSLAD_SEED")) cfg.apply("seed", env_seed);
    if (!config_path.empty()) {
      for (const auto& [k, v] : read_config_pairs(config_path)) {
        cfg.apply(k, v);
        if (touched) touched->insert(k);
      }
    }
    for (const auto& [k, v] : items) {
      cfg.apply(k, v);
      if (touched) touched->insert(k);
    }
    return cfg;
  }
};

void add_key(CLI::App* cmd, Assignments& as, const std::string& key,
             const std::string& help) {
  cmd->add_option_function<std::string>(
      "--" + key, [&as, key](const std::string& v) { as.items.emplace_back(key, v); }, help);
}

void add_common_keys(CLI::App* cmd, Assignments& as) {
  cmd->add_option("--config", as.config_path, "flat key=value config file");
  add_key(cmd, as, "seed", "RNG seed (default 0; falls back to $DSLAD_SEED)");
  add_key(cmd, as, "out-dir", "output directory (default 'out')");
}

void add_data_keys(CLI::App* cmd, Assignments& as, bool with_labels) {
  add_key(cmd, as, "edges", "edge list file, one 'u<TAB>v' per line");
  add_key(cmd, as, "features", "feature matrix CSV, one row per node");
  if (with_labels) add_key(cmd, as, "labels", "label file, one 0/1 per node");
}

void add_model_keys(CLI::App* cmd, Assignments& as) {
  add_key(cmd, as, "subgraph-size", "subgraph size K (default 4)");
  add_key(cmd, as, "restart-prob", "walk restart probability (default 0.1)");
  add_key(cmd, as, "max-steps", "walk step cap (default 50*K)");
  add_key(cmd, as, "batch-size", "targets per batch (default 300)");
  add_key(cmd, as, "hidden-dim", "embedding dimension (default 64)");
  add_key(cmd, as, "layers", "encoder/decoder layer count (default 1)");
  add_key(cmd, as, "alpha", "context/reconstruction fusion weight (default 0.6)");
  add_key(cmd, as, "lambda", "contrastive loss scale (default 1)");
  add_key(cmd, as, "tau", "contrastive temperature (default 0.5)");
  add_key(cmd, as, "aug", "positive sample strategy: local_aug|global_aug (default local_aug)");
  add_key(cmd, as, "pi",
          "schedule: constant|linear|one_minus_exp|sigmoid|tanh (default linear)");
  add_key(cmd, as, "epochs", "training epochs (default 100)");
  add_key(cmd, as, "normalize-embeddings",
          "L2-normalize embeddings before contrast (default false)");
  add_key(cmd, as, "fresh-negatives",
          "sample negatives fresh instead of reusing (default false)");
}

void add_scoring_keys(CLI::App* cmd, Assignments& as) {
  add_key(cmd, as, "rounds", "inference rounds R (default 256)");
  add_key(cmd, as, "pooled-minmax", "pool min/max scaling over rounds (default false)");
  add_key(cmd, as, "jobs", "parallel inference workers (default 1)");
}

fs::path ensure_out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  return dir;
}

AttributedGraph load_input_graph(const RunConfig& cfg, bool need_labels) {
  if (cfg.edges.empty() || cfg.features.empty())
    throw ConfigError("keys 'edges' and 'features' are required");
  if (need_labels && cfg.labels.empty())
    throw ConfigError("key 'labels' is required for this command");
  std::optional<fs::path> labels;
  if (!cfg.labels.empty()) labels = cfg.labels;
  return load_graph(cfg.edges, cfg.features, labels);
}

EvalSetup make_setup(const RunConfig& cfg) {
  return {cfg.model, cfg.rwr, cfg.rounds, cfg.fresh_negatives, cfg.pooled_minmax, cfg.jobs};
}

ordered_json result_json(const EvalResult& r) {
  ordered_json j;
  j["auc_mean"] = r.auc_mean;
  j["auc_std"] = r.auc_std;
  j["aucs"] = r.aucs;
  j["seeds"] = r.seeds;
  j["n_anomalies"] = r.n_anomalies;
  j["n_normal"] = r.n_normal;
  j["runtime_s"] = r.runtime_s;
  return j;
}

void write_json(const ordered_json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// --- commands ---

int cmd_gen_synthetic(const Assignments& as) {
  const RunConfig cfg = as.resolve();
  const fs::path dir = ensure_out_dir(cfg);
  AttributedGraph g = gen_synthetic(cfg.n_nodes, cfg.n_features, cfg.communities, cfg.seed);
  save_graph(g, dir / "edges.tsv", dir / "features.csv");
  write_manifest(cfg, "gen-synthetic", dir);
  std::cout << "wrote " << (dir / "edges.tsv").string() << " (" << g.num_nodes << " nodes, "
            << g.num_undirected_edges() << " edges)\n";
  return 0;
}

int cmd_inject(const Assignments& as) {
  RunConfig cfg = as.resolve();
  cfg.inject.seed = cfg.seed;
  const fs::path dir = ensure_out_dir(cfg);
  const AttributedGraph g = load_input_graph(cfg, false);
  InjectionResult res = inject(g, cfg.inject);
  save_graph(res.graph, dir / "edges.tsv", dir / "features.csv", dir / "labels.csv");

  ordered_json report;
  report["seed"] = res.report.seed;
  report["structural_nodes"] = res.report.structural_nodes;
  report["attribute_nodes"] = res.report.attribute_nodes;
  report["edges_added"] = res.report.edges_added;
  report["edges_before"] = res.report.edges_before;
  report["edges_after"] = res.report.edges_after;
  write_json(report, dir / "report.json");
  write_manifest(cfg, "inject", dir);
  std::cout << "injected " << res.report.structural_nodes.size() << " structural + "
            << res.report.attribute_nodes.size() << " attribute anomalies\n";
  return 0;
}

int cmd_train(const Assignments& as) {
  const RunConfig cfg = as.resolve();
  const fs::path dir = ensure_out_dir(cfg);
  const AttributedGraph g = load_input_graph(cfg, false);
  TrainResult tr = train(g, cfg.model, cfg.rwr, cfg.seed, Variant::full, cfg.fresh_negatives);
  const fs::path ckpt = cfg.checkpoint.empty() ? dir / "model.ckpt" : fs::path(cfg.checkpoint);
  save_checkpoint(tr.params, cfg.model, ckpt);
  write_loss_history_csv(tr.history, dir / "loss_history.csv");
  write_manifest(cfg, "train", dir);
  std::cout << "trained " << cfg.model.epochs << " epochs; checkpoint at " << ckpt.string()
            << '\n';
  return 0;
}

int cmd_score(const Assignments& as) {
  std::set<std::string> touched;
  const RunConfig cfg = as.resolve(&touched);
  const fs::path dir = ensure_out_dir(cfg);
  const AttributedGraph g = load_input_graph(cfg, false);

  const fs::path ckpt = cfg.checkpoint.empty() ? dir / "model.ckpt" : fs::path(cfg.checkpoint);
  auto [params, ckpt_cfg] = load_checkpoint(ckpt);
  // Every model key the user set explicitly must agree with the
  // checkpoint; unset keys adopt the checkpoint's values.
  static const std::map<std::string, std::function<bool(const ModelConfig&, const ModelConfig&)>>
      same = {
          {"hidden-dim", [](auto& a, auto& b) { return a.hidden_dim == b.hidden_dim; }},
          {"layers", [](auto& a, auto& b) { return a.encoder_layers == b.encoder_layers; }},
          {"alpha", [](auto& a, auto& b) { return a.alpha == b.alpha; }},
          {"lambda", [](auto& a, auto& b) { return a.lambda_cl == b.lambda_cl; }},
          {"tau", [](auto& a, auto& b) { return a.tau == b.tau; }},
          {"aug", [](auto& a, auto& b) { return a.aug == b.aug; }},
          {"pi", [](auto& a, auto& b) { return a.pi_kind == b.pi_kind; }},
          {"epochs", [](auto& a, auto& b) { return a.epochs == b.epochs; }},
          {"batch-size", [](auto& a, auto& b) { return a.batch_size == b.batch_size; }},
          {"normalize-embeddings",
           [](auto& a, auto& b) { return a.normalize_embeddings == b.normalize_embeddings; }},
      };
  for (const auto& [key, eq] : same)
    if (touched.contains(key) && !eq(cfg.model, ckpt_cfg))
      throw ConfigError("checkpoint config mismatch on key '" + key + "'");
  if (params.input_dim != g.feature_dim())
    throw ConfigError("checkpoint input dimension " + std::to_string(params.input_dim) +
                      " does not match graph feature dimension " +
                      std::to_string(g.feature_dim()));

  ScoreOptions opts{cfg.pooled_minmax, cfg.jobs};
  ScoreTable table = score_all(params, g, ckpt_cfg, cfg.rwr, cfg.rounds, cfg.seed, opts);
  write_scores_csv(table, dir / "scores.csv");
  write_manifest(cfg, "score", dir);
  std::cout << "scored " << g.num_nodes << " nodes over " << cfg.rounds << " rounds\n";
  return 0;
}

int cmd_eval(const Assignments& as) {
  const RunConfig cfg = as.resolve();
  const fs::path dir = ensure_out_dir(cfg);
  if (cfg.scores.empty() || cfg.labels.empty())
    throw ConfigError("keys 'scores' and 'labels' are required");
  const ScoreTable table = read_scores_csv(cfg.scores);

  std::vector<std::uint8_t> labels;
  {
    std::ifstream in(cfg.labels);
    if (!in) throw IoError("cannot open labels file: " + cfg.labels);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line != "0" && line != "1")
        throw ParseError(cfg.labels + ": label must be 0 or 1");
      labels.push_back(line == "1" ? 1 : 0);
    }
  }

  const double auc = roc_auc(table.s_final, labels);
  std::int64_t n_anom = 0;
  for (auto l : labels) n_anom += l;
  ordered_json j;
  j["auc"] = auc;
  j["n_anomalies"] = n_anom;
  j["n_normal"] = std::int64_t(labels.size()) - n_anom;
  write_json(j, dir / "metrics.json");
  write_manifest(cfg, "eval", dir);
  std::printf("auc=%.6f\n", auc);
  return 0;
}

int cmd_ablate(const Assignments& as) {
  const RunConfig cfg = as.resolve();
  const fs::path dir = ensure_out_dir(cfg);
  const AttributedGraph g = load_input_graph(cfg, true);
  const auto variants = cfg.variant_list();
  const auto seeds = cfg.seed_list();
  const auto results = run_ablation(g, make_setup(cfg), variants, seeds);

  ordered_json j;
  for (const auto& [name, res] : results) {
    j[name] = result_json(res);
    std::printf("%-8s auc %.4f +/- %.4f (%zu seeds)\n", name.c_str(), res.auc_mean,
                res.auc_std, res.aucs.size());
  }
  write_json(j, dir / "metrics.json");
  write_manifest(cfg, "ablate", dir);
  return 0;
}

int cmd_sweep(const Assignments& as) {
  const RunConfig cfg = as.resolve();
  const fs::path dir = ensure_out_dir(cfg);
  const AttributedGraph g = load_input_graph(cfg, true);
  if (cfg.axis.empty()) throw ConfigError("key 'axis' is required");
  const SweepAxis axis = sweep_axis_from_string(cfg.axis);
  const auto values = cfg.value_list();
  if (values.empty()) throw ConfigError("key 'values' is required and must be non-empty");
  const auto seeds = cfg.seed_list();

  const auto rows = run_sweep(g, make_setup(cfg), axis, values, seeds);
  write_sweep_csv(rows, dir / (std::string("sweep_") + to_string(axis) + ".csv"));
  ordered_json j;
  for (const SweepRow& row : rows) {
    j[row.value] = result_json(row.result);
    std::printf("%s=%-10s auc %.4f +/- %.4f\n", to_string(axis), row.value.c_str(),
                row.result.auc_mean, row.result.auc_std);
  }
  write_json(j, dir / "metrics.json");
  write_manifest(cfg, "sweep", dir);
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"DSLAD: decoupled self-supervised anomaly detection on attributed graphs"};
  app.require_subcommand(1);

  Assignments as_gen, as_inject, as_train, as_score, as_eval, as_ablate, as_sweep;

  CLI::App* gen = app.add_subcommand("gen-synthetic", "generate a synthetic dataset");
  add_common_keys(gen, as_gen);
  add_key(gen, as_gen, "n-nodes", "node count (default 500)");
  add_key(gen, as_gen, "n-features", "feature dimension (default 50)");
  add_key(gen, as_gen, "communities", "community count (default 4)");

  CLI::App* inj = app.add_subcommand("inject", "contaminate a graph with labeled anomalies");
  add_common_keys(inj, as_inject);
  add_data_keys(inj, as_inject, false);
  add_key(inj, as_inject, "cliques", "number of injected cliques (default 0)");
  add_key(inj, as_inject, "clique-size", "nodes per clique (default 15)");
  add_key(inj, as_inject, "attr-anomalies", "attribute anomaly count (default 0)");
  add_key(inj, as_inject, "candidate-pool", "donor candidates per node (default 50)");

  CLI::App* tr = app.add_subcommand("train", "train a model");
  add_common_keys(tr, as_train);
  add_data_keys(tr, as_train, false);
  add_model_keys(tr, as_train);
  add_key(tr, as_train, "checkpoint", "checkpoint output path (default <out-dir>/model.ckpt)");

  CLI::App* sc = app.add_subcommand("score", "compute per-node anomaly scores");
  add_common_keys(sc, as_score);
  add_data_keys(sc, as_score, false);
  add_model_keys(sc, as_score);
  add_scoring_keys(sc, as_score);
  add_key(sc, as_score, "checkpoint", "checkpoint input path (default <out-dir>/model.ckpt)");

  CLI::App* ev = app.add_subcommand("eval", "AUC of a scores file against labels");
  add_common_keys(ev, as_eval);
  add_key(ev, as_eval, "scores", "scores.csv produced by 'score'");
  add_key(ev, as_eval, "labels", "label file, one 0/1 per node");

  CLI::App* ab = app.add_subcommand("ablate", "train and evaluate ablation variants");
  add_common_keys(ab, as_ablate);
  add_data_keys(ab, as_ablate, true);
  add_model_keys(ab, as_ablate);
  add_scoring_keys(ab, as_ablate);
  add_key(ab, as_ablate, "variants", "comma list of full,no_cl,no_con,no_rec (default all)");
  add_key(ab, as_ablate, "seeds", "comma list of seeds (default: the single 'seed')");

  CLI::App* sw = app.add_subcommand("sweep", "sweep one hyperparameter axis");
  add_common_keys(sw, as_sweep);
  add_data_keys(sw, as_sweep, true);
  add_model_keys(sw, as_sweep);
  add_scoring_keys(sw, as_sweep);
  add_key(sw, as_sweep, "axis", "one of K, alpha, lambda, pi, aug");
  add_key(sw, as_sweep, "values", "comma list of axis values");
  add_key(sw, as_sweep, "seeds", "comma list of seeds (default: the single 'seed')");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen_synthetic(as_gen);
    if (inj->parsed()) return cmd_inject(as_inject);
    if (tr->parsed()) return cmd_train(as_train);
    if (sc->parsed()) return cmd_score(as_score);
    if (ev->parsed()) return cmd_eval(as_eval);
    if (ab->parsed()) return cmd_ablate(as_ablate);
    if (sw->parsed()) return cmd_sweep(as_sweep);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace dslad::cli

int main(int argc, char** argv) { return dslad::cli::run(argc, argv); }
