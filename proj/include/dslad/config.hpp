#pragma once

#include <filesystem>
#include <string>

#include "dslad/eval.hpp"
#include "dslad/inject.hpp"

#include <nlohmann/json.hpp>

namespace dslad {

// Fully resolved run settings shared by all CLI commands. Values come
// from defaults, then a flat key=value config file, then command-line
// flags, in increasing precedence; the DSLAD_SEED environment variable
// backs the seed when nothing else sets it.
struct RunConfig {
  // dataset paths
  std::string edges;
  std::string features;
  std::string labels;
  std::string out_dir = "out";
  std::string checkpoint;
  std::string scores;

  std::uint64_t seed = 0;

  InjectionConfig inject;
  RwrConfig rwr;
  ModelConfig model;
  std::int64_t rounds = 256;
  bool fresh_negatives = false;
  bool pooled_minmax = false;
  int jobs = 1;

  // synthetic generation
  std::int64_t n_nodes = 500;
  int n_features = 50;
  int communities = 4;

  // ablation / sweep
  std::string variants = "full,no_cl,no_con,no_rec";
  std::string axis;
  std::string values;
  std::string seeds;  // comma-separated; empty = {seed}

  // Applies one key=value setting; throws ConfigError on unknown keys or
  // unparseable values.
  void apply(const std::string& key, const std::string& value);

  // Stable, fully resolved view used for manifest.json.
  nlohmann::ordered_json to_json() const;

  std::vector<std::uint64_t> seed_list() const;
  std::vector<Variant> variant_list() const;
  std::vector<std::string> value_list() const;
};

// Reads a flat "key = value" file ('#' comments, blank lines allowed)
// into cfg.
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

// Same file format, returned as ordered (key, value) pairs without
// applying them.
std::vector<std::pair<std::string, std::string>> read_config_pairs(
    const std::filesystem::path& path);

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::filesystem::path& out_dir);

}  // namespace dslad
