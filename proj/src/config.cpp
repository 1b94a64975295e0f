#include "dslad/config.hpp"

#include <charconv>
#include <fstream>

namespace dslad {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("key '" + key + "': expected a nonnegative integer, got '" + value + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + value + "'");
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = s.find(',', pos);
    const std::string item = trim(s.substr(pos, comma == std::string::npos ? std::string::npos
                                                                           : comma - pos));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value) {
  if (key == "edges") edges = value;
  else if (key == "features") features = value;
  else if (key == "labels") labels = value;
  else if (key == "out-dir") out_dir = value;
  else if (key == "checkpoint") checkpoint = value;
  else if (key == "scores") scores = value;
  else if (key == "seed") seed = parse_uint(key, value);
  else if (key == "cliques") inject.clique_count = parse_int(key, value);
  else if (key == "clique-size") inject.clique_size = parse_int(key, value);
  else if (key == "attr-anomalies") inject.attr_anomaly_count = parse_int(key, value);
  else if (key == "candidate-pool") inject.candidate_pool = parse_int(key, value);
  else if (key == "subgraph-size") rwr.subgraph_size = parse_int(key, value);
  else if (key == "restart-prob") rwr.restart_prob = parse_double(key, value);
  else if (key == "max-steps") rwr.max_steps = parse_int(key, value);
  else if (key == "hidden-dim") model.hidden_dim = int(parse_int(key, value));
  else if (key == "layers") model.encoder_layers = int(parse_int(key, value));
  else if (key == "alpha") model.alpha = parse_double(key, value);
  else if (key == "lambda") model.lambda_cl = parse_double(key, value);
  else if (key == "tau") model.tau = parse_double(key, value);
  else if (key == "aug") model.aug = aug_from_string(value);
  else if (key == "pi") model.pi_kind = pi_kind_from_string(value);
  else if (key == "epochs") model.epochs = parse_int(key, value);
  else if (key == "batch-size") model.batch_size = parse_int(key, value);
  else if (key == "normalize-embeddings") model.normalize_embeddings = parse_bool(key, value);
  else if (key == "rounds") rounds = parse_int(key, value);
  else if (key == "fresh-negatives") fresh_negatives = parse_bool(key, value);
  else if (key == "pooled-minmax") pooled_minmax = parse_bool(key, value);
  else if (key == "jobs") jobs = int(parse_int(key, value));
  else if (key == "n-nodes") n_nodes = parse_int(key, value);
  else if (key == "n-features") n_features = int(parse_int(key, value));
  else if (key == "communities") communities = int(parse_int(key, value));
  else if (key == "variants") variants = value;
  else if (key == "axis") axis = value;
  else if (key == "values") values = value;
  else if (key == "seeds") seeds = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> read_config_pairs(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    pairs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return pairs;
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  for (const auto& [key, value] : read_config_pairs(path)) cfg.apply(key, value);
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["edges"] = edges;
  j["features"] = features;
  j["labels"] = labels;
  j["out-dir"] = out_dir;
  j["checkpoint"] = checkpoint;
  j["scores"] = scores;
  j["seed"] = seed;
  j["cliques"] = inject.clique_count;
  j["clique-size"] = inject.clique_size;
  j["attr-anomalies"] = inject.attr_anomaly_count;
  j["candidate-pool"] = inject.candidate_pool;
  j["subgraph-size"] = rwr.subgraph_size;
  j["restart-prob"] = rwr.restart_prob;
  j["max-steps"] = rwr.effective_max_steps();
  j["hidden-dim"] = model.hidden_dim;
  j["layers"] = model.encoder_layers;
  j["alpha"] = model.alpha;
  j["lambda"] = model.lambda_cl;
  j["tau"] = model.tau;
  j["aug"] = to_string(model.aug);
  j["pi"] = to_string(model.pi_kind);
  j["epochs"] = model.epochs;
  j["batch-size"] = model.batch_size;
  j["normalize-embeddings"] = model.normalize_embeddings;
  j["rounds"] = rounds;
  j["fresh-negatives"] = fresh_negatives;
  j["pooled-minmax"] = pooled_minmax;
  j["jobs"] = jobs;
  j["n-nodes"] = n_nodes;
  j["n-features"] = n_features;
  j["communities"] = communities;
  j["variants"] = variants;
  j["axis"] = axis;
  j["values"] = values;
  j["seeds"] = seeds;
  return j;
}

std::vector<std::uint64_t> RunConfig::seed_list() const {
  std::vector<std::uint64_t> out;
  for (const std::string& item : split_csv(seeds)) out.push_back(parse_uint("seeds", item));
  if (out.empty()) out.push_back(seed);
  return out;
}

std::vector<Variant> RunConfig::variant_list() const {
  std::vector<Variant> out;
  for (const std::string& item : split_csv(variants)) out.push_back(variant_from_string(item));
  if (out.empty()) throw ConfigError("key 'variants': empty list");
  return out;
}

std::vector<std::string> RunConfig::value_list() const { return split_csv(values); }

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::filesystem::path& out_dir) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = cfg.to_json();
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest: " + (out_dir / "manifest.json").string());
  out << j.dump(2) << '\n';
}

}  // namespace dslad
