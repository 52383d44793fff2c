#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sca/app.hpp"
#include "sca/error.hpp"
#include "sca/parallel.hpp"

namespace sca {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // shortest form that round-trips
  for (int p = 1; p <= 17; ++p) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", p, v);
    if (std::stod(shorter) == v) return shorter;
  }
  return buf;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + num(v[i]);
  return out;
}

const std::string* find_key(const KeyValues& kv, const std::string& key) {
  const std::string* found = nullptr;
  for (const auto& [k, v] : kv) {
    if (k == key) found = &v;
  }
  return found;
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return out;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_key_values(in);
}

const std::map<std::string, KeyValues>& presets() {
  static const std::map<std::string, KeyValues> table = {
      {"trump", {{"alpha", "0.20"}, {"mu", "0.95"}, {"min_cluster_size", "100"}, {"min_samples", "50"}, {"theta", "0.5"}}},
      {"hausa", {{"alpha", "0.10"}, {"mu", "1.00"}, {"min_cluster_size", "300"}, {"min_samples", "300"}, {"theta", "0.5"}}},
      {"chinese",
       {{"alpha", "0.10"}, {"mu", "1.00"}, {"min_cluster_size", "300"}, {"min_samples", "300"}, {"theta", "0.5"}}},
  };
  return table;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  auto& s = c.sca;
  if (key == "documents") c.documents = value;
  else if (key == "embeddings") c.embeddings = value;
  else if (key == "model_out") c.model_out = value;
  else if (key == "report_dir") c.report_dir = value;
  else if (key == "preset") {
    if (!value.empty() && !presets().count(value)) throw ConfigError("unknown preset '" + value + "'");
    c.preset = value;
  }
  else if (key == "alpha") s.alpha = to_double(key, value);
  else if (key == "mu") s.mu = to_double(key, value);
  else if (key == "theta") s.theta = to_double(key, value);
  else if (key == "max_iterations") s.max_iterations = to_uint(key, value);
  else if (key == "stop_window") s.stop_window = to_uint(key, value);
  else if (key == "stop_new_clusters") s.stop_new_clusters = to_uint(key, value);
  else if (key == "stop_residual_norm") s.stop_residual_norm = to_double(key, value);
  else if (key == "residual_norm") {
    if (value == "spectral") s.residual_norm = ResidualNormKind::spectral;
    else if (value == "frobenius") s.residual_norm = ResidualNormKind::frobenius;
    else throw ConfigError("residual_norm must be spectral or frobenius");
  }
  else if (key == "seed") s.seed = to_uint(key, value);
  else if (key == "order") {
    if (value == "ascending_label") s.order = ClusterOrder::ascending_label;
    else if (value == "descending_size") s.order = ClusterOrder::descending_size;
    else throw ConfigError("order must be ascending_label or descending_size");
  }
  else if (key == "top_n_tokens") s.top_n_tokens = to_uint(key, value);
  else if (key == "assign_top_k") s.assign_top_k = to_uint(key, value);
  else if (key == "activation_threshold") s.activation_threshold = to_double(key, value);
  else if (key == "reducer") s.reducer.kind = parse_reducer_kind(value);
  else if (key == "target_dim") s.reducer.target_dim = to_uint(key, value);
  else if (key == "metric") s.reducer.metric = parse_metric(value);
  else if (key == "n_neighbors") s.reducer.n_neighbors = to_uint(key, value);
  else if (key == "layout_epochs") s.reducer.layout_epochs = to_uint(key, value);
  else if (key == "exact_knn_limit") s.reducer.exact_knn_limit = to_uint(key, value);
  else if (key == "min_dist") s.reducer.min_dist = to_double(key, value);
  else if (key == "min_cluster_size") s.cluster.min_cluster_size = to_uint(key, value);
  else if (key == "min_samples") s.cluster.min_samples = to_uint(key, value);
  else if (key == "lowercase") c.text.lowercase = to_bool(key, value);
  else if (key == "min_df") c.text.min_df = to_uint(key, value);
  else if (key == "stopwords") c.text.stopwords = split_list(value);
  else if (key == "gamma") c.metrics.gamma = to_double(key, value);
  else if (key == "epsilon") c.metrics.epsilon = to_double(key, value);
  else if (key == "top_k_topics") c.metrics.top_k_topics = to_uint(key, value);
  else if (key == "grid_alpha") c.grid_alpha = to_doubles(key, value);
  else if (key == "grid_mu") c.grid_mu = to_doubles(key, value);
  else if (key == "grid_workers") c.grid_workers = to_uint(key, value);
  else if (key == "embed_endpoint") c.embed_endpoint = value;
  else if (key == "embed_batch") c.embed_batch = to_uint(key, value);
  else if (key == "embed_token") c.embed_token = value;
  else if (key == "threads") set_worker_count(to_uint(key, value));
  else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig resolve_config(const KeyValues& file, const KeyValues& overrides) {
  RunConfig c;
  const std::string* preset = find_key(overrides, "preset");
  if (!preset) preset = find_key(file, "preset");
  if (preset && !preset->empty()) {
    auto it = presets().find(*preset);
    if (it == presets().end()) throw ConfigError("unknown preset '" + *preset + "'");
    for (const auto& [k, v] : it->second) apply_setting(c, k, v);
    c.preset = *preset;
  }
  for (const auto& [k, v] : file) {
    if (k != "preset") apply_setting(c, k, v);
  }
  for (const auto& [k, v] : overrides) {
    if (k != "preset") apply_setting(c, k, v);
  }
  c.sca.reducer.seed = c.sca.seed;
  return c;
}

std::string render_config(const RunConfig& c) {
  const auto& s = c.sca;
  std::ostringstream out;
  auto line = [&](const char* k, const std::string& v) { out << k << " = " << v << "\n"; };
  if (!c.preset.empty()) line("preset", c.preset);
  if (!c.documents.empty()) line("documents", c.documents.string());
  if (!c.embeddings.empty()) line("embeddings", c.embeddings.string());
  if (!c.model_out.empty()) line("model_out", c.model_out.string());
  if (!c.report_dir.empty()) line("report_dir", c.report_dir.string());
  line("alpha", num(s.alpha));
  line("mu", num(s.mu));
  line("theta", num(s.theta));
  line("max_iterations", std::to_string(s.max_iterations));
  line("stop_window", std::to_string(s.stop_window));
  line("stop_new_clusters", std::to_string(s.stop_new_clusters));
  line("stop_residual_norm", num(s.stop_residual_norm));
  line("residual_norm", s.residual_norm == ResidualNormKind::spectral ? "spectral" : "frobenius");
  line("seed", std::to_string(s.seed));
  line("order", s.order == ClusterOrder::ascending_label ? "ascending_label" : "descending_size");
  line("top_n_tokens", std::to_string(s.top_n_tokens));
  line("assign_top_k", std::to_string(s.assign_top_k));
  line("activation_threshold", num(s.activation_threshold));
  line("reducer", to_string(s.reducer.kind));
  line("target_dim", std::to_string(s.reducer.target_dim));
  line("metric", to_string(s.reducer.metric));
  line("n_neighbors", std::to_string(s.reducer.n_neighbors));
  line("layout_epochs", std::to_string(s.reducer.layout_epochs));
  line("exact_knn_limit", std::to_string(s.reducer.exact_knn_limit));
  line("min_dist", num(s.reducer.min_dist));
  line("min_cluster_size", std::to_string(s.cluster.min_cluster_size));
  line("min_samples", std::to_string(s.cluster.min_samples));
  line("lowercase", c.text.lowercase ? "true" : "false");
  line("min_df", std::to_string(c.text.min_df));
  if (!c.text.stopwords.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < c.text.stopwords.size(); ++i) joined += (i ? "," : "") + c.text.stopwords[i];
    line("stopwords", joined);
  }
  line("gamma", num(c.metrics.gamma));
  line("epsilon", num(c.metrics.epsilon));
  line("top_k_topics", std::to_string(c.metrics.top_k_topics));
  line("grid_alpha", join_doubles(c.grid_alpha));
  line("grid_mu", join_doubles(c.grid_mu));
  if (!c.embed_endpoint.empty()) line("embed_endpoint", c.embed_endpoint);
  line("embed_batch", std::to_string(c.embed_batch));
  return out.str();
}

}  // namespace sca
