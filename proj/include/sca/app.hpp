#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sca/metrics.hpp"
#include "sca/sca_engine.hpp"
#include "sca/synth.hpp"
#include "sca/text.hpp"

namespace sca {

enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitInput = 2 };

struct RunConfig {
  std::filesystem::path documents;
  std::filesystem::path embeddings;
  std::filesystem::path model_out;
  std::filesystem::path report_dir;
  std::string preset;
  ScaConfig sca;
  TextOptions text;
  MetricsOptions metrics;
  std::vector<double> grid_alpha{0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> grid_mu{0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0};
  std::size_t grid_workers = 0;  // 0 = worker_count()
  std::string embed_endpoint;
  std::size_t embed_batch = 64;
  std::string embed_token;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// "key = value" lines; '#' starts a comment. Later duplicates win.
KeyValues parse_key_values(std::istream& in);
KeyValues read_config_file(const std::filesystem::path& path);

// Named hyperparameter sets: "trump", "hausa", "chinese".
const std::map<std::string, KeyValues>& presets();

void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

// Defaults, then the preset named in either source, then file values, then
// overrides.
RunConfig resolve_config(const KeyValues& file, const KeyValues& overrides);

// The resolved configuration in the same key = value format.
std::string render_config(const RunConfig& config);

// Text files (JSONL documents, embeddings) loaded and checked for alignment.
struct LoadedInputs {
  DocumentCorpus corpus;
  EmbeddingMatrix embeddings;
  Vocabulary vocab;
};
LoadedInputs load_inputs(const RunConfig& config);

struct FitOutputs {
  ScaModel model;
  RunMetrics metrics;
};
FitOutputs run_fit(const RunConfig& config, const LoadedInputs& inputs);

// Human-readable report: config echo, comparison table, run statistics and
// topic tables.
std::string render_fit_report(const RunConfig& config, const FitOutputs& out, const DocumentCorpus& corpus);

struct GridCell {
  double alpha = 0.0;
  double mu = 0.0;
  std::optional<RunMetrics> metrics;
  std::string error;
};

struct GridReport {
  std::vector<double> alpha;
  std::vector<double> mu;
  std::vector<GridCell> cells;  // mu-major: cells[i * alpha.size() + j]
  std::string config;

  const GridCell& cell(std::size_t mu_index, std::size_t alpha_index) const {
    return cells[mu_index * alpha.size() + alpha_index];
  }
};

// One fit per (alpha, mu) with theta forced to 1.0, spread over a worker pool.
GridReport run_grid(const RunConfig& config, const LoadedInputs& inputs);
// The five matrices: components, diversity, noise, NPMI, CV.
std::string render_grid_markdown(const GridReport& report);
nlohmann::json grid_to_json(const GridReport& report);
GridReport grid_from_json(const nlohmann::json& j);

struct EmbedClientOptions {
  std::size_t batch_size = 64;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::seconds timeout{60};
  std::string bearer_token;
  // Replaces the real sleep between retries (tests).
  std::function<void(std::chrono::milliseconds)> sleep;
};

// POSTs {"texts": [...]} per batch and expects {"embeddings": [[...], ...]}.
EmbeddingMatrix fetch_embeddings(const std::string& endpoint, const std::vector<std::string>& texts,
                                 const EmbedClientOptions& options = {});

// Subcommands. Each returns an exit code and reports problems on err.
int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_grid(const RunConfig& config, std::ostream& out, std::ostream& err);

struct AssignOptions {
  std::filesystem::path model;
  std::filesystem::path documents;   // optional: restricts and orders output by id
  std::filesystem::path embeddings;  // required for activation mode
  std::filesystem::path output;      // empty = out stream
  AssignMode mode = AssignMode::activation;
  std::size_t top_k = 3;
};
int cmd_assign(const AssignOptions& options, std::ostream& out, std::ostream& err);

int cmd_topics(const std::filesystem::path& model, const std::filesystem::path& documents, bool json,
               std::size_t per_iteration, std::ostream& out, std::ostream& err);
int cmd_metrics(const std::filesystem::path& model, const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthSpec& spec, const std::filesystem::path& dir, std::ostream& out, std::ostream& err);
int cmd_fetch_embed(const RunConfig& config, const std::filesystem::path& output, std::ostream& out,
                    std::ostream& err);

// Maps an exception to an exit code and writes its message.
int report_error(const std::exception& e, std::ostream& err);

}  // namespace sca
