// sca: command-line front end for fitting, evaluating and applying topic models.
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "sca/app.hpp"
#include "sca/error.hpp"

namespace {

struct CommonFlags {
  std::string config_file;
  std::vector<std::string> sets;
  sca::KeyValues flags;

  void add(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_file, "key = value run configuration file");
    cmd->add_option("--set", sets, "override one setting, key=value (repeatable)");
    bind(cmd, "--documents", "documents", "JSON-lines documents");
    bind(cmd, "--embeddings", "embeddings", "embedding matrix (.scae or .csv)");
    bind(cmd, "--report-dir", "report_dir", "directory for reports");
    bind(cmd, "--preset", "preset", "trump, hausa or chinese");
    bind(cmd, "--alpha", "alpha", "decomposition gate");
    bind(cmd, "--mu", "mu", "decomposition factor");
    bind(cmd, "--seed", "seed", "random seed");
    bind(cmd, "--min-cluster-size", "min_cluster_size", "");
    bind(cmd, "--min-samples", "min_samples", "");
    bind(cmd, "--threads", "threads", "worker threads");
  }

  void bind(CLI::App* cmd, const std::string& flag, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(flag, [this, key](const std::string& v) { flags.emplace_back(key, v); },
                                          help);
  }

  sca::RunConfig resolve() const {
    sca::KeyValues overrides = flags;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw sca::ConfigError("--set expects key=value, got '" + s + "'");
      overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    const auto file = config_file.empty() ? sca::KeyValues{} : sca::read_config_file(config_file);
    return sca::resolve_config(file, overrides);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sca: multi-topic modelling of short texts from embeddings"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");

  CommonFlags fit_flags;
  auto* fit = app.add_subcommand("fit", "fit a model and write model, metrics and topic reports");
  fit_flags.add(fit);
  fit_flags.bind(fit, "--model-out", "model_out", "model JSON path");
  fit_flags.bind(fit, "--theta", "theta", "merge threshold");
  fit_flags.bind(fit, "--max-iterations", "max_iterations", "I");
  fit_flags.bind(fit, "--reducer", "reducer", "identity, pca or umap");

  CommonFlags grid_flags;
  auto* grid = app.add_subcommand("grid", "fit every (alpha, mu) combination with theta = 1.0");
  grid_flags.add(grid);
  grid_flags.bind(grid, "--grid-alpha", "grid_alpha", "comma-separated alpha values");
  grid_flags.bind(grid, "--grid-mu", "grid_mu", "comma-separated mu values");
  grid_flags.bind(grid, "--max-iterations", "max_iterations", "I");
  grid_flags.bind(grid, "--reducer", "reducer", "identity, pca or umap");

  sca::AssignOptions assign_opts;
  std::string assign_mode = "activation";
  auto* assign = app.add_subcommand("assign", "assign topics to documents as JSON lines");
  assign->add_option("--model", assign_opts.model, "model JSON")->required();
  assign->add_option("--documents", assign_opts.documents, "documents (ids)");
  assign->add_option("--embeddings", assign_opts.embeddings, "embeddings for activation mode");
  assign->add_option("--mode", assign_mode, "activation or cluster")->check(CLI::IsMember({"activation", "cluster"}));
  assign->add_option("--top-k", assign_opts.top_k, "topics per document");
  assign->add_option("-o,--output", assign_opts.output, "output JSONL (default stdout)");

  std::string topics_model, topics_docs;
  bool topics_json = false;
  std::size_t per_iteration = 10;
  auto* topics = app.add_subcommand("topics", "print the topic tables of a model");
  topics->add_option("--model", topics_model, "model JSON")->required();
  topics->add_option("--documents", topics_docs, "documents, for medoid texts");
  topics->add_flag("--json", topics_json, "JSON instead of Markdown");
  topics->add_option("--per-iteration", per_iteration, "rows per iteration table");

  CommonFlags metrics_flags;
  std::string metrics_model;
  auto* metrics = app.add_subcommand("metrics", "recompute run statistics from a model and its corpus");
  metrics_flags.add(metrics);
  metrics->add_option("--model", metrics_model, "model JSON")->required();

  sca::SynthSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with planted topics");
  synth->add_option("-o,--out", synth_out, "output directory")->required();
  synth->add_option("--n-docs", spec.n_docs);
  synth->add_option("--dim", spec.dim);
  synth->add_option("--topics", spec.n_topics);
  synth->add_option("--min-topics-per-doc", spec.min_topics_per_doc);
  synth->add_option("--max-topics-per-doc", spec.max_topics_per_doc);
  synth->add_option("--coef-min", spec.coef_min);
  synth->add_option("--coef-max", spec.coef_max);
  synth->add_option("--noise", spec.noise_sigma);
  synth->add_option("--tokens-per-topic", spec.tokens_per_topic);
  synth->add_option("--tokens-per-doc", spec.tokens_per_doc);
  synth->add_option("--min-angle", spec.min_angle_degrees, "non-orthogonal directions with this minimum angle");
  synth->add_option("--seed", spec.seed);

  CommonFlags fetch_flags;
  std::string fetch_out;
  auto* fetch = app.add_subcommand("fetch-embed", "embed documents through an external service");
  fetch_flags.add(fetch);
  fetch_flags.bind(fetch, "--endpoint", "embed_endpoint", "service URL");
  fetch_flags.bind(fetch, "--batch", "embed_batch", "texts per request");
  fetch_flags.bind(fetch, "--token", "embed_token", "bearer token");
  fetch->add_option("-o,--output", fetch_out, "output embeddings path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? sca::kExitOk : sca::kExitInput;
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("sca"));
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*fit) return sca::cmd_fit(fit_flags.resolve(), std::cout, std::cerr);
    if (*grid) return sca::cmd_grid(grid_flags.resolve(), std::cout, std::cerr);
    if (*assign) {
      assign_opts.mode = assign_mode == "cluster" ? sca::AssignMode::cluster : sca::AssignMode::activation;
      return sca::cmd_assign(assign_opts, std::cout, std::cerr);
    }
    if (*topics) return sca::cmd_topics(topics_model, topics_docs, topics_json, per_iteration, std::cout, std::cerr);
    if (*metrics) return sca::cmd_metrics(metrics_model, metrics_flags.resolve(), std::cout, std::cerr);
    if (*synth) {
      if (*synth->get_option("--min-angle")) spec.orthonormal = false;
      return sca::cmd_synth(spec, synth_out, std::cout, std::cerr);
    }
    if (*fetch) return sca::cmd_fetch_embed(fetch_flags.resolve(), fetch_out, std::cout, std::cerr);
  } catch (const std::exception& e) {
    return sca::report_error(e, std::cerr);
  }
  return sca::kExitInternal;
}
