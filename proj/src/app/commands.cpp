#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "sca/app.hpp"
#include "sca/error.hpp"

namespace sca {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  out << text;
  if (!out) throw LoadError("failed writing " + path.string());
}

std::filesystem::path report_dir_of(const RunConfig& c) {
  if (!c.report_dir.empty()) return c.report_dir;
  if (!c.model_out.empty() && c.model_out.has_parent_path()) return c.model_out.parent_path();
  return ".";
}

void require_file(const std::filesystem::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("no ") + what + " path given");
  if (!std::filesystem::exists(p)) throw LoadError(std::string(what) + " file not found: " + p.string());
}

nlohmann::json metrics_document(const RunConfig& config, const RunMetrics& m) {
  return {{"config", render_config(config)}, {"seed", config.sca.seed}, {"metrics", metrics_to_json(m)}};
}

bool is_empty_file(const std::filesystem::path& p) {
  return std::filesystem::exists(p) && std::filesystem::file_size(p) == 0;
}

}  // namespace

int report_error(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const LoadError*>(&e) ||
      dynamic_cast<const LookupError*>(&e)) {
    return kExitInput;
  }
  return kExitInternal;
}

LoadedInputs load_inputs(const RunConfig& config) {
  require_file(config.documents, "documents");
  require_file(config.embeddings, "embeddings");
  LoadedInputs in;
  in.corpus = load_documents_jsonl(config.documents);
  in.embeddings = load_embeddings(config.embeddings);
  if (in.corpus.size() != in.embeddings.rows()) {
    throw ConfigError("documents and embeddings are misaligned: " + std::to_string(in.corpus.size()) +
                      " documents but " + std::to_string(in.embeddings.rows()) + " embedding rows");
  }
  prepare_corpus(in.corpus, config.text);
  in.vocab = build_vocabulary(in.corpus, config.text.min_df, config.text.stopwords);
  return in;
}

FitOutputs run_fit(const RunConfig& config, const LoadedInputs& inputs) {
  FitOutputs out;
  out.model = fit(inputs.embeddings, config.sca, {&inputs.corpus, &inputs.vocab}).model;
  out.metrics = compute_run_metrics(out.model, inputs.corpus, config.metrics);
  return out;
}

std::string render_fit_report(const RunConfig& config, const FitOutputs& out, const DocumentCorpus& corpus) {
  std::ostringstream r;
  r << "# SCA run\n\n```\n" << render_config(config) << "```\n\n";
  r << "Stopped by: " << stop_reason_code(out.model.stop_reason) << " after " << out.model.iteration_log.size()
    << " iterations; " << out.metrics.n_merged << " components merged.\n\n";
  r << "## Summary\n\n" << render_comparison_table(out.metrics) << "\n";
  r << "## Run statistics\n\n" << render_run_statistics(out.metrics, config.sca) << "\n";
  r << "## Iterations\n\n| Iteration | Clusters | Components | Noise | Residual norm |\n|---|---|---|---|---|\n";
  for (const auto& rec : out.model.iteration_log) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "| %d | %zu | %zu | %.3f | %.4g |\n", rec.iteration, rec.clusters_found,
                  rec.components_added, rec.noise_rate, rec.residual_norm);
    r << buf;
  }
  r << "\n## Topics\n\n" << render_topic_tables_markdown(out.model, &corpus);
  return r.str();
}

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const auto inputs = load_inputs(config);
    const auto result = run_fit(config, inputs);
    const auto dir = report_dir_of(config);
    const auto model_path = config.model_out.empty() ? dir / "model.json" : config.model_out;
    std::filesystem::create_directories(dir);
    if (model_path.has_parent_path()) std::filesystem::create_directories(model_path.parent_path());
    save_model(result.model, model_path);
    write_text(dir / "metrics.json", metrics_document(config, result.metrics).dump(1) + "\n");
    write_text(dir / "report.md", render_fit_report(config, result, inputs.corpus));
    write_text(dir / "topics.json", topic_tables_json(result.model, &inputs.corpus).dump(1) + "\n");
    out << "fitted " << result.metrics.n_components << " topics (" << result.metrics.n_components_first_iter
        << " in the first iteration), noise rate " << result.metrics.noise_rate << "\n";
    out << "model: " << model_path.string() << "\nreports: " << dir.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
}

int cmd_grid(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    if (config.grid_alpha.empty() || config.grid_mu.empty()) throw ConfigError("grid axes must be nonempty");
    const auto inputs = load_inputs(config);
    const auto report = run_grid(config, inputs);
    const auto dir = report_dir_of(config);
    std::filesystem::create_directories(dir);
    write_text(dir / "grid.md", render_grid_markdown(report));
    write_text(dir / "grid.json", grid_to_json(report).dump(1) + "\n");
    std::size_t failed = 0;
    for (const auto& c : report.cells) failed += c.error.empty() ? 0 : 1;
    out << "grid: " << report.cells.size() << " cells, " << failed << " failed; reports in " << dir.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
}

int cmd_assign(const AssignOptions& options, std::ostream& out, std::ostream& err) {
  try {
    require_file(options.model, "model");
    const auto model = load_model(options.model);

    DocumentCorpus docs;
    const bool have_docs = !options.documents.empty();
    if (have_docs) {
      require_file(options.documents, "documents");
      docs = is_empty_file(options.documents) ? DocumentCorpus{} : load_documents_jsonl(options.documents);
    }

    std::ofstream file;
    std::ostream* sink = &out;
    if (!options.output.empty()) {
      if (options.output.has_parent_path()) std::filesystem::create_directories(options.output.parent_path());
      file.open(options.output, std::ios::binary);
      if (!file) throw LoadError("cannot write " + options.output.string());
      sink = &file;
    }

    auto emit = [&](const std::string& id, const std::vector<RankedTopic>& ranked) {
      nlohmann::json line;
      line["id"] = id;
      line["topics"] = nlohmann::json::array();
      line["scores"] = nlohmann::json::array();
      line["tokens"] = nlohmann::json::array();
      for (const auto& t : ranked) {
        line["topics"].push_back(t.topic);
        line["scores"].push_back(t.score);
        line["tokens"].push_back(model.components.at(static_cast<std::size_t>(t.topic)).tokens);
      }
      *sink << line.dump() << "\n";
    };

    if (have_docs && docs.size() == 0) return kExitOk;

    if (options.mode == AssignMode::activation) {
      if (options.embeddings.empty()) throw ConfigError("activation mode needs an embeddings file");
      require_file(options.embeddings, "embeddings");
      if (is_empty_file(options.embeddings)) return kExitOk;
      const auto emb = load_embeddings(options.embeddings);
      if (emb.cols() != model.dim) {
        throw ConfigError("dimension mismatch: model has dimension " + std::to_string(model.dim) +
                          " but embeddings have " + std::to_string(emb.cols()));
      }
      if (have_docs && docs.size() != emb.rows()) {
        throw ConfigError("documents and embeddings are misaligned: " + std::to_string(docs.size()) + " vs " +
                          std::to_string(emb.rows()));
      }
      for (std::size_t d = 0; d < emb.rows(); ++d) {
        std::string id = have_docs ? docs.ids[d]
                         : (emb.rows() == model.doc_ids.size() ? model.doc_ids[d] : std::to_string(d));
        emit(id, assign_topics(d, model, AssignMode::activation, options.top_k, &emb));
      }
      return kExitOk;
    }

    if (!have_docs) {
      for (std::size_t d = 0; d < model.n_docs; ++d) {
        const std::string id = d < model.doc_ids.size() ? model.doc_ids[d] : std::to_string(d);
        emit(id, assign_topics(d, model, AssignMode::cluster, options.top_k));
      }
      return kExitOk;
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t d = 0; d < model.doc_ids.size(); ++d) index.emplace(model.doc_ids[d], d);
    for (const auto& id : docs.ids) {
      auto it = index.find(id);
      if (it == index.end()) throw LookupError("document '" + id + "' was not part of the fitted corpus");
      emit(id, assign_topics(it->second, model, AssignMode::cluster, options.top_k));
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
}

int cmd_topics(const std::filesystem::path& model_path, const std::filesystem::path& documents, bool json,
               std::size_t per_iteration, std::ostream& out, std::ostream& err) {
  try {
    require_file(model_path, "model");
    const auto model = load_model(model_path);
    std::optional<DocumentCorpus> corpus;
    if (!documents.empty()) {
      require_file(documents, "documents");
      corpus = load_documents_jsonl(documents);
    }
    const DocumentCorpus* cp = corpus ? &*corpus : nullptr;
    if (json) {
      out << topic_tables_json(model, cp).dump(1) << "\n";
    } else {
      out << render_topic_tables_markdown(model, cp, per_iteration);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
}

int cmd_metrics(const std::filesystem::path& model_path, const RunConfig& config, std::ostream& out,
                std::ostream& err) {
  try {
    require_file(model_path, "model");
    require_file(config.documents, "documents");
    const auto model = load_model(model_path);
    auto corpus = load_documents_jsonl(config.documents);
    if (corpus.size() != model.n_docs) {
      throw ConfigError("documents do not match the model: " + std::to_string(corpus.size()) + " vs " +
                        std::to_string(model.n_docs));
    }
    prepare_corpus(corpus, config.text);
    const auto metrics = compute_run_metrics(model, corpus, config.metrics);
    RunConfig echoed = config;
    echoed.sca = model.config;
    const auto doc = metrics_document(echoed, metrics);
    if (!config.report_dir.empty()) {
      std::filesystem::create_directories(config.report_dir);
      write_text(config.report_dir / "metrics.json", doc.dump(1) + "\n");
    }
    out << doc.at("metrics").dump(1) << "\n\n" << render_comparison_table(metrics) << "\n"
        << render_run_statistics(metrics, model.config);
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
}

int cmd_synth(const SynthSpec& spec, const std::filesystem::path& dir, std::ostream& out, std::ostream& err) {
  try {
    const auto data = generate(spec);
    write_synth_dataset(data, dir);
    out << "wrote " << data.corpus.size() << " documents with " << spec.n_topics << " planted topics to "
        << dir.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
}

int cmd_fetch_embed(const RunConfig& config, const std::filesystem::path& output, std::ostream& out,
                    std::ostream& err) {
  try {
    if (config.embed_endpoint.empty()) throw ConfigError("no embed_endpoint configured");
    require_file(config.documents, "documents");
    const auto corpus = load_documents_jsonl(config.documents);
    EmbedClientOptions opts;
    opts.batch_size = config.embed_batch;
    opts.bearer_token = config.embed_token;
    const auto m = fetch_embeddings(config.embed_endpoint, corpus.raw_texts, opts);
    const auto path = output.empty() ? config.embeddings : output;
    if (path.empty()) throw ConfigError("no output path for the embeddings");
    save_embeddings(m, path);
    out << "wrote " << m.rows() << "x" << m.cols() << " embeddings to " << path.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(e, err);
  }
}

}  // namespace sca
