#include "sca/sca_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "sca/error.hpp"
#include "sca/parallel.hpp"

namespace sca {
namespace {

constexpr double kDegenerateCentroid = 1e-9;

std::vector<std::size_t> clusterable_rows(const EmbeddingMatrix& m) {
  std::vector<std::size_t> rows;
  rows.reserve(m.rows());
  for (std::size_t j = 0; j < m.rows(); ++j) {
    if (!m.is_zero_row(j)) rows.push_back(j);
  }
  return rows;
}

bool can_cluster(std::size_t rows, std::size_t dim, const ScaConfig& config) {
  if (rows < std::max<std::size_t>(2, config.cluster.min_cluster_size)) return false;
  try {
    config.reducer.validate(rows, dim);
  } catch (const ConfigError&) {
    return false;
  }
  return true;
}

std::vector<std::vector<std::size_t>> members_by_label(const std::vector<int>& labels, int n_clusters) {
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(std::max(0, n_clusters)));
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] >= 0) members[static_cast<std::size_t>(labels[j])].push_back(j);
  }
  return members;
}

std::vector<int> processing_order(const std::vector<std::vector<std::size_t>>& members, ClusterOrder order) {
  std::vector<int> labels(members.size());
  std::iota(labels.begin(), labels.end(), 0);
  if (order == ClusterOrder::descending_size) {
    std::stable_sort(labels.begin(), labels.end(), [&](int a, int b) {
      return members[static_cast<std::size_t>(a)].size() > members[static_cast<std::size_t>(b)].size();
    });
  }
  return labels;
}

double noise_fraction(const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  const auto noise = std::count(labels.begin(), labels.end(), -1);
  return static_cast<double>(noise) / static_cast<double>(labels.size());
}

// Fills tokens of the components created from this labelling.
void represent(std::vector<SemanticComponent>& components, std::span<const int> new_ids, const std::vector<int>& labels,
               const RepresentationContext& ctx, std::size_t top_n) {
  if (!ctx.corpus || !ctx.vocab || new_ids.empty()) return;
  const auto weights = ctfidf_weights(*ctx.corpus, labels, *ctx.vocab);
  const auto reps = top_tokens(weights, *ctx.vocab, top_n);
  std::map<int, const TopicRepresentation*> by_label;
  for (const auto& r : reps) by_label[r.topic_id] = &r;
  for (int id : new_ids) {
    auto& comp = components[static_cast<std::size_t>(id)];
    if (auto it = by_label.find(comp.cluster_label); it != by_label.end()) {
      comp.tokens = it->second->top_tokens;
      comp.token_weights = it->second->token_weights;
    }
  }
}

std::string doc_id_for(const RepresentationContext& ctx, const std::vector<std::string>& ids, std::size_t index) {
  if (ctx.corpus && index < ctx.corpus->ids.size()) return ctx.corpus->ids[index];
  if (index < ids.size()) return ids[index];
  return std::to_string(index);
}

// Centroids and decompositions for one labelling, in processing order.
// Returns ids of new components; cluster_components receives label -> id.
std::vector<int> extract_components(EmbeddingMatrix& residuals, const std::vector<int>& labels, int n_clusters,
                                    int iteration, const ScaConfig& config, std::vector<SemanticComponent>& components,
                                    std::vector<int>& cluster_components, std::size_t& degenerate,
                                    std::size_t& rows_decomposed, const FitHooks& hooks) {
  const auto members = members_by_label(labels, n_clusters);
  cluster_components.assign(members.size(), -1);
  std::vector<int> created;
  for (int label : processing_order(members, config.order)) {
    const auto& rows = members[static_cast<std::size_t>(label)];
    auto centroid = compute_centroid(residuals, rows);
    if (!centroid) {
      spdlog::info("iteration {}: cluster {} has a degenerate centroid, skipped", iteration, label);
      ++degenerate;
      continue;
    }
    SemanticComponent comp;
    comp.id = static_cast<int>(components.size());
    comp.iteration = iteration;
    comp.cluster_label = label;
    comp.cluster_size = rows.size();
    comp.medoid_index = medoid(residuals, rows, *centroid);
    comp.vector = std::move(*centroid);
    cluster_components[static_cast<std::size_t>(label)] = comp.id;
    created.push_back(comp.id);
    components.push_back(std::move(comp));

    const auto& v = components.back().vector;
    if (hooks.on_decompose) {
      const EmbeddingMatrix before = residuals;
      rows_decomposed += decompose(residuals, v, config.mu, config.alpha);
      hooks.on_decompose(before, residuals, v);
    } else {
      rows_decomposed += decompose(residuals, v, config.mu, config.alpha);
    }
  }
  return created;
}

}  // namespace

std::string stop_reason_code(StopReason reason) {
  switch (reason) {
    case StopReason::fixed_iterations: return "F";
    case StopReason::new_clusters: return "NC-S";
    case StopReason::residual_norm: return "RN";
    case StopReason::none: break;
  }
  return "";
}

StopReason parse_stop_reason(const std::string& code) {
  if (code == "F") return StopReason::fixed_iterations;
  if (code == "NC-S") return StopReason::new_clusters;
  if (code == "RN") return StopReason::residual_norm;
  return StopReason::none;
}

void ScaConfig::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
  };
  unit(alpha, "alpha");
  unit(mu, "mu");
  unit(theta, "theta");
  if (max_iterations < 1) throw ConfigError("max_iterations (I) must be at least 1");
  if (stop_window < 1) throw ConfigError("stop_window (S) must be at least 1");
  if (!(stop_residual_norm >= 0.0)) throw ConfigError("stop_residual_norm (M) must be non-negative");
  if (top_n_tokens < 1) throw ConfigError("top_n_tokens must be at least 1");
  cluster.validate();
}

int ScaModel::representative(int component_id) const {
  int id = component_id;
  while (id >= 0 && static_cast<std::size_t>(id) < components.size()) {
    const auto& next = components[static_cast<std::size_t>(id)].merged_into;
    if (!next || *next == id) break;
    id = *next;
  }
  return id;
}

std::vector<int> ScaModel::topic_labels(std::size_t iteration_index) const {
  const auto& labels = cluster_labels.at(iteration_index);
  const auto& map = cluster_components.at(iteration_index);
  std::vector<int> out(labels.size(), -1);
  for (std::size_t d = 0; d < labels.size(); ++d) {
    const int l = labels[d];
    if (l < 0 || static_cast<std::size_t>(l) >= map.size()) continue;
    const int comp = map[static_cast<std::size_t>(l)];
    out[d] = comp < 0 ? -1 : representative(comp);
  }
  return out;
}

std::vector<int> ScaModel::active_component_ids() const {
  std::vector<int> ids;
  for (const auto& c : components) {
    if (!c.merged_into) ids.push_back(c.id);
  }
  return ids;
}

std::size_t ScaModel::merged_count() const {
  return static_cast<std::size_t>(
      std::count_if(components.begin(), components.end(), [](const auto& c) { return c.merged_into.has_value(); }));
}

std::size_t ScaModel::total_clusters() const {
  std::size_t total = 0;
  for (const auto& r : iteration_log) total += r.clusters_found;
  return total;
}

std::optional<std::vector<float>> compute_centroid(const EmbeddingMatrix& rows, std::span<const std::size_t> members) {
  if (members.empty()) return std::nullopt;
  const std::size_t d = rows.cols();
  std::vector<double> sum(d, 0.0);
  for (std::size_t j : members) {
    const auto r = rows.row(j);
    for (std::size_t c = 0; c < d; ++c) sum[c] += r[c];
  }
  double nrm = 0.0;
  for (auto& s : sum) {
    s /= static_cast<double>(members.size());
    nrm += s * s;
  }
  nrm = std::sqrt(nrm);
  if (nrm < kDegenerateCentroid) return std::nullopt;
  std::vector<float> out(d);
  for (std::size_t c = 0; c < d; ++c) out[c] = static_cast<float>(sum[c] / nrm);
  return out;
}

std::size_t decompose(EmbeddingMatrix& residuals, std::span<const float> v, double mu, double alpha) {
  const std::size_t n = residuals.rows();
  const double vnorm = l2_norm(v);
  if (vnorm <= 0.0) throw DegenerateVectorError("decompose along a zero vector");
  std::vector<char> changed(n, 0);
  parallel_for(0, n, [&](std::size_t j) {
    if (residuals.is_zero_row(j)) return;
    const double proj = dot(residuals.row(j), v) / vnorm;
    const double cosine = std::clamp(proj / residuals.norm(j), -1.0, 1.0);
    if (!(cosine > alpha)) return;
    const double coeff = mu * proj / vnorm;
    residuals.update_row(j, [&](std::span<float> x) {
      for (std::size_t c = 0; c < x.size(); ++c) x[c] = static_cast<float>(x[c] - coeff * v[c]);
    });
    changed[j] = 1;
  }, 512);
  return static_cast<std::size_t>(std::count(changed.begin(), changed.end(), 1));
}

double residual_norm(const EmbeddingMatrix& residuals, ResidualNormKind kind) {
  return kind == ResidualNormKind::spectral ? spectral_norm(residuals) : frobenius_norm(residuals);
}

std::uint64_t iteration_seed(std::uint64_t seed, int iteration) {
  if (iteration <= 1) return seed;
  // splitmix64 step
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(iteration);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

IterationRecord run_iteration(EmbeddingMatrix& residuals, ScaModel& model, RepresentationContext ctx,
                              const FitHooks& hooks) {
  const auto start = std::chrono::steady_clock::now();
  const ScaConfig& config = model.config;
  const std::size_t n = residuals.rows();
  IterationRecord record;
  record.iteration = static_cast<int>(model.iteration_log.size()) + 1;

  const auto rows = clusterable_rows(residuals);
  record.clusterable_rows = rows.size();

  ClusterResult clusters;
  if (can_cluster(rows.size(), residuals.cols(), config)) {
    ReducerConfig reducer = config.reducer;
    reducer.seed = iteration_seed(config.seed, record.iteration);
    const auto reduced = fit_transform(residuals.select_rows(rows), reducer);
    clusters = build_hierarchy(reduced, config.cluster).expand(n, rows);
  } else {
    clusters.labels.assign(n, -1);
    clusters.point_node.assign(n, -1);
    clusters.point_lambda.assign(n, 0.0);
    clusters.nodes.push_back(HierarchyNode{0, -1, 0.0, 0.0, rows.size(), 0.0, false, -1});
  }
  record.clusters_found = static_cast<std::size_t>(clusters.n_clusters);

  std::vector<int> cluster_components;
  const auto created = extract_components(residuals, clusters.labels, clusters.n_clusters, record.iteration, config,
                                          model.components, cluster_components, record.degenerate_clusters,
                                          record.rows_decomposed, hooks);
  for (int id : created) {
    auto& comp = model.components[static_cast<std::size_t>(id)];
    comp.medoid_doc_id = doc_id_for(ctx, model.doc_ids, comp.medoid_index);
  }
  represent(model.components, created, clusters.labels, ctx, config.top_n_tokens);
  record.components_added = created.size();
  record.noise_rate = noise_fraction(clusters.labels);

  model.cluster_labels.push_back(clusters.labels);
  model.cluster_components.push_back(std::move(cluster_components));
  if (record.iteration == 1) model.first_iteration_hierarchy = std::move(clusters);
  record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  model.iteration_log.push_back(record);
  return record;
}

StopDecision should_stop(const ScaModel& model, double residual_norm_value) {
  const ScaConfig& config = model.config;
  const std::size_t done = model.iteration_log.size();
  if (done >= config.max_iterations) return {true, StopReason::fixed_iterations};
  if (done >= config.stop_window) {
    std::size_t recent = 0;
    for (std::size_t k = done - config.stop_window; k < done; ++k) recent += model.iteration_log[k].clusters_found;
    if (recent < config.stop_new_clusters) return {true, StopReason::new_clusters};
  }
  if (residual_norm_value < config.stop_residual_norm) return {true, StopReason::residual_norm};
  return {};
}

StopDecision should_stop(const ScaModel& model, const EmbeddingMatrix& residuals) {
  return should_stop(model, residual_norm(residuals, model.config.residual_norm));
}

double token_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t shared = 0;
  for (const auto& t : a) {
    if (std::find(b.begin(), b.end(), t) != b.end()) ++shared;
  }
  return static_cast<double>(shared) / 10.0;
}

MergeResult merge_components(ScaModel& model, double theta) {
  const std::size_t k = model.components.size();
  std::vector<int> parent(k);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (token_overlap(model.components[i].tokens, model.components[j].tokens) > theta) {
        const int ri = find(static_cast<int>(i));
        const int rj = find(static_cast<int>(j));
        if (ri != rj) parent[static_cast<std::size_t>(std::max(ri, rj))] = std::min(ri, rj);
      }
    }
  }
  MergeResult result;
  result.representative.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const int rep = find(static_cast<int>(i));
    result.representative[i] = rep;
    auto& comp = model.components[i];
    const std::optional<int> target = rep == static_cast<int>(i) ? std::nullopt : std::optional<int>(rep);
    if (target != comp.merged_into) {
      if (target) ++result.newly_merged;
      comp.merged_into = target;
    }
  }
  return result;
}

Activation transform_with_residual(std::span<const float> x, const ScaModel& model) {
  Activation out;
  out.scores.assign(model.components.size(), 0.0);
  out.residual.assign(x.begin(), x.end());
  auto norm_of = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double e : v) acc += e * e;
    return std::sqrt(acc);
  };
  double rnorm = norm_of(out.residual);
  for (std::size_t i = 0; i < model.components.size(); ++i) {
    if (rnorm < kNegligibleNorm) break;
    const auto& v = model.components[i].vector;
    double proj = 0.0;
    for (std::size_t c = 0; c < v.size(); ++c) proj += out.residual[c] * static_cast<double>(v[c]);
    const double cosine = std::clamp(proj / rnorm, -1.0, 1.0);
    if (!(cosine > model.config.alpha)) continue;
    const double a = model.config.mu * proj;
    out.scores[i] = a;
    for (std::size_t c = 0; c < v.size(); ++c) out.residual[c] -= a * static_cast<double>(v[c]);
    rnorm = norm_of(out.residual);
  }
  return out;
}

std::vector<double> transform(std::span<const float> x, const ScaModel& model) {
  if (x.size() != model.dim && !model.components.empty() && x.size() != model.components.front().vector.size()) {
    throw ConfigError("transform: vector dimension " + std::to_string(x.size()) + " does not match model dimension " +
                      std::to_string(model.dim));
  }
  return transform_with_residual(x, model).scores;
}

std::vector<RankedTopic> rank_activations(std::span<const double> activations, const ScaModel& model,
                                          std::size_t top_k) {
  std::map<int, double> grouped;
  for (std::size_t i = 0; i < activations.size(); ++i) {
    if (activations[i] == 0.0) continue;
    grouped[model.representative(static_cast<int>(i))] += activations[i];
  }
  std::vector<RankedTopic> ranked;
  for (const auto& [topic, score] : grouped) {
    if (score == 0.0 || std::abs(score) <= model.config.activation_threshold) continue;
    ranked.push_back({topic, score});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedTopic& a, const RankedTopic& b) {
    if (std::abs(a.score) != std::abs(b.score)) return std::abs(a.score) > std::abs(b.score);
    return a.topic < b.topic;
  });
  if (ranked.size() > top_k) ranked.resize(top_k);
  return ranked;
}

std::vector<RankedTopic> assign_topics(std::size_t doc_index, const ScaModel& model, AssignMode mode,
                                       std::size_t top_k, const EmbeddingMatrix* embeddings) {
  if (mode == AssignMode::cluster) {
    if (doc_index >= model.n_docs) throw LookupError("unknown document index " + std::to_string(doc_index));
    std::vector<RankedTopic> out;
    for (std::size_t it = 0; it < model.cluster_labels.size(); ++it) {
      const int label = model.cluster_labels[it][doc_index];
      if (label < 0) continue;
      const int comp = model.cluster_components[it][static_cast<std::size_t>(label)];
      if (comp < 0) continue;
      const int rep = model.representative(comp);
      if (std::none_of(out.begin(), out.end(), [rep](const RankedTopic& t) { return t.topic == rep; })) {
        out.push_back({rep, 1.0});
      }
    }
    return out;
  }
  if (!embeddings) throw ConfigError("activation assignment needs the document embeddings");
  if (doc_index >= embeddings->rows()) throw LookupError("unknown document index " + std::to_string(doc_index));
  const auto a = transform(embeddings->row(doc_index), model);
  return rank_activations(a, model, top_k);
}

FitResult fit(const EmbeddingMatrix& embeddings, const ScaConfig& config, RepresentationContext ctx,
              const FitHooks& hooks) {
  config.validate();
  if (embeddings.empty()) throw ConfigError("cannot fit an empty embedding matrix");
  if (ctx.corpus && ctx.corpus->size() != embeddings.rows()) {
    throw ConfigError("corpus has " + std::to_string(ctx.corpus->size()) + " documents but embeddings have " +
                      std::to_string(embeddings.rows()) + " rows");
  }
  const std::size_t usable = embeddings.rows() - embeddings.count_zero_rows();
  if (usable < embeddings.rows()) {
    spdlog::warn("{} zero-norm embedding rows are excluded from clustering", embeddings.rows() - usable);
  }
  config.reducer.validate(usable, embeddings.cols());

  FitResult result{ScaModel{}, embeddings};
  ScaModel& model = result.model;
  model.config = config;
  model.n_docs = embeddings.rows();
  model.dim = embeddings.cols();
  if (ctx.corpus) model.doc_ids = ctx.corpus->ids;

  while (true) {
    run_iteration(result.residuals, model, ctx, hooks);
    const double norm = residual_norm(result.residuals, config.residual_norm);
    model.iteration_log.back().residual_norm = norm;
    const auto& rec = model.iteration_log.back();
    spdlog::info("iteration {}: {} clusters, {} components, noise {:.3f}, residual norm {:.4g}", rec.iteration,
                 rec.clusters_found, rec.components_added, rec.noise_rate, norm);
    if (hooks.on_iteration) hooks.on_iteration(rec);
    const auto decision = should_stop(model, norm);
    if (decision.stop) {
      model.stop_reason = decision.reason;
      break;
    }
  }
  merge_components(model, config.theta);
  return result;
}

BaselineResult run_baseline(const EmbeddingMatrix& embeddings, const ScaConfig& config, RepresentationContext ctx) {
  config.validate();
  BaselineResult out;
  const std::size_t n = embeddings.rows();
  const auto rows = clusterable_rows(embeddings);
  config.reducer.validate(rows.size(), embeddings.cols());

  ReducerConfig reducer = config.reducer;
  reducer.seed = iteration_seed(config.seed, 1);
  const auto reduced = fit_transform(embeddings.select_rows(rows), reducer);
  out.hierarchy = build_hierarchy(reduced, config.cluster).expand(n, rows);
  out.labels = out.hierarchy.labels;
  out.noise_rate = noise_fraction(out.labels);

  EmbeddingMatrix working = embeddings;
  std::vector<int> cluster_components;
  std::size_t degenerate = 0, decomposed = 0;
  const auto created = extract_components(working, out.labels, out.hierarchy.n_clusters, 1, config, out.components,
                                          cluster_components, degenerate, decomposed, {});
  std::vector<std::string> ids = ctx.corpus ? ctx.corpus->ids : std::vector<std::string>{};
  for (auto& comp : out.components) comp.medoid_doc_id = doc_id_for(ctx, ids, comp.medoid_index);
  represent(out.components, created, out.labels, ctx, config.top_n_tokens);
  return out;
}

}  // namespace sca
