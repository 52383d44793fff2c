#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sca/ctfidf.hpp"
#include "sca/density_cluster.hpp"
#include "sca/embedding_store.hpp"
#include "sca/reducer.hpp"
#include "sca/text.hpp"

namespace sca {

enum class ClusterOrder { ascending_label, descending_size };
enum class ResidualNormKind { spectral, frobenius };

// Stopping criteria, checked in this order.
enum class StopReason { none, fixed_iterations, new_clusters, residual_norm };

// "F", "NC-S", "RN" (empty for none).
std::string stop_reason_code(StopReason reason);
StopReason parse_stop_reason(const std::string& code);

struct ScaConfig {
  double alpha = 0.0;  // decomposition gate on cosine similarity
  double mu = 1.0;     // fraction of the projection removed
  double theta = 0.5;  // merge threshold on TOP-10 token overlap
  std::size_t max_iterations = 10;     // I
  std::size_t stop_window = 2;         // S
  std::size_t stop_new_clusters = 5;   // T
  double stop_residual_norm = 0.01;    // M
  ResidualNormKind residual_norm = ResidualNormKind::spectral;
  ReducerConfig reducer;
  ClusterConfig cluster;
  std::uint64_t seed = 42;
  ClusterOrder order = ClusterOrder::ascending_label;
  std::size_t top_n_tokens = 10;
  std::size_t assign_top_k = 3;
  // Activations at or below this magnitude are not assigned (0 keeps all
  // nonzero ones).
  double activation_threshold = 0.0;

  void validate() const;
};

struct SemanticComponent {
  int id = 0;
  int iteration = 1;  // 1-based
  int cluster_label = -1;
  std::size_t cluster_size = 0;
  std::vector<float> vector;  // unit length
  std::vector<std::string> tokens;
  std::vector<double> token_weights;
  std::size_t medoid_index = 0;
  std::string medoid_doc_id;
  std::optional<int> merged_into;
};

struct IterationRecord {
  int iteration = 1;
  std::size_t clusterable_rows = 0;
  std::size_t clusters_found = 0;
  std::size_t components_added = 0;
  std::size_t degenerate_clusters = 0;
  std::size_t rows_decomposed = 0;
  double noise_rate = 0.0;
  double residual_norm = 0.0;  // after this iteration's decompositions
  double wall_seconds = 0.0;   // not persisted
};

struct ScaModel {
  ScaConfig config;
  std::size_t n_docs = 0;
  std::size_t dim = 0;
  std::vector<std::string> doc_ids;
  std::vector<SemanticComponent> components;
  // Per iteration: flat cluster label of every document, and the component
  // created from each cluster label (-1 for skipped degenerate clusters).
  std::vector<std::vector<int>> cluster_labels;
  std::vector<std::vector<int>> cluster_components;
  std::vector<IterationRecord> iteration_log;
  std::optional<ClusterResult> first_iteration_hierarchy;
  StopReason stop_reason = StopReason::none;

  // Follows merged_into to the earliest component of the merge group.
  int representative(int component_id) const;
  // Representative topic per document for one iteration (0-based), -1 none.
  std::vector<int> topic_labels(std::size_t iteration_index) const;
  std::vector<int> active_component_ids() const;
  std::size_t merged_count() const;
  std::size_t total_clusters() const;
};

// Normalised mean of the member rows; nullopt when that mean has norm below
// 1e-9.
std::optional<std::vector<float>> compute_centroid(const EmbeddingMatrix& rows, std::span<const std::size_t> members);

// x <- x - mu <x, v> v for every row whose cosine similarity with v exceeds
// alpha. Zero rows are left alone. Returns the number of rows changed.
std::size_t decompose(EmbeddingMatrix& residuals, std::span<const float> v, double mu, double alpha);

struct RepresentationContext {
  const DocumentCorpus* corpus = nullptr;
  const Vocabulary* vocab = nullptr;
};

struct FitHooks {
  // Called around every decompose; `before` is a copy taken just prior.
  std::function<void(const EmbeddingMatrix& before, const EmbeddingMatrix& after, std::span<const float> v)>
      on_decompose;
  std::function<void(const IterationRecord&)> on_iteration;
};

double residual_norm(const EmbeddingMatrix& residuals, ResidualNormKind kind);

// One reduce -> cluster -> decompose -> represent pass on the residuals.
// model.iteration_log grows by one record (residual_norm left at 0 for the
// caller to fill).
IterationRecord run_iteration(EmbeddingMatrix& residuals, ScaModel& model, RepresentationContext ctx = {},
                              const FitHooks& hooks = {});

struct StopDecision {
  bool stop = false;
  StopReason reason = StopReason::none;
};

StopDecision should_stop(const ScaModel& model, double residual_norm_value);
StopDecision should_stop(const ScaModel& model, const EmbeddingMatrix& residuals);

// |R1 n R2| / 10.
double token_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct MergeResult {
  std::vector<int> representative;  // per component id
  std::size_t newly_merged = 0;
};

// Union of every pair whose token overlap exceeds theta; each group keeps its
// earliest component.
MergeResult merge_components(ScaModel& model, double theta);

struct Activation {
  std::vector<double> scores;    // one per component, discovery order
  std::vector<double> residual;  // what is left of x
};

Activation transform_with_residual(std::span<const float> x, const ScaModel& model);
std::vector<double> transform(std::span<const float> x, const ScaModel& model);

enum class AssignMode { cluster, activation };

struct RankedTopic {
  int topic = -1;
  double score = 0.0;
};

// Sums activations per merge group, drops zero (and sub-threshold) groups,
// sorts by |score| then id.
std::vector<RankedTopic> rank_activations(std::span<const double> activations, const ScaModel& model,
                                          std::size_t top_k);

std::vector<RankedTopic> assign_topics(std::size_t doc_index, const ScaModel& model, AssignMode mode,
                                       std::size_t top_k, const EmbeddingMatrix* embeddings = nullptr);

struct FitResult {
  ScaModel model;
  EmbeddingMatrix residuals;
};

FitResult fit(const EmbeddingMatrix& embeddings, const ScaConfig& config, RepresentationContext ctx = {},
              const FitHooks& hooks = {});

// Reduce, cluster and represent the original embeddings once, composed
// directly from the building blocks rather than through run_iteration.
struct BaselineResult {
  std::vector<int> labels;
  ClusterResult hierarchy;
  std::vector<SemanticComponent> components;
  double noise_rate = 0.0;
};
BaselineResult run_baseline(const EmbeddingMatrix& embeddings, const ScaConfig& config, RepresentationContext ctx = {});

// Seed handed to the reducer in a given 1-based iteration.
std::uint64_t iteration_seed(std::uint64_t seed, int iteration);

// JSON persistence.
nlohmann::json config_to_json(const ScaConfig& config);
ScaConfig config_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ScaModel& model);
ScaModel model_from_json(const nlohmann::json& j);
std::string serialize_model(const ScaModel& model);
void save_model(const ScaModel& model, const std::filesystem::path& path);
ScaModel load_model(const std::filesystem::path& path);

}  // namespace sca
