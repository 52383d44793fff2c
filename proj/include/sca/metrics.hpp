#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sca/density_cluster.hpp"
#include "sca/embedding_store.hpp"
#include "sca/sca_engine.hpp"

namespace sca {

// Fraction of -1 labels.
double noise_rate(std::span<const int> labels);
// A document is noise only if it is -1 in every iteration.
double noise_rate_all_iterations(const std::vector<std::vector<int>>& per_iteration);

using TokenList = std::vector<std::string>;

// Unique tokens over total tokens across all representations.
double topic_diversity(const std::vector<TokenList>& representations);

// Jaccard overlap of two id sets; 0 when both are empty.
double sample_overlap(std::span<const std::size_t> a, std::span<const std::size_t> b);

// Mean over `later` of the best Jaccard overlap with any node of the
// hierarchy. Absent when `later` is empty.
std::optional<double> avg_max_sample_overlap(const std::vector<std::vector<std::size_t>>& later,
                                             const ClusterResult& hierarchy);

struct TokenOverlapScore {
  double count = 0.0;    // in [0, 10]
  double jaccard = 0.0;  // in [0, 1]
};
std::optional<TokenOverlapScore> avg_max_token_overlap(const std::vector<TokenList>& later,
                                                       const std::vector<TokenList>& first);

inline constexpr double kCoherenceEpsilon = 1e-12;

// Document-level occurrence statistics for coherence.
class CooccurrenceIndex {
 public:
  explicit CooccurrenceIndex(const std::vector<std::vector<std::string>>& documents);

  std::size_t documents() const noexcept { return n_docs_; }
  double probability(const std::string& token) const;
  double joint_probability(const std::string& a, const std::string& b) const;

 private:
  const std::vector<std::uint32_t>* postings(const std::string& token) const;

  std::size_t n_docs_ = 0;
  std::unordered_map<std::string, std::vector<std::uint32_t>> postings_;  // sorted doc ids
};

// log2((p_ab + eps) / (p_a p_b)) / -log2(p_ab + eps). A pair involving a token
// that never occurs takes the floor value -1.
double npmi_pair(double p_a, double p_b, double p_ab, double eps = kCoherenceEpsilon);

// Per-topic mean over unordered token pairs, then mean over topics with at
// least two tokens. gamma applies sign(x)|x|^gamma to each pair value.
double coherence(const std::vector<TokenList>& representations, const CooccurrenceIndex& index, double gamma,
                 double eps = kCoherenceEpsilon);
double npmi_coherence(const std::vector<TokenList>& representations, const CooccurrenceIndex& index,
                      double eps = kCoherenceEpsilon);
double cv_coherence(const std::vector<TokenList>& representations, const CooccurrenceIndex& index, double gamma = 2.0,
                    double eps = kCoherenceEpsilon);

struct GroundTruthScores {
  double purity = 0.0;
  double ari = 0.0;
  double nmi = 0.0;
};

// -1 in `predicted` is an ordinary class here.
GroundTruthScores ground_truth_scores(std::span<const int> predicted, std::span<const int> truth);
double purity(std::span<const int> predicted, std::span<const int> truth);
double adjusted_rand_index(std::span<const int> predicted, std::span<const int> truth);
double normalized_mutual_information(std::span<const int> predicted, std::span<const int> truth);

// Keeps the k largest predicted classes (ties to the lower id); the rest
// become -1.
std::vector<int> restrict_to_top_k(std::span<const int> labels, std::size_t k);

// Interns string labels as consecutive ints in order of first appearance.
std::vector<int> encode_labels(const std::vector<std::optional<std::string>>& labels);

struct RunMetrics {
  std::size_t n_components = 0;
  std::size_t n_components_first_iter = 0;
  std::size_t n_clusters = 0;
  std::size_t n_merged = 0;
  double noise_rate = 0.0;
  double noise_rate_first_iter = 0.0;
  double topic_diversity = 0.0;
  double topic_diversity_first_iter = 0.0;
  double npmi = 0.0;
  double npmi_first_iter = 0.0;
  double cv = 0.0;
  double cv_first_iter = 0.0;
  std::optional<double> avg_max_sample_overlap;
  std::optional<double> avg_max_token_overlap_count;
  std::optional<double> avg_max_token_overlap_jaccard;
  std::optional<double> purity;
  std::optional<double> ari;
  std::optional<double> nmi;
};

struct MetricsOptions {
  double gamma = 2.0;
  double epsilon = kCoherenceEpsilon;
  // Restrict ground-truth scoring to the k largest topics (0 = all).
  std::size_t top_k_topics = 0;
};

// Per-document single topic for ground-truth comparison: the merged topic of
// the earliest iteration that clustered the document, else -1.
std::vector<int> primary_topic_labels(const ScaModel& model);

RunMetrics compute_run_metrics(const ScaModel& model, const DocumentCorpus& corpus,
                               const MetricsOptions& options = {});

nlohmann::json metrics_to_json(const RunMetrics& m);
RunMetrics metrics_from_json(const nlohmann::json& j);

// Two-column (BT, SCA) table with rows #Topics, Noise R., NPMI, CV, Topic D.
std::string render_comparison_table(const RunMetrics& m);
// Hyperparameters followed by the run statistics, "(1st)" rows included.
std::string render_run_statistics(const RunMetrics& m, const ScaConfig& config);

// Topic tables per iteration: id, N, top tokens, medoid text.
std::string render_topic_tables_markdown(const ScaModel& model, const DocumentCorpus* corpus,
                                         std::size_t per_iteration = 10);
nlohmann::json topic_tables_json(const ScaModel& model, const DocumentCorpus* corpus);

}  // namespace sca
