#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "sca/embedding_store.hpp"
#include "sca/sca_engine.hpp"

namespace sca {

struct SynthSpec {
  std::size_t n_docs = 4000;
  std::size_t dim = 64;
  std::size_t n_topics = 8;
  std::size_t min_topics_per_doc = 1;
  std::size_t max_topics_per_doc = 3;
  double coef_min = 0.5;
  double coef_max = 1.5;
  double noise_sigma = 0.02;
  std::size_t tokens_per_topic = 20;
  std::size_t tokens_per_doc = 12;
  // Orthonormal directions by default; otherwise random unit directions whose
  // pairwise angles are all at least min_angle_degrees.
  bool orthonormal = true;
  double min_angle_degrees = 45.0;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SynthDataset {
  DocumentCorpus corpus;
  EmbeddingMatrix embeddings;
  EmbeddingMatrix directions;                 // n_topics x dim, unit rows
  std::vector<std::vector<int>> topic_sets;   // sorted planted topics per document
  std::vector<std::vector<double>> coefficients;
};

// Token k of planted topic t, e.g. "t3w07".
std::string synth_token(std::size_t topic, std::size_t k);

SynthDataset generate(const SynthSpec& spec);

// documents.jsonl, embeddings.scae and truth.json in dir.
void write_synth_dataset(const SynthDataset& data, const std::filesystem::path& dir);
SynthDataset read_synth_dataset(const std::filesystem::path& dir);

struct DirectionMatch {
  int planted = -1;
  int component = -1;
  double abs_cosine = 0.0;
};

struct RecoveryScores {
  double recall = 0.0;
  double mean_best_cosine = 0.0;
  std::vector<DirectionMatch> matches;  // one per planted direction, planted order
  std::size_t single_topic_docs = 0;
  double ari = 0.0;
  double nmi = 0.0;
  double purity = 0.0;
};

// Greedy one-to-one matching by descending |cosine| between planted
// directions and active components.
std::vector<DirectionMatch> match_directions(const EmbeddingMatrix& planted,
                                             const std::vector<std::vector<float>>& components);

// Ground-truth scores on the single-topic documents use the top activation
// when embeddings are given, the first clustered topic otherwise.
RecoveryScores score_recovery(const ScaModel& model, const EmbeddingMatrix& planted,
                              const std::vector<std::vector<int>>& topic_sets,
                              const EmbeddingMatrix* embeddings = nullptr, double recall_cosine = 0.9);

}  // namespace sca
