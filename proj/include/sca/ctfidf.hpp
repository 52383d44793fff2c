#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sca/embedding_store.hpp"
#include "sca/text.hpp"

namespace sca {

// Sparse per-class token weights. rows[c] belongs to class_ids[c] and holds
// (vocabulary index, weight) pairs sorted by vocabulary index.
struct ClassTermWeights {
  std::vector<int> class_ids;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
};

// Class-based TF-IDF over documents grouped by label (noise excluded):
// weight(t, c) = tf(t, c) * ln(1 + A / f_t), tf counting t in the
// concatenated class documents, f_t its count over all classes, A the mean
// token count per class.
ClassTermWeights ctfidf_weights(const DocumentCorpus& corpus, std::span<const int> labels, const Vocabulary& vocab);

struct TopicRepresentation {
  int topic_id = -1;
  std::vector<std::string> top_tokens;
  std::vector<double> token_weights;
  std::string medoid_doc_id;
};

// k highest-weight tokens per class, ties broken lexicographically.
std::vector<TopicRepresentation> top_tokens(const ClassTermWeights& weights, const Vocabulary& vocab,
                                            std::size_t k = 10);

// Member with maximal cosine similarity to the centroid; ties go to the
// lowest position in members. Returns that row index.
std::size_t medoid(const EmbeddingMatrix& embeddings, std::span<const std::size_t> members,
                   std::span<const float> centroid);

}  // namespace sca
