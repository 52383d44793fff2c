#include "sca/ctfidf.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <spdlog/spdlog.h>

#include "sca/error.hpp"

namespace sca {

ClassTermWeights ctfidf_weights(const DocumentCorpus& corpus, std::span<const int> labels, const Vocabulary& vocab) {
  if (labels.size() != corpus.tokens.size()) {
    throw ConfigError("c-TF-IDF: " + std::to_string(labels.size()) + " labels for " +
                      std::to_string(corpus.tokens.size()) + " tokenized documents");
  }
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  ClassTermWeights out;
  if (max_label < 0) return out;

  const std::size_t n_classes = static_cast<std::size_t>(max_label) + 1;
  std::vector<std::map<std::size_t, double>> tf(n_classes);
  std::vector<double> class_tokens(n_classes, 0.0);
  for (std::size_t d = 0; d < labels.size(); ++d) {
    if (labels[d] < 0) continue;
    auto& row = tf[static_cast<std::size_t>(labels[d])];
    for (const auto& tok : corpus.tokens[d]) {
      if (auto idx = vocab.index_of(tok)) {
        row[*idx] += 1.0;
        class_tokens[static_cast<std::size_t>(labels[d])] += 1.0;
      }
    }
  }
  std::vector<double> freq(vocab.size(), 0.0);
  double total = 0.0;
  for (const auto& row : tf) {
    for (const auto& [t, c] : row) freq[t] += c;
  }
  for (double c : class_tokens) total += c;
  const double avg = total / static_cast<double>(n_classes);

  out.class_ids.reserve(n_classes);
  out.rows.reserve(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (tf[c].empty()) spdlog::debug("c-TF-IDF: class {} has no vocabulary tokens", c);
    std::vector<std::pair<std::size_t, double>> row;
    row.reserve(tf[c].size());
    for (const auto& [t, count] : tf[c]) row.emplace_back(t, count * std::log(1.0 + avg / freq[t]));
    out.class_ids.push_back(static_cast<int>(c));
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<TopicRepresentation> top_tokens(const ClassTermWeights& weights, const Vocabulary& vocab, std::size_t k) {
  std::vector<TopicRepresentation> reps;
  reps.reserve(weights.rows.size());
  for (std::size_t c = 0; c < weights.rows.size(); ++c) {
    auto row = weights.rows[c];
    std::sort(row.begin(), row.end(), [&](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return vocab.token(a.first) < vocab.token(b.first);
    });
    TopicRepresentation rep;
    rep.topic_id = weights.class_ids[c];
    const std::size_t take = std::min(k, row.size());
    for (std::size_t r = 0; r < take; ++r) {
      rep.top_tokens.push_back(vocab.token(row[r].first));
      rep.token_weights.push_back(row[r].second);
    }
    reps.push_back(std::move(rep));
  }
  return reps;
}

std::size_t medoid(const EmbeddingMatrix& embeddings, std::span<const std::size_t> members,
                   std::span<const float> centroid) {
  if (members.empty()) throw ConfigError("medoid of an empty cluster");
  const double cn = l2_norm(centroid);
  std::size_t best = members.front();
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t idx : members) {
    const double rn = embeddings.norm(idx);
    const double sim = (rn > 0.0 && cn > 0.0) ? dot(embeddings.row(idx), centroid) / (rn * cn) : -2.0;
    if (sim > best_sim) {
      best_sim = sim;
      best = idx;
    }
  }
  return best;
}

}  // namespace sca
