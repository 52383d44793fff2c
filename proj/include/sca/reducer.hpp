#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sca/embedding_store.hpp"

namespace sca {

enum class ReducerKind { identity, pca, graph_layout };
enum class DistanceMetric { cosine, euclidean };

std::string to_string(ReducerKind kind);
std::string to_string(DistanceMetric metric);
ReducerKind parse_reducer_kind(const std::string& s);
DistanceMetric parse_metric(const std::string& s);

struct ReducerConfig {
  ReducerKind kind = ReducerKind::graph_layout;
  std::size_t target_dim = 5;
  DistanceMetric metric = DistanceMetric::cosine;
  std::size_t n_neighbors = 15;
  std::size_t layout_epochs = 200;
  std::uint64_t seed = 42;
  // Exact neighbour search below this many points, random projection forest
  // above.
  std::size_t exact_knn_limit = 20000;
  double min_dist = 0.1;

  void validate(std::size_t n, std::size_t dim) const;
};

// k nearest neighbours of every point, self excluded, sorted by (distance,
// index). Row i occupies [i*k, (i+1)*k).
struct KnnGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> indices;
  std::vector<float> distances;
};

KnnGraph exact_knn(const EmbeddingMatrix& points, std::size_t k);
KnnGraph approximate_knn(const EmbeddingMatrix& points, std::size_t k, std::uint64_t seed,
                         std::size_t n_trees = 0);
KnnGraph knn_graph(const EmbeddingMatrix& points, std::size_t k, std::uint64_t seed, std::size_t exact_limit);

// Rows scaled to unit length; zero rows stay zero.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m);

// Projection onto the top principal directions of the centred data. Each axis
// is sign-fixed so that its largest-magnitude loading is positive.
EmbeddingMatrix pca_project(const EmbeddingMatrix& m, std::size_t target_dim);

// Maps embeddings into a low-dimensional Euclidean space for clustering.
// Deterministic for a fixed seed.
EmbeddingMatrix fit_transform(const EmbeddingMatrix& embeddings, const ReducerConfig& config);

// Membership strengths of the symmetrised fuzzy neighbour graph (used by the
// layout; exposed for tests). Edges are stored in both directions.
struct FuzzyGraph {
  std::vector<std::uint32_t> heads;
  std::vector<std::uint32_t> tails;
  std::vector<float> weights;
};
FuzzyGraph fuzzy_neighbor_graph(const KnnGraph& knn);

}  // namespace sca
