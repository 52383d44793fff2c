#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "sca/embedding_store.hpp"

namespace sca {

struct ClusterConfig {
  std::size_t min_cluster_size = 15;
  // 0 means "same as min_cluster_size".
  std::size_t min_samples = 0;

  std::size_t effective_min_samples() const { return min_samples == 0 ? min_cluster_size : min_samples; }
  void validate() const;
};

// One cluster of the condensed tree. lambda = 1 / mutual-reachability distance.
struct HierarchyNode {
  int id = 0;
  int parent = -1;
  double lambda_birth = 0.0;
  double lambda_death = 0.0;
  std::size_t size = 0;  // members at birth
  double stability = 0.0;
  bool selected = false;
  int label = -1;  // flat label when selected
};

struct ClusterResult {
  std::vector<int> labels;       // -1 noise, else 0..n_clusters-1
  int n_clusters = 0;
  std::vector<HierarchyNode> nodes;  // nodes[0] is the root
  // Condensed-tree node each point falls out of, and the lambda at which it
  // does. -1 for points that never entered the hierarchy.
  std::vector<int> point_node;
  std::vector<double> point_lambda;

  // Every point that belongs to node (its own fall-outs plus descendants').
  std::vector<std::size_t> members(int node) const;
  std::vector<std::vector<std::size_t>> all_member_sets() const;

  // Re-indexes a result computed on a subset of rows into a space of n rows;
  // rows[i] is the position of local point i. Other rows become noise.
  ClusterResult expand(std::size_t n, const std::vector<std::size_t>& rows) const;
};

// Distance from each point to its min_samples-th nearest other point.
std::vector<double> core_distances(const EmbeddingMatrix& points, std::size_t min_samples);

inline double mutual_reachability(double distance, double core_a, double core_b) {
  return std::max({distance, core_a, core_b});
}

struct MstEdge {
  std::uint32_t a;
  std::uint32_t b;
  double weight;
};

// Prim's algorithm on the implicit dense mutual-reachability graph. Ties go
// to the lowest vertex index. Edges come out in insertion order.
std::vector<MstEdge> mutual_reachability_mst(const EmbeddingMatrix& points, const std::vector<double>& core);

// Dendrogram: node n+i merges two earlier nodes at the i-th smallest edge.
struct LinkageNode {
  int left;
  int right;
  double distance;
  std::size_t size;
};
std::vector<LinkageNode> single_linkage(std::size_t n, std::vector<MstEdge> edges);

ClusterResult condense_and_extract(const std::vector<LinkageNode>& dendrogram, std::size_t n,
                                   std::size_t min_cluster_size);

ClusterResult build_hierarchy(const EmbeddingMatrix& points, const ClusterConfig& config);

nlohmann::json hierarchy_to_json(const ClusterResult& result);
ClusterResult hierarchy_from_json(const nlohmann::json& j);

}  // namespace sca
