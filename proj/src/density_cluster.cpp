#include "sca/density_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sca/error.hpp"
#include "sca/parallel.hpp"

namespace sca {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double euclidean(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = static_cast<double>(a[c]) - static_cast<double>(b[c]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

double to_lambda(double distance) { return distance > 0.0 ? 1.0 / distance : kInf; }

struct DisjointSet {
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0U); }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  std::vector<std::uint32_t> parent;
};

// Leaves (points) under a dendrogram node.
void collect_points(const std::vector<LinkageNode>& tree, std::size_t n, int node, std::vector<std::size_t>& out) {
  std::vector<int> stack{node};
  while (!stack.empty()) {
    const int x = stack.back();
    stack.pop_back();
    if (x < static_cast<int>(n)) {
      out.push_back(static_cast<std::size_t>(x));
    } else {
      const auto& ln = tree[static_cast<std::size_t>(x) - n];
      stack.push_back(ln.right);
      stack.push_back(ln.left);
    }
  }
}

}  // namespace

void ClusterConfig::validate() const {
  if (min_cluster_size < 2) throw ConfigError("min_cluster_size must be at least 2");
}

std::vector<std::size_t> ClusterResult::members(int node) const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < point_node.size(); ++p) {
    for (int x = point_node[p]; x >= 0; x = nodes[static_cast<std::size_t>(x)].parent) {
      if (x == node) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> ClusterResult::all_member_sets() const {
  std::vector<std::vector<std::size_t>> sets(nodes.size());
  for (std::size_t p = 0; p < point_node.size(); ++p) {
    for (int x = point_node[p]; x >= 0; x = nodes[static_cast<std::size_t>(x)].parent) {
      sets[static_cast<std::size_t>(x)].push_back(p);
    }
  }
  return sets;
}

ClusterResult ClusterResult::expand(std::size_t n, const std::vector<std::size_t>& rows) const {
  ClusterResult out;
  out.n_clusters = n_clusters;
  out.nodes = nodes;
  out.labels.assign(n, -1);
  out.point_node.assign(n, -1);
  out.point_lambda.assign(n, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.labels[rows[i]] = labels[i];
    out.point_node[rows[i]] = point_node[i];
    out.point_lambda[rows[i]] = point_lambda[i];
  }
  return out;
}

std::vector<double> core_distances(const EmbeddingMatrix& points, std::size_t min_samples) {
  const std::size_t n = points.rows();
  if (min_samples == 0 || min_samples >= n) {
    throw ConfigError("min_samples=" + std::to_string(min_samples) + " requires more than that many points (have " +
                      std::to_string(n) + ")");
  }
  std::vector<double> core(n);
  parallel_for(0, n, [&](std::size_t i) {
    std::vector<double> dists;
    dists.reserve(n - 1);
    const auto xi = points.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dists.push_back(euclidean(xi, points.row(j)));
    }
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(min_samples - 1), dists.end());
    core[i] = dists[min_samples - 1];
  }, 64);
  return core;
}

std::vector<MstEdge> mutual_reachability_mst(const EmbeddingMatrix& points, const std::vector<double>& core) {
  const std::size_t n = points.rows();
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  edges.reserve(n - 1);
  std::vector<double> best(n, kInf);
  std::vector<std::uint32_t> from(n, 0);
  std::vector<char> in_tree(n, 0);
  std::uint32_t current = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    const auto xc = points.row(current);
    const double core_c = core[current];
    parallel_for(0, n, [&](std::size_t v) {
      if (in_tree[v]) return;
      const double w = mutual_reachability(euclidean(xc, points.row(v)), core_c, core[v]);
      if (w < best[v]) {
        best[v] = w;
        from[v] = current;
      }
    }, 4096);
    std::size_t next = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in_tree[v] && (next == n || best[v] < best[next])) next = v;
    }
    in_tree[next] = 1;
    edges.push_back({from[next], static_cast<std::uint32_t>(next), best[next]});
    current = static_cast<std::uint32_t>(next);
  }
  return edges;
}

std::vector<LinkageNode> single_linkage(std::size_t n, std::vector<MstEdge> edges) {
  for (auto& e : edges) {
    if (e.a > e.b) std::swap(e.a, e.b);
  }
  std::sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  DisjointSet sets(n);
  std::vector<int> node_of(n);
  std::iota(node_of.begin(), node_of.end(), 0);
  std::vector<std::size_t> size_of(n, 1);
  std::vector<LinkageNode> tree;
  tree.reserve(edges.size());
  for (const auto& e : edges) {
    const std::uint32_t ra = sets.find(e.a);
    const std::uint32_t rb = sets.find(e.b);
    if (ra == rb) continue;
    const std::size_t merged = size_of[ra] + size_of[rb];
    tree.push_back({node_of[ra], node_of[rb], e.weight, merged});
    sets.parent[rb] = ra;
    size_of[ra] = merged;
    node_of[ra] = static_cast<int>(n + tree.size() - 1);
  }
  return tree;
}

ClusterResult condense_and_extract(const std::vector<LinkageNode>& tree, std::size_t n, std::size_t min_cluster_size) {
  ClusterResult result;
  result.labels.assign(n, -1);
  result.point_node.assign(n, -1);
  result.point_lambda.assign(n, 0.0);
  if (n == 0) return result;

  result.nodes.push_back(HierarchyNode{0, -1, 0.0, 0.0, n, 0.0, false, -1});
  if (n == 1 || tree.size() + 1 != n) {
    // Single point or a forest: everything hangs off the root.
    for (std::size_t p = 0; p < n; ++p) result.point_node[p] = 0;
    return result;
  }

  auto size_of = [&](int x) { return x < static_cast<int>(n) ? std::size_t{1} : tree[static_cast<std::size_t>(x) - n].size; };
  std::vector<std::size_t> scratch;
  auto drop = [&](int subtree, int cluster, double lambda) {
    scratch.clear();
    collect_points(tree, n, subtree, scratch);
    auto& node = result.nodes[static_cast<std::size_t>(cluster)];
    for (std::size_t p : scratch) {
      result.point_node[p] = cluster;
      result.point_lambda[p] = lambda;
      node.stability += lambda - node.lambda_birth;
      node.lambda_death = std::max(node.lambda_death, lambda);
    }
  };

  std::vector<std::pair<int, int>> stack{{static_cast<int>(2 * n - 2), 0}};
  while (!stack.empty()) {
    const auto [x, cluster] = stack.back();
    stack.pop_back();
    if (x < static_cast<int>(n)) {
      drop(x, cluster, result.nodes[static_cast<std::size_t>(cluster)].lambda_death);
      continue;
    }
    const auto& ln = tree[static_cast<std::size_t>(x) - n];
    const double lambda = to_lambda(ln.distance);
    const std::size_t left_size = size_of(ln.left);
    const std::size_t right_size = size_of(ln.right);
    const bool keep_left = left_size >= min_cluster_size;
    const bool keep_right = right_size >= min_cluster_size;
    if (keep_left && keep_right) {
      auto& parent = result.nodes[static_cast<std::size_t>(cluster)];
      parent.stability += (lambda - parent.lambda_birth) * static_cast<double>(left_size + right_size);
      parent.lambda_death = lambda;
      const int left_id = static_cast<int>(result.nodes.size());
      result.nodes.push_back(HierarchyNode{left_id, cluster, lambda, lambda, left_size, 0.0, false, -1});
      const int right_id = static_cast<int>(result.nodes.size());
      result.nodes.push_back(HierarchyNode{right_id, cluster, lambda, lambda, right_size, 0.0, false, -1});
      // Right is pushed first so the left subtree is condensed first.
      stack.emplace_back(ln.right, right_id);
      stack.emplace_back(ln.left, left_id);
    } else if (!keep_left && !keep_right) {
      drop(ln.left, cluster, lambda);
      drop(ln.right, cluster, lambda);
    } else if (!keep_left) {
      drop(ln.left, cluster, lambda);
      stack.emplace_back(ln.right, cluster);
    } else {
      drop(ln.right, cluster, lambda);
      stack.emplace_back(ln.left, cluster);
    }
  }

  // Excess-of-mass selection, children before parents; the root is never a
  // flat cluster.
  const std::size_t m = result.nodes.size();
  std::vector<std::vector<int>> children(m);
  for (std::size_t c = 1; c < m; ++c) children[static_cast<std::size_t>(result.nodes[c].parent)].push_back(static_cast<int>(c));
  std::vector<double> subtree_stability(m);
  for (std::size_t c = m; c-- > 1;) {
    auto& node = result.nodes[c];
    if (children[c].empty()) {
      node.selected = true;
      subtree_stability[c] = node.stability;
      continue;
    }
    double below = 0.0;
    for (int ch : children[c]) below += subtree_stability[static_cast<std::size_t>(ch)];
    if (below > node.stability) {
      node.selected = false;
      subtree_stability[c] = below;
    } else {
      node.selected = true;
      subtree_stability[c] = node.stability;
      std::vector<int> desc(children[c].begin(), children[c].end());
      while (!desc.empty()) {
        const int d = desc.back();
        desc.pop_back();
        result.nodes[static_cast<std::size_t>(d)].selected = false;
        for (int g : children[static_cast<std::size_t>(d)]) desc.push_back(g);
      }
    }
  }

  int next_label = 0;
  std::vector<int> selected_ancestor(m, -1);
  for (std::size_t c = 0; c < m; ++c) {
    auto& node = result.nodes[c];
    if (node.selected) node.label = next_label++;
    selected_ancestor[c] = node.selected ? static_cast<int>(c)
                           : c == 0     ? -1
                                        : selected_ancestor[static_cast<std::size_t>(node.parent)];
  }
  result.n_clusters = next_label;
  for (std::size_t p = 0; p < n; ++p) {
    const int anc = selected_ancestor[static_cast<std::size_t>(result.point_node[p])];
    result.labels[p] = anc < 0 ? -1 : result.nodes[static_cast<std::size_t>(anc)].label;
  }
  return result;
}

ClusterResult build_hierarchy(const EmbeddingMatrix& points, const ClusterConfig& config) {
  config.validate();
  const std::size_t n = points.rows();
  if (n < config.min_cluster_size || n < 2) {
    ClusterResult result;
    result.labels.assign(n, -1);
    result.point_node.assign(n, 0);
    result.point_lambda.assign(n, 0.0);
    result.nodes.push_back(HierarchyNode{0, -1, 0.0, 0.0, n, 0.0, false, -1});
    return result;
  }
  const std::size_t min_samples = std::min(config.effective_min_samples(), n - 1);
  const auto core = core_distances(points, min_samples);
  auto edges = mutual_reachability_mst(points, core);
  const auto tree = single_linkage(n, std::move(edges));
  return condense_and_extract(tree, n, config.min_cluster_size);
}

namespace {

nlohmann::json lambda_to_json(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
double lambda_from_json(const nlohmann::json& j) { return j.is_null() ? kInf : j.get<double>(); }

}  // namespace

nlohmann::json hierarchy_to_json(const ClusterResult& result) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& node : result.nodes) {
    nodes.push_back({{"id", node.id},
                     {"parent", node.parent},
                     {"lambda_birth", lambda_to_json(node.lambda_birth)},
                     {"lambda_death", lambda_to_json(node.lambda_death)},
                     {"member_count", node.size},
                     {"stability", lambda_to_json(node.stability)},
                     {"selected", node.selected},
                     {"label", node.label}});
  }
  nlohmann::json lambdas = nlohmann::json::array();
  for (double l : result.point_lambda) lambdas.push_back(lambda_to_json(l));
  return {{"n_clusters", result.n_clusters},
          {"nodes", std::move(nodes)},
          {"labels", result.labels},
          {"point_node", result.point_node},
          {"point_lambda", std::move(lambdas)}};
}

ClusterResult hierarchy_from_json(const nlohmann::json& j) {
  ClusterResult result;
  result.n_clusters = j.at("n_clusters").get<int>();
  for (const auto& nj : j.at("nodes")) {
    HierarchyNode node;
    node.id = nj.at("id").get<int>();
    node.parent = nj.at("parent").get<int>();
    node.lambda_birth = lambda_from_json(nj.at("lambda_birth"));
    node.lambda_death = lambda_from_json(nj.at("lambda_death"));
    node.size = nj.at("member_count").get<std::size_t>();
    node.stability = lambda_from_json(nj.at("stability"));
    node.selected = nj.at("selected").get<bool>();
    node.label = nj.at("label").get<int>();
    result.nodes.push_back(node);
  }
  result.labels = j.at("labels").get<std::vector<int>>();
  result.point_node = j.at("point_node").get<std::vector<int>>();
  for (const auto& l : j.at("point_lambda")) result.point_lambda.push_back(lambda_from_json(l));
  return result;
}

}  // namespace sca
