#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "sca/error.hpp"
#include "sca/parallel.hpp"
#include "sca/reducer.hpp"

namespace sca {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = static_cast<double>(a[c]) - static_cast<double>(b[c]);
    acc += d * d;
  }
  return acc;
}

struct Candidate {
  double dist;
  std::uint32_t index;
  bool operator<(const Candidate& o) const { return dist < o.dist || (dist == o.dist && index < o.index); }
};

// Keeps the k best candidates, recomputing exact distances so results do not
// depend on how the candidate distances were produced.
void finalize_row(const EmbeddingMatrix& points, std::size_t i, std::vector<Candidate>& cands, std::size_t k,
                  KnnGraph& out) {
  for (auto& c : cands) c.dist = squared_distance(points.row(i), points.row(c.index));
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end(),
                          [](const Candidate& a, const Candidate& b) { return a.index == b.index; }),
              cands.end());
  const std::size_t take = std::min(k, cands.size());
  for (std::size_t r = 0; r < take; ++r) {
    out.indices[i * k + r] = cands[r].index;
    out.distances[i * k + r] = static_cast<float>(std::sqrt(cands[r].dist));
  }
  for (std::size_t r = take; r < k; ++r) {
    out.indices[i * k + r] = static_cast<std::uint32_t>(i);
    out.distances[i * k + r] = std::numeric_limits<float>::infinity();
  }
}

// Random projection tree: recursively splits by the hyperplane bisecting two
// random members until leaves are small.
void build_rp_leaves(const EmbeddingMatrix& points, std::vector<std::uint32_t> members, std::size_t leaf_size,
                     std::mt19937_64& rng, std::vector<std::vector<std::uint32_t>>& leaves) {
  std::vector<std::vector<std::uint32_t>> stack;
  stack.push_back(std::move(members));
  const std::size_t d = points.cols();
  std::vector<double> normal(d);
  while (!stack.empty()) {
    auto node = std::move(stack.back());
    stack.pop_back();
    if (node.size() <= leaf_size) {
      leaves.push_back(std::move(node));
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, node.size() - 1);
    const auto a = points.row(node[pick(rng)]);
    const auto b = points.row(node[pick(rng)]);
    double offset = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      normal[c] = static_cast<double>(a[c]) - static_cast<double>(b[c]);
      offset += normal[c] * 0.5 * (static_cast<double>(a[c]) + static_cast<double>(b[c]));
    }
    std::vector<std::uint32_t> left, right;
    for (std::uint32_t idx : node) {
      const auto r = points.row(idx);
      double side = -offset;
      for (std::size_t c = 0; c < d; ++c) side += normal[c] * r[c];
      if (side > 0.0 || (side == 0.0 && (rng() & 1U))) {
        left.push_back(idx);
      } else {
        right.push_back(idx);
      }
    }
    if (left.empty() || right.empty()) {
      // Degenerate hyperplane (duplicates): split arbitrarily in half.
      std::shuffle(node.begin(), node.end(), rng);
      left.assign(node.begin(), node.begin() + static_cast<std::ptrdiff_t>(node.size() / 2));
      right.assign(node.begin() + static_cast<std::ptrdiff_t>(node.size() / 2), node.end());
    }
    stack.push_back(std::move(left));
    stack.push_back(std::move(right));
  }
}

}  // namespace

KnnGraph exact_knn(const EmbeddingMatrix& points, std::size_t k) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  if (k >= n) throw ConfigError("k=" + std::to_string(k) + " neighbours requested for " + std::to_string(n) + " points");
  KnnGraph out{n, k, std::vector<std::uint32_t>(n * k), std::vector<float>(n * k)};

  RowMatrix all(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = points.row(i);
    for (std::size_t c = 0; c < d; ++c) all(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = r[c];
  }
  const Eigen::VectorXd sq = all.rowwise().squaredNorm();

  constexpr std::size_t kBlock = 256;
  const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
  const std::size_t shortlist = std::min(n - 1, k + 8);
  parallel_for(0, n_blocks, [&](std::size_t b) {
    const std::size_t lo = b * kBlock;
    const std::size_t rows = std::min(kBlock, n - lo);
    const RowMatrix gram = all.middleRows(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(rows)) * all.transpose();
    std::vector<Candidate> cands;
    cands.reserve(n);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = lo + r;
      cands.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double dist = std::max(0.0, sq[static_cast<Eigen::Index>(i)] + sq[static_cast<Eigen::Index>(j)] -
                                              2.0 * gram(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)));
        cands.push_back({dist, static_cast<std::uint32_t>(j)});
      }
      std::nth_element(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(shortlist - 1), cands.end());
      // Include every candidate tied with the shortlist boundary so the exact
      // recomputation can pick the true nearest ones.
      const double cutoff = cands[shortlist - 1].dist * (1.0 + 1e-6) + 1e-12;
      std::vector<Candidate> keep;
      for (const auto& c : cands) {
        if (c.dist <= cutoff) keep.push_back(c);
      }
      finalize_row(points, i, keep, k, out);
    }
  }, 1);
  return out;
}

KnnGraph approximate_knn(const EmbeddingMatrix& points, std::size_t k, std::uint64_t seed, std::size_t n_trees) {
  const std::size_t n = points.rows();
  if (k >= n) throw ConfigError("k=" + std::to_string(k) + " neighbours requested for " + std::to_string(n) + " points");
  if (n_trees == 0) n_trees = std::min<std::size_t>(32, 5 + static_cast<std::size_t>(std::round(std::pow(n, 0.25) / 2.0)));
  const std::size_t leaf_size = std::max<std::size_t>(2 * k, 32);

  std::vector<std::vector<std::uint32_t>> point_leaves(n);
  std::vector<std::vector<std::uint32_t>> leaves;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t t = 0; t < n_trees; ++t) {
    std::vector<std::uint32_t> all(n);
    std::iota(all.begin(), all.end(), 0U);
    build_rp_leaves(points, std::move(all), leaf_size, rng, leaves);
  }
  for (std::uint32_t l = 0; l < leaves.size(); ++l) {
    for (std::uint32_t idx : leaves[l]) point_leaves[idx].push_back(l);
  }

  KnnGraph out{n, k, std::vector<std::uint32_t>(n * k), std::vector<float>(n * k)};
  parallel_for(0, n, [&](std::size_t i) {
    std::vector<Candidate> cands;
    for (std::uint32_t l : point_leaves[i]) {
      for (std::uint32_t j : leaves[l]) {
        if (j != i) cands.push_back({0.0, j});
      }
    }
    finalize_row(points, i, cands, k, out);
  });

  // One refinement sweep over neighbours of neighbours.
  KnnGraph refined = out;
  parallel_for(0, n, [&](std::size_t i) {
    std::vector<Candidate> cands;
    for (std::size_t r = 0; r < k; ++r) {
      const std::uint32_t j = out.indices[i * k + r];
      if (j != i) cands.push_back({0.0, j});
      for (std::size_t s = 0; s < k; ++s) {
        const std::uint32_t m = out.indices[static_cast<std::size_t>(j) * k + s];
        if (m != i) cands.push_back({0.0, m});
      }
    }
    finalize_row(points, i, cands, k, refined);
  });
  return refined;
}

KnnGraph knn_graph(const EmbeddingMatrix& points, std::size_t k, std::uint64_t seed, std::size_t exact_limit) {
  return points.rows() < exact_limit ? exact_knn(points, k) : approximate_knn(points, k, seed);
}

}  // namespace sca
