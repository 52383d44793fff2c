#include "sca/reducer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "sca/error.hpp"
#include "sca/parallel.hpp"

namespace sca {
namespace {

// Curve parameters of the low-dimensional similarity 1 / (1 + a d^(2b)) fitted
// for spread=1; keyed by min_dist.
std::pair<double, double> curve_parameters(double min_dist) {
  if (std::abs(min_dist - 0.1) < 1e-12) return {1.576943460405378, 0.8950608781227859};
  // Least-squares fit of 1/(1+a x^2b) to the piecewise target on a grid.
  double best_a = 1.0, best_b = 1.0, best_err = std::numeric_limits<double>::max();
  for (double b = 0.3; b <= 2.0; b += 0.005) {
    for (double a = 0.1; a <= 5.0; a += 0.01) {
      double err = 0.0;
      for (int s = 1; s <= 300; ++s) {
        const double x = 3.0 * s / 300.0;
        const double target = x < min_dist ? 1.0 : std::exp(-(x - min_dist));
        const double model = 1.0 / (1.0 + a * std::pow(x, 2.0 * b));
        err += (target - model) * (target - model);
      }
      if (err < best_err) {
        best_err = err;
        best_a = a;
        best_b = b;
      }
    }
  }
  return {best_a, best_b};
}

struct LocalScale {
  double rho;
  double sigma;
};

// rho = distance to the nearest distinct neighbour; sigma found by bisection
// so that sum_j exp(-(d_j - rho)/sigma) = log2(k + 1).
LocalScale calibrate(std::span<const float> dists, double mean_all) {
  constexpr int kIterations = 64;
  constexpr double kTolerance = 1e-5;
  constexpr double kMinScale = 1e-3;
  const double target = std::log2(static_cast<double>(dists.size() + 1));

  double rho = 0.0;
  for (float d : dists) {
    if (d > 0.0f && std::isfinite(d)) {
      rho = d;
      break;
    }
  }
  double lo = 0.0, hi = std::numeric_limits<double>::infinity(), mid = 1.0;
  for (int it = 0; it < kIterations; ++it) {
    double psum = 0.0;
    for (float d : dists) {
      if (!std::isfinite(d)) continue;
      const double excess = d - rho;
      psum += excess > 0.0 ? std::exp(-excess / mid) : 1.0;
    }
    if (std::abs(psum - target) < kTolerance) break;
    if (psum > target) {
      hi = mid;
      mid = 0.5 * (lo + hi);
    } else {
      lo = mid;
      mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
    }
  }
  double mean_local = 0.0;
  std::size_t finite = 0;
  for (float d : dists) {
    if (std::isfinite(d)) {
      mean_local += d;
      ++finite;
    }
  }
  mean_local = finite ? mean_local / static_cast<double>(finite) : 0.0;
  const double floor = kMinScale * (rho > 0.0 ? mean_local : mean_all);
  return {rho, std::max(mid, floor)};
}

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

EmbeddingMatrix layout(const EmbeddingMatrix& input, const ReducerConfig& config) {
  const std::size_t n = input.rows();
  const std::size_t dim = config.target_dim;
  const KnnGraph knn = knn_graph(input, config.n_neighbors - 1, config.seed, config.exact_knn_limit);
  const FuzzyGraph graph = fuzzy_neighbor_graph(knn);

  // Initial positions from PCA, scaled into [-10, 10], plus small jitter.
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> jitter(0.0, 1e-4);
  EmbeddingMatrix init = pca_project(input, dim);
  double max_abs = 0.0;
  for (float v : init.values()) max_abs = std::max(max_abs, static_cast<double>(std::abs(v)));
  const double scale = max_abs > 0.0 ? 10.0 / max_abs : 1.0;
  std::vector<double> pos(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = init.row(i);
    for (std::size_t c = 0; c < dim; ++c) pos[i * dim + c] = r[c] * scale + jitter(rng);
  }

  const std::size_t n_epochs = config.layout_epochs;
  const std::size_t n_edges = graph.weights.size();
  if (n_edges > 0 && n_epochs > 0) {
    const double max_w = *std::max_element(graph.weights.begin(), graph.weights.end());
    std::vector<double> epochs_per_sample(n_edges, -1.0);
    for (std::size_t e = 0; e < n_edges; ++e) {
      const double samples = static_cast<double>(n_epochs) * graph.weights[e] / max_w;
      if (samples >= 1.0) epochs_per_sample[e] = static_cast<double>(n_epochs) / samples;
    }
    constexpr double kNegativeRate = 5.0;
    std::vector<double> next_sample(epochs_per_sample);
    std::vector<double> neg_period(n_edges), next_neg(n_edges);
    for (std::size_t e = 0; e < n_edges; ++e) {
      neg_period[e] = epochs_per_sample[e] / kNegativeRate;
      next_neg[e] = neg_period[e];
    }
    const auto [a, b] = curve_parameters(config.min_dist);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t epoch = 0; epoch < n_epochs; ++epoch) {
      const double alpha = 1.0 - static_cast<double>(epoch) / static_cast<double>(n_epochs);
      const double now = static_cast<double>(epoch);
      for (std::size_t e = 0; e < n_edges; ++e) {
        if (epochs_per_sample[e] <= 0.0 || next_sample[e] > now) continue;
        double* cur = &pos[graph.heads[e] * dim];
        double* other = &pos[graph.tails[e] * dim];
        double d2 = 0.0;
        for (std::size_t c = 0; c < dim; ++c) d2 += (cur[c] - other[c]) * (cur[c] - other[c]);
        double coeff = 0.0;
        if (d2 > 0.0) {
          coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
        }
        for (std::size_t c = 0; c < dim; ++c) {
          const double g = clip(coeff * (cur[c] - other[c])) * alpha;
          cur[c] += g;
          other[c] -= g;
        }
        next_sample[e] += epochs_per_sample[e];

        const auto n_neg = static_cast<std::size_t>((now - next_neg[e]) / neg_period[e]);
        for (std::size_t s = 0; s < n_neg; ++s) {
          const std::size_t k = pick(rng);
          if (k == graph.heads[e]) continue;
          const double* neg = &pos[k * dim];
          double nd2 = 0.0;
          for (std::size_t c = 0; c < dim; ++c) nd2 += (cur[c] - neg[c]) * (cur[c] - neg[c]);
          double rep = 0.0;
          if (nd2 > 0.0) rep = 2.0 * b / ((0.001 + nd2) * (a * std::pow(nd2, b) + 1.0));
          for (std::size_t c = 0; c < dim; ++c) {
            const double g = rep > 0.0 ? clip(rep * (cur[c] - neg[c])) : 4.0;
            cur[c] += g * alpha;
          }
        }
        next_neg[e] += static_cast<double>(n_neg) * neg_period[e];
      }
    }
  }

  std::vector<float> out(n * dim);
  for (std::size_t i = 0; i < n * dim; ++i) {
    out[i] = static_cast<float>(pos[i]);
    if (!std::isfinite(out[i])) throw Error("graph layout produced a non-finite coordinate");
  }
  return EmbeddingMatrix(n, dim, std::move(out));
}

}  // namespace

std::string to_string(ReducerKind kind) {
  switch (kind) {
    case ReducerKind::identity: return "identity";
    case ReducerKind::pca: return "pca";
    case ReducerKind::graph_layout: return "graph_layout";
  }
  return "unknown";
}

std::string to_string(DistanceMetric metric) {
  return metric == DistanceMetric::cosine ? "cosine" : "euclidean";
}

ReducerKind parse_reducer_kind(const std::string& s) {
  if (s == "identity") return ReducerKind::identity;
  if (s == "pca") return ReducerKind::pca;
  if (s == "graph_layout" || s == "umap") return ReducerKind::graph_layout;
  throw ConfigError("unknown reducer kind '" + s + "'");
}

DistanceMetric parse_metric(const std::string& s) {
  if (s == "cosine") return DistanceMetric::cosine;
  if (s == "euclidean") return DistanceMetric::euclidean;
  throw ConfigError("unknown metric '" + s + "'");
}

void ReducerConfig::validate(std::size_t n, std::size_t dim) const {
  if (kind == ReducerKind::identity) return;
  if (target_dim < 2) throw ConfigError("reducer target_dim must be at least 2");
  if (target_dim >= dim) {
    throw ConfigError("reducer target_dim=" + std::to_string(target_dim) + " must be below the input dimension " +
                      std::to_string(dim));
  }
  if (n <= target_dim) {
    throw ConfigError("reducer needs more points (" + std::to_string(n) + ") than target_dim");
  }
  if (kind == ReducerKind::graph_layout) {
    if (n_neighbors < 2) throw ConfigError("n_neighbors must be at least 2");
    if (n_neighbors >= n) {
      throw ConfigError("n_neighbors=" + std::to_string(n_neighbors) + " must be below the point count " +
                        std::to_string(n));
    }
  }
}

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m) {
  std::vector<float> out(m.values().begin(), m.values().end());
  const std::size_t d = m.cols();
  for (std::size_t j = 0; j < m.rows(); ++j) {
    const double nrm = m.norm(j);
    if (nrm <= 0.0) continue;
    for (std::size_t c = 0; c < d; ++c) out[j * d + c] = static_cast<float>(out[j * d + c] / nrm);
  }
  return EmbeddingMatrix(m.rows(), d, std::move(out));
}

EmbeddingMatrix pca_project(const EmbeddingMatrix& m, std::size_t target_dim) {
  const std::size_t n = m.rows();
  const std::size_t d = m.cols();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < n; ++j) {
    const auto r = m.row(j);
    for (std::size_t c = 0; c < d; ++c) mean[static_cast<Eigen::Index>(c)] += r[c];
  }
  mean /= static_cast<double>(n);

  Eigen::MatrixXd centered(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < n; ++j) {
    const auto r = m.row(j);
    for (std::size_t c = 0; c < d; ++c) {
      centered(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = r[c] - mean[static_cast<Eigen::Index>(c)];
    }
  }
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(std::max<std::size_t>(1, n));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // Eigenvalues ascend; take the trailing columns in reverse.
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(target_dim));
  for (std::size_t k = 0; k < target_dim; ++k) {
    Eigen::VectorXd axis = solver.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - k));
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis[arg] < 0.0) axis = -axis;
    basis.col(static_cast<Eigen::Index>(k)) = axis;
  }
  const Eigen::MatrixXd projected = centered * basis;
  std::vector<float> out(n * target_dim);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < target_dim; ++k) {
      out[j * target_dim + k] = static_cast<float>(projected(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)));
    }
  }
  return EmbeddingMatrix(n, target_dim, std::move(out));
}

FuzzyGraph fuzzy_neighbor_graph(const KnnGraph& knn) {
  const std::size_t n = knn.n;
  const std::size_t k = knn.k;
  double mean_all = 0.0;
  std::size_t finite = 0;
  for (float d : knn.distances) {
    if (std::isfinite(d)) {
      mean_all += d;
      ++finite;
    }
  }
  mean_all = finite ? mean_all / static_cast<double>(finite) : 0.0;

  // Directed memberships, keyed (i, j).
  std::vector<std::vector<std::pair<std::uint32_t, double>>> directed(n);
  parallel_for(0, n, [&](std::size_t i) {
    const std::span<const float> dists(knn.distances.data() + i * k, k);
    const auto scale = calibrate(dists, mean_all);
    auto& row = directed[i];
    row.reserve(k);
    for (std::size_t r = 0; r < k; ++r) {
      const std::uint32_t j = knn.indices[i * k + r];
      if (j == i || !std::isfinite(dists[r])) continue;
      const double excess = dists[r] - scale.rho;
      const double w = excess <= 0.0 ? 1.0 : std::exp(-excess / scale.sigma);
      row.emplace_back(j, w);
    }
    std::sort(row.begin(), row.end());
  });

  auto lookup = [&](std::uint32_t i, std::uint32_t j) {
    const auto& row = directed[i];
    auto it = std::lower_bound(row.begin(), row.end(), std::make_pair(j, -1.0));
    return (it != row.end() && it->first == j) ? it->second : 0.0;
  };

  FuzzyGraph graph;
  // Probabilistic union w_ij + w_ji - w_ij w_ji; emitted for i<j in both
  // directions so each undirected edge is sampled from either endpoint.
  for (std::uint32_t i = 0; i < n; ++i) {
    std::vector<std::uint32_t> partners;
    for (const auto& [j, w] : directed[i]) partners.push_back(j);
    for (std::uint32_t j : partners) {
      if (j < i && lookup(j, i) > 0.0) continue;  // already emitted from j
      const double wij = lookup(i, j);
      const double wji = lookup(j, i);
      const double w = wij + wji - wij * wji;
      if (w <= 0.0) continue;
      graph.heads.push_back(i);
      graph.tails.push_back(j);
      graph.weights.push_back(static_cast<float>(w));
      graph.heads.push_back(j);
      graph.tails.push_back(i);
      graph.weights.push_back(static_cast<float>(w));
    }
  }
  return graph;
}

EmbeddingMatrix fit_transform(const EmbeddingMatrix& embeddings, const ReducerConfig& config) {
  config.validate(embeddings.rows(), embeddings.cols());
  if (config.kind == ReducerKind::identity) return embeddings;
  const EmbeddingMatrix input =
      config.metric == DistanceMetric::cosine ? normalize_rows(embeddings) : embeddings;
  if (config.kind == ReducerKind::pca) return pca_project(input, config.target_dim);
  return layout(input, config);
}

}  // namespace sca
