#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "sca/error.hpp"
#include "sca/reducer.hpp"

using namespace sca;

namespace {

EmbeddingMatrix two_clouds(std::size_t per, std::size_t dim, double gap, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-0.5f, 0.5f);
  std::vector<float> v;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < per; ++i)
      for (std::size_t d = 0; d < dim; ++d) v.push_back(u(rng) + (d == 0 && c == 1 ? static_cast<float>(gap) : 0.0f));
  return EmbeddingMatrix(2 * per, dim, std::move(v));
}

double max_pair(const EmbeddingMatrix& m, std::size_t lo, std::size_t hi) {
  double best = 0;
  for (std::size_t i = lo; i < hi; ++i)
    for (std::size_t j = i + 1; j < hi; ++j) best = std::max(best, oracle::euclid(m.row(i), m.row(j)));
  return best;
}

}  // namespace

TEST_CASE("identity reducer returns its input") {
  const auto m = oracle::random_matrix(20, 6, 1);
  ReducerConfig cfg;
  cfg.kind = ReducerKind::identity;
  CHECK(fit_transform(m, cfg) == m);
}

TEST_CASE("pca reconstructs planar data exactly") {
  // 100 points spanning a 2-d plane in R^10
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd basis = Eigen::MatrixXd::Random(10, 2);
  std::vector<float> v;
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd x = basis * Eigen::Vector2d(g(rng), g(rng));
    for (int d = 0; d < 10; ++d) v.push_back(static_cast<float>(x(d)));
  }
  const EmbeddingMatrix m(100, 10, v);
  const auto proj = pca_project(m, 2);
  REQUIRE(proj.rows() == 100);
  REQUIRE(proj.cols() == 2);

  // least-squares map from the projection (plus offset) back to the data
  Eigen::MatrixXd p(100, 3), x = oracle::to_eigen(m);
  p << oracle::to_eigen(proj), Eigen::VectorXd::Ones(100);
  Eigen::MatrixXd coef = p.colPivHouseholderQr().solve(x);
  CHECK((p * coef - x).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("pca is invariant to row order up to axis sign") {
  const auto m = oracle::random_matrix(60, 8, 4);
  std::vector<std::size_t> perm(60);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(2));
  const auto a = pca_project(m, 3);
  const auto b = pca_project(m.select_rows(perm), 3);
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t d = 0; d < 3; ++d) CHECK(std::abs(b.row(i)[d]) == doctest::Approx(std::abs(a.row(perm[i])[d])).epsilon(1e-4));
}

TEST_CASE("graph layout separates distant clouds and is reproducible") {
  const auto m = two_clouds(60, 8, 10.0 * std::sqrt(8.0), 11);
  ReducerConfig cfg;
  cfg.kind = ReducerKind::graph_layout;
  cfg.target_dim = 2;
  cfg.metric = DistanceMetric::euclidean;
  cfg.seed = 5;
  const auto out = fit_transform(m, cfg);
  REQUIRE(out.rows() == m.rows());
  for (float x : out.values()) CHECK(std::isfinite(x));

  double min_between = 1e300;
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t j = 60; j < 120; ++j) min_between = std::min(min_between, oracle::euclid(out.row(i), out.row(j)));
  CHECK(min_between > max_pair(out, 0, 60));
  CHECK(min_between > max_pair(out, 60, 120));

  CHECK(fit_transform(m, cfg) == out);
}

TEST_CASE("reducer configuration errors") {
  const auto m = oracle::random_matrix(10, 6, 1);
  ReducerConfig cfg;
  cfg.kind = ReducerKind::graph_layout;
  cfg.n_neighbors = 10;
  CHECK_THROWS_AS(cfg.validate(m.rows(), m.cols()), ConfigError);
  cfg.n_neighbors = 3;
  cfg.target_dim = 6;
  CHECK_THROWS_AS(cfg.validate(m.rows(), m.cols()), ConfigError);
  cfg.target_dim = 1;
  CHECK_THROWS_AS(cfg.validate(m.rows(), m.cols()), ConfigError);
  CHECK_THROWS_AS(parse_reducer_kind("tsne"), ConfigError);
}

TEST_CASE("exact knn excludes self and sorts by distance") {
  const auto m = EmbeddingMatrix::from_rows({{0}, {1}, {3}, {7}});
  const auto g = exact_knn(m, 2);
  CHECK(g.indices[0] == 1);
  CHECK(g.indices[1] == 2);
  CHECK(g.indices[2 * 2] == 1);  // 3's nearest is 1
  CHECK(g.distances[2 * 3] == doctest::Approx(4.0));
}

TEST_CASE("approximate knn agrees mostly with exact search") {
  const auto m = oracle::random_matrix(400, 6, 21);
  const auto exact = exact_knn(m, 10);
  const auto approx = approximate_knn(m, 10, 3);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < 400; ++i)
    for (std::size_t a = 0; a < 10; ++a)
      for (std::size_t b = 0; b < 10; ++b) hits += exact.indices[i * 10 + a] == approx.indices[i * 10 + b];
  CHECK(static_cast<double>(hits) / 4000.0 > 0.8);
}

TEST_CASE("fuzzy graph weights are symmetric and in (0, 1]") {
  const auto m = oracle::random_matrix(50, 4, 2);
  const auto fg = fuzzy_neighbor_graph(exact_knn(m, 5));
  std::map<std::pair<std::uint32_t, std::uint32_t>, float> w;
  for (std::size_t e = 0; e < fg.weights.size(); ++e) {
    CHECK(fg.weights[e] > 0.0f);
    CHECK(fg.weights[e] <= 1.0f + 1e-6f);
    w[{fg.heads[e], fg.tails[e]}] = fg.weights[e];
  }
  for (auto [k, v] : w) CHECK(w.at({k.second, k.first}) == doctest::Approx(v));
}
