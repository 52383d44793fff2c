#include "sca/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "sca/error.hpp"
#include "sca/metrics.hpp"

namespace sca {
namespace {

std::vector<std::vector<double>> gaussian_directions(std::size_t k, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> out(k, std::vector<double>(dim));
  for (auto& v : out) {
    for (auto& e : v) e = normal(rng);
  }
  return out;
}

void normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double e : v) n += e * e;
  n = std::sqrt(n);
  for (double& e : v) e /= n;
}

double dotd(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<std::vector<double>> orthonormal_directions(std::size_t k, std::size_t dim, std::mt19937_64& rng) {
  auto dirs = gaussian_directions(k, dim, rng);
  // modified Gram-Schmidt, done twice for stability
  for (std::size_t i = 0; i < k; ++i) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        const double p = dotd(dirs[i], dirs[j]);
        for (std::size_t c = 0; c < dim; ++c) dirs[i][c] -= p * dirs[j][c];
      }
    }
    normalize(dirs[i]);
  }
  return dirs;
}

std::vector<std::vector<double>> angled_directions(std::size_t k, std::size_t dim, double min_angle_deg,
                                                   std::mt19937_64& rng) {
  const double max_cos = std::cos(min_angle_deg * M_PI / 180.0);
  std::vector<std::vector<double>> dirs;
  for (int attempt = 0; dirs.size() < k; ++attempt) {
    if (attempt > 100000) throw ConfigError("cannot place directions with the requested minimum angle");
    auto cand = gaussian_directions(1, dim, rng).front();
    normalize(cand);
    const bool ok = std::all_of(dirs.begin(), dirs.end(),
                                [&](const auto& d) { return std::abs(dotd(cand, d)) <= max_cos; });
    if (ok) dirs.push_back(std::move(cand));
  }
  return dirs;
}

std::string doc_id(std::size_t d) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "doc%06zu", d);
  return buf;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_docs == 0 || dim == 0) throw ConfigError("synthetic spec needs n_docs >= 1 and dim >= 1");
  if (n_topics == 0 || n_topics > dim) throw ConfigError("synthetic spec needs 1 <= K <= D");
  if (min_topics_per_doc < 1 || min_topics_per_doc > max_topics_per_doc || max_topics_per_doc > n_topics) {
    throw ConfigError("synthetic spec needs 1 <= min topics per doc <= m <= K");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
  if (!(coef_min > 0.0 && coef_min <= coef_max)) throw ConfigError("coefficient range must satisfy 0 < min <= max");
  if (tokens_per_topic == 0) throw ConfigError("tokens_per_topic must be positive");
}

std::string synth_token(std::size_t topic, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "t%zuw%02zu", topic, k);
  return buf;
}

SynthDataset generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const auto dirs = spec.orthonormal ? orthonormal_directions(spec.n_topics, spec.dim, rng)
                                     : angled_directions(spec.n_topics, spec.dim, spec.min_angle_degrees, rng);

  SynthDataset data;
  data.directions = EmbeddingMatrix(spec.n_topics, spec.dim);
  for (std::size_t t = 0; t < spec.n_topics; ++t) {
    std::vector<float> row(dirs[t].begin(), dirs[t].end());
    data.directions.set_row(t, row);
  }

  std::uniform_int_distribution<std::size_t> count_dist(spec.min_topics_per_doc, spec.max_topics_per_doc);
  std::uniform_real_distribution<double> coef_dist(spec.coef_min, spec.coef_max);
  std::uniform_int_distribution<std::size_t> word_dist(0, spec.tokens_per_topic - 1);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);

  data.embeddings = EmbeddingMatrix(spec.n_docs, spec.dim);
  std::vector<int> topics(spec.n_topics);
  std::iota(topics.begin(), topics.end(), 0);
  std::vector<double> x(spec.dim);
  for (std::size_t d = 0; d < spec.n_docs; ++d) {
    const std::size_t m = count_dist(rng);
    std::shuffle(topics.begin(), topics.end(), rng);
    std::vector<int> chosen(topics.begin(), topics.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(chosen.begin(), chosen.end());
    std::vector<double> coefs;
    std::fill(x.begin(), x.end(), 0.0);
    for (int t : chosen) {
      const double a = coef_dist(rng);
      coefs.push_back(a);
      for (std::size_t c = 0; c < spec.dim; ++c) x[c] += a * dirs[static_cast<std::size_t>(t)][c];
    }
    if (spec.noise_sigma > 0.0) {
      for (auto& e : x) e += noise(rng);
    }
    std::vector<float> row(x.begin(), x.end());
    data.embeddings.set_row(d, row);

    std::string text;
    for (std::size_t w = 0; w < spec.tokens_per_doc; ++w) {
      const int t = chosen[w % chosen.size()];
      text += (w ? " " : "") + synth_token(static_cast<std::size_t>(t), word_dist(rng));
    }
    data.corpus.ids.push_back(doc_id(d));
    data.corpus.raw_texts.push_back(std::move(text));
    std::string label;
    for (std::size_t i = 0; i < chosen.size(); ++i) label += (i ? "+" : "") + std::to_string(chosen[i]);
    data.corpus.labels.emplace_back(std::move(label));
    data.topic_sets.push_back(std::move(chosen));
    data.coefficients.push_back(std::move(coefs));
  }
  return data;
}

void write_synth_dataset(const SynthDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_documents_jsonl(data.corpus, dir / "documents.jsonl");
  save_embeddings(data.embeddings, dir / "embeddings.scae");
  nlohmann::json truth;
  truth["directions"] = nlohmann::json::array();
  for (std::size_t t = 0; t < data.directions.rows(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (float f : data.directions.row(t)) row.push_back(static_cast<double>(f));
    truth["directions"].push_back(std::move(row));
  }
  truth["topic_sets"] = data.topic_sets;
  truth["coefficients"] = data.coefficients;
  std::ofstream out(dir / "truth.json");
  if (!out) throw LoadError("cannot write " + (dir / "truth.json").string());
  out << truth.dump() << "\n";
}

SynthDataset read_synth_dataset(const std::filesystem::path& dir) {
  SynthDataset data;
  data.corpus = load_documents_jsonl(dir / "documents.jsonl");
  data.embeddings = load_embeddings(dir / "embeddings.scae");
  std::ifstream in(dir / "truth.json");
  if (!in) throw LoadError("cannot open " + (dir / "truth.json").string());
  try {
    const auto truth = nlohmann::json::parse(in);
    std::vector<std::vector<float>> rows;
    for (const auto& r : truth.at("directions")) {
      std::vector<float> row;
      for (const auto& v : r) row.push_back(static_cast<float>(v.get<double>()));
      rows.push_back(std::move(row));
    }
    data.directions = EmbeddingMatrix::from_rows(rows);
    data.topic_sets = truth.at("topic_sets").get<std::vector<std::vector<int>>>();
    data.coefficients = truth.value("coefficients", std::vector<std::vector<double>>{});
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed truth.json: ") + e.what());
  }
  return data;
}

std::vector<DirectionMatch> match_directions(const EmbeddingMatrix& planted,
                                             const std::vector<std::vector<float>>& components) {
  struct Pair {
    double c;
    int p;
    int k;
  };
  std::vector<Pair> pairs;
  for (std::size_t p = 0; p < planted.rows(); ++p) {
    for (std::size_t k = 0; k < components.size(); ++k) {
      const double kn = l2_norm(components[k]);
      const double pn = planted.norm(p);
      const double c = (kn > 0 && pn > 0) ? std::abs(dot(planted.row(p), components[k])) / (kn * pn) : 0.0;
      pairs.push_back({c, static_cast<int>(p), static_cast<int>(k)});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.c != b.c) return a.c > b.c;
    if (a.p != b.p) return a.p < b.p;
    return a.k < b.k;
  });
  std::vector<DirectionMatch> matches(planted.rows());
  for (std::size_t p = 0; p < planted.rows(); ++p) matches[p].planted = static_cast<int>(p);
  std::vector<char> used(components.size(), 0);
  for (const auto& pr : pairs) {
    auto& m = matches[static_cast<std::size_t>(pr.p)];
    if (m.component >= 0 || used[static_cast<std::size_t>(pr.k)]) continue;
    m.component = pr.k;
    m.abs_cosine = pr.c;
    used[static_cast<std::size_t>(pr.k)] = 1;
  }
  return matches;
}

RecoveryScores score_recovery(const ScaModel& model, const EmbeddingMatrix& planted,
                              const std::vector<std::vector<int>>& topic_sets, const EmbeddingMatrix* embeddings,
                              double recall_cosine) {
  RecoveryScores s;
  std::vector<std::vector<float>> comps;
  std::vector<int> ids;
  for (const auto& c : model.components) {
    if (c.merged_into) continue;
    comps.push_back(c.vector);
    ids.push_back(c.id);
  }
  s.matches = match_directions(planted, comps);
  std::size_t hit = 0;
  double cos_sum = 0.0;
  for (auto& m : s.matches) {
    if (m.component >= 0) m.component = ids[static_cast<std::size_t>(m.component)];
    if (m.abs_cosine > recall_cosine) ++hit;
    cos_sum += m.abs_cosine;
  }
  if (planted.rows() > 0) {
    s.recall = static_cast<double>(hit) / static_cast<double>(planted.rows());
    s.mean_best_cosine = cos_sum / static_cast<double>(planted.rows());
  }

  const auto fallback = primary_topic_labels(model);
  std::vector<int> predicted, truth;
  for (std::size_t d = 0; d < topic_sets.size(); ++d) {
    if (topic_sets[d].size() != 1) continue;
    int topic = d < fallback.size() ? fallback[d] : -1;
    if (embeddings) {
      const auto ranked = rank_activations(transform(embeddings->row(d), model), model, 1);
      topic = ranked.empty() ? -1 : ranked.front().topic;
    }
    predicted.push_back(topic);
    truth.push_back(topic_sets[d].front());
  }
  s.single_topic_docs = predicted.size();
  if (!predicted.empty()) {
    const auto gt = ground_truth_scores(predicted, truth);
    s.ari = gt.ari;
    s.nmi = gt.nmi;
    s.purity = gt.purity;
  }
  return s;
}

}  // namespace sca
