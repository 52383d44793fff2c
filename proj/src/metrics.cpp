#include "sca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "sca/error.hpp"

namespace sca {
namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fixed3(const std::optional<double>& v) { return v ? fixed3(*v) : std::string("n/a"); }

std::size_t sorted_intersection(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  std::size_t i = 0, j = 0, shared = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++shared;
      ++i;
      ++j;
    }
  }
  return shared;
}

std::size_t shared_tokens(const TokenList& a, const TokenList& b) {
  std::unordered_set<std::string> bs(b.begin(), b.end());
  std::unordered_set<std::string> seen;
  std::size_t shared = 0;
  for (const auto& t : a) {
    if (bs.count(t) && seen.insert(t).second) ++shared;
  }
  return shared;
}

// Contingency table between two labelings, plus marginals.
struct Contingency {
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows;
  std::map<int, double> cols;
  double n = 0.0;
};

Contingency contingency(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw ConfigError("label length mismatch: " + std::to_string(predicted.size()) + " predicted vs " +
                      std::to_string(truth.size()) + " true");
  }
  Contingency c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    c.cells[{predicted[i], truth[i]}] += 1.0;
    c.rows[predicted[i]] += 1.0;
    c.cols[truth[i]] += 1.0;
  }
  c.n = static_cast<double>(predicted.size());
  return c;
}

double comb2(double x) { return x * (x - 1.0) / 2.0; }

double entropy(const std::map<int, double>& marginal, double n) {
  double h = 0.0;
  for (const auto& [k, c] : marginal) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

std::vector<std::vector<std::size_t>> cluster_member_sets(const std::vector<int>& labels) {
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  std::vector<std::vector<std::size_t>> sets(static_cast<std::size_t>(max_label + 1));
  for (std::size_t d = 0; d < labels.size(); ++d) {
    if (labels[d] >= 0) sets[static_cast<std::size_t>(labels[d])].push_back(d);
  }
  sets.erase(std::remove_if(sets.begin(), sets.end(), [](const auto& s) { return s.empty(); }), sets.end());
  return sets;
}

}  // namespace

double noise_rate(std::span<const int> labels) {
  if (labels.empty()) throw ConfigError("noise rate of an empty labelling");
  const auto noise = std::count(labels.begin(), labels.end(), -1);
  return static_cast<double>(noise) / static_cast<double>(labels.size());
}

double noise_rate_all_iterations(const std::vector<std::vector<int>>& per_iteration) {
  if (per_iteration.empty()) throw ConfigError("noise rate without any iteration");
  const std::size_t n = per_iteration.front().size();
  if (n == 0) throw ConfigError("noise rate of an empty labelling");
  std::size_t noise = 0;
  for (std::size_t d = 0; d < n; ++d) {
    bool assigned = false;
    for (const auto& labels : per_iteration) assigned = assigned || labels.at(d) >= 0;
    if (!assigned) ++noise;
  }
  return static_cast<double>(noise) / static_cast<double>(n);
}

double topic_diversity(const std::vector<TokenList>& representations) {
  std::unordered_set<std::string> unique;
  std::size_t total = 0;
  for (const auto& r : representations) {
    unique.insert(r.begin(), r.end());
    total += r.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(unique.size()) / static_cast<double>(total);
}

double sample_overlap(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  std::vector<std::size_t> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  const std::size_t inter = sorted_intersection(sa, sb);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::optional<double> avg_max_sample_overlap(const std::vector<std::vector<std::size_t>>& later,
                                             const ClusterResult& hierarchy) {
  if (later.empty()) return std::nullopt;
  auto nodes = hierarchy.all_member_sets();
  for (auto& s : nodes) std::sort(s.begin(), s.end());
  double total = 0.0;
  for (auto cluster : later) {
    std::sort(cluster.begin(), cluster.end());
    double best = 0.0;
    for (const auto& node : nodes) {
      const std::size_t inter = sorted_intersection(cluster, node);
      if (inter == 0) continue;
      best = std::max(best, static_cast<double>(inter) / static_cast<double>(cluster.size() + node.size() - inter));
    }
    total += best;
  }
  return total / static_cast<double>(later.size());
}

std::optional<TokenOverlapScore> avg_max_token_overlap(const std::vector<TokenList>& later,
                                                       const std::vector<TokenList>& first) {
  if (later.empty() || first.empty()) return std::nullopt;
  TokenOverlapScore score;
  for (const auto& r : later) {
    double best_count = 0.0, best_jaccard = 0.0;
    for (const auto& f : first) {
      const auto shared = static_cast<double>(shared_tokens(r, f));
      const std::unordered_set<std::string> uni_set = [&] {
        std::unordered_set<std::string> u(r.begin(), r.end());
        u.insert(f.begin(), f.end());
        return u;
      }();
      best_count = std::max(best_count, shared);
      if (!uni_set.empty()) best_jaccard = std::max(best_jaccard, shared / static_cast<double>(uni_set.size()));
    }
    score.count += best_count;
    score.jaccard += best_jaccard;
  }
  score.count /= static_cast<double>(later.size());
  score.jaccard /= static_cast<double>(later.size());
  return score;
}

CooccurrenceIndex::CooccurrenceIndex(const std::vector<std::vector<std::string>>& documents)
    : n_docs_(documents.size()) {
  for (std::size_t d = 0; d < documents.size(); ++d) {
    for (const auto& t : documents[d]) {
      auto& list = postings_[t];
      if (list.empty() || list.back() != d) list.push_back(static_cast<std::uint32_t>(d));
    }
  }
}

const std::vector<std::uint32_t>* CooccurrenceIndex::postings(const std::string& token) const {
  auto it = postings_.find(token);
  return it == postings_.end() ? nullptr : &it->second;
}

double CooccurrenceIndex::probability(const std::string& token) const {
  const auto* p = postings(token);
  return (p && n_docs_) ? static_cast<double>(p->size()) / static_cast<double>(n_docs_) : 0.0;
}

double CooccurrenceIndex::joint_probability(const std::string& a, const std::string& b) const {
  const auto* pa = postings(a);
  const auto* pb = postings(b);
  if (!pa || !pb || n_docs_ == 0) return 0.0;
  std::size_t i = 0, j = 0, both = 0;
  while (i < pa->size() && j < pb->size()) {
    if ((*pa)[i] < (*pb)[j]) {
      ++i;
    } else if ((*pb)[j] < (*pa)[i]) {
      ++j;
    } else {
      ++both;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(both) / static_cast<double>(n_docs_);
}

double npmi_pair(double p_a, double p_b, double p_ab, double eps) {
  if (p_a <= 0.0 || p_b <= 0.0) return -1.0;
  const double joint = p_ab + eps;
  const double denom = -std::log2(joint);
  if (denom <= 0.0) return 1.0;
  const double value = std::log2(joint / (p_a * p_b)) / denom;
  return std::clamp(value, -1.0, 1.0);
}

double coherence(const std::vector<TokenList>& representations, const CooccurrenceIndex& index, double gamma,
                 double eps) {
  double total = 0.0;
  std::size_t topics = 0;
  for (const auto& rep : representations) {
    if (rep.size() < 2) continue;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t r = 1; r < rep.size(); ++r) {
      for (std::size_t s = 0; s < r; ++s) {
        const double pa = index.probability(rep[r]);
        const double pb = index.probability(rep[s]);
        if (pa <= 0.0 || pb <= 0.0) spdlog::debug("coherence: token absent from corpus in pair ({}, {})", rep[r], rep[s]);
        const double v = npmi_pair(pa, pb, index.joint_probability(rep[r], rep[s]), eps);
        sum += (v < 0.0 ? -1.0 : 1.0) * std::pow(std::abs(v), gamma);
        ++pairs;
      }
    }
    total += sum / static_cast<double>(pairs);
    ++topics;
  }
  return topics == 0 ? 0.0 : total / static_cast<double>(topics);
}

double npmi_coherence(const std::vector<TokenList>& representations, const CooccurrenceIndex& index, double eps) {
  return coherence(representations, index, 1.0, eps);
}

double cv_coherence(const std::vector<TokenList>& representations, const CooccurrenceIndex& index, double gamma,
                    double eps) {
  return coherence(representations, index, gamma, eps);
}

double purity(std::span<const int> predicted, std::span<const int> truth) {
  const auto c = contingency(predicted, truth);
  if (c.n == 0.0) return 0.0;
  std::map<int, double> best;
  for (const auto& [key, count] : c.cells) best[key.first] = std::max(best[key.first], count);
  double sum = 0.0;
  for (const auto& [k, v] : best) sum += v;
  return sum / c.n;
}

double adjusted_rand_index(std::span<const int> predicted, std::span<const int> truth) {
  const auto c = contingency(predicted, truth);
  if (c.n < 2.0) return 1.0;
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [k, v] : c.cells) index += comb2(v);
  for (const auto& [k, v] : c.rows) sum_rows += comb2(v);
  for (const auto& [k, v] : c.cols) sum_cols += comb2(v);
  const double expected = sum_rows * sum_cols / comb2(c.n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return index == expected ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

double normalized_mutual_information(std::span<const int> predicted, std::span<const int> truth) {
  const auto c = contingency(predicted, truth);
  if (c.n == 0.0) return 0.0;
  const double hp = entropy(c.rows, c.n);
  const double ht = entropy(c.cols, c.n);
  if (hp == 0.0 && ht == 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& [key, count] : c.cells) {
    const double pxy = count / c.n;
    const double px = c.rows.at(key.first) / c.n;
    const double py = c.cols.at(key.second) / c.n;
    mi += pxy * std::log(pxy / (px * py));
  }
  const double mean = 0.5 * (hp + ht);
  return std::clamp(mi / mean, 0.0, 1.0);
}

GroundTruthScores ground_truth_scores(std::span<const int> predicted, std::span<const int> truth) {
  return {purity(predicted, truth), adjusted_rand_index(predicted, truth),
          normalized_mutual_information(predicted, truth)};
}

std::vector<int> restrict_to_top_k(std::span<const int> labels, std::size_t k) {
  std::map<int, std::size_t> sizes;
  for (int l : labels) {
    if (l >= 0) ++sizes[l];
  }
  std::vector<std::pair<int, std::size_t>> order(sizes.begin(), sizes.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::set<int> keep;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) keep.insert(order[i].first);
  std::vector<int> out(labels.begin(), labels.end());
  for (auto& l : out) {
    if (l >= 0 && !keep.count(l)) l = -1;
  }
  return out;
}

std::vector<int> encode_labels(const std::vector<std::optional<std::string>>& labels) {
  std::map<std::string, int> ids;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    if (!l) {
      out.push_back(-1);
      continue;
    }
    auto [it, inserted] = ids.emplace(*l, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  return out;
}

std::vector<int> primary_topic_labels(const ScaModel& model) {
  std::vector<int> out(model.n_docs, -1);
  for (std::size_t it = 0; it < model.cluster_labels.size(); ++it) {
    const auto topics = model.topic_labels(it);
    for (std::size_t d = 0; d < out.size() && d < topics.size(); ++d) {
      if (out[d] < 0 && topics[d] >= 0) out[d] = topics[d];
    }
  }
  return out;
}

RunMetrics compute_run_metrics(const ScaModel& model, const DocumentCorpus& corpus, const MetricsOptions& options) {
  RunMetrics m;
  std::vector<TokenList> all_reps, first_reps, later_reps;
  for (const auto& c : model.components) {
    if (c.merged_into) continue;
    all_reps.push_back(c.tokens);
    (c.iteration == 1 ? first_reps : later_reps).push_back(c.tokens);
  }
  m.n_components = all_reps.size();
  m.n_components_first_iter = first_reps.size();
  m.n_clusters = model.total_clusters();
  m.n_merged = model.merged_count();
  if (!model.cluster_labels.empty()) {
    m.noise_rate = noise_rate_all_iterations(model.cluster_labels);
    m.noise_rate_first_iter = noise_rate(model.cluster_labels.front());
  }
  m.topic_diversity = topic_diversity(all_reps);
  m.topic_diversity_first_iter = topic_diversity(first_reps);

  if (!corpus.tokens.empty()) {
    const CooccurrenceIndex index(corpus.tokens);
    m.npmi = npmi_coherence(all_reps, index, options.epsilon);
    m.npmi_first_iter = npmi_coherence(first_reps, index, options.epsilon);
    m.cv = cv_coherence(all_reps, index, options.gamma, options.epsilon);
    m.cv_first_iter = cv_coherence(first_reps, index, options.gamma, options.epsilon);
  }

  if (model.first_iteration_hierarchy) {
    std::vector<std::vector<std::size_t>> later_clusters;
    for (std::size_t it = 1; it < model.cluster_labels.size(); ++it) {
      for (auto& s : cluster_member_sets(model.cluster_labels[it])) later_clusters.push_back(std::move(s));
    }
    m.avg_max_sample_overlap = avg_max_sample_overlap(later_clusters, *model.first_iteration_hierarchy);
  }
  if (auto ato = avg_max_token_overlap(later_reps, first_reps)) {
    m.avg_max_token_overlap_count = ato->count;
    m.avg_max_token_overlap_jaccard = ato->jaccard;
  }

  if (corpus.has_labels() && corpus.size() == model.n_docs) {
    auto predicted = primary_topic_labels(model);
    if (options.top_k_topics > 0) predicted = restrict_to_top_k(predicted, options.top_k_topics);
    const auto truth = encode_labels(corpus.labels);
    const auto scores = ground_truth_scores(predicted, truth);
    m.purity = scores.purity;
    m.ari = scores.ari;
    m.nmi = scores.nmi;
  }
  return m;
}

nlohmann::json metrics_to_json(const RunMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {
      {"n_components", m.n_components},
      {"n_components_first_iter", m.n_components_first_iter},
      {"n_clusters", m.n_clusters},
      {"n_merged", m.n_merged},
      {"noise_rate", m.noise_rate},
      {"noise_rate_first_iter", m.noise_rate_first_iter},
      {"topic_diversity", m.topic_diversity},
      {"topic_diversity_first_iter", m.topic_diversity_first_iter},
      {"npmi", m.npmi},
      {"npmi_first_iter", m.npmi_first_iter},
      {"cv", m.cv},
      {"cv_first_iter", m.cv_first_iter},
      {"avg_max_sample_overlap", opt(m.avg_max_sample_overlap)},
      {"avg_max_token_overlap_count", opt(m.avg_max_token_overlap_count)},
      {"avg_max_token_overlap_jaccard", opt(m.avg_max_token_overlap_jaccard)},
      {"purity", opt(m.purity)},
      {"ari", opt(m.ari)},
      {"nmi", opt(m.nmi)},
  };
}

RunMetrics metrics_from_json(const nlohmann::json& j) {
  try {
    RunMetrics m;
    auto opt = [&](const char* key) -> std::optional<double> {
      auto it = j.find(key);
      if (it == j.end() || it->is_null()) return std::nullopt;
      return it->get<double>();
    };
    m.n_components = j.at("n_components").get<std::size_t>();
    m.n_components_first_iter = j.at("n_components_first_iter").get<std::size_t>();
    m.n_clusters = j.at("n_clusters").get<std::size_t>();
    m.n_merged = j.value("n_merged", std::size_t{0});
    m.noise_rate = j.at("noise_rate").get<double>();
    m.noise_rate_first_iter = j.at("noise_rate_first_iter").get<double>();
    m.topic_diversity = j.at("topic_diversity").get<double>();
    m.topic_diversity_first_iter = j.at("topic_diversity_first_iter").get<double>();
    m.npmi = j.at("npmi").get<double>();
    m.npmi_first_iter = j.at("npmi_first_iter").get<double>();
    m.cv = j.at("cv").get<double>();
    m.cv_first_iter = j.at("cv_first_iter").get<double>();
    m.avg_max_sample_overlap = opt("avg_max_sample_overlap");
    m.avg_max_token_overlap_count = opt("avg_max_token_overlap_count");
    m.avg_max_token_overlap_jaccard = opt("avg_max_token_overlap_jaccard");
    m.purity = opt("purity");
    m.ari = opt("ari");
    m.nmi = opt("nmi");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed metrics JSON: ") + e.what());
  }
}

std::string render_comparison_table(const RunMetrics& m) {
  std::ostringstream out;
  out << "| | BT | SCA |\n|---|---|---|\n";
  out << "| #Topics | " << m.n_components_first_iter << " | " << m.n_components << " |\n";
  out << "| Noise R. | " << fixed3(m.noise_rate_first_iter) << " | " << fixed3(m.noise_rate) << " |\n";
  out << "| NPMI | " << fixed3(m.npmi_first_iter) << " | " << fixed3(m.npmi) << " |\n";
  out << "| CV | " << fixed3(m.cv_first_iter) << " | " << fixed3(m.cv) << " |\n";
  out << "| Topic D. | " << fixed3(m.topic_diversity_first_iter) << " | " << fixed3(m.topic_diversity) << " |\n";
  if (m.purity) {
    out << "| P1 | | " << fixed3(m.purity) << " |\n";
    out << "| ARI | | " << fixed3(m.ari) << " |\n";
    out << "| NMI | | " << fixed3(m.nmi) << " |\n";
  }
  return out.str();
}

std::string render_run_statistics(const RunMetrics& m, const ScaConfig& config) {
  std::ostringstream out;
  char mu[16];
  std::snprintf(mu, sizeof mu, "%.2f", config.mu);
  char alpha[16];
  std::snprintf(alpha, sizeof alpha, "%.2f", config.alpha);
  char theta[16];
  std::snprintf(theta, sizeof theta, "%.1f", config.theta);
  out << "| Statistic | Value |\n|---|---|\n";
  out << "| α | " << alpha << " |\n";
  out << "| μ | " << mu << " |\n";
  out << "| min_cluster_size | " << config.cluster.min_cluster_size << " |\n";
  out << "| min_samples | " << config.cluster.effective_min_samples() << " |\n";
  out << "| Overlap Threshold θ | " << theta << " |\n";
  out << "| No. of Components (1st) | " << m.n_components_first_iter << " |\n";
  out << "| No. of Components | " << m.n_components << " |\n";
  out << "| No. of Clusters | " << m.n_clusters << " |\n";
  out << "| Noise Rate (1st) | " << fixed3(m.noise_rate_first_iter) << " |\n";
  out << "| Noise Rate | " << fixed3(m.noise_rate) << " |\n";
  out << "| Avg. Maximum Sample Overlap | " << fixed3(m.avg_max_sample_overlap) << " |\n";
  out << "| Avg. Maximum Token Overlap | " << fixed3(m.avg_max_token_overlap_count) << " |\n";
  out << "| NPMI Coherence | " << fixed3(m.npmi) << " |\n";
  out << "| CV Coherence | " << fixed3(m.cv) << " |\n";
  out << "| Topic Diversity | " << fixed3(m.topic_diversity) << " |\n";
  out << "| NPMI Coherence (1st) | " << fixed3(m.npmi_first_iter) << " |\n";
  out << "| CV Coherence (1st) | " << fixed3(m.cv_first_iter) << " |\n";
  out << "| Topic Div. (1st) | " << fixed3(m.topic_diversity_first_iter) << " |\n";
  return out.str();
}

namespace {

struct TopicRow {
  const SemanticComponent* component;
  std::optional<std::size_t> token_overlap;
};

std::map<int, std::vector<TopicRow>> rows_by_iteration(const ScaModel& model) {
  std::vector<const SemanticComponent*> first;
  for (const auto& c : model.components) {
    if (c.iteration == 1 && !c.merged_into) first.push_back(&c);
  }
  std::map<int, std::vector<TopicRow>> out;
  for (const auto& c : model.components) {
    if (c.merged_into) continue;
    TopicRow row{&c, std::nullopt};
    if (c.iteration > 1 && !first.empty()) {
      std::size_t best = 0;
      for (const auto* f : first) best = std::max(best, shared_tokens(c.tokens, f->tokens));
      row.token_overlap = best;
    }
    out[c.iteration].push_back(row);
  }
  for (auto& [it, rows] : out) {
    std::stable_sort(rows.begin(), rows.end(), [](const TopicRow& a, const TopicRow& b) {
      return a.component->cluster_size > b.component->cluster_size;
    });
  }
  return out;
}

std::string medoid_text(const SemanticComponent& c, const DocumentCorpus* corpus) {
  if (!corpus || c.medoid_index >= corpus->raw_texts.size()) return c.medoid_doc_id;
  return corpus->raw_texts[c.medoid_index];
}

std::string escape_cell(std::string s) {
  std::string out;
  for (char ch : s) {
    if (ch == '|') {
      out += "\\|";
    } else if (ch == '\n' || ch == '\r') {
      out += ' ';
    } else {
      out += ch;
    }
  }
  return out;
}

}  // namespace

std::string render_topic_tables_markdown(const ScaModel& model, const DocumentCorpus* corpus,
                                         std::size_t per_iteration) {
  std::ostringstream out;
  for (const auto& [iteration, rows] : rows_by_iteration(model)) {
    out << "### Iteration " << iteration << "\n\n";
    const bool overlap = iteration > 1;
    out << "| ID | N | Tokens | Medoid |" << (overlap ? " Overlap |" : "") << "\n";
    out << "|---|---|---|---|" << (overlap ? "---|" : "") << "\n";
    for (std::size_t r = 0; r < std::min(per_iteration, rows.size()); ++r) {
      const auto& c = *rows[r].component;
      std::string tokens;
      for (std::size_t t = 0; t < c.tokens.size(); ++t) tokens += (t ? ", " : "") + c.tokens[t];
      out << "| " << c.id << " | " << c.cluster_size << " | " << escape_cell(tokens) << " | "
          << escape_cell(medoid_text(c, corpus)) << " |";
      if (overlap) out << " " << (rows[r].token_overlap ? std::to_string(*rows[r].token_overlap) : "") << " |";
      out << "\n";
    }
    out << "\n";
  }
  return out.str();
}

nlohmann::json topic_tables_json(const ScaModel& model, const DocumentCorpus* corpus) {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& [iteration, rows] : rows_by_iteration(model)) {
    nlohmann::json topics = nlohmann::json::array();
    for (const auto& row : rows) {
      const auto& c = *row.component;
      topics.push_back({{"id", c.id},
                        {"n", c.cluster_size},
                        {"tokens", c.tokens},
                        {"medoid_doc_id", c.medoid_doc_id},
                        {"medoid", medoid_text(c, corpus)},
                        {"token_overlap", row.token_overlap ? nlohmann::json(*row.token_overlap) : nlohmann::json()}});
    }
    tables.push_back({{"iteration", iteration}, {"topics", std::move(topics)}});
  }
  return tables;
}

}  // namespace sca
