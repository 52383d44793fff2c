#include <fstream>
#include <sstream>

#include "sca/error.hpp"
#include "sca/sca_engine.hpp"

namespace sca {
namespace {

constexpr int kFormatVersion = 1;

std::string order_name(ClusterOrder o) { return o == ClusterOrder::ascending_label ? "ascending_label" : "descending_size"; }

ClusterOrder parse_order(const std::string& s) {
  if (s == "ascending_label") return ClusterOrder::ascending_label;
  if (s == "descending_size") return ClusterOrder::descending_size;
  throw ConfigError("unknown cluster order '" + s + "'");
}

std::string norm_name(ResidualNormKind k) { return k == ResidualNormKind::spectral ? "spectral" : "frobenius"; }

ResidualNormKind parse_norm(const std::string& s) {
  if (s == "spectral") return ResidualNormKind::spectral;
  if (s == "frobenius") return ResidualNormKind::frobenius;
  throw ConfigError("unknown residual norm '" + s + "'");
}

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

}  // namespace

nlohmann::json config_to_json(const ScaConfig& c) {
  return {
      {"alpha", c.alpha},
      {"mu", c.mu},
      {"theta", c.theta},
      {"max_iterations", c.max_iterations},
      {"stop_window", c.stop_window},
      {"stop_new_clusters", c.stop_new_clusters},
      {"stop_residual_norm", c.stop_residual_norm},
      {"residual_norm", norm_name(c.residual_norm)},
      {"seed", c.seed},
      {"order", order_name(c.order)},
      {"top_n_tokens", c.top_n_tokens},
      {"assign_top_k", c.assign_top_k},
      {"activation_threshold", c.activation_threshold},
      {"reducer",
       {{"kind", to_string(c.reducer.kind)},
        {"target_dim", c.reducer.target_dim},
        {"metric", to_string(c.reducer.metric)},
        {"n_neighbors", c.reducer.n_neighbors},
        {"layout_epochs", c.reducer.layout_epochs},
        {"exact_knn_limit", c.reducer.exact_knn_limit},
        {"min_dist", c.reducer.min_dist}}},
      {"cluster", {{"min_cluster_size", c.cluster.min_cluster_size}, {"min_samples", c.cluster.min_samples}}},
  };
}

ScaConfig config_from_json(const nlohmann::json& j) {
  ScaConfig c;
  read_if(j, "alpha", c.alpha);
  read_if(j, "mu", c.mu);
  read_if(j, "theta", c.theta);
  read_if(j, "max_iterations", c.max_iterations);
  read_if(j, "stop_window", c.stop_window);
  read_if(j, "stop_new_clusters", c.stop_new_clusters);
  read_if(j, "stop_residual_norm", c.stop_residual_norm);
  if (j.contains("residual_norm")) c.residual_norm = parse_norm(j.at("residual_norm").get<std::string>());
  read_if(j, "seed", c.seed);
  if (j.contains("order")) c.order = parse_order(j.at("order").get<std::string>());
  read_if(j, "top_n_tokens", c.top_n_tokens);
  read_if(j, "assign_top_k", c.assign_top_k);
  read_if(j, "activation_threshold", c.activation_threshold);
  if (auto r = j.find("reducer"); r != j.end()) {
    if (r->contains("kind")) c.reducer.kind = parse_reducer_kind(r->at("kind").get<std::string>());
    if (r->contains("metric")) c.reducer.metric = parse_metric(r->at("metric").get<std::string>());
    read_if(*r, "target_dim", c.reducer.target_dim);
    read_if(*r, "n_neighbors", c.reducer.n_neighbors);
    read_if(*r, "layout_epochs", c.reducer.layout_epochs);
    read_if(*r, "exact_knn_limit", c.reducer.exact_knn_limit);
    read_if(*r, "min_dist", c.reducer.min_dist);
  }
  if (auto cl = j.find("cluster"); cl != j.end()) {
    read_if(*cl, "min_cluster_size", c.cluster.min_cluster_size);
    read_if(*cl, "min_samples", c.cluster.min_samples);
  }
  c.reducer.seed = c.seed;
  return c;
}

nlohmann::json model_to_json(const ScaModel& m) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : m.components) {
    nlohmann::json vec = nlohmann::json::array();
    for (float f : c.vector) vec.push_back(static_cast<double>(f));
    comps.push_back({
        {"id", c.id},
        {"iteration", c.iteration},
        {"cluster_label", c.cluster_label},
        {"cluster_size", c.cluster_size},
        {"vector", std::move(vec)},
        {"tokens", c.tokens},
        {"token_weights", c.token_weights},
        {"medoid_index", c.medoid_index},
        {"medoid_doc_id", c.medoid_doc_id},
        {"merged_into", c.merged_into ? nlohmann::json(*c.merged_into) : nlohmann::json(nullptr)},
    });
  }
  nlohmann::json log = nlohmann::json::array();
  for (const auto& r : m.iteration_log) {
    log.push_back({
        {"iteration", r.iteration},
        {"clusterable_rows", r.clusterable_rows},
        {"clusters_found", r.clusters_found},
        {"components_added", r.components_added},
        {"degenerate_clusters", r.degenerate_clusters},
        {"rows_decomposed", r.rows_decomposed},
        {"noise_rate", r.noise_rate},
        {"residual_norm", r.residual_norm},
    });
  }
  nlohmann::json j = {
      {"format_version", kFormatVersion},
      {"config", config_to_json(m.config)},
      {"n_docs", m.n_docs},
      {"dim", m.dim},
      {"doc_ids", m.doc_ids},
      {"components", std::move(comps)},
      {"cluster_labels", m.cluster_labels},
      {"cluster_components", m.cluster_components},
      {"iteration_log", std::move(log)},
      {"stop_reason", stop_reason_code(m.stop_reason)},
  };
  j["first_iteration_hierarchy"] =
      m.first_iteration_hierarchy ? hierarchy_to_json(*m.first_iteration_hierarchy) : nlohmann::json(nullptr);
  return j;
}

ScaModel model_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) throw LoadError("unsupported model format_version " + std::to_string(version));
    ScaModel m;
    m.config = config_from_json(j.at("config"));
    read_if(j, "n_docs", m.n_docs);
    read_if(j, "dim", m.dim);
    read_if(j, "doc_ids", m.doc_ids);
    for (const auto& cj : j.at("components")) {
      SemanticComponent c;
      c.id = cj.at("id").get<int>();
      c.iteration = cj.at("iteration").get<int>();
      read_if(cj, "cluster_label", c.cluster_label);
      c.cluster_size = cj.at("cluster_size").get<std::size_t>();
      for (const auto& v : cj.at("vector")) c.vector.push_back(static_cast<float>(v.get<double>()));
      c.tokens = cj.at("tokens").get<std::vector<std::string>>();
      read_if(cj, "token_weights", c.token_weights);
      read_if(cj, "medoid_index", c.medoid_index);
      read_if(cj, "medoid_doc_id", c.medoid_doc_id);
      if (auto it = cj.find("merged_into"); it != cj.end() && !it->is_null()) c.merged_into = it->get<int>();
      if (c.id != static_cast<int>(m.components.size())) throw LoadError("component ids must be consecutive from 0");
      m.components.push_back(std::move(c));
    }
    if (m.dim == 0 && !m.components.empty()) m.dim = m.components.front().vector.size();
    read_if(j, "cluster_labels", m.cluster_labels);
    read_if(j, "cluster_components", m.cluster_components);
    for (const auto& rj : j.at("iteration_log")) {
      IterationRecord r;
      r.iteration = rj.at("iteration").get<int>();
      read_if(rj, "clusterable_rows", r.clusterable_rows);
      read_if(rj, "clusters_found", r.clusters_found);
      read_if(rj, "components_added", r.components_added);
      read_if(rj, "degenerate_clusters", r.degenerate_clusters);
      read_if(rj, "rows_decomposed", r.rows_decomposed);
      read_if(rj, "noise_rate", r.noise_rate);
      read_if(rj, "residual_norm", r.residual_norm);
      m.iteration_log.push_back(r);
    }
    if (j.contains("stop_reason")) m.stop_reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
    if (auto h = j.find("first_iteration_hierarchy"); h != j.end() && !h->is_null()) {
      m.first_iteration_hierarchy = hierarchy_from_json(*h);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed model JSON: ") + e.what());
  }
}

std::string serialize_model(const ScaModel& model) { return model_to_json(model).dump(1) + "\n"; }

void save_model(const ScaModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write model to " + path.string());
  out << serialize_model(model);
  if (!out) throw LoadError("failed writing model to " + path.string());
}

ScaModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open model file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError("malformed model JSON in " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace sca
