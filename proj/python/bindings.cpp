#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <spdlog/spdlog.h>

#include "sca/error.hpp"
#include "sca/metrics.hpp"
#include "sca/sca_engine.hpp"
#include "sca/synth.hpp"
#include "sca/text.hpp"

namespace py = pybind11;
using namespace sca;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

EmbeddingMatrix to_matrix(const FloatArray& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
  const auto n = static_cast<std::size_t>(a.shape(0));
  const auto d = static_cast<std::size_t>(a.shape(1));
  std::vector<float> values(a.data(), a.data() + n * d);
  for (float v : values) {
    if (!std::isfinite(v)) throw py::value_error("embeddings contain non-finite values");
  }
  return EmbeddingMatrix(n, d, std::move(values));
}

py::array_t<float> to_array(const EmbeddingMatrix& m) {
  py::array_t<float> out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

DocumentCorpus make_corpus(const std::vector<std::string>& texts, const std::vector<std::string>& ids) {
  DocumentCorpus c;
  c.raw_texts = texts;
  if (ids.empty()) {
    for (std::size_t i = 0; i < texts.size(); ++i) c.ids.push_back(std::to_string(i));
  } else {
    c.ids = ids;
  }
  return c;
}

py::dict component_dict(const SemanticComponent& c) {
  py::dict d;
  d["id"] = c.id;
  d["iteration"] = c.iteration;
  d["cluster_size"] = c.cluster_size;
  d["vector"] = py::array_t<float>(static_cast<py::ssize_t>(c.vector.size()), c.vector.data());
  d["tokens"] = c.tokens;
  d["medoid_doc_id"] = c.medoid_doc_id;
  d["merged_into"] = c.merged_into ? py::object(py::int_(*c.merged_into)) : py::object(py::none());
  return d;
}

ScaModel fit_model(const FloatArray& embeddings, const ScaConfig& config, const std::vector<std::string>& texts,
                   const std::vector<std::string>& ids, std::size_t min_df) {
  const auto m = to_matrix(embeddings);
  if (texts.empty()) {
    py::gil_scoped_release release;
    return fit(m, config).model;
  }
  auto corpus = make_corpus(texts, ids);
  TextOptions opts;
  opts.min_df = min_df;
  prepare_corpus(corpus, opts);
  const auto vocab = build_vocabulary(corpus, min_df);
  py::gil_scoped_release release;
  return fit(m, config, {&corpus, &vocab}).model;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Topic modelling by iterative clustering of embedding residuals";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<LoadError>(m, "LoadError", PyExc_IOError);
  py::register_exception<DegenerateVectorError>(m, "DegenerateVectorError", PyExc_ValueError);
  py::register_exception<LookupError>(m, "LookupError", PyExc_KeyError);

  m.def(
      "set_log_level", [](const std::string& level) { spdlog::set_level(spdlog::level::from_str(level)); },
      py::arg("level"), "trace, debug, info, warn, error or off");

  m.def("load_embeddings", [](const std::filesystem::path& p) { return to_array(load_embeddings(p)); },
        py::arg("path"));
  m.def(
      "save_embeddings",
      [](const std::filesystem::path& p, const FloatArray& a) { save_embeddings(to_matrix(a), p); },
      py::arg("path"), py::arg("embeddings"));
  m.def("spectral_norm", [](const FloatArray& a) { return spectral_norm(to_matrix(a)); });
  m.def("preprocess_text", &preprocess_text, py::arg("raw"));
  m.def("tokenize", &tokenize, py::arg("clean"), py::arg("lowercase") = true);

  py::class_<ScaConfig>(m, "ScaConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &ScaConfig::alpha)
      .def_readwrite("mu", &ScaConfig::mu)
      .def_readwrite("theta", &ScaConfig::theta)
      .def_readwrite("max_iterations", &ScaConfig::max_iterations)
      .def_readwrite("stop_window", &ScaConfig::stop_window)
      .def_readwrite("stop_new_clusters", &ScaConfig::stop_new_clusters)
      .def_readwrite("stop_residual_norm", &ScaConfig::stop_residual_norm)
      .def_readwrite("seed", &ScaConfig::seed)
      .def_readwrite("top_n_tokens", &ScaConfig::top_n_tokens)
      .def_property(
          "min_cluster_size", [](const ScaConfig& c) { return c.cluster.min_cluster_size; },
          [](ScaConfig& c, std::size_t v) { c.cluster.min_cluster_size = v; })
      .def_property(
          "min_samples", [](const ScaConfig& c) { return c.cluster.min_samples; },
          [](ScaConfig& c, std::size_t v) { c.cluster.min_samples = v; })
      .def_property(
          "reducer", [](const ScaConfig& c) { return to_string(c.reducer.kind); },
          [](ScaConfig& c, const std::string& v) { c.reducer.kind = parse_reducer_kind(v); })
      .def_property(
          "target_dim", [](const ScaConfig& c) { return c.reducer.target_dim; },
          [](ScaConfig& c, std::size_t v) { c.reducer.target_dim = v; })
      .def_property(
          "n_neighbors", [](const ScaConfig& c) { return c.reducer.n_neighbors; },
          [](ScaConfig& c, std::size_t v) { c.reducer.n_neighbors = v; })
      .def("validate", &ScaConfig::validate);

  py::class_<ScaModel>(m, "Model")
      .def_readonly("n_docs", &ScaModel::n_docs)
      .def_readonly("dim", &ScaModel::dim)
      .def_readonly("doc_ids", &ScaModel::doc_ids)
      .def_readonly("config", &ScaModel::config)
      .def_property_readonly("components",
                             [](const ScaModel& mdl) {
                               py::list out;
                               for (const auto& c : mdl.components) out.append(component_dict(c));
                               return out;
                             })
      .def_property_readonly("n_iterations", [](const ScaModel& mdl) { return mdl.iteration_log.size(); })
      .def_property_readonly("stop_reason", [](const ScaModel& mdl) { return stop_reason_code(mdl.stop_reason); })
      .def_property_readonly("active_component_ids", &ScaModel::active_component_ids)
      .def("topic_labels", &ScaModel::topic_labels, py::arg("iteration"))
      .def(
          "transform",
          [](const ScaModel& mdl, const FloatArray& x) {
            if (x.ndim() == 1) {
              const std::span<const float> v(x.data(), static_cast<std::size_t>(x.shape(0)));
              auto a = transform(v, mdl);
              return py::array_t<double>(static_cast<py::ssize_t>(a.size()), a.data());
            }
            const auto mat = to_matrix(x);
            py::array_t<double> out({static_cast<py::ssize_t>(mat.rows()),
                                     static_cast<py::ssize_t>(mdl.components.size())});
            for (std::size_t i = 0; i < mat.rows(); ++i) {
              auto a = transform(mat.row(i), mdl);
              std::copy(a.begin(), a.end(), out.mutable_data() + i * mdl.components.size());
            }
            return out;
          },
          py::arg("x"))
      .def(
          "assign",
          [](const ScaModel& mdl, std::size_t doc, const std::string& mode, std::size_t top_k,
             std::optional<FloatArray> embeddings) {
            std::optional<EmbeddingMatrix> emb;
            if (embeddings) emb = to_matrix(*embeddings);
            const auto ranked = assign_topics(doc, mdl, mode == "cluster" ? AssignMode::cluster : AssignMode::activation,
                                              top_k, emb ? &*emb : nullptr);
            std::vector<std::pair<int, double>> out;
            for (const auto& r : ranked) out.emplace_back(r.topic, r.score);
            return out;
          },
          py::arg("doc_index"), py::arg("mode") = "cluster", py::arg("top_k") = 3, py::arg("embeddings") = py::none())
      .def("to_json", &serialize_model)
      .def("save", [](const ScaModel& mdl, const std::filesystem::path& p) { save_model(mdl, p); })
      .def_static("load", &load_model, py::arg("path"));

  m.def("fit", &fit_model, py::arg("embeddings"), py::arg("config") = ScaConfig{},
        py::arg("texts") = std::vector<std::string>{}, py::arg("ids") = std::vector<std::string>{},
        py::arg("min_df") = 2, "Fit a model; texts enable token representations.");

  m.def("noise_rate", [](const std::vector<int>& labels) { return noise_rate(labels); });
  m.def("topic_diversity", &topic_diversity);
  m.def("sample_overlap", [](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    return sample_overlap(a, b);
  });
  m.def(
      "npmi_coherence",
      [](const std::vector<TokenList>& reps, const std::vector<std::vector<std::string>>& docs, double eps) {
        return npmi_coherence(reps, CooccurrenceIndex(docs), eps);
      },
      py::arg("representations"), py::arg("documents"), py::arg("eps") = kCoherenceEpsilon);
  m.def(
      "cv_coherence",
      [](const std::vector<TokenList>& reps, const std::vector<std::vector<std::string>>& docs, double gamma) {
        return cv_coherence(reps, CooccurrenceIndex(docs), gamma);
      },
      py::arg("representations"), py::arg("documents"), py::arg("gamma") = 2.0);
  m.def("ground_truth_scores", [](const std::vector<int>& pred, const std::vector<int>& truth) {
    const auto s = ground_truth_scores(pred, truth);
    return py::dict(py::arg("purity") = s.purity, py::arg("ari") = s.ari, py::arg("nmi") = s.nmi);
  });

  m.def(
      "synth_generate",
      [](std::size_t n_docs, std::size_t dim, std::size_t n_topics, std::size_t max_topics_per_doc,
         double noise_sigma, std::uint64_t seed) {
        SynthSpec spec;
        spec.n_docs = n_docs;
        spec.dim = dim;
        spec.n_topics = n_topics;
        spec.max_topics_per_doc = max_topics_per_doc;
        spec.noise_sigma = noise_sigma;
        spec.seed = seed;
        const auto data = generate(spec);
        py::dict d;
        d["ids"] = data.corpus.ids;
        d["texts"] = data.corpus.raw_texts;
        d["embeddings"] = to_array(data.embeddings);
        d["directions"] = to_array(data.directions);
        d["topic_sets"] = data.topic_sets;
        return d;
      },
      py::arg("n_docs") = 1000, py::arg("dim") = 32, py::arg("n_topics") = 4, py::arg("max_topics_per_doc") = 2,
      py::arg("noise_sigma") = 0.02, py::arg("seed") = 7);
  m.def(
      "score_recovery",
      [](const ScaModel& mdl, const FloatArray& directions, const std::vector<std::vector<int>>& topic_sets,
         std::optional<FloatArray> embeddings) {
        std::optional<EmbeddingMatrix> emb;
        if (embeddings) emb = to_matrix(*embeddings);
        const auto s = score_recovery(mdl, to_matrix(directions), topic_sets, emb ? &*emb : nullptr);
        return py::dict(py::arg("recall") = s.recall, py::arg("mean_best_cosine") = s.mean_best_cosine,
                        py::arg("ari") = s.ari, py::arg("nmi") = s.nmi, py::arg("purity") = s.purity);
      },
      py::arg("model"), py::arg("directions"), py::arg("topic_sets"), py::arg("embeddings") = py::none());
}
