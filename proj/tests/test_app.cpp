#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "sca/app.hpp"
#include "sca/error.hpp"

using namespace sca;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / "sca_test_app" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Small synthetic dataset on disk plus a config pointing at it.
RunConfig dataset(const fs::path& dir, std::size_t n = 400) {
  SynthSpec s;
  s.n_docs = n;
  s.dim = 16;
  s.n_topics = 4;
  s.max_topics_per_doc = 2;
  write_synth_dataset(generate(s), dir);
  RunConfig c = resolve_config({}, {{"documents", (dir / "documents.jsonl").string()},
                                    {"embeddings", (dir / "embeddings.scae").string()},
                                    {"report_dir", (dir / "out").string()},
                                    {"reducer", "identity"},
                                    {"min_cluster_size", "25"},
                                    {"min_samples", "10"},
                                    {"max_iterations", "3"}});
  return c;
}

struct Server {
  httplib::Server svr;
  int port = 0;
  std::thread th;

  template <class Handler>
  explicit Server(Handler h) {
    svr.Post("/embed", h);
    port = svr.bind_to_any_port("127.0.0.1");
    th = std::thread([this] { svr.listen_after_bind(); });
    svr.wait_until_ready();
  }
  ~Server() {
    svr.stop();
    th.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/embed"; }
};

json rows(std::size_t n, std::size_t dim, float base = 0.0f) {
  json e = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    json r = json::array();
    for (std::size_t d = 0; d < dim; ++d) r.push_back(base + static_cast<float>(i * dim + d) / 100.0f);
    e.push_back(r);
  }
  return e;
}

EmbedClientOptions no_sleep() {
  EmbedClientOptions o;
  o.sleep = [](std::chrono::milliseconds) {};
  o.timeout = std::chrono::seconds(5);
  return o;
}

}  // namespace

TEST_CASE("key value parsing") {
  std::istringstream in("# comment\nalpha = 0.2\n\nmu=0.9  # trailing\nalpha = 0.3\n");
  const auto kv = parse_key_values(in);
  const auto c = resolve_config(kv, {});
  CHECK(c.sca.alpha == 0.3);
  CHECK(c.sca.mu == 0.9);
  std::istringstream bad("just words\n");
  CHECK_THROWS_AS(parse_key_values(bad), ConfigError);
}

TEST_CASE("presets and precedence") {
  const auto t = resolve_config({{"preset", "trump"}}, {});
  CHECK(t.sca.alpha == 0.2);
  CHECK(t.sca.mu == 0.95);
  CHECK(t.sca.cluster.min_cluster_size == 100);
  CHECK(t.sca.cluster.min_samples == 50);
  CHECK(t.sca.theta == 0.5);
  for (const char* name : {"hausa", "chinese"}) {
    const auto h = resolve_config({}, {{"preset", name}});
    CHECK(h.sca.alpha == 0.1);
    CHECK(h.sca.mu == 1.0);
    CHECK(h.sca.cluster.min_cluster_size == 300);
    CHECK(h.sca.cluster.min_samples == 300);
  }
  const auto c = resolve_config({{"preset", "trump"}, {"alpha", "0.4"}}, {{"alpha", "0.45"}});
  CHECK(c.sca.alpha == 0.45);
  CHECK(c.sca.mu == 0.95);
  CHECK_THROWS_AS(resolve_config({{"preset", "nope"}}, {}), ConfigError);
  CHECK_THROWS_AS(resolve_config({{"no_such_key", "1"}}, {}), ConfigError);
  CHECK_THROWS_AS(resolve_config({{"alpha", "abc"}}, {}), ConfigError);
}

TEST_CASE("rendered config reads back to the same config") {
  auto c = resolve_config({{"preset", "hausa"}}, {{"grid_alpha", "0,0.1"}, {"seed", "9"}, {"reducer", "pca"}});
  const auto text = render_config(c);
  std::istringstream in(text);
  CHECK(render_config(resolve_config(parse_key_values(in), {})) == text);
}

TEST_CASE("fit writes model and reports") {
  const auto dir = scratch("fit");
  auto cfg = dataset(dir);
  std::ostringstream out, err;
  REQUIRE(cmd_fit(cfg, out, err) == kExitOk);
  for (const char* f : {"model.json", "metrics.json", "report.md", "topics.json"}) CHECK(fs::exists(dir / "out" / f));

  const auto model = load_model(dir / "out" / "model.json");
  CHECK(model.active_component_ids().size() >= 4);

  const auto metrics = json::parse(slurp(dir / "out" / "metrics.json"));
  CHECK(metrics.at("seed") == cfg.sca.seed);
  CHECK(metrics_to_json(metrics_from_json(metrics.at("metrics"))) == metrics.at("metrics"));
  CHECK(slurp(dir / "out" / "report.md").find("Noise Rate (1st)") != std::string::npos);
}

TEST_CASE("single iteration report rows coincide") {
  const auto dir = scratch("fit1");
  auto cfg = dataset(dir);
  cfg.sca.max_iterations = 1;
  std::ostringstream out, err;
  REQUIRE(cmd_fit(cfg, out, err) == kExitOk);
  const auto m = metrics_from_json(json::parse(slurp(dir / "out" / "metrics.json")).at("metrics"));
  CHECK(m.n_components == m.n_components_first_iter);
  CHECK(m.noise_rate == m.noise_rate_first_iter);
  CHECK(m.npmi == m.npmi_first_iter);
}

TEST_CASE("fit input errors exit 2") {
  const auto dir = scratch("fit_err");
  auto cfg = dataset(dir);
  std::ostringstream out, err;
  auto missing = cfg;
  missing.embeddings = dir / "nope.scae";
  CHECK(cmd_fit(missing, out, err) == kExitInput);

  auto misaligned = cfg;
  const auto emb = load_embeddings(cfg.embeddings);
  std::vector<std::size_t> half(emb.rows() / 2);
  std::iota(half.begin(), half.end(), 0);
  save_embeddings(emb.select_rows(half), dir / "half.scae");
  misaligned.embeddings = dir / "half.scae";
  CHECK(cmd_fit(misaligned, out, err) == kExitInput);
  CHECK(err.str().find("misaligned") != std::string::npos);

  auto bad = cfg;
  bad.sca.mu = 3;
  CHECK(cmd_fit(bad, out, err) == kExitInput);
}

TEST_CASE("two fits are byte identical") {
  const auto dir = scratch("det");
  auto cfg = dataset(dir);
  cfg.sca.reducer.kind = ReducerKind::graph_layout;
  std::ostringstream out, err;
  cfg.model_out = dir / "a.json";
  REQUIRE(cmd_fit(cfg, out, err) == kExitOk);
  cfg.model_out = dir / "b.json";
  REQUIRE(cmd_fit(cfg, out, err) == kExitOk);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  CHECK(serialize_model(load_model(dir / "a.json")) == slurp(dir / "a.json"));
}

TEST_CASE("assign") {
  const auto dir = scratch("assign");
  auto cfg = dataset(dir);
  std::ostringstream out, err;
  REQUIRE(cmd_fit(cfg, out, err) == kExitOk);
  const auto model_path = dir / "out" / "model.json";
  const auto model = load_model(model_path);
  const auto emb = load_embeddings(cfg.embeddings);

  AssignOptions a;
  a.model = model_path;
  a.embeddings = cfg.embeddings;
  a.top_k = 3;
  std::ostringstream lines;
  REQUIRE(cmd_assign(a, lines, err) == kExitOk);
  std::istringstream in(lines.str());
  std::string line;
  std::size_t d = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    CHECK(j.at("topics").size() <= 3);
    CHECK(j.at("topics").size() == j.at("scores").size());
    CHECK(j.at("tokens").size() == j.at("topics").size());
    CHECK(j.at("id") == model.doc_ids[d]);
    // replay of the fitted model in process
    const auto expected = assign_topics(d, model, AssignMode::activation, 3, &emb);
    REQUIRE(expected.size() == j.at("topics").size());
    for (std::size_t k = 0; k < expected.size(); ++k) CHECK(j.at("topics")[k] == expected[k].topic);
    ++d;
  }
  CHECK(d == emb.rows());

  SUBCASE("cluster mode") {
    AssignOptions c = a;
    c.mode = AssignMode::cluster;
    c.documents = cfg.documents;
    std::ostringstream o;
    CHECK(cmd_assign(c, o, err) == kExitOk);
    const auto text = o.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(emb.rows()));
  }
  SUBCASE("empty input gives empty output") {
    std::ofstream(dir / "empty.scae").close();
    AssignOptions e = a;
    e.embeddings = dir / "empty.scae";
    std::ostringstream o;
    CHECK(cmd_assign(e, o, err) == kExitOk);
    CHECK(o.str().empty());
  }
  SUBCASE("dimension mismatch") {
    save_embeddings(EmbeddingMatrix(3, 5), dir / "wrong.scae");
    AssignOptions w = a;
    w.embeddings = dir / "wrong.scae";
    std::ostringstream o;
    CHECK(cmd_assign(w, o, err) == kExitInput);
  }
}

TEST_CASE("topics and metrics subcommands") {
  const auto dir = scratch("topics");
  auto cfg = dataset(dir);
  std::ostringstream out, err;
  REQUIRE(cmd_fit(cfg, out, err) == kExitOk);
  std::ostringstream md, js;
  CHECK(cmd_topics(dir / "out" / "model.json", cfg.documents, false, 5, md, err) == kExitOk);
  CHECK(md.str().find("Iteration 1") != std::string::npos);
  CHECK(cmd_topics(dir / "out" / "model.json", {}, true, 5, js, err) == kExitOk);
  CHECK_NOTHROW(json::parse(js.str()));

  auto mc = cfg;
  mc.report_dir = dir / "re";
  std::ostringstream mo;
  REQUIRE(cmd_metrics(dir / "out" / "model.json", mc, mo, err) == kExitOk);
  const auto a = json::parse(slurp(dir / "out" / "metrics.json")).at("metrics");
  const auto b = json::parse(slurp(dir / "re" / "metrics.json")).at("metrics");
  CHECK(a == b);
  CHECK(cmd_topics(dir / "missing.json", {}, false, 5, md, err) == kExitInput);
}

TEST_CASE("grid") {
  const auto dir = scratch("grid");
  auto cfg = dataset(dir);
  cfg.grid_alpha = {0.0, 0.3};
  cfg.grid_mu = {0.7, 1.0};
  cfg.sca.theta = 0.2;  // must be overridden
  const auto inputs = load_inputs(cfg);
  const auto report = run_grid(cfg, inputs);
  CHECK(report.cells.size() == 4);
  const auto md = render_grid_markdown(report);
  for (const char* m : {"No. of components", "Topic diversity", "Noise rate", "NPMI Coherence", "CV Coherence"})
    CHECK(md.find(m) != std::string::npos);

  // the (alpha 0, mu 1) cell equals a stand-alone fit with theta 1
  auto single = cfg;
  single.sca.alpha = 0.0;
  single.sca.mu = 1.0;
  single.sca.theta = 1.0;
  const auto fit = run_fit(single, inputs);
  REQUIRE(report.cell(1, 0).metrics);
  CHECK(metrics_to_json(*report.cell(1, 0).metrics) == metrics_to_json(fit.metrics));

  const auto j = grid_to_json(report);
  CHECK(grid_to_json(grid_from_json(j)) == j);
  CHECK(render_grid_markdown(grid_from_json(j)) == md);

  std::ostringstream out, err;
  REQUIRE(cmd_grid(cfg, out, err) == kExitOk);
  CHECK(fs::exists(dir / "out" / "grid.md"));
  CHECK(grid_to_json(grid_from_json(json::parse(slurp(dir / "out" / "grid.json")))) == j);
}

TEST_CASE("grid cell without clusters is not a failure") {
  const auto dir = scratch("grid0");
  auto cfg = dataset(dir, 120);
  cfg.sca.cluster.min_cluster_size = 500;
  cfg.grid_alpha = {0.0};
  cfg.grid_mu = {1.0};
  const auto report = run_grid(cfg, load_inputs(cfg));
  REQUIRE(report.cells.size() == 1);
  CHECK(report.cells[0].error.empty());
  CHECK(render_grid_markdown(report).find("0 components") != std::string::npos);
  CHECK(grid_to_json(report).at("cells")[0].at("status") == "0 components");
}

TEST_CASE("synth subcommand output feeds fit") {
  const auto dir = scratch("synth");
  SynthSpec s;
  s.n_docs = 200;
  s.dim = 8;
  s.n_topics = 2;
  s.max_topics_per_doc = 2;
  std::ostringstream out, err;
  REQUIRE(cmd_synth(s, dir, out, err) == kExitOk);
  CHECK(load_documents_jsonl(dir / "documents.jsonl").size() == 200);
  CHECK(load_embeddings(dir / "embeddings.scae").rows() == 200);
}

TEST_CASE("embedding client") {
  std::atomic<int> calls{0};
  SUBCASE("happy path with batching and bearer token") {
    Server srv([&](const httplib::Request& req, httplib::Response& res) {
      ++calls;
      CHECK(req.get_header_value("Authorization") == "Bearer s3cret");
      const auto n = json::parse(req.body).at("texts").size();
      res.set_content(json{{"embeddings", rows(n, 384)}}.dump(), "application/json");
    });
    auto o = no_sleep();
    o.bearer_token = "s3cret";
    o.batch_size = 2;
    const auto m = fetch_embeddings(srv.url(), {"a", "b", "c"}, o);
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 384);
    CHECK(calls == 2);
    CHECK(m.row(2)[0] == 0.0f);  // first row of the second batch
  }
  SUBCASE("row count mismatch") {
    Server srv([&](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"embeddings", rows(1, 4)}}.dump(), "application/json");
    });
    try {
      fetch_embeddings(srv.url(), {"a", "b"}, no_sleep());
      FAIL("expected an error");
    } catch (const EmbeddingServiceError& e) {
      CHECK(std::string(e.what()).find("row count mismatch") != std::string::npos);
      CHECK(e.batch() == 0);
    }
  }
  SUBCASE("transient 503 then success") {
    std::vector<std::chrono::milliseconds> waits;
    Server srv([&](const httplib::Request&, httplib::Response& res) {
      if (calls++ == 0) {
        res.status = 503;
        return;
      }
      res.set_content(json{{"embeddings", rows(2, 4)}}.dump(), "application/json");
    });
    auto o = no_sleep();
    o.sleep = [&](std::chrono::milliseconds ms) { waits.push_back(ms); };
    const auto m = fetch_embeddings(srv.url(), {"a", "b"}, o);
    CHECK(m.rows() == 2);
    CHECK(calls == 2);
    CHECK(waits.size() == 1);
  }
  SUBCASE("persistent failure gives up after three attempts") {
    Server srv([&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 500;
    });
    CHECK_THROWS_AS(fetch_embeddings(srv.url(), {"a"}, no_sleep()), EmbeddingServiceError);
    CHECK(calls == 3);
  }
  SUBCASE("client errors are not retried") {
    Server srv([&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 400;
    });
    CHECK_THROWS_AS(fetch_embeddings(srv.url(), {"a"}, no_sleep()), EmbeddingServiceError);
    CHECK(calls == 1);
  }
  SUBCASE("dimension drift across batches") {
    Server srv([&](const httplib::Request& req, httplib::Response& res) {
      const auto n = json::parse(req.body).at("texts").size();
      res.set_content(json{{"embeddings", rows(n, calls++ == 0 ? 4 : 5)}}.dump(), "application/json");
    });
    auto o = no_sleep();
    o.batch_size = 1;
    try {
      fetch_embeddings(srv.url(), {"a", "b"}, o);
      FAIL("expected an error");
    } catch (const EmbeddingServiceError& e) {
      CHECK(e.batch() == 1);
    }
  }
  SUBCASE("malformed body and non-finite values") {
    Server srv([&](const httplib::Request&, httplib::Response& res) {
      if (calls++ == 0) res.set_content("not json", "application/json");
      else res.set_content(R"({"embeddings": [[1, null]]})", "application/json");
    });
    CHECK_THROWS_AS(fetch_embeddings(srv.url(), {"a"}, no_sleep()), EmbeddingServiceError);
    CHECK_THROWS_AS(fetch_embeddings(srv.url(), {"a"}, no_sleep()), EmbeddingServiceError);
  }
}
