#include <atomic>
#include <cstdio>
#include <functional>
#include <sstream>
#include <thread>

#include "sca/app.hpp"
#include "sca/error.hpp"
#include "sca/parallel.hpp"

namespace sca {
namespace {

std::string axis_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  std::string s = buf;
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) s += ".0";
  return s;
}

std::string cell_text(const GridCell& c, const std::function<std::string(const RunMetrics&)>& field, bool count) {
  if (!c.error.empty()) return "error";
  if (!c.metrics) return "n/a";
  if (c.metrics->n_components == 0 && !count) return "0 components";
  return field(*c.metrics);
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

GridReport run_grid(const RunConfig& config, const LoadedInputs& inputs) {
  GridReport report;
  report.alpha = config.grid_alpha;
  report.mu = config.grid_mu;
  RunConfig echoed = config;
  echoed.sca.theta = 1.0;
  report.config = render_config(echoed);
  for (double mu : report.mu) {
    for (double alpha : report.alpha) report.cells.push_back({alpha, mu, std::nullopt, ""});
  }

  const std::size_t workers =
      std::max<std::size_t>(1, std::min(config.grid_workers ? config.grid_workers : worker_count(), report.cells.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < report.cells.size(); i = next++) {
      auto& cell = report.cells[i];
      try {
        RunConfig cfg = config;
        cfg.sca.alpha = cell.alpha;
        cfg.sca.mu = cell.mu;
        cfg.sca.theta = 1.0;
        cell.metrics = run_fit(cfg, inputs).metrics;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return report;
}

std::string render_grid_markdown(const GridReport& report) {
  struct Matrix {
    const char* title;
    std::function<std::string(const RunMetrics&)> field;
    bool count;
  };
  const Matrix matrices[] = {
      {"No. of components", [](const RunMetrics& m) { return std::to_string(m.n_components); }, true},
      {"Topic diversity", [](const RunMetrics& m) { return fixed3(m.topic_diversity); }, false},
      {"Noise rate", [](const RunMetrics& m) { return fixed3(m.noise_rate); }, false},
      {"NPMI Coherence", [](const RunMetrics& m) { return fixed3(m.npmi); }, false},
      {"CV Coherence", [](const RunMetrics& m) { return fixed3(m.cv); }, false},
  };
  std::ostringstream out;
  out << "# Grid run (θ = 1.0)\n\n```\n" << report.config << "```\n\n";
  for (const auto& m : matrices) {
    out << "### " << m.title << "\n\n| μ/α |";
    for (double a : report.alpha) out << " " << axis_value(a) << " |";
    out << "\n|---|";
    for (std::size_t j = 0; j < report.alpha.size(); ++j) out << "---|";
    out << "\n";
    for (std::size_t i = 0; i < report.mu.size(); ++i) {
      out << "| " << axis_value(report.mu[i]) << " |";
      for (std::size_t j = 0; j < report.alpha.size(); ++j) out << " " << cell_text(report.cell(i, j), m.field, m.count) << " |";
      out << "\n";
    }
    out << "\n";
  }
  std::ostringstream errors;
  for (const auto& c : report.cells) {
    if (!c.error.empty()) errors << "- α=" << axis_value(c.alpha) << ", μ=" << axis_value(c.mu) << ": " << c.error << "\n";
  }
  if (!errors.str().empty()) out << "### Failed cells\n\n" << errors.str() << "\n";
  return out.str();
}

nlohmann::json grid_to_json(const GridReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json cj = {{"alpha", c.alpha}, {"mu", c.mu}};
    cj["metrics"] = c.metrics ? metrics_to_json(*c.metrics) : nlohmann::json(nullptr);
    cj["error"] = c.error;
    cj["status"] = !c.error.empty() ? "error" : (c.metrics && c.metrics->n_components == 0 ? "0 components" : "ok");
    cells.push_back(std::move(cj));
  }
  return {{"theta", 1.0}, {"alpha", report.alpha}, {"mu", report.mu}, {"config", report.config}, {"cells", cells}};
}

GridReport grid_from_json(const nlohmann::json& j) {
  try {
    GridReport r;
    r.alpha = j.at("alpha").get<std::vector<double>>();
    r.mu = j.at("mu").get<std::vector<double>>();
    r.config = j.value("config", std::string());
    for (const auto& cj : j.at("cells")) {
      GridCell c;
      c.alpha = cj.at("alpha").get<double>();
      c.mu = cj.at("mu").get<double>();
      if (!cj.at("metrics").is_null()) c.metrics = metrics_from_json(cj.at("metrics"));
      c.error = cj.value("error", std::string());
      r.cells.push_back(std::move(c));
    }
    if (r.cells.size() != r.alpha.size() * r.mu.size()) throw LoadError("grid JSON cell count does not match its axes");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed grid JSON: ") + e.what());
  }
}

}  // namespace sca
