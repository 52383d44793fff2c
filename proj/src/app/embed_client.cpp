#include <cmath>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "sca/app.hpp"
#include "sca/error.hpp"

namespace sca {
namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("embedding endpoint must be an http URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::vector<std::vector<float>> parse_batch(const std::string& body, std::size_t expected, std::size_t batch) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw EmbeddingServiceError("malformed response body", batch);
  }
  if (!j.is_object() || !j.contains("embeddings") || !j["embeddings"].is_array()) {
    throw EmbeddingServiceError("response lacks an \"embeddings\" array", batch);
  }
  const auto& rows = j["embeddings"];
  if (rows.size() != expected) {
    throw EmbeddingServiceError("row count mismatch: sent " + std::to_string(expected) + " texts, received " +
                                    std::to_string(rows.size()) + " rows",
                                batch);
  }
  std::vector<std::vector<float>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (!r.is_array()) throw EmbeddingServiceError("embedding row is not an array", batch);
    std::vector<float> row;
    row.reserve(r.size());
    for (const auto& v : r) {
      if (!v.is_number()) throw EmbeddingServiceError("embedding value is not a number", batch);
      const double x = v.get<double>();
      if (!std::isfinite(x)) throw EmbeddingServiceError("non-finite embedding value", batch);
      row.push_back(static_cast<float>(x));
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

EmbeddingMatrix fetch_embeddings(const std::string& endpoint, const std::vector<std::string>& texts,
                                 const EmbedClientOptions& options) {
  if (options.batch_size == 0) throw ConfigError("embedding batch size must be positive");
  const auto ep = split_endpoint(endpoint);
  httplib::Client client(ep.base);
  client.set_connection_timeout(options.timeout);
  client.set_read_timeout(options.timeout);
  httplib::Headers headers;
  if (!options.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + options.bearer_token);
  auto sleep = options.sleep ? options.sleep : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };

  std::vector<float> values;
  std::size_t dim = 0;
  const std::size_t n_batches = (texts.size() + options.batch_size - 1) / options.batch_size;
  for (std::size_t b = 0; b < n_batches; ++b) {
    const std::size_t lo = b * options.batch_size;
    const std::size_t hi = std::min(texts.size(), lo + options.batch_size);
    const nlohmann::json request = {{"texts", std::vector<std::string>(texts.begin() + static_cast<long>(lo),
                                                                        texts.begin() + static_cast<long>(hi))}};
    const std::string payload = request.dump();

    std::string last_error;
    std::optional<std::vector<std::vector<float>>> rows;
    auto backoff = options.initial_backoff;
    for (int attempt = 1; attempt <= std::max(1, options.max_attempts); ++attempt) {
      auto res = client.Post(ep.path, headers, payload, "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
      } else if (res->status != 200) {
        last_error = "service returned HTTP " + std::to_string(res->status);
        if (res->status < 500 && res->status != 429) throw EmbeddingServiceError(last_error, b);
      } else {
        rows = parse_batch(res->body, hi - lo, b);
        break;
      }
      spdlog::warn("embedding batch {} attempt {} failed: {}", b, attempt, last_error);
      if (attempt < options.max_attempts) {
        sleep(backoff);
        backoff *= 2;
      }
    }
    if (!rows) throw EmbeddingServiceError(last_error, b);
    for (const auto& row : *rows) {
      if (dim == 0) dim = row.size();
      if (row.size() != dim || dim == 0) {
        throw EmbeddingServiceError("dimension drift: expected " + std::to_string(dim) + " values, got " +
                                        std::to_string(row.size()),
                                    b);
      }
      values.insert(values.end(), row.begin(), row.end());
    }
  }
  if (texts.empty()) return EmbeddingMatrix{};
  return EmbeddingMatrix(texts.size(), dim, std::move(values));
}

}  // namespace sca
