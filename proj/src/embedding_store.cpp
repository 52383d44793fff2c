#include "sca/embedding_store.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "sca/error.hpp"
#include "sca/parallel.hpp"

namespace sca {
namespace {

constexpr std::array<char, 4> kMagic{'S', 'C', 'A', 'E'};
constexpr std::uint16_t kBinaryVersion = 1;

std::string where(std::size_t row, std::size_t col) {
  return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

template <class T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <class T>
bool get_le(std::istream& in, T& value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) return false;
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  std::memcpy(&value, &bits, sizeof(T));
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0f), norms_(rows, 0.0) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)), norms_(rows, 0.0) {
  if (values_.size() != rows_ * cols_) {
    throw ConfigError("matrix data size " + std::to_string(values_.size()) + " does not match " +
                      std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  parallel_for(0, rows_, [this](std::size_t j) { refresh_norm(j); });
}

EmbeddingMatrix EmbeddingMatrix::from_rows(const std::vector<std::vector<float>>& rows) {
  if (rows.empty()) return {};
  const std::size_t dim = rows.front().size();
  std::vector<float> values;
  values.reserve(rows.size() * dim);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != dim) {
      throw LoadError("dimension mismatch at row " + std::to_string(j) + ": expected " +
                      std::to_string(dim) + " values, got " + std::to_string(rows[j].size()));
    }
    values.insert(values.end(), rows[j].begin(), rows[j].end());
  }
  return EmbeddingMatrix(rows.size(), dim, std::move(values));
}

std::size_t EmbeddingMatrix::count_zero_rows() const {
  return static_cast<std::size_t>(
      std::count_if(norms_.begin(), norms_.end(), [](double n) { return n < kNegligibleNorm; }));
}

void EmbeddingMatrix::set_row(std::size_t j, std::span<const float> values) {
  if (values.size() != cols_) throw ConfigError("set_row: dimension mismatch");
  std::copy(values.begin(), values.end(), values_.begin() + static_cast<std::ptrdiff_t>(j * cols_));
  refresh_norm(j);
}

void EmbeddingMatrix::refresh_norm(std::size_t j) { norms_[j] = l2_norm(row(j)); }

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> indices) const {
  std::vector<float> out;
  out.reserve(indices.size() * cols_);
  for (std::size_t j : indices) {
    const auto r = row(j);
    out.insert(out.end(), r.begin(), r.end());
  }
  return EmbeddingMatrix(indices.size(), cols_, std::move(out));
}

EmbeddingFormat infer_format(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".scae" || ext == ".bin") ? EmbeddingFormat::binary : EmbeddingFormat::csv;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  return load_embeddings(path, infer_format(path));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open embeddings file " + path.string());
  return format == EmbeddingFormat::binary ? read_binary_embeddings(in) : parse_csv_embeddings(in);
}

EmbeddingMatrix read_binary_embeddings(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw LoadError("malformed header: missing SCAE magic");
  }
  std::uint16_t version = 0;
  std::uint64_t n = 0;
  std::uint32_t dim = 0;
  if (!get_le(in, version) || !get_le(in, n) || !get_le(in, dim)) {
    throw LoadError("malformed header: truncated");
  }
  if (version != kBinaryVersion) {
    throw LoadError("malformed header: unsupported version " + std::to_string(version));
  }
  if (n == 0 || dim == 0) throw LoadError("malformed header: n and dim must be positive");

  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(n) * dim);
  std::vector<char> buffer(static_cast<std::size_t>(dim) * 4);
  for (std::uint64_t r = 0; r < n; ++r) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (in.gcount() != static_cast<std::streamsize>(buffer.size())) {
      throw LoadError("row count mismatch: header declares " + std::to_string(n) +
                      " rows but file contains " + std::to_string(r));
    }
    for (std::uint32_t c = 0; c < dim; ++c) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(buffer[c * 4 + b])) << (8 * b);
      }
      float v;
      std::memcpy(&v, &bits, 4);
      if (!std::isfinite(v)) throw LoadError("non-finite value at " + where(r, c));
      values.push_back(v);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw LoadError("row count mismatch: trailing data after " + std::to_string(n) + " rows");
  }
  return EmbeddingMatrix(static_cast<std::size_t>(n), dim, std::move(values));
}

EmbeddingMatrix parse_csv_embeddings(std::istream& in) {
  std::vector<float> values;
  std::size_t dim = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto body = trim(line);
    if (body.empty()) continue;
    std::size_t col = 0;
    std::size_t start = 0;
    while (start <= body.size()) {
      const std::size_t comma = body.find(',', start);
      const auto field = trim(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw LoadError("unparseable value '" + std::string(field) + "' at " + where(rows, col));
      }
      if (!std::isfinite(v) || !std::isfinite(static_cast<float>(v))) {
        throw LoadError("non-finite value at " + where(rows, col));
      }
      values.push_back(static_cast<float>(v));
      ++col;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      dim = col;
    } else if (col != dim) {
      throw LoadError("dimension mismatch at row " + std::to_string(rows) + ": expected " +
                      std::to_string(dim) + " columns, got " + std::to_string(col));
    }
    ++rows;
  }
  if (rows == 0) throw LoadError("empty embeddings file");
  return EmbeddingMatrix(rows, dim, std::move(values));
}

void write_binary_embeddings(const EmbeddingMatrix& m, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_le(out, kBinaryVersion);
  put_le(out, static_cast<std::uint64_t>(m.rows()));
  put_le(out, static_cast<std::uint32_t>(m.cols()));
  for (float v : m.values()) put_le(out, v);
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write embeddings file " + path.string());
  if (infer_format(path) == EmbeddingFormat::binary) {
    write_binary_embeddings(m, out);
    return;
  }
  // shortest representation that reads back to the same float
  std::array<char, 32> buf{};
  for (std::size_t j = 0; j < m.rows(); ++j) {
    const auto row = m.row(j);
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), row[i]);
      if (i) out << ',';
      out.write(buf.data(), end - buf.data());
    }
    out << '\n';
  }
}

double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

double l2_norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(std::span<const float> x, std::span<const float> v) {
  const double nx = l2_norm(x);
  const double nv = l2_norm(v);
  if (nx <= 0.0 || nv <= 0.0) throw DegenerateVectorError("cosine similarity of a zero-norm vector");
  return std::clamp(dot(x, v) / (nx * nv), -1.0, 1.0);
}

double frobenius_norm(const EmbeddingMatrix& m) {
  double acc = 0.0;
  for (double n : m.norms()) acc += n * n;
  return std::sqrt(acc);
}

double spectral_norm(const EmbeddingMatrix& m, double tol, int max_iter) {
  const std::size_t n = m.rows();
  const std::size_t d = m.cols();
  if (n == 0 || d == 0 || frobenius_norm(m) == 0.0) return 0.0;

  std::mt19937_64 rng(0x5ca1ab1eULL);
  std::normal_distribution<double> gauss;
  std::vector<double> v(d);
  for (auto& x : v) x = gauss(rng);

  std::vector<double> mv(n);
  std::vector<double> u(d);
  double sigma = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    double vn = 0.0;
    for (double x : v) vn += x * x;
    vn = std::sqrt(vn);
    if (vn == 0.0) return sigma;
    for (auto& x : v) x /= vn;

    parallel_for(0, n, [&](std::size_t j) {
      const auto r = m.row(j);
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += static_cast<double>(r[c]) * v[c];
      mv[j] = acc;
    });
    double mvn = 0.0;
    for (double x : mv) mvn += x * x;
    const double next = std::sqrt(mvn);  // Rayleigh estimate |m v|

    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const auto r = m.row(j);
      for (std::size_t c = 0; c < d; ++c) u[c] += static_cast<double>(r[c]) * mv[j];
    }
    const bool converged = it > 0 && std::abs(next - sigma) <= tol * next;
    sigma = next;
    if (converged) break;
    v.swap(u);
  }
  return sigma;
}

bool DocumentCorpus::has_labels() const {
  return !labels.empty() && std::any_of(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); });
}

void DocumentCorpus::validate() const {
  const std::size_t n = ids.size();
  auto check = [n](std::size_t size, const char* name) {
    if (size != 0 && size != n) {
      throw ConfigError(std::string("corpus field '") + name + "' has " + std::to_string(size) +
                        " entries, expected " + std::to_string(n));
    }
  };
  check(raw_texts.size(), "raw_texts");
  check(clean_texts.size(), "clean_texts");
  check(tokens.size(), "tokens");
  check(labels.size(), "labels");
  std::unordered_set<std::string_view> seen;
  seen.reserve(n);
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw ConfigError("duplicate document id '" + id + "'");
  }
}

DocumentCorpus parse_documents_jsonl(std::istream& in) {
  DocumentCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw LoadError("documents line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("text") || !obj["id"].is_string() ||
        !obj["text"].is_string()) {
      throw LoadError("documents line " + std::to_string(line_no) + ": expected string fields 'id' and 'text'");
    }
    corpus.ids.push_back(obj["id"].get<std::string>());
    corpus.raw_texts.push_back(obj["text"].get<std::string>());
    if (auto it = obj.find("label"); it != obj.end() && it->is_string()) {
      corpus.labels.emplace_back(it->get<std::string>());
    } else {
      corpus.labels.emplace_back(std::nullopt);
    }
  }
  corpus.validate();
  return corpus;
}

DocumentCorpus load_documents_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open documents file " + path.string());
  return parse_documents_jsonl(in);
}

void write_documents_jsonl(const DocumentCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw LoadError("cannot write documents file " + path.string());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    nlohmann::json obj{{"id", corpus.ids[i]}, {"text", corpus.raw_texts[i]}};
    if (i < corpus.labels.size() && corpus.labels[i]) obj["label"] = *corpus.labels[i];
    out << obj.dump() << '\n';
  }
}

}  // namespace sca
