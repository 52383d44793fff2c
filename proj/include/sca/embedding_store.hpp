#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sca {

// Rows whose Euclidean norm falls below this are treated as zero: they are
// never clustered and never decomposed.
inline constexpr double kNegligibleNorm = 1e-6;

// Dense n x dim matrix of f32 embeddings, row-major, with cached row norms.
// All mutation goes through set_row/update_row so the cached norms always
// match the stored values.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t cols);
  EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> values);

  static EmbeddingMatrix from_rows(const std::vector<std::vector<float>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const float> row(std::size_t j) const {
    return {values_.data() + j * cols_, cols_};
  }
  std::span<const float> values() const noexcept { return values_; }

  double norm(std::size_t j) const { return norms_[j]; }
  std::span<const double> norms() const noexcept { return norms_; }
  bool is_zero_row(std::size_t j) const { return norms_[j] < kNegligibleNorm; }
  std::size_t count_zero_rows() const;

  void set_row(std::size_t j, std::span<const float> values);

  // fn receives a mutable view of row j; the cached norm is refreshed after.
  template <class Fn>
  void update_row(std::size_t j, Fn&& fn) {
    fn(std::span<float>(values_.data() + j * cols_, cols_));
    refresh_norm(j);
  }

  EmbeddingMatrix select_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_;
  }

 private:
  void refresh_norm(std::size_t j);

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> values_;
  std::vector<double> norms_;
};

enum class EmbeddingFormat { binary, csv };

// ".scae" and ".bin" map to binary, everything else to csv.
EmbeddingFormat infer_format(const std::filesystem::path& path);

// Binary layout: "SCAE", u16 version=1, u64 n, u32 dim, n*dim f32, all
// little-endian.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
EmbeddingMatrix read_binary_embeddings(std::istream& in);
EmbeddingMatrix parse_csv_embeddings(std::istream& in);
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
void write_binary_embeddings(const EmbeddingMatrix& m, std::ostream& out);

double dot(std::span<const float> a, std::span<const float> b);
double l2_norm(std::span<const float> a);

// <x, v> / (|x| |v|) clamped to [-1, 1]. Throws DegenerateVectorError for a
// zero-norm argument.
double cosine_similarity(std::span<const float> x, std::span<const float> v);

// Largest singular value by power iteration on m^T m, stopping when the
// relative change of the estimate drops below tol.
double spectral_norm(const EmbeddingMatrix& m, double tol = 1e-6, int max_iter = 200);
double frobenius_norm(const EmbeddingMatrix& m);

struct DocumentCorpus {
  std::vector<std::string> ids;
  std::vector<std::string> raw_texts;
  std::vector<std::string> clean_texts;
  std::vector<std::vector<std::string>> tokens;
  // Ground-truth label per document, present only for labelled datasets.
  std::vector<std::optional<std::string>> labels;

  std::size_t size() const noexcept { return ids.size(); }
  bool has_labels() const;
  // Checks id uniqueness and that every populated sequence has length n.
  void validate() const;
};

// JSON lines with "id" and "text", optionally "label".
DocumentCorpus load_documents_jsonl(const std::filesystem::path& path);
DocumentCorpus parse_documents_jsonl(std::istream& in);
void write_documents_jsonl(const DocumentCorpus& corpus, const std::filesystem::path& path);

}  // namespace sca
