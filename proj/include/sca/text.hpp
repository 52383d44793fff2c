#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sca/embedding_store.hpp"

namespace sca {

// Strips URLs, @-mentions, #-hashtags, emoji and symbols. Letters, digits,
// combining marks, intra-word apostrophes and single spaces survive.
std::string preprocess_text(std::string_view raw);

// Splits on whitespace. Han, Hiragana and Katakana runs have no word
// boundaries and are emitted one codepoint per token.
std::vector<std::string> tokenize(std::string_view clean, bool lowercase = true);

struct TextOptions {
  bool lowercase = true;
  std::size_t min_df = 2;
  std::vector<std::string> stopwords;
};

// Fills clean_texts and tokens from raw_texts.
void prepare_corpus(DocumentCorpus& corpus, const TextOptions& options);

class Vocabulary {
 public:
  std::optional<std::size_t> index_of(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_[index]; }
  std::size_t doc_freq(std::size_t index) const { return doc_freq_[index]; }
  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t document_count() const noexcept { return n_docs_; }
  std::size_t corpus_token_count() const noexcept { return total_tokens_; }

  std::size_t add(std::string token, std::size_t doc_freq);
  void set_document_count(std::size_t n) { n_docs_ = n; }
  void set_corpus_token_count(std::size_t n) { total_tokens_ = n; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
  std::vector<std::string> tokens_;
  std::vector<std::size_t> doc_freq_;
  std::size_t n_docs_ = 0;
  std::size_t total_tokens_ = 0;
};

// Keeps tokens whose document frequency is at least min_df, in lexicographic
// order. Throws ConfigError when nothing survives.
Vocabulary build_vocabulary(const DocumentCorpus& corpus, std::size_t min_df,
                            const std::vector<std::string>& stopwords = {});

}  // namespace sca
