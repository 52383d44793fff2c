#include "sca/text.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

#include "sca/error.hpp"
#include "sca/parallel.hpp"

namespace sca {
namespace {

std::vector<UChar32> decode(std::string_view s) {
  std::vector<UChar32> out;
  out.reserve(s.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const int32_t length = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c >= 0) out.push_back(c);
  }
  return out;
}

void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<uint8_t*>(buf), len, U8_MAX_LENGTH, c, error);
  if (!error) out.append(buf, static_cast<std::size_t>(len));
}

bool is_emoji(UChar32 c) {
  return u_hasBinaryProperty(c, UCHAR_EXTENDED_PICTOGRAPHIC) ||
         u_hasBinaryProperty(c, UCHAR_EMOJI_PRESENTATION) ||
         u_hasBinaryProperty(c, UCHAR_EMOJI_MODIFIER) ||
         u_hasBinaryProperty(c, UCHAR_REGIONAL_INDICATOR) ||
         u_hasBinaryProperty(c, UCHAR_VARIATION_SELECTOR) || c == 0x20E3 || c == 0x200D;
}

// Letters, combining marks and numbers.
bool is_word_char(UChar32 c) {
  if (is_emoji(c) && !(c >= '0' && c <= '9')) return false;
  const auto mask = U_GET_GC_MASK(c);
  return (mask & (U_GC_L_MASK | U_GC_M_MASK | U_GC_N_MASK)) != 0;
}

bool is_apostrophe(UChar32 c) { return c == '\'' || c == 0x2019; }

bool is_space(UChar32 c) { return u_isUWhiteSpace(c); }

bool has_no_word_boundaries(UChar32 c) {
  UErrorCode err = U_ZERO_ERROR;
  const UScriptCode script = uscript_getScript(c, &err);
  if (U_FAILURE(err)) return false;
  return script == USCRIPT_HAN || script == USCRIPT_HIRAGANA || script == USCRIPT_KATAKANA;
}

bool starts_with_ci(const std::vector<UChar32>& cps, std::size_t at, std::string_view prefix) {
  if (at + prefix.size() > cps.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (u_tolower(cps[at + k]) != static_cast<UChar32>(prefix[k])) return false;
  }
  return true;
}

bool is_url_start(const std::vector<UChar32>& cps, std::size_t at) {
  return starts_with_ci(cps, at, "http://") || starts_with_ci(cps, at, "https://") ||
         starts_with_ci(cps, at, "www.");
}

}  // namespace

std::string preprocess_text(std::string_view raw) {
  const auto cps = decode(raw);
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  bool last_was_word = false;
  auto emit_space = [&] {
    pending_space = !out.empty();
    last_was_word = false;
  };
  auto emit_char = [&](UChar32 c) {
    if (pending_space) out.push_back(' ');
    pending_space = false;
    append_utf8(out, c);
  };

  std::size_t i = 0;
  while (i < cps.size()) {
    const UChar32 c = cps[i];
    if (!last_was_word && is_url_start(cps, i)) {
      while (i < cps.size() && !is_space(cps[i])) ++i;
      emit_space();
      continue;
    }
    if ((c == '@' || c == '#') && i + 1 < cps.size() && (is_word_char(cps[i + 1]) || cps[i + 1] == '_')) {
      ++i;
      while (i < cps.size() && (is_word_char(cps[i]) || cps[i] == '_')) ++i;
      emit_space();
      continue;
    }
    if (is_word_char(c)) {
      emit_char(c);
      last_was_word = true;
    } else if (is_apostrophe(c) && last_was_word && i + 1 < cps.size() && is_word_char(cps[i + 1])) {
      emit_char('\'');
      last_was_word = false;
    } else {
      emit_space();
    }
    ++i;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view clean, bool lowercase) {
  const auto cps = decode(clean);
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    UChar32 c = cps[i];
    const bool apostrophe_inside = is_apostrophe(c) && !current.empty() && i + 1 < cps.size() &&
                                   is_word_char(cps[i + 1]) && is_word_char(cps[i - 1]);
    if (!is_word_char(c) && !apostrophe_inside) {
      flush();
      continue;
    }
    if (apostrophe_inside) c = '\'';
    if (has_no_word_boundaries(c)) {
      flush();
      append_utf8(current, c);
      flush();
      continue;
    }
    append_utf8(current, lowercase ? u_tolower(c) : c);
  }
  flush();
  return tokens;
}

void prepare_corpus(DocumentCorpus& corpus, const TextOptions& options) {
  const std::size_t n = corpus.size();
  corpus.clean_texts.assign(n, {});
  corpus.tokens.assign(n, {});
  std::unordered_set<std::string> stop(options.stopwords.begin(), options.stopwords.end());
  parallel_for(0, n, [&](std::size_t i) {
    corpus.clean_texts[i] = preprocess_text(corpus.raw_texts[i]);
    auto toks = tokenize(corpus.clean_texts[i], options.lowercase);
    if (!stop.empty()) {
      std::erase_if(toks, [&](const std::string& t) { return stop.contains(t); });
    }
    corpus.tokens[i] = std::move(toks);
  }, 64);
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view token) const {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  return std::nullopt;
}

std::size_t Vocabulary::add(std::string token, std::size_t doc_freq) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const std::size_t idx = tokens_.size();
  index_.emplace(token, idx);
  tokens_.push_back(std::move(token));
  doc_freq_.push_back(doc_freq);
  return idx;
}

Vocabulary build_vocabulary(const DocumentCorpus& corpus, std::size_t min_df,
                            const std::vector<std::string>& stopwords) {
  if (corpus.size() == 0) throw ConfigError("cannot build a vocabulary from an empty corpus");
  const std::set<std::string, std::less<>> stop(stopwords.begin(), stopwords.end());
  std::map<std::string, std::pair<std::size_t, std::size_t>, std::less<>> stats;  // df, count
  for (const auto& doc : corpus.tokens) {
    std::set<std::string_view> seen;
    for (const auto& t : doc) {
      if (stop.contains(t)) continue;
      auto& entry = stats[t];
      entry.second += 1;
      if (seen.insert(t).second) entry.first += 1;
    }
  }
  Vocabulary vocab;
  std::size_t total = 0;
  for (auto& [token, st] : stats) {
    if (st.first >= min_df) {
      vocab.add(token, st.first);
      total += st.second;
    }
  }
  if (vocab.size() == 0) {
    throw ConfigError("empty vocabulary: no token reaches min_df=" + std::to_string(min_df));
  }
  vocab.set_document_count(corpus.size());
  vocab.set_corpus_token_count(total);
  return vocab;
}

}  // namespace sca
