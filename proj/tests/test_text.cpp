#include <doctest.h>

#include "sca/error.hpp"
#include "sca/text.hpp"

using namespace sca;

TEST_CASE("preprocess examples") {
  CHECK(preprocess_text("see https://t.co/x now") == "see now");
  CHECK(preprocess_text("@user #maga WIN!!!") == "WIN");
  CHECK(preprocess_text("") == "");
}

TEST_CASE("preprocess strips emoji and symbols, keeps apostrophes inside words") {
  CHECK(preprocess_text("don't   stop \xF0\x9F\x98\x80 now's") == "don't stop now's");
  CHECK(preprocess_text("'quoted' -- $100 & more") == "quoted 100 more");
  CHECK(preprocess_text("www.example.com rocks") == "rocks");
}

TEST_CASE("preprocess is idempotent") {
  const char* samples[] = {"see https://t.co/x now", "@a @b #c d!", "  spaced\t\tout  ", "caf\xC3\xA9 na\xC3\xAFve",
                           "贸易战 2019!", "x'y 'z' '", "emoji \xE2\x9D\xA4\xEF\xB8\x8F end"};
  for (const char* s : samples) {
    const auto once = preprocess_text(s);
    CHECK(preprocess_text(once) == once);
  }
}

TEST_CASE("tokenize examples") {
  CHECK(tokenize("Fake News media", true) == std::vector<std::string>{"fake", "news", "media"});
  CHECK(tokenize("approval 52", true) == std::vector<std::string>{"approval", "52"});
  CHECK(tokenize("贸易战", true) == std::vector<std::string>{"贸", "易", "战"});
  CHECK(tokenize("Keep Case", false) == std::vector<std::string>{"Keep", "Case"});
}

TEST_CASE("tokens carry no whitespace or symbols") {
  const auto toks = tokenize(preprocess_text("Hello,   world!! it's 贸易 @x #y https://a.b"), true);
  for (const auto& t : toks) {
    CHECK(!t.empty());
    CHECK(t.find(' ') == std::string::npos);
    CHECK(t.find('!') == std::string::npos);
    CHECK(t.find(',') == std::string::npos);
  }
}

TEST_CASE("vocabulary construction") {
  DocumentCorpus c;
  c.ids = {"1", "2"};
  c.raw_texts = {"a b", "b c"};
  prepare_corpus(c, {});
  REQUIRE(c.tokens.size() == 2);

  const auto v1 = build_vocabulary(c, 1);
  CHECK(v1.size() == 3);
  REQUIRE(v1.index_of("b"));
  CHECK(v1.doc_freq(*v1.index_of("b")) == 2);
  for (std::size_t i = 0; i < v1.size(); ++i) {
    CHECK(v1.index_of(v1.token(i)) == i);
    CHECK(v1.doc_freq(i) <= v1.document_count());
  }

  const auto v2 = build_vocabulary(c, 2);
  CHECK(v2.size() == 1);
  CHECK(v2.token(0) == "b");

  DocumentCorpus empty;
  CHECK_THROWS_AS(build_vocabulary(empty, 1), ConfigError);
}

TEST_CASE("stopwords are removed when configured") {
  DocumentCorpus c;
  c.ids = {"1", "2"};
  c.raw_texts = {"the cat", "the dog"};
  const auto v = build_vocabulary([&] {
    prepare_corpus(c, {});
    return c;
  }(), 1, {"the"});
  CHECK(!v.index_of("the"));
  CHECK(v.index_of("cat"));
}
