#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "affect/text.hpp"
#include "affect/util.hpp"
#include "support/oracles.hpp"

using namespace affect;

namespace {

std::vector<std::string> surfaces(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

}  // namespace

TEST_CASE("tokenize: empty input yields no tokens") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \t  \n ").empty());
}

TEST_CASE("tokenize: plain words are lower-cased") {
  CHECK(surfaces(tokenize("Hello World")) ==
        std::vector<std::string>{"hello", "world"});
}

TEST_CASE("tokenize: url, mention, hashtag rules") {
  const auto tokens = tokenize("@bob loves #Joy http://t.co/x");
  REQUIRE(tokens.size() == 4);
  CHECK(tokens[0].surface == kUserToken);
  CHECK(tokens[0].kind == TokenKind::special);
  CHECK(tokens[1].surface == "loves");
  CHECK(tokens[1].kind == TokenKind::word);
  CHECK(tokens[2].surface == "joy");
  CHECK(tokens[2].kind == TokenKind::hashtag_word);
  CHECK(tokens[3].surface == kUrlToken);
  CHECK(tokens[3].kind == TokenKind::special);
}

TEST_CASE("tokenize: url prefixes are case-insensitive and cover www.") {
  CHECK(surfaces(tokenize("HTTPS://x.y")) ==
        std::vector<std::string>{kUrlToken});
  CHECK(surfaces(tokenize("www.example.com")) ==
        std::vector<std::string>{kUrlToken});
}

TEST_CASE("tokenize: standalone decimal numerals become <number>") {
  const auto tokens = tokenize("i won 100 times in 2018");
  CHECK(surfaces(tokens) == std::vector<std::string>{"i", "won", kNumberToken,
                                                     "times", "in",
                                                     kNumberToken});
}

TEST_CASE("tokenize: leading/trailing punctuation splits off") {
  CHECK(surfaces(tokenize("wow!")) == std::vector<std::string>{"wow", "!"});
  CHECK(surfaces(tokenize("\"quoted\"")) ==
        std::vector<std::string>{"\"", "quoted", "\""});
  CHECK(surfaces(tokenize("well...")) ==
        std::vector<std::string>{"well", ".", ".", "."});
}

TEST_CASE("tokenize: emoji code points stand alone") {
  const auto tokens = tokenize("happy \xF0\x9F\x98\x80\xF0\x9F\x98\x80 day");
  REQUIRE(tokens.size() == 4);
  CHECK(tokens[0].surface == "happy");
  CHECK(tokens[1].surface == "\xF0\x9F\x98\x80");
  CHECK(tokens[2].surface == "\xF0\x9F\x98\x80");
  CHECK(tokens[3].surface == "day");
}

TEST_CASE("tokenize: identical bytes in, identical tokens out") {
  const std::string text = "RT @user: OMG #blessed 42 https://t.co !!";
  CHECK(tokenize(text) == tokenize(text));
}

TEST_CASE("vocabulary: min_count filters and specials persist") {
  const std::vector<std::vector<Token>> corpus = {
      {word_token("a"), word_token("b"), word_token("a")}};
  const Vocabulary v = Vocabulary::build(corpus, 2);
  CHECK(v.contains("a"));
  CHECK_FALSE(v.contains("b"));
  CHECK(v.find(kUnkToken) == Vocabulary::unk_index());
  CHECK(v.find(kPadToken) == Vocabulary::pad_index());
  // 5 always-present specials + "a".
  CHECK(v.size() == 6);
  CHECK(v.count_at(v.find("a")) == 2);
  CHECK(v.contains(kUrlToken));
  CHECK(v.contains(kUserToken));
  CHECK(v.contains(kNumberToken));
}

TEST_CASE("vocabulary: ties break lexicographically after count order") {
  const std::vector<std::vector<Token>> corpus = {
      {word_token("b")}, {word_token("b")}, {word_token("a")},
      {word_token("a")}, {word_token("c")}};
  const Vocabulary v = Vocabulary::build(corpus, 1);
  // a and b both occur twice -> a first; c (count 1) last.
  CHECK(v.find("a") == 2);
  CHECK(v.find("b") == 3);
  CHECK(v.find("c") == 4);
}

TEST_CASE("vocabulary: empty corpus keeps only specials") {
  const Vocabulary v = Vocabulary::build({}, 1);
  CHECK(v.size() == 5);  // <unk> <pad> <url> <user> <number>
  CHECK(v.token_at(0) == kUnkToken);
  CHECK(v.token_at(1) == kPadToken);
  CHECK(v.count_at(v.find(kUrlToken)) == 0);
}

TEST_CASE("vocabulary: index is a bijection onto 0..|V|-1") {
  const std::vector<std::vector<Token>> corpus = {
      {word_token("x"), word_token("y"), word_token("z"), word_token("x")}};
  const Vocabulary v = Vocabulary::build(corpus, 1);
  std::vector<bool> seen(v.size(), false);
  for (int64_t i = 0; i < v.size(); ++i) {
    const int64_t back = v.find(v.token_at(i));
    REQUIRE(back == i);
    CHECK_FALSE(seen[back]);
    seen[back] = true;
  }
}

TEST_CASE("vocabulary: TSV round trip preserves order and counts") {
  const std::vector<std::vector<Token>> corpus = {
      {word_token("red"), word_token("blue"), word_token("red")}};
  const Vocabulary v = Vocabulary::build(corpus, 1);
  oracle::TempDir dir;
  v.save_tsv(dir.file("vocab.tsv"));
  const Vocabulary back = Vocabulary::load_tsv(dir.file("vocab.tsv"));
  REQUIRE(back.size() == v.size());
  for (int64_t i = 0; i < v.size(); ++i) {
    CHECK(back.token_at(i) == v.token_at(i));
    CHECK(back.count_at(i) == v.count_at(i));
  }
}

TEST_CASE("vocabulary: from_entries pins specials to the front") {
  const Vocabulary v = Vocabulary::from_entries({{"dog", 5}, {"cat", 3}});
  CHECK(v.find(kUnkToken) == 0);
  CHECK(v.find(kPadToken) == 1);
  CHECK(v.find("dog") == 2);
  CHECK(v.find("cat") == 3);
}

TEST_CASE("encode: OOV maps to <unk> and length is preserved") {
  const std::vector<std::vector<Token>> corpus = {
      {word_token("hello"), word_token("hello")}};
  const Vocabulary v = Vocabulary::build(corpus, 1);
  const auto ids =
      encode({word_token("hello"), word_token("zzz"), word_token("hello")}, v);
  REQUIRE(ids.size() == 3);
  CHECK(ids[0] == v.find("hello"));
  CHECK(ids[1] == Vocabulary::unk_index());
  CHECK(ids[2] == v.find("hello"));
  CHECK(encode({}, v).empty());
}

TEST_CASE("encode: length equals token count on arbitrary inputs") {
  const Vocabulary v = Vocabulary::build({{word_token("a")}}, 1);
  for (size_t n : {0u, 1u, 5u, 17u}) {
    std::vector<Token> tokens(n, word_token("mystery"));
    CHECK(encode(tokens, v).size() == n);
  }
}
