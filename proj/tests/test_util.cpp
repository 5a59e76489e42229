#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "affect/archive.hpp"
#include "affect/rng.hpp"
#include "affect/text.hpp"
#include "affect/util.hpp"
#include "support/oracles.hpp"

using namespace affect;

TEST_CASE("split_fields keeps empty fields") {
  CHECK(split_fields("a\tb\tc", '\t') ==
        std::vector<std::string>{"a", "b", "c"});
  CHECK(split_fields("a\t\tc", '\t') == std::vector<std::string>{"a", "", "c"});
  CHECK(split_fields("", '\t') == std::vector<std::string>{""});
  CHECK(split_fields("x,", ',') == std::vector<std::string>{"x", ""});
}

TEST_CASE("read_lines handles unix and windows endings") {
  oracle::TempDir dir;
  oracle::write_file(dir.file("mixed.txt"), "one\r\ntwo\nthree");
  const auto lines = read_lines(dir.file("mixed.txt"));
  CHECK(lines == std::vector<std::string>{"one", "two", "three"});
}

TEST_CASE("read_lines rejects invalid UTF-8 naming the line") {
  oracle::TempDir dir;
  oracle::write_file(dir.file("bad.txt"), "fine\n\xFF\xFE broken\n");
  CHECK_THROWS_WITH_AS(read_lines(dir.file("bad.txt")),
                       doctest::Contains(":2:"), UserError);
}

TEST_CASE("read_lines errors on a missing file") {
  CHECK_THROWS_AS(read_lines("/nonexistent/nowhere.txt"), UserError);
}

TEST_CASE("valid_utf8 recognizes multi-byte sequences and rejects junk") {
  CHECK(valid_utf8("plain ascii"));
  CHECK(valid_utf8("caf\xC3\xA9"));
  CHECK(valid_utf8("\xF0\x9F\x98\x80"));
  CHECK_FALSE(valid_utf8("\xC3"));          // truncated sequence
  CHECK_FALSE(valid_utf8("\xFF"));          // invalid lead byte
  CHECK_FALSE(valid_utf8("\xC0\xAF"));      // overlong encoding
  CHECK_FALSE(valid_utf8("\xED\xA0\x80"));  // UTF-16 surrogate
}

TEST_CASE("utf8 decode/append round-trips code points") {
  for (char32_t cp : {char32_t{0x41}, char32_t{0xE9}, char32_t{0x20AC},
                      char32_t{0x1F600}}) {
    std::string s;
    append_utf8(s, cp);
    REQUIRE(valid_utf8(s));
    size_t i = 0;
    CHECK(decode_utf8(s, i) == cp);
    CHECK(i == s.size());
  }
}

TEST_CASE("parse_double and parse_int reject malformed input") {
  CHECK(parse_double("0.583", "score") == doctest::Approx(0.583));
  CHECK(parse_int("-3", "class") == -3);
  CHECK_THROWS_WITH_AS(parse_double("abc", "score"),
                       doctest::Contains("score"), UserError);
  CHECK_THROWS_AS(parse_double("1.5x", "score"), UserError);
  CHECK_THROWS_AS(parse_double("", "score"), UserError);
  CHECK_THROWS_AS(parse_int("2.5", "class"), UserError);
  CHECK_THROWS_AS(parse_int("ten", "class"), UserError);
}

TEST_CASE("format_float pins 8 significant digits") {
  CHECK(format_float(1.0) == "1");
  CHECK(format_float(0.5) == "0.5");
  CHECK(format_float(1.0 / 3.0) == "0.33333333");
  CHECK(format_float(-0.125) == "-0.125");
}

TEST_CASE("format_exact round-trips doubles bitwise") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const double v = (rng.uniform01() - 0.5) * std::pow(10.0, (int)rng.below(8));
    const double back = parse_double(format_exact(v), "round trip");
    CHECK(back == v);
  }
  CHECK(parse_double(format_exact(0.1), "x") == 0.1);
  CHECK(parse_double(format_exact(1e-300), "x") == 1e-300);
}

TEST_CASE("rng streams are deterministic per seed") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const uint64_t x = a.next_u64();
    all_equal = all_equal && x == b.next_u64();
    any_diff = any_diff || x != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("rng uniform01 stays in [0,1) and normal is finite") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 1000; ++i) CHECK(std::isfinite(rng.normal()));
}

TEST_CASE("rng below respects the bound and covers all residues") {
  Rng rng(3);
  std::set<uint64_t> seen;
  for (int i = 0; i < 500; ++i) {
    const uint64_t v = rng.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("rng shuffle permutes and is deterministic") {
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  Rng a(5), b(5);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(20);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(sorted == expect);
}

TEST_CASE("mix_seed separates nearby component tuples") {
  std::set<uint64_t> outs;
  for (uint64_t a = 0; a < 10; ++a)
    for (uint64_t b = 0; b < 10; ++b)
      for (uint64_t c = 0; c < 3; ++c) outs.insert(mix_seed(a, b, c));
  CHECK(outs.size() == 300);
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}

TEST_CASE("archive round-trips metadata, vocabulary and tensors bitwise") {
  Archive a;
  a.kind = "model";
  a.meta = {{"alpha", "one"}, {"beta", format_exact(0.1)}};
  a.has_vocab = true;
  a.vocab = Vocabulary::from_entries({{"word", 12}, {"thing", 3}});
  Tensor t = Tensor::zeros({2, 3});
  Rng rng(11);
  for (auto& x : t.data) x = rng.uniform(-2.0, 2.0);
  a.tensors = {{"w", t}, {"b", Tensor::row({0.25, -1.75})}};

  oracle::TempDir dir;
  save_archive(a, dir.file("m.ckpt"));
  const Archive back = load_archive(dir.file("m.ckpt"), "model");

  CHECK(back.kind == "model");
  CHECK(back.meta_value("alpha") == "one");
  CHECK(back.meta_value("beta") == format_exact(0.1));
  REQUIRE(back.has_vocab);
  CHECK(back.vocab.size() == a.vocab.size());
  CHECK(back.vocab.find("word") == a.vocab.find("word"));
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.tensors[0].first == "w");
  CHECK(back.tensor("w").shape == t.shape);
  CHECK(back.tensor("w").data == t.data);  // bitwise float64 round trip
  CHECK(back.tensor("b").data == std::vector<double>{0.25, -1.75});
}

TEST_CASE("archive rejects a mismatched kind") {
  Archive a;
  a.kind = "baseline";
  a.tensors = {{"w", Tensor::row({1.0})}};
  oracle::TempDir dir;
  save_archive(a, dir.file("x.ckpt"));
  CHECK_THROWS_WITH_AS(load_archive(dir.file("x.ckpt"), "model"),
                       doctest::Contains("baseline"), UserError);
  CHECK_NOTHROW(load_archive(dir.file("x.ckpt")));
}

TEST_CASE("archive rejects a truncated payload") {
  Archive a;
  a.kind = "model";
  a.tensors = {{"w", Tensor::row({1.0, 2.0, 3.0})}};
  oracle::TempDir dir;
  save_archive(a, dir.file("t.ckpt"));
  std::string bytes = oracle::read_file(dir.file("t.ckpt"));
  bytes.resize(bytes.size() - 8);
  oracle::write_file(dir.file("t.ckpt"), bytes);
  CHECK_THROWS_AS(load_archive(dir.file("t.ckpt"), "model"), UserError);
}

TEST_CASE("archive rejects non-finite payload entries") {
  Archive a;
  a.kind = "model";
  a.tensors = {{"w", Tensor::row({1.0, 2.0})}};
  oracle::TempDir dir;
  save_archive(a, dir.file("n.ckpt"));
  std::string bytes = oracle::read_file(dir.file("n.ckpt"));
  const double nan = std::nan("");
  bytes.replace(bytes.size() - 8, 8,
                reinterpret_cast<const char*>(&nan), 8);
  oracle::write_file(dir.file("n.ckpt"), bytes);
  CHECK_THROWS_AS(load_archive(dir.file("n.ckpt"), "model"), UserError);
}
