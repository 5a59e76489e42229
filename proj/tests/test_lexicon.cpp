#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "affect/lexicon.hpp"
#include "affect/rng.hpp"
#include "affect/text.hpp"
#include "affect/util.hpp"
#include "support/oracles.hpp"

using namespace affect;

namespace {

// ContextModel with hand-set PPMI rows; row norms filled in to match.
ContextModel manual_context(
    const std::vector<std::string>& words,
    const std::vector<std::vector<std::pair<int64_t, double>>>& word_rows) {
  ContextModel ctx;
  std::vector<std::pair<std::string, int64_t>> entries;
  for (const auto& w : words) entries.emplace_back(w, 1);
  ctx.vocab = Vocabulary::from_entries(std::move(entries));
  ctx.rows.assign(ctx.vocab.size(), {});
  for (size_t i = 0; i < word_rows.size(); ++i)
    ctx.rows[2 + i] = word_rows[i];  // after <unk>/<pad>
  ctx.row_norms.assign(ctx.vocab.size(), 0.0);
  for (int64_t i = 0; i < ctx.vocab.size(); ++i) {
    double s = 0.0;
    for (const auto& [f, w] : ctx.rows[i]) s += w * w;
    ctx.row_norms[i] = std::sqrt(s);
  }
  return ctx;
}

double direct_rating(const AffectModel& m, const ContextModel& ctx,
                     const std::string& w) {
  double r = m.alpha0;
  for (size_t i = 0; i < m.seeds.size(); ++i)
    r += m.alphas[i] * m.seed_ratings[i] * semantic_similarity(m.seeds[i], w, ctx);
  return r;
}

}  // namespace

TEST_CASE("ppmi: single co-occurring pair gets weight ln 2") {
  // One document [a, b] with window 1: c(a,b) = c(b,a) = 1, T = 2,
  // marginals 1 -> PPMI = ln(1*2 / (1*1)) = ln 2 on the off-diagonal.
  const std::vector<std::vector<Token>> corpus = {
      {word_token("a"), word_token("b")}};
  const Vocabulary vocab = Vocabulary::build(corpus, 1);
  const ContextModel ctx = build_context_model(corpus, vocab, 1);
  const int64_t ia = vocab.find("a"), ib = vocab.find("b");
  REQUIRE(ctx.rows[ia].size() == 1);
  CHECK(ctx.rows[ia][0].first == ib);
  CHECK(ctx.rows[ia][0].second == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  REQUIRE(ctx.rows[ib].size() == 1);
  CHECK(ctx.rows[ib][0].second == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("ppmi: independent co-occurrence gives weight 0 everywhere") {
  // Documents covering all four ordered pairs equally: every cell has
  // c(w,f)*T = c(w)*c(f), so ln(1) = 0 and rows stay empty.
  const std::vector<std::vector<Token>> corpus = {
      {word_token("a"), word_token("a")},
      {word_token("a"), word_token("b")},
      {word_token("b"), word_token("a")},
      {word_token("b"), word_token("b")}};
  const Vocabulary vocab = Vocabulary::build(corpus, 1);
  const ContextModel ctx = build_context_model(corpus, vocab, 1);
  for (int64_t i = 0; i < vocab.size(); ++i) CHECK(ctx.rows[i].empty());
}

TEST_CASE("ppmi: words that never co-occur share no features") {
  const std::vector<std::vector<Token>> corpus = {
      {word_token("a"), word_token("b")},
      {word_token("c"), word_token("d")}};
  const Vocabulary vocab = Vocabulary::build(corpus, 1);
  const ContextModel ctx = build_context_model(corpus, vocab, 1);
  const auto& row_a = ctx.rows[vocab.find("a")];
  for (const auto& [f, w] : row_a) {
    CHECK(f != vocab.find("c"));
    CHECK(f != vocab.find("d"));
    CHECK(w >= 0.0);
  }
  CHECK(semantic_similarity("a", "c", ctx) == 0.0);
}

TEST_CASE("similarity: identical rows score 1 within 1e-12, symmetric") {
  const auto ctx = manual_context(
      {"s", "t", "u"},
      {{{0, 1.0}, {1, 1.0}}, {{0, 1.0}, {1, 1.0}}, {{0, 1.0}}});
  CHECK(std::fabs(semantic_similarity("s", "t", ctx) - 1.0) <= 1e-12);
  CHECK(semantic_similarity("s", "u", ctx) ==
        doctest::Approx(semantic_similarity("u", "s", ctx)).epsilon(1e-15));
  // Rows [1,1] vs [1,0] -> cos = 1/sqrt(2).
  CHECK(semantic_similarity("s", "u", ctx) ==
        doctest::Approx(0.70710678118654752).epsilon(1e-12));
}

TEST_CASE("similarity: zero rows score 0 and missing words are named") {
  const auto ctx = manual_context({"s", "empty"}, {{{0, 2.0}}, {}});
  CHECK(semantic_similarity("s", "empty", ctx) == 0.0);
  CHECK(semantic_similarity("empty", "empty", ctx) == 0.0);
  CHECK_THROWS_WITH(semantic_similarity("s", "ghost", ctx),
                    doctest::Contains("ghost"));
}

TEST_CASE("select_seeds: strongest polarity first, ties lexicographic") {
  const auto ctx = manual_context({"good", "ok", "bad"}, {{}, {}, {}});
  SeedLexicon lex;
  lex.dimension = "valence";
  lex.ratings = {{"good", 0.9}, {"ok", 0.1}, {"bad", -0.8}};
  CHECK(select_seeds(lex, ctx, 2) ==
        std::vector<std::string>{"good", "bad"});
  CHECK(select_seeds(lex, ctx, 9) ==
        std::vector<std::string>{"good", "bad", "ok"});
  SeedLexicon tied;
  tied.dimension = "valence";
  tied.ratings = {{"zeta", 0.5}, {"alpha", -0.5}};
  const auto ctx2 = manual_context({"zeta", "alpha"}, {{}, {}});
  CHECK(select_seeds(tied, ctx2, 2) ==
        std::vector<std::string>{"alpha", "zeta"});
}

TEST_CASE("select_seeds: words outside the corpus vocabulary are skipped") {
  const auto ctx = manual_context({"here"}, {{}});
  SeedLexicon lex;
  lex.dimension = "valence";
  lex.ratings = {{"here", 0.4}, {"elsewhere", 0.99}};
  CHECK(select_seeds(lex, ctx, 5) == std::vector<std::string>{"here"});
  SeedLexicon none;
  none.dimension = "valence";
  none.ratings = {{"elsewhere", 0.99}};
  CHECK_THROWS_WITH_AS(select_seeds(none, ctx, 1),
                       doctest::Contains("no usable seeds"), UserError);
}

TEST_CASE("fit: orthonormal seed design recovers unit weights exactly") {
  // Three seeds with mutually disjoint unit rows (S(t_i,t_j) = delta_ij)
  // plus one rating-zero word with its own disjoint row to pin alpha0 = 0.
  const auto ctx = manual_context(
      {"s1", "s2", "s3", "w"},
      {{{0, 1.0}}, {{1, 1.0}}, {{2, 1.0}}, {{3, 1.0}}});
  SeedLexicon lex;
  lex.dimension = "valence";
  lex.ratings = {{"s1", 0.9}, {"s2", -0.7}, {"s3", 0.4}, {"w", 0.0}};
  const AffectModel m =
      fit_affect_model(lex, {"s1", "s2", "s3"}, ctx, 0.0);
  CHECK(m.alpha0 == doctest::Approx(0.0).epsilon(1e-10));
  REQUIRE(m.alphas.size() == 3);
  for (double a : m.alphas) CHECK(a == doctest::Approx(1.0).epsilon(1e-10));
  for (const char* s : {"s1", "s2", "s3"})
    CHECK(predict_norm(s, m, ctx) ==
          doctest::Approx(lex.ratings.at(s)).epsilon(1e-10));
}

TEST_CASE("fit: matches an independent normal-equations solve to 1e-8") {
  Rng rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    // Random sparse nonnegative rows over 6 feature slots.
    std::vector<std::string> words;
    std::vector<std::vector<std::pair<int64_t, double>>> rows;
    const int64_t n_words = 5 + (int64_t)rng.below(4);
    for (int64_t w = 0; w < n_words; ++w) {
      words.push_back("w" + std::to_string(w));
      std::vector<std::pair<int64_t, double>> row;
      for (int64_t f = 0; f < 6; ++f)
        if (rng.uniform01() < 0.6) row.emplace_back(f, rng.uniform(0.1, 2.0));
      rows.push_back(std::move(row));
    }
    const auto ctx = manual_context(words, rows);
    SeedLexicon lex;
    lex.dimension = "valence";
    for (const auto& w : words) lex.ratings[w] = rng.uniform(-1.0, 1.0);
    const std::vector<std::string> seeds(words.begin(), words.begin() + 3);
    const double ridge = 1e-3;
    const AffectModel m = fit_affect_model(lex, seeds, ctx, ridge);

    // Oracle: design matrix column j>0 is rating(seed_j)*S(seed_j, w);
    // ridge added to every coefficient except the intercept.
    const size_t k = seeds.size() + 1;
    std::vector<std::vector<long double>> ata(k, std::vector<long double>(k, 0));
    std::vector<long double> atb(k, 0);
    for (const auto& w : words) {
      std::vector<long double> x(k, 0);
      x[0] = 1.0L;
      for (size_t j = 0; j < seeds.size(); ++j)
        x[j + 1] = lex.ratings.at(seeds[j]) *
                   semantic_similarity(seeds[j], w, ctx);
      for (size_t r = 0; r < k; ++r) {
        for (size_t c = 0; c < k; ++c) ata[r][c] += x[r] * x[c];
        atb[r] += x[r] * lex.ratings.at(w);
      }
    }
    for (size_t j = 1; j < k; ++j) ata[j][j] += ridge;
    const auto coeffs = oracle::solve(ata, atb);
    CHECK(std::fabs(m.alpha0 - coeffs[0]) <= 1e-8);
    for (size_t j = 0; j < seeds.size(); ++j)
      CHECK(std::fabs(m.alphas[j] - coeffs[j + 1]) <= 1e-8);
  }
}

TEST_CASE("fit: residual at returned coefficients is optimal") {
  Rng rng(99);
  const auto ctx = manual_context(
      {"a", "b", "c", "d", "e"},
      {{{0, 1.0}, {1, 0.4}}, {{1, 1.2}}, {{0, 0.3}, {2, 0.8}},
       {{2, 1.0}}, {{0, 0.5}, {1, 0.5}, {2, 0.5}}});
  SeedLexicon lex;
  lex.dimension = "valence";
  for (const char* w : {"a", "b", "c", "d", "e"})
    lex.ratings[w] = rng.uniform(-1.0, 1.0);
  const std::vector<std::string> seeds = {"a", "b"};
  const double ridge = 1e-2;
  const AffectModel m = fit_affect_model(lex, seeds, ctx, ridge);

  auto objective = [&](double a0, const std::vector<double>& al) {
    double obj = 0.0;
    for (const auto& [w, r] : lex.ratings) {
      double pred = a0;
      for (size_t j = 0; j < seeds.size(); ++j)
        pred += al[j] * lex.ratings.at(seeds[j]) *
                semantic_similarity(seeds[j], w, ctx);
      obj += (r - pred) * (r - pred);
    }
    for (double a : al) obj += ridge * a * a;
    return obj;
  };
  const double at_fit = objective(m.alpha0, m.alphas);
  Rng probe(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> al = m.alphas;
    double a0 = m.alpha0 + probe.uniform(-0.05, 0.05);
    for (auto& a : al) a += probe.uniform(-0.05, 0.05);
    CHECK(at_fit <= objective(a0, al) + 1e-8);
  }
}

TEST_CASE("fit: singular system without ridge advises ridge > 0") {
  // Two seeds with identical rows make the design collinear.
  const auto ctx = manual_context({"s1", "s2"}, {{{0, 1.0}}, {{0, 1.0}}});
  SeedLexicon lex;
  lex.dimension = "valence";
  lex.ratings = {{"s1", 0.5}, {"s2", 0.5}};
  CHECK_THROWS_WITH_AS(fit_affect_model(lex, {"s1", "s2"}, ctx, 0.0),
                       doctest::Contains("ridge"), UserError);
}

TEST_CASE("fit: huge ridge shrinks weights to 0 and intercept to the mean") {
  const auto ctx = manual_context(
      {"a", "b", "c"}, {{{0, 1.0}}, {{0, 0.5}, {1, 1.0}}, {{1, 0.7}}});
  SeedLexicon lex;
  lex.dimension = "valence";
  lex.ratings = {{"a", 0.8}, {"b", -0.2}, {"c", 0.3}};
  const AffectModel m = fit_affect_model(lex, {"a", "b"}, ctx, 1e12);
  for (double a : m.alphas) CHECK(std::fabs(a) <= 1e-6);
  CHECK(m.alpha0 == doctest::Approx(0.3).epsilon(1e-6));  // mean rating
}

TEST_CASE("predict_norm: direct evaluation and clamping") {
  const auto ctx = manual_context({"t", "w"}, {{{0, 1.0}}, {{0, 1.0}, {1, 1.7320508075688772}}});
  AffectModel m;
  m.dimension = "valence";
  m.seeds = {};
  m.seed_ratings = {};
  m.alphas = {};
  m.alpha0 = 0.5;
  CHECK(predict_norm("w", m, ctx) == doctest::Approx(0.5).epsilon(1e-12));

  // One seed: rating 0.8, similarity cos([1],[1,sqrt3]) = 0.5 -> 0.4.
  AffectModel one;
  one.dimension = "valence";
  one.seeds = {"t"};
  one.seed_ratings = {0.8};
  one.alphas = {1.0};
  one.alpha0 = 0.0;
  CHECK(predict_norm("w", one, ctx) == doctest::Approx(0.4).epsilon(1e-12));

  AffectModel big;
  big.dimension = "valence";
  big.alpha0 = 1.7;
  CHECK(predict_norm("w", big, ctx) == 1.0);
  big.alpha0 = -2.3;
  CHECK(predict_norm("w", big, ctx) == -1.0);
  CHECK_THROWS_WITH(predict_norm("ghost", one, ctx), doctest::Contains("ghost"));
}

TEST_CASE("expand_lexicon: clamped predictions for every word and dimension") {
  const auto ctx = manual_context(
      {"a", "b"}, {{{0, 1.0}}, {{0, 0.6}, {1, 0.8}}});
  std::vector<AffectModel> models;
  for (const char* dim : kAffectDimensions) {
    AffectModel m;
    m.dimension = dim;
    m.seeds = {"a"};
    m.seed_ratings = {0.9};
    m.alphas = {2.5};  // strong weight so clamping is exercised
    m.alpha0 = 0.1;
    models.push_back(std::move(m));
  }
  const AffectiveLexicon lex = expand_lexicon(ctx.vocab, models, ctx);
  REQUIRE(lex.norms.size() == 2);
  for (const auto& [word, norms] : lex.norms)
    for (double v : norms) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  // Same inputs -> same outputs (pure function).
  const AffectiveLexicon again = expand_lexicon(ctx.vocab, models, ctx);
  CHECK(again.norms == lex.norms);
  // Direct evaluation agrees for an unclamped entry.
  const double direct = direct_rating(models[0], ctx, "b");
  if (direct > -1.0 && direct < 1.0)
    CHECK(lex.norms.at("b")[0] == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("expand_lexicon: a missing dimension model is named") {
  const auto ctx = manual_context({"a"}, {{{0, 1.0}}});
  std::vector<AffectModel> models;
  for (const char* dim : kAffectDimensions) {
    if (std::string(dim) == "fear") continue;
    AffectModel m;
    m.dimension = dim;
    models.push_back(std::move(m));
  }
  CHECK_THROWS_WITH_AS(expand_lexicon(ctx.vocab, models, ctx),
                       doctest::Contains("fear"), UserError);
}

TEST_CASE("compose_embeddings: appends ten norms in canonical order") {
  EmbeddingMatrix e;
  e.vocab = Vocabulary::from_entries({{"x", 2}, {"y", 1}});
  e.dim = 3;
  e.rows = {0, 0, 0, 0, 0, 0, 1, 2, 3, 4, 5, 6};
  AffectiveLexicon lex;
  lex.norms["x"] = {0.1, 0.2, 0.3, 0.4, 0.5, -0.1, -0.2, -0.3, -0.4, -0.5};
  const EmbeddingMatrix composed = compose_embeddings(e, lex);
  REQUIRE(composed.dim == 13);
  REQUIRE(composed.vocab.size() == e.vocab.size());
  const auto x_row = composed.row_copy(composed.vocab.find("x"));
  CHECK(x_row[0] == 1.0);
  CHECK(x_row[2] == 3.0);
  CHECK(x_row[3] == 0.1);
  CHECK(x_row[12] == -0.5);
  // y is not in the lexicon: ten zeros appended.
  const auto y_row = composed.row_copy(composed.vocab.find("y"));
  CHECK(y_row[0] == 4.0);
  for (int64_t d = 3; d < 13; ++d) CHECK(y_row[d] == 0.0);
}

TEST_CASE("seed lexicon files: round trip and range validation") {
  oracle::TempDir dir;
  SeedLexicon lex;
  lex.dimension = "arousal";
  lex.ratings = {{"calm", -0.8}, {"wild", 0.95}};
  save_seed_lexicon(lex, dir.file("arousal.tsv"));
  const SeedLexicon back = load_seed_lexicon(dir.file("arousal.tsv"));
  CHECK(back.dimension == "arousal");
  CHECK(back.ratings == lex.ratings);

  oracle::write_file(dir.file("valence.tsv"), "word\t1.5\nother\t0.0\n");
  CHECK_THROWS_AS(load_seed_lexicon(dir.file("valence.tsv")), UserError);
  oracle::write_file(dir.file("anger.tsv"), "lonely\t0.5\n");
  CHECK_THROWS_AS(load_seed_lexicon(dir.file("anger.tsv")), UserError);
}

TEST_CASE("expanded lexicon files: round trip preserves all norms") {
  AffectiveLexicon lex;
  lex.norms["alpha"] = {0.1, -0.2, 0.3, -0.4, 0.5, -0.6, 0.7, -0.8, 0.9, -1.0};
  lex.norms["beta"] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  oracle::TempDir dir;
  save_lexicon(lex, dir.file("lex.tsv"));
  const AffectiveLexicon back = load_lexicon(dir.file("lex.tsv"));
  REQUIRE(back.norms.size() == 2);
  for (int d = 0; d < 10; ++d)
    CHECK(back.norms.at("alpha")[d] ==
          doctest::Approx(lex.norms.at("alpha")[d]).epsilon(1e-9));
}

TEST_CASE("is_affect_dimension covers exactly the canonical ten") {
  for (const char* dim : kAffectDimensions) CHECK(is_affect_dimension(dim));
  CHECK_FALSE(is_affect_dimension("bogus"));
  CHECK_FALSE(is_affect_dimension("Valence"));
}
