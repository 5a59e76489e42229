#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "affect/embeddings.hpp"
#include "affect/text.hpp"

namespace affect {

// The ten affect dimensions, in the canonical order used everywhere a
// 10-vector of norms appears.
inline constexpr std::array<const char*, 10> kAffectDimensions = {
    "valence",  "dominance", "arousal",      "pleasantness", "anger",
    "sadness",  "fear",      "disgust",      "concreteness", "familiarity"};

bool is_affect_dimension(const std::string& name);

// Small manually annotated lexicon for one dimension; ratings in [-1,1].
struct SeedLexicon {
  std::string dimension;
  std::map<std::string, double> ratings;
};

// Word-by-feature PPMI weights from symmetric-window co-occurrence counts:
//   weight(w,f) = max(0, ln(c(w,f)*T / (c(w)*c(f)))),  T = total mass.
// Rows are indexed by vocabulary order and stored sparse, feature-sorted;
// <unk>/<pad> take no part in counting and keep empty rows.
struct ContextModel {
  Vocabulary vocab;
  int64_t window = 5;
  std::vector<std::vector<std::pair<int64_t, double>>> rows;
  std::vector<double> row_norms;
};

ContextModel build_context_model(const std::vector<std::vector<Token>>& corpus,
                                 const Vocabulary& vocab, int64_t window);

// Cosine of two PPMI rows: in [0,1] since weights are nonnegative. A word
// with an empty row has similarity 0 to everything.
double semantic_similarity(const std::string& w1, const std::string& w2,
                           const ContextModel& ctx);
double similarity_by_index(int64_t i, int64_t j, const ContextModel& ctx);

// The n annotated words present in ctx.vocab with the largest |rating|,
// strongest first, ties broken lexicographically. Returns fewer when fewer
// qualify.
std::vector<std::string> select_seeds(const SeedLexicon& seed_lex,
                                      const ContextModel& ctx, int64_t n);

// A fitted rating predictor for one dimension:
//   rating(w) = alpha0 + sum_i alphas[i] * seed_ratings[i] * S(seeds[i], w).
struct AffectModel {
  std::string dimension;
  std::vector<std::string> seeds;
  std::vector<double> seed_ratings;
  double alpha0 = 0.0;
  std::vector<double> alphas;
  double ridge = 0.0;
};

// Ridge least squares over every annotated in-vocab word (the intercept is
// not penalized), solved by the normal equations.
AffectModel fit_affect_model(const SeedLexicon& seed_lex,
                             const std::vector<std::string>& seeds,
                             const ContextModel& ctx, double ridge);

// Model prediction clamped to [-1,1].
double predict_norm(const std::string& word, const AffectModel& model,
                    const ContextModel& ctx);

// word -> 10 norms in canonical dimension order, each in [-1,1].
struct AffectiveLexicon {
  std::map<std::string, std::array<double, 10>> norms;
};

// Predicts every dimension for every vocabulary word except <unk>/<pad>.
// Expects exactly one model per canonical dimension.
AffectiveLexicon expand_lexicon(const Vocabulary& vocab,
                                const std::vector<AffectModel>& models,
                                const ContextModel& ctx);

// Appends the 10 norms to each embedding row (zeros for words the lexicon
// does not cover); output dimension is embeddings.dim + 10.
EmbeddingMatrix compose_embeddings(const EmbeddingMatrix& embeddings,
                                   const AffectiveLexicon& lex);

// Seed lexicon file: TSV "word<TAB>rating"; the dimension is the file's
// stem, e.g. "valence.tsv".
SeedLexicon load_seed_lexicon(const std::string& path);
void save_seed_lexicon(const SeedLexicon& lex, const std::string& path);

// Expanded lexicon file: header naming the dimensions, then
// "word<TAB>v1...<TAB>v10" rows in canonical order.
void save_lexicon(const AffectiveLexicon& lex, const std::string& path);
AffectiveLexicon load_lexicon(const std::string& path);

}  // namespace affect
