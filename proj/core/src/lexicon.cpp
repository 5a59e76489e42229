#include "affect/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "affect/util.hpp"

namespace affect {

namespace {

bool skip_index(int64_t idx) {
  return idx == Vocabulary::unk_index() || idx == Vocabulary::pad_index();
}

int64_t require_word(const std::string& word, const ContextModel& ctx) {
  const int64_t idx = ctx.vocab.find(word);
  if (idx < 0)
    throw std::runtime_error("word absent from vocabulary: " + word);
  return idx;
}

// Solves A x = b in place by Gaussian elimination with partial pivoting.
// The caller owns the singularity message.
std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                 std::vector<double> b,
                                 const std::string& singular_error) {
  const size_t n = b.size();
  double scale = 0.0;
  for (const auto& row : a)
    for (double x : row) scale = std::max(scale, std::fabs(x));
  if (scale == 0.0) throw UserError(singular_error);

  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (std::fabs(a[pivot][col]) <= 1e-12 * scale)
      throw UserError(singular_error);
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (size_t r = n; r-- > 0;) {
    double s = b[r];
    for (size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

}  // namespace

bool is_affect_dimension(const std::string& name) {
  return std::find(kAffectDimensions.begin(), kAffectDimensions.end(), name) !=
         kAffectDimensions.end();
}

ContextModel build_context_model(const std::vector<std::vector<Token>>& corpus,
                                 const Vocabulary& vocab, int64_t window) {
  if (window < 1) throw UserError("context window must be >= 1");
  ContextModel ctx;
  ctx.vocab = vocab;
  ctx.window = window;

  // Sequences with <unk>/<pad> dropped, so windows close over the gaps.
  std::vector<std::map<int64_t, int64_t>> counts(vocab.size());
  for (const auto& sent : corpus) {
    std::vector<int64_t> seq;
    for (const auto& tok : sent) {
      const int64_t idx = vocab.find(tok.surface);
      if (idx >= 0 && !skip_index(idx)) seq.push_back(idx);
    }
    const int64_t n = static_cast<int64_t>(seq.size());
    for (int64_t i = 0; i < n; ++i) {
      const int64_t hi = std::min<int64_t>(n - 1, i + window);
      for (int64_t j = i + 1; j <= hi; ++j) {
        // Count both directions so the matrix is symmetric.
        ++counts[seq[i]][seq[j]];
        ++counts[seq[j]][seq[i]];
      }
    }
  }

  std::vector<double> marginal(vocab.size(), 0.0);
  double total = 0.0;
  for (int64_t w = 0; w < vocab.size(); ++w)
    for (const auto& [f, c] : counts[w]) {
      marginal[w] += static_cast<double>(c);
      total += static_cast<double>(c);
    }

  ctx.rows.resize(vocab.size());
  ctx.row_norms.assign(vocab.size(), 0.0);
  for (int64_t w = 0; w < vocab.size(); ++w) {
    double norm2 = 0.0;
    for (const auto& [f, c] : counts[w]) {
      const double pmi =
          std::log(static_cast<double>(c) * total / (marginal[w] * marginal[f]));
      if (pmi <= 0.0) continue;
      ctx.rows[w].emplace_back(f, pmi);
      norm2 += pmi * pmi;
    }
    ctx.row_norms[w] = std::sqrt(norm2);
  }
  return ctx;
}

double similarity_by_index(int64_t i, int64_t j, const ContextModel& ctx) {
  if (ctx.row_norms[i] == 0.0 || ctx.row_norms[j] == 0.0) return 0.0;
  const auto& a = ctx.rows[i];
  const auto& b = ctx.rows[j];
  double dot = 0.0;
  size_t p = 0, q = 0;
  while (p < a.size() && q < b.size()) {
    if (a[p].first < b[q].first)
      ++p;
    else if (a[p].first > b[q].first)
      ++q;
    else
      dot += a[p++].second * b[q++].second;
  }
  return std::min(1.0, dot / (ctx.row_norms[i] * ctx.row_norms[j]));
}

double semantic_similarity(const std::string& w1, const std::string& w2,
                           const ContextModel& ctx) {
  return similarity_by_index(require_word(w1, ctx), require_word(w2, ctx),
                             ctx);
}

std::vector<std::string> select_seeds(const SeedLexicon& seed_lex,
                                      const ContextModel& ctx, int64_t n) {
  if (n < 1) throw UserError("seed count must be >= 1");
  std::vector<std::pair<std::string, double>> usable;
  for (const auto& [word, rating] : seed_lex.ratings)
    if (ctx.vocab.contains(word)) usable.emplace_back(word, rating);
  if (usable.empty()) throw UserError("no usable seeds");

  std::sort(usable.begin(), usable.end(), [](const auto& a, const auto& b) {
    const double ma = std::fabs(a.second), mb = std::fabs(b.second);
    if (ma != mb) return ma > mb;
    return a.first < b.first;
  });
  if (static_cast<int64_t>(usable.size()) > n) usable.resize(n);

  std::vector<std::string> seeds;
  seeds.reserve(usable.size());
  for (auto& [word, rating] : usable) seeds.push_back(std::move(word));
  return seeds;
}

AffectModel fit_affect_model(const SeedLexicon& seed_lex,
                             const std::vector<std::string>& seeds,
                             const ContextModel& ctx, double ridge) {
  if (ridge < 0.0) throw UserError("ridge must be >= 0");
  if (seeds.empty()) throw UserError("no usable seeds");

  AffectModel model;
  model.dimension = seed_lex.dimension;
  model.seeds = seeds;
  model.ridge = ridge;
  std::vector<int64_t> seed_idx;
  for (const auto& t : seeds) {
    const auto it = seed_lex.ratings.find(t);
    if (it == seed_lex.ratings.end())
      throw UserError("seed not in annotations: " + t);
    model.seed_ratings.push_back(it->second);
    seed_idx.push_back(require_word(t, ctx));
  }

  // Design matrix row per annotated in-vocab word:
  //   [1, rating(t_1)*S(t_1,w), ..., rating(t_N)*S(t_N,w)] -> rating(w).
  const size_t n = seeds.size() + 1;
  std::vector<std::vector<double>> xtx(n, std::vector<double>(n, 0.0));
  std::vector<double> xty(n, 0.0);
  int64_t observations = 0;
  std::vector<double> row(n);
  for (const auto& [word, rating] : seed_lex.ratings) {
    const int64_t w = ctx.vocab.find(word);
    if (w < 0) continue;
    ++observations;
    row[0] = 1.0;
    for (size_t i = 0; i < seeds.size(); ++i)
      row[i + 1] =
          model.seed_ratings[i] * similarity_by_index(seed_idx[i], w, ctx);
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) xtx[i][j] += row[i] * row[j];
      xty[i] += row[i] * rating;
    }
  }
  if (observations == 0) throw UserError("no usable seeds");
  // The intercept is not penalized.
  for (size_t i = 1; i < n; ++i) xtx[i][i] += ridge;

  const auto beta = solve_linear(
      std::move(xtx), std::move(xty),
      "singular least-squares system for dimension '" + model.dimension +
          "'; use ridge > 0");
  model.alpha0 = beta[0];
  model.alphas.assign(beta.begin() + 1, beta.end());
  return model;
}

double predict_norm(const std::string& word, const AffectModel& model,
                    const ContextModel& ctx) {
  const int64_t w = require_word(word, ctx);
  double v = model.alpha0;
  for (size_t i = 0; i < model.seeds.size(); ++i) {
    const int64_t t = require_word(model.seeds[i], ctx);
    v += model.alphas[i] * model.seed_ratings[i] *
         similarity_by_index(t, w, ctx);
  }
  return std::clamp(v, -1.0, 1.0);
}

AffectiveLexicon expand_lexicon(const Vocabulary& vocab,
                                const std::vector<AffectModel>& models,
                                const ContextModel& ctx) {
  std::map<std::string, const AffectModel*> by_dim;
  for (const auto& m : models) {
    if (!is_affect_dimension(m.dimension))
      throw UserError("unknown affect dimension: " + m.dimension);
    if (!by_dim.emplace(m.dimension, &m).second)
      throw UserError("duplicate affect model for dimension: " + m.dimension);
  }
  std::vector<const AffectModel*> ordered;
  for (const char* dim : kAffectDimensions) {
    const auto it = by_dim.find(dim);
    if (it == by_dim.end())
      throw UserError(std::string("missing affect model for dimension: ") +
                      dim);
    ordered.push_back(it->second);
  }

  AffectiveLexicon lex;
  for (int64_t i = 0; i < vocab.size(); ++i) {
    if (skip_index(i)) continue;
    const std::string& word = vocab.token_at(i);
    std::array<double, 10> norms{};
    for (size_t d = 0; d < 10; ++d)
      norms[d] = predict_norm(word, *ordered[d], ctx);
    lex.norms.emplace(word, norms);
  }
  return lex;
}

EmbeddingMatrix compose_embeddings(const EmbeddingMatrix& embeddings,
                                   const AffectiveLexicon& lex) {
  EmbeddingMatrix out;
  out.vocab = embeddings.vocab;
  out.dim = embeddings.dim + 10;
  out.rows.assign(out.vocab.size() * out.dim, 0.0);
  for (int64_t i = 0; i < out.vocab.size(); ++i) {
    if (i == Vocabulary::pad_index()) continue;  // stays all-zero
    const double* src = embeddings.row_ptr(i);
    double* dst = out.row_ptr(i);
    std::copy_n(src, embeddings.dim, dst);
    const auto it = lex.norms.find(out.vocab.token_at(i));
    if (it != lex.norms.end())
      std::copy_n(it->second.begin(), 10, dst + embeddings.dim);
  }
  return out;
}

SeedLexicon load_seed_lexicon(const std::string& path) {
  SeedLexicon lex;
  lex.dimension = std::filesystem::path(path).stem().string();
  if (!is_affect_dimension(lex.dimension))
    throw UserError(path + ": file stem '" + lex.dimension +
                    "' is not an affect dimension");
  size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto fields = split_fields(line, '\t');
    if (fields.size() != 2)
      throw UserError(where + ": expected 'word<TAB>rating'");
    const double rating = parse_double(fields[1], where);
    if (rating < -1.0 || rating > 1.0)
      throw UserError(where + ": rating outside [-1,1]");
    if (!lex.ratings.emplace(fields[0], rating).second)
      throw UserError(where + ": duplicate word '" + fields[0] + "'");
  }
  if (lex.ratings.size() < 2)
    throw UserError(path + ": needs at least 2 annotated words");
  return lex;
}

void save_seed_lexicon(const SeedLexicon& lex, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write file: " + path);
  for (const auto& [word, rating] : lex.ratings)
    out << word << '\t' << format_float(rating) << '\n';
  if (!out) throw UserError("write failed: " + path);
}

namespace {

std::string lexicon_header() {
  std::string h = "word";
  for (const char* dim : kAffectDimensions) {
    h += '\t';
    h += dim;
  }
  return h;
}

}  // namespace

void save_lexicon(const AffectiveLexicon& lex, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write file: " + path);
  out << lexicon_header() << '\n';
  for (const auto& [word, norms] : lex.norms) {
    out << word;
    for (double v : norms) out << '\t' << format_float(v);
    out << '\n';
  }
  if (!out) throw UserError("write failed: " + path);
}

AffectiveLexicon load_lexicon(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw UserError(path + ": missing header");
  if (lines[0] != lexicon_header())
    throw UserError(path + ":1: bad header; expected '" + lexicon_header() +
                    "'");
  AffectiveLexicon lex;
  for (size_t i = 1; i < lines.size(); ++i) {
    const std::string where = path + ":" + std::to_string(i + 1);
    const auto fields = split_fields(lines[i], '\t');
    if (fields.size() != 11)
      throw UserError(where + ": expected word + 10 values");
    std::array<double, 10> norms;
    for (size_t d = 0; d < 10; ++d) {
      norms[d] = parse_double(fields[d + 1], where);
      if (norms[d] < -1.0 || norms[d] > 1.0)
        throw UserError(where + ": value outside [-1,1]");
    }
    if (!lex.norms.emplace(fields[0], norms).second)
      throw UserError(where + ": duplicate word '" + fields[0] + "'");
  }
  return lex;
}

}  // namespace affect
