#include "affect/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "affect/rng.hpp"
#include "affect/util.hpp"

namespace affect {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log s(x), computed without overflow on either tail.
double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

bool untrainable_index(int64_t index) {
  return index == Vocabulary::unk_index() || index == Vocabulary::pad_index();
}

// Sequences re-encoded against the vocabulary; out-of-vocabulary tokens and
// <unk>/<pad> are dropped, so windows close over the gaps.
std::vector<std::vector<int64_t>> training_sequences(
    const std::vector<std::vector<Token>>& corpus, const Vocabulary& vocab) {
  std::vector<std::vector<int64_t>> seqs;
  seqs.reserve(corpus.size());
  for (const auto& sent : corpus) {
    std::vector<int64_t> seq;
    for (const auto& tok : sent) {
      const int64_t idx = vocab.find(tok.surface);
      if (idx >= 0 && !untrainable_index(idx)) seq.push_back(idx);
    }
    if (seq.size() >= 2) seqs.push_back(std::move(seq));
  }
  return seqs;
}

// Cumulative unigram^0.75 mass per vocabulary index, for negative sampling
// by binary search.
struct NegativeTable {
  std::vector<int64_t> indices;
  std::vector<double> cumulative;

  static NegativeTable build(const Vocabulary& vocab) {
    NegativeTable t;
    double total = 0.0;
    for (int64_t i = 0; i < vocab.size(); ++i) {
      if (untrainable_index(i) || vocab.count_at(i) <= 0) continue;
      total += std::pow(static_cast<double>(vocab.count_at(i)), 0.75);
      t.indices.push_back(i);
      t.cumulative.push_back(total);
    }
    return t;
  }

  int64_t sample(Rng& rng) const {
    const double x = rng.uniform01() * cumulative.back();
    const auto it =
        std::upper_bound(cumulative.begin(), cumulative.end(), x);
    const size_t at = std::min(
        static_cast<size_t>(it - cumulative.begin()), indices.size() - 1);
    return indices[at];
  }
};

int64_t count_window_pairs(const std::vector<std::vector<int64_t>>& seqs,
                           int64_t window) {
  int64_t pairs = 0;
  for (const auto& seq : seqs) {
    const int64_t n = static_cast<int64_t>(seq.size());
    for (int64_t i = 0; i < n; ++i) {
      const int64_t lo = std::max<int64_t>(0, i - window);
      const int64_t hi = std::min<int64_t>(n - 1, i + window);
      pairs += hi - lo;  // excludes the center itself
    }
  }
  return pairs;
}

void validate(const SgnsConfig& cfg) {
  if (cfg.dim < 1 || cfg.window < 1 || cfg.negatives < 1 ||
      cfg.min_count < 1 || cfg.epochs < 1 || cfg.learning_rate <= 0.0)
    throw UserError("invalid skip-gram configuration");
}

}  // namespace

SgnsModel train_skipgram_model(
    const std::vector<std::vector<Token>>& corpus, const SgnsConfig& cfg,
    const std::function<void(int64_t, const SgnsModel&)>& after_epoch) {
  validate(cfg);
  SgnsModel model;
  model.input.vocab = Vocabulary::build(corpus, cfg.min_count);
  const Vocabulary& vocab = model.input.vocab;
  const NegativeTable table = NegativeTable::build(vocab);
  if (table.indices.empty()) throw UserError("no trainable tokens");

  const int64_t dim = cfg.dim;
  model.input.dim = dim;
  model.input.rows.assign(vocab.size() * dim, 0.0);
  model.output.assign(vocab.size() * dim, 0.0);

  Rng rng(cfg.seed);
  for (int64_t i = 0; i < vocab.size(); ++i) {
    if (untrainable_index(i) || vocab.count_at(i) <= 0) continue;
    double* row = &model.input.rows[i * dim];
    for (int64_t d = 0; d < dim; ++d)
      row[d] = rng.uniform(-0.5 / dim, 0.5 / dim);
  }

  const auto seqs = training_sequences(corpus, vocab);
  const int64_t total =
      count_window_pairs(seqs, cfg.window) * cfg.epochs;
  if (total == 0) throw UserError("no trainable tokens");
  const double lr_max = cfg.learning_rate;
  const double lr_min = 1e-4 * lr_max;

  std::vector<double> acc(dim);
  int64_t step = 0;
  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& seq : seqs) {
      const int64_t n = static_cast<int64_t>(seq.size());
      for (int64_t i = 0; i < n; ++i) {
        const int64_t lo = std::max<int64_t>(0, i - cfg.window);
        const int64_t hi = std::min<int64_t>(n - 1, i + cfg.window);
        double* v = &model.input.rows[seq[i] * dim];
        for (int64_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const double lr =
              lr_max - (lr_max - lr_min) *
                           (static_cast<double>(step) /
                            static_cast<double>(total));
          ++step;
          const int64_t pos = seq[j];
          std::fill(acc.begin(), acc.end(), 0.0);
          for (int64_t k = 0; k <= cfg.negatives; ++k) {
            int64_t target;
            double label;
            if (k == 0) {
              target = pos;
              label = 1.0;
            } else {
              target = table.sample(rng);
              if (target == pos) continue;
              label = 0.0;
            }
            double* u = &model.output[target * dim];
            double dot = 0.0;
            for (int64_t d = 0; d < dim; ++d) dot += u[d] * v[d];
            const double g = lr * (label - stable_sigmoid(dot));
            for (int64_t d = 0; d < dim; ++d) {
              acc[d] += g * u[d];
              u[d] += g * v[d];
            }
          }
          for (int64_t d = 0; d < dim; ++d) v[d] += acc[d];
        }
      }
    }
    if (after_epoch) after_epoch(epoch, model);
  }

  return model;
}

EmbeddingMatrix train_skipgram(const std::vector<std::vector<Token>>& corpus,
                               const SgnsConfig& cfg) {
  return train_skipgram_model(corpus, cfg).input;
}

double sgns_corpus_loss(const SgnsModel& model,
                        const std::vector<std::vector<Token>>& corpus,
                        const SgnsConfig& cfg, uint64_t eval_seed) {
  const Vocabulary& vocab = model.input.vocab;
  const NegativeTable table = NegativeTable::build(vocab);
  const auto seqs = training_sequences(corpus, vocab);
  const int64_t dim = model.input.dim;

  Rng rng(eval_seed);
  double loss = 0.0;
  int64_t pairs = 0;
  for (const auto& seq : seqs) {
    const int64_t n = static_cast<int64_t>(seq.size());
    for (int64_t i = 0; i < n; ++i) {
      const int64_t lo = std::max<int64_t>(0, i - cfg.window);
      const int64_t hi = std::min<int64_t>(n - 1, i + cfg.window);
      const double* v = &model.input.rows[seq[i] * dim];
      for (int64_t j = lo; j <= hi; ++j) {
        if (j == i) continue;
        ++pairs;
        const int64_t pos = seq[j];
        for (int64_t k = 0; k <= cfg.negatives; ++k) {
          int64_t target = pos;
          if (k > 0) {
            target = table.sample(rng);
            if (target == pos) continue;
          }
          const double* u = &model.output[target * dim];
          double dot = 0.0;
          for (int64_t d = 0; d < dim; ++d) dot += u[d] * v[d];
          loss -= log_sigmoid(k == 0 ? dot : -dot);
        }
      }
    }
  }
  if (pairs == 0) throw std::runtime_error("no window pairs in corpus");
  return loss / static_cast<double>(pairs);
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size())
    throw std::runtime_error("cosine: length mismatch");
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    uu += u[i] * u[i];
    vv += v[i] * v[i];
    uv += u[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw std::runtime_error("undefined cosine");
  return uv / (std::sqrt(uu) * std::sqrt(vv));
}

Centroid centroid(const std::vector<int64_t>& indices,
                  const EmbeddingMatrix& embeddings) {
  Centroid c;
  c.mean.assign(embeddings.dim, 0.0);
  int64_t used = 0;
  for (int64_t idx : indices) {
    if (idx < 0 || idx >= embeddings.vocab.size())
      throw std::runtime_error("centroid: index " + std::to_string(idx) +
                               " out of range");
    if (idx == Vocabulary::unk_index() || idx == Vocabulary::pad_index())
      continue;
    const double* row = embeddings.row_ptr(idx);
    for (int64_t d = 0; d < embeddings.dim; ++d) c.mean[d] += row[d];
    ++used;
  }
  if (used == 0) {
    c.all_oov = true;
    return c;
  }
  for (double& x : c.mean) x /= static_cast<double>(used);
  return c;
}

void save_text(const EmbeddingMatrix& embeddings, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write file: " + path);
  out << embeddings.vocab.size() << ' ' << embeddings.dim << '\n';
  for (int64_t i = 0; i < embeddings.vocab.size(); ++i) {
    out << embeddings.vocab.token_at(i);
    const double* row = embeddings.row_ptr(i);
    for (int64_t d = 0; d < embeddings.dim; ++d)
      out << ' ' << format_float(row[d]);
    out << '\n';
  }
  if (!out) throw UserError("write failed: " + path);
}

EmbeddingMatrix load_text(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0].empty())
    throw UserError(path + ": missing header");
  const auto header = split_fields(lines[0], ' ');
  if (header.size() != 2)
    throw UserError(path + ":1: header must be '<count> <dim>'");
  const int64_t count = parse_int(header[0], path + ":1");
  const int64_t dim = parse_int(header[1], path + ":1");
  if (count < 1 || dim < 1)
    throw UserError(path + ":1: non-positive count or dimension");
  if (static_cast<int64_t>(lines.size()) - 1 != count)
    throw UserError(path + ": header promises " + std::to_string(count) +
                    " rows, found " + std::to_string(lines.size() - 1));

  std::vector<std::pair<std::string, int64_t>> entries;
  std::vector<double> rows;
  rows.reserve(count * dim);
  std::set<std::string> seen;
  for (int64_t i = 0; i < count; ++i) {
    const std::string where = path + ":" + std::to_string(i + 2);
    const auto fields = split_fields(lines[i + 1], ' ');
    if (static_cast<int64_t>(fields.size()) != dim + 1)
      throw UserError(where + ": expected word + " + std::to_string(dim) +
                      " values, found " + std::to_string(fields.size() - 1));
    if (!seen.insert(fields[0]).second)
      throw UserError(where + ": duplicate word '" + fields[0] + "'");
    entries.emplace_back(fields[0], 0);
    for (int64_t d = 0; d < dim; ++d)
      rows.push_back(parse_double(fields[d + 1], where));
  }

  EmbeddingMatrix m;
  m.vocab = Vocabulary::from_entries(std::move(entries));
  m.dim = dim;
  // from_entries prepends <unk>/<pad> when the file lacks them; keep the
  // data rows aligned with the final vocabulary indices.
  const int64_t prepended = m.vocab.size() - count;
  m.rows.assign(prepended * dim, 0.0);
  m.rows.insert(m.rows.end(), rows.begin(), rows.end());
  // The <pad> row is zero by contract, whatever the file said.
  std::fill_n(m.row_ptr(Vocabulary::pad_index()), dim, 0.0);
  return m;
}

}  // namespace affect
