#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "affect/text.hpp"

namespace affect {

// One row per vocabulary index, row-major. The <pad> row is all zeros.
struct EmbeddingMatrix {
  Vocabulary vocab;
  int64_t dim = 0;
  std::vector<double> rows;

  const double* row_ptr(int64_t index) const { return &rows[index * dim]; }
  double* row_ptr(int64_t index) { return &rows[index * dim]; }
  std::vector<double> row_copy(int64_t index) const {
    return {row_ptr(index), row_ptr(index) + dim};
  }
};

struct SgnsConfig {
  int64_t dim = 100;
  int64_t window = 5;
  int64_t negatives = 5;
  int64_t min_count = 20;
  int64_t epochs = 5;
  double learning_rate = 0.025;
  uint64_t seed = 1;
};

// Both halves of a skip-gram model. `input` holds the published word
// vectors; `output` holds the context vectors (|V|×dim, row-major), kept
// around so the training objective can be re-evaluated.
struct SgnsModel {
  EmbeddingMatrix input;
  std::vector<double> output;
};

// Skip-gram with negative sampling, run serially over the corpus in order:
// deterministic per cfg.seed. For every (center, context) pair within the
// window, one stochastic gradient step on
//   -log s(u_ctx . v_cen) - sum_{k<negatives} log s(-u_neg_k . v_cen)
// with negatives drawn from the unigram distribution raised to 0.75 (a draw
// that hits the positive context is skipped). The learning rate decays
// linearly from cfg.learning_rate to 1e-4 of it across the total pair
// count. Tokens below min_count are dropped from the training sequences
// (not mapped to <unk>); <unk>/<pad> and never-seen special tokens keep
// all-zero rows.
EmbeddingMatrix train_skipgram(const std::vector<std::vector<Token>>& corpus,
                               const SgnsConfig& cfg);

// As train_skipgram but returns the full model; `after_epoch`, when given,
// observes the model after each completed epoch.
SgnsModel train_skipgram_model(
    const std::vector<std::vector<Token>>& corpus, const SgnsConfig& cfg,
    const std::function<void(int64_t epoch, const SgnsModel&)>& after_epoch =
        nullptr);

// Average per-pair objective over every window pair of the corpus, with
// negatives drawn from a stream seeded by eval_seed, so repeated calls see
// the same samples and values are comparable across epochs.
double sgns_corpus_loss(const SgnsModel& model,
                        const std::vector<std::vector<Token>>& corpus,
                        const SgnsConfig& cfg, uint64_t eval_seed);

double cosine(const std::vector<double>& u, const std::vector<double>& v);

struct Centroid {
  std::vector<double> mean;
  bool all_oov = false;
};

// Element-wise mean of the rows for the given indices, excluding
// <unk>/<pad>. When nothing remains the mean is the zero vector and
// all_oov is set, so callers can substitute rather than abort.
Centroid centroid(const std::vector<int64_t>& indices,
                  const EmbeddingMatrix& embeddings);

// Text format: header "<count> <dim>", then one "word v1 v2 ... vD" line
// per row, single-space separated, 8 significant digits.
void save_text(const EmbeddingMatrix& embeddings, const std::string& path);
EmbeddingMatrix load_text(const std::string& path);

}  // namespace affect
