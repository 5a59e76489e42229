// Optimization for the sequence model: Adam with global-norm gradient
// clipping, inverse-frequency class weights, early stopping on dev loss,
// and the pretrain -> head-swap -> freeze-or-finetune transfer protocol.
//
// All routines are deterministic for a fixed TrainConfig::seed: epoch
// shuffles and per-sequence noise/dropout streams derive from it, so two
// identical runs produce bitwise-identical parameters.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "affect/datasets.hpp"
#include "affect/graph.hpp"
#include "affect/model.hpp"

namespace affect {

// RD trains a freshly initialized model end to end; TL-FR copies a
// pretrained encoder and freezes it (only the head trains); TL-FT copies
// the encoder and fine-tunes everything but the embedding, which never
// trains in any mode.
enum class TrainMode { rd, tl_fr, tl_ft };

TrainMode parse_train_mode(const std::string& name);
std::string train_mode_name(TrainMode mode);

struct TrainConfig {
  int64_t batch_size = 32;
  double clip_norm = 1.0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t max_epochs = 50;
  int64_t patience = 5;  // consecutive non-improving dev epochs before stop
  uint64_t seed = 1;
  TrainMode mode = TrainMode::rd;
};

// Throws UserError when batch_size < 1, clip_norm <= 0, patience < 1, or
// max_epochs < 1.
void validate(const TrainConfig& cfg);

// Inverse-frequency weights: weight_c = T / (k * count_c) with T = total
// label count, so balanced data yields weight 1 for every class. Every
// class in [0,k) must occur at least once; an absent class is an error
// naming the class index.
std::vector<double> class_weights(const std::vector<int64_t>& labels,
                                  int64_t k);

// Named gradient tensors, keyed like ModelParams::trainable.
using GradMap = std::map<std::string, Tensor>;

// Scales every tensor by max_norm/norm when the global L2 norm across all
// tensors exceeds max_norm; otherwise leaves them untouched. Returns the
// pre-clip global norm.
double clip_grad_norm(GradMap& grads, double max_norm);

// First/second moment estimates per trainable tensor plus the shared step
// counter. Created empty; adam_step allocates zero moments on first use.
struct AdamState {
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
  int64_t t = 0;
};

// Names of trainable tensors excluded from updates under `mode`: the whole
// encoder (BiLSTM + attention) for TL-FR, nothing extra for RD/TL-FT. The
// embedding is frozen unconditionally by construction — it is not a
// trainable tensor.
std::vector<std::string> frozen_tensors(const ModelConfig& cfg,
                                        TrainMode mode);

// One bias-corrected Adam update over `grads`. Tensors listed in `frozen`
// are skipped entirely (no moment update, no parameter change).
void adam_step(ModelParams& params, const GradMap& grads, AdamState& state,
               const TrainConfig& cfg,
               const std::vector<std::string>& frozen);

struct EpochRecord {
  int64_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double dev_metric = 0.0;  // task headline metric on the dev set
};

struct TrainResult {
  ModelParams params;  // parameters from the best dev-loss epoch
  std::vector<EpochRecord> history;
  int64_t best_epoch = 0;
  bool stopped_early = false;
};

// Full training loop. Shuffles per epoch with a seeded RNG, processes each
// sequence of a mini-batch individually (gradients summed, then divided by
// the batch length), clips, steps, then scores the dev set. Stops early
// after `patience` consecutive epochs without a dev-loss improvement and
// returns the best-epoch snapshot. Ordinal tasks train with class weights
// computed from the training split. A non-finite loss aborts with a
// diagnostic naming the epoch and batch.
TrainResult train_model(ModelParams params, const TaskDataset& train_set,
                        const TaskDataset& dev_set, const TrainConfig& cfg);

// Builds a model for a new task from a pretrained checkpoint: encoder
// weights are copied, the head is freshly initialized for `new_head` with
// `seed`. `mode` must be TL-FR or TL-FT (the freeze itself is applied by
// train_model from its config). Encoder shape mismatches are an error
// listing every offending tensor.
ModelParams transfer(const ModelParams& pretrained, const TaskHead& new_head,
                     TrainMode mode, uint64_t seed);

// CSV "epoch,train_loss,dev_loss,dev_metric", one row per epoch.
void save_history(const std::vector<EpochRecord>& history,
                  const std::string& path);

}  // namespace affect
