#include "affect/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "affect/evaluation.hpp"
#include "affect/rng.hpp"
#include "affect/text.hpp"
#include "affect/util.hpp"

namespace affect {

TrainMode parse_train_mode(const std::string& name) {
  if (name == "RD") return TrainMode::rd;
  if (name == "TL-FR") return TrainMode::tl_fr;
  if (name == "TL-FT") return TrainMode::tl_ft;
  throw UserError("unknown training mode '" + name +
                  "' (expected RD, TL-FR, or TL-FT)");
}

std::string train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::rd:
      return "RD";
    case TrainMode::tl_fr:
      return "TL-FR";
    case TrainMode::tl_ft:
      return "TL-FT";
  }
  throw std::runtime_error("bad training mode");
}

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw UserError("batch size must be >= 1");
  if (cfg.clip_norm <= 0.0) throw UserError("clip norm must be > 0");
  if (cfg.patience < 1) throw UserError("patience must be >= 1");
  if (cfg.max_epochs < 1) throw UserError("max epochs must be >= 1");
  if (cfg.lr <= 0.0) throw UserError("learning rate must be > 0");
}

std::vector<double> class_weights(const std::vector<int64_t>& labels,
                                  int64_t k) {
  if (k < 1) throw UserError("class count must be >= 1");
  std::vector<int64_t> counts(k, 0);
  for (int64_t label : labels) {
    if (label < 0 || label >= k)
      throw UserError("label " + std::to_string(label) +
                      " outside [0," + std::to_string(k) + ")");
    ++counts[label];
  }
  const double total = static_cast<double>(labels.size());
  std::vector<double> weights(k);
  for (int64_t c = 0; c < k; ++c) {
    if (counts[c] == 0)
      throw UserError("class " + std::to_string(c) +
                      " absent from training labels");
    weights[c] = total / (static_cast<double>(k) *
                          static_cast<double>(counts[c]));
  }
  return weights;
}

double clip_grad_norm(GradMap& grads, double max_norm) {
  if (max_norm <= 0.0) throw UserError("clip norm must be > 0");
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (double x : g.data) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, g] : grads)
      for (double& x : g.data) x *= scale;
  }
  return norm;
}

std::vector<std::string> frozen_tensors(const ModelConfig& cfg,
                                        TrainMode mode) {
  std::vector<std::string> frozen;
  if (mode == TrainMode::tl_fr)
    for (const auto& name : trainable_names(cfg))
      if (is_encoder_tensor(name)) frozen.push_back(name);
  return frozen;
}

void adam_step(ModelParams& params, const GradMap& grads, AdamState& state,
               const TrainConfig& cfg,
               const std::vector<std::string>& frozen) {
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (const auto& [name, grad] : grads) {
    if (std::find(frozen.begin(), frozen.end(), name) != frozen.end())
      continue;
    Tensor* param = params.find(name);
    if (!param) throw std::runtime_error("unknown parameter: " + name);
    if (param->shape != grad.shape)
      throw std::runtime_error("gradient shape mismatch for " + name);
    Tensor& m = state.m.try_emplace(name, Tensor::zeros(grad.shape))
                    .first->second;
    Tensor& v = state.v.try_emplace(name, Tensor::zeros(grad.shape))
                    .first->second;
    for (int64_t i = 0; i < grad.size(); ++i) {
      const double g = grad.data[i];
      m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g;
      v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      param->data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

namespace {

// Tokenizes and encodes every example against the model vocabulary.
std::vector<std::vector<int64_t>> encode_dataset(const TaskDataset& data,
                                                 const Vocabulary& vocab) {
  std::vector<std::vector<int64_t>> out;
  out.reserve(data.examples.size());
  for (const auto& ex : data.examples) {
    std::vector<int64_t> indices = encode(tokenize(ex.text), vocab);
    if (indices.empty())
      throw UserError("example '" + ex.id + "' has no tokens");
    out.push_back(std::move(indices));
  }
  return out;
}

// Headline dev metric for the history file. Correlation is undefined when
// either side is constant (common in the first epochs on tiny data); that
// case is recorded as 0 rather than aborting the run.
double dev_metric_value(const TaskHead& head, const TaskDataset& data,
                        const std::vector<std::vector<double>>& preds) {
  const size_t n = data.examples.size();
  switch (head.kind) {
    case HeadKind::regression: {
      std::vector<double> yhat(n), y(n);
      for (size_t i = 0; i < n; ++i) {
        yhat[i] = preds[i][0];
        y[i] = data.examples[i].scalar;
      }
      if (n < 2) return 0.0;
      const auto constant = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(),
                           [&](double x) { return x == v.front(); });
      };
      if (constant(yhat) || constant(y)) return 0.0;
      return pearson(yhat, y);
    }
    case HeadKind::ordinal: {
      std::vector<int64_t> yhat(n), y(n);
      for (size_t i = 0; i < n; ++i) {
        yhat[i] = argmax_class(preds[i]);
        y[i] = data.examples[i].ordinal;
      }
      return accuracy(yhat, y);
    }
    case HeadKind::multilabel: {
      std::vector<std::bitset<11>> yhat(n), y(n);
      for (size_t i = 0; i < n; ++i) {
        yhat[i] = threshold_labels(preds[i]);
        y[i] = data.examples[i].labels;
      }
      return jaccard_multilabel(yhat, y);
    }
  }
  throw std::runtime_error("bad head kind");
}

}  // namespace

TrainResult train_model(ModelParams params, const TaskDataset& train_set,
                        const TaskDataset& dev_set, const TrainConfig& cfg) {
  validate(cfg);
  validate(params.config);
  if (train_set.examples.empty()) throw UserError("empty training set");
  if (dev_set.examples.empty()) throw UserError("empty dev set");

  const TaskHead& head = params.config.head;
  const TaskHead expected = head_for_task(train_set.task);
  if (head.kind != expected.kind || head.classes != expected.classes)
    throw UserError("model head does not match task " +
                    task_id_name(train_set.task));

  std::vector<double> weights;
  if (head.kind == HeadKind::ordinal) {
    std::vector<int64_t> labels;
    labels.reserve(train_set.examples.size());
    for (const auto& ex : train_set.examples) labels.push_back(ex.ordinal);
    weights = class_weights(labels, head.classes);
  }

  const auto enc_train = encode_dataset(train_set, params.embedding.vocab);
  const auto enc_dev = encode_dataset(dev_set, params.embedding.vocab);
  const std::vector<std::string> frozen =
      frozen_tensors(params.config, cfg.mode);

  AdamState state;
  TrainResult result;
  double best_loss = 0.0;
  int64_t since_best = 0;
  const int64_t n = static_cast<int64_t>(train_set.examples.size());

  for (int64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<int64_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(cfg.seed, 0x73687566, epoch));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    uint64_t sequence_counter = 0;
    const int64_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
    for (int64_t b = 0; b < batches; ++b) {
      const int64_t lo = b * cfg.batch_size;
      const int64_t hi = std::min(n, lo + cfg.batch_size);
      GradMap batch_grads;
      for (int64_t j = lo; j < hi; ++j) {
        const int64_t idx = order[j];
        const uint64_t sequence_seed =
            mix_seed(cfg.seed, epoch, ++sequence_counter);
        try {
          ModelGraph mg = build_model_graph(params, enc_train[idx],
                                            /*train=*/true, sequence_seed);
          const NodeId loss =
              loss_node(mg.graph, mg.prediction, head,
                        train_set.examples[idx], weights);
          mg.graph.evaluate();
          const double value = mg.graph.value(loss).data[0];
          if (!std::isfinite(value))
            throw std::runtime_error("non-finite loss");
          epoch_loss += value;
          for (auto& [name, grad] : mg.graph.gradients(loss)) {
            auto [it, fresh] = batch_grads.try_emplace(name, grad);
            if (!fresh)
              for (int64_t i = 0; i < grad.size(); ++i)
                it->second.data[i] += grad.data[i];
          }
        } catch (const std::exception& e) {
          throw UserError("epoch " + std::to_string(epoch) + ", batch " +
                          std::to_string(b + 1) + ": " + e.what());
        }
      }
      const double inv = 1.0 / static_cast<double>(hi - lo);
      for (auto& [name, grad] : batch_grads)
        for (double& x : grad.data) x *= inv;
      clip_grad_norm(batch_grads, cfg.clip_norm);
      adam_step(params, batch_grads, state, cfg, frozen);
    }

    double dev_loss = 0.0;
    std::vector<std::vector<double>> dev_preds;
    dev_preds.reserve(dev_set.examples.size());
    for (size_t i = 0; i < dev_set.examples.size(); ++i) {
      ModelOutput out =
          model_forward(params, enc_dev[i], /*train=*/false, 0);
      dev_loss +=
          loss_value(out.prediction, head, dev_set.examples[i], weights);
      dev_preds.push_back(std::move(out.prediction));
    }
    dev_loss /= static_cast<double>(dev_set.examples.size());
    if (!std::isfinite(dev_loss))
      throw UserError("epoch " + std::to_string(epoch) +
                      ": non-finite dev loss");

    result.history.push_back({epoch, epoch_loss / static_cast<double>(n),
                              dev_loss,
                              dev_metric_value(head, dev_set, dev_preds)});

    if (result.best_epoch == 0 || dev_loss < best_loss) {
      best_loss = dev_loss;
      result.best_epoch = epoch;
      result.params = params;  // snapshot of the best dev epoch
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

ModelParams transfer(const ModelParams& pretrained, const TaskHead& new_head,
                     TrainMode mode, uint64_t seed) {
  if (mode == TrainMode::rd)
    throw UserError("transfer requires mode TL-FR or TL-FT");
  ModelConfig cfg = pretrained.config;
  cfg.head = new_head;
  ModelParams fresh = init_params(cfg, pretrained.embedding, seed);

  std::vector<std::string> mismatched;
  for (auto& [name, tensor] : fresh.trainable) {
    if (!is_encoder_tensor(name)) continue;
    const Tensor* source = pretrained.find(name);
    if (!source || source->shape != tensor.shape) {
      mismatched.push_back(name);
      continue;
    }
    tensor = *source;
  }
  if (!mismatched.empty()) {
    std::string list;
    for (const auto& name : mismatched)
      list += (list.empty() ? "" : ", ") + name;
    throw UserError("transfer shape mismatch: " + list);
  }
  return fresh;
}

void save_history(const std::vector<EpochRecord>& history,
                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write file: " + path);
  out << "epoch,train_loss,dev_loss,dev_metric\n";
  for (const auto& row : history)
    out << row.epoch << ',' << format_float(row.train_loss) << ','
        << format_float(row.dev_loss) << ',' << format_float(row.dev_metric)
        << '\n';
  if (!out) throw UserError("write failed: " + path);
}

}  // namespace affect
