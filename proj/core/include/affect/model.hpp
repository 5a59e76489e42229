#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "affect/datasets.hpp"
#include "affect/embeddings.hpp"
#include "affect/graph.hpp"

namespace affect {

enum class HeadKind { regression, ordinal, multilabel };

struct TaskHead {
  HeadKind kind = HeadKind::regression;
  int64_t classes = 1;  // ordinal class count / multilabel label count

  int64_t output_width() const {
    return kind == HeadKind::regression ? 1 : classes;
  }
};

TaskHead head_for_task(TaskId task);

struct ModelConfig {
  int64_t embed_dim = 310;
  int64_t lstm_size = 250;
  int64_t lstm_layers = 2;
  int64_t attention_layers = 2;
  int64_t attention_hidden = 0;  // 0 resolves to annotation width (2*lstm_size)
  double noise_sigma = 0.2;
  double embed_dropout = 0.1;
  double repr_dropout = 0.3;
  TaskHead head;

  int64_t annotation_width() const { return 2 * lstm_size; }
  int64_t attention_width() const {
    return attention_hidden > 0 ? attention_hidden : annotation_width();
  }
};

void validate(const ModelConfig& cfg);

// Embedding (frozen) plus the trainable tensors in a fixed canonical order:
// LSTM layers (forward then backward per layer: w_x, w_h, b), attention MLP
// layers (w, b), head (w, b). The order is the checkpoint manifest order
// and the optimizer's iteration order.
struct ModelParams {
  ModelConfig config;
  EmbeddingMatrix embedding;
  std::vector<std::pair<std::string, Tensor>> trainable;

  Tensor* find(const std::string& name);
  const Tensor* find(const std::string& name) const;
};

// Fresh parameters: weights uniform in (-1/sqrt(fan_in), +1/sqrt(fan_in)),
// biases zero except the LSTM forget-gate block, which starts at 1.
ModelParams init_params(const ModelConfig& cfg, EmbeddingMatrix embedding,
                        uint64_t seed);

// Names of the trainable tensors a config implies, in canonical order.
std::vector<std::string> trainable_names(const ModelConfig& cfg);
// The encoder subset (BiLSTM + attention) — frozen under TL-FR.
bool is_encoder_tensor(const std::string& name);
bool is_head_tensor(const std::string& name);

// --- Graph builders -------------------------------------------------------
// Each builder appends ops to an existing graph and returns node ids, so
// unit tests can exercise one stage and the full model composes them into a
// single differentiable graph.

// Embedding lookup rows for the index sequence as a constant (the embedding
// is not trainable), plus Gaussian noise and dropout in train mode.
NodeId embed_forward(Graph& g, const std::vector<int64_t>& indices,
                     const ModelParams& params);

// One LSTM step. Gate blocks are packed [input, forget, candidate, output]
// along the last axis of w_x {in,4L}, w_h {L,4L}, b {4L}:
//   i,f,o = sigmoid(...), g = tanh(...),
//   c_t = f*c_prev + i*g,  h_t = o*tanh(c_t).
struct LstmStep {
  NodeId h;
  NodeId c;
};
LstmStep lstm_cell(Graph& g, NodeId x_t, NodeId h_prev, NodeId c_prev,
                   NodeId w_x, NodeId w_h, NodeId b, int64_t lstm_size);

// Stacked bidirectional LSTM over embedded {N,W}: per layer, a forward and
// a backward pass whose hidden states are concatenated per position; the
// next layer consumes the concatenation. Param nodes are taken from
// `params` by canonical name. Returns annotations {N, 2L}.
NodeId bilstm_forward(Graph& g, NodeId embedded, int64_t steps,
                      ModelParams& params,
                      std::map<std::string, NodeId>& param_nodes);

// Per-position scalar scores from an MLP (tanh hidden layers, linear scalar
// output), softmax over positions, and the weighted sum of annotations.
struct AttentionOut {
  NodeId summary;  // {1, 2L}
  NodeId weights;  // {N}
};
AttentionOut deep_attention(Graph& g, NodeId annotations, int64_t steps,
                            ModelParams& params,
                            std::map<std::string, NodeId>& param_nodes);

// Task head over the summary {1,2L}: regression -> sigmoid scalar; ordinal
// -> softmax over k classes; multilabel -> per-label sigmoid.
NodeId head_forward(Graph& g, NodeId summary, const TaskHead& head,
                    ModelParams& params,
                    std::map<std::string, NodeId>& param_nodes);

// Loss on a prediction node: regression -> squared error; ordinal ->
// cross-entropy weighted by class_weights[target] (unit weights when
// empty); multilabel -> mean binary cross-entropy. Probabilities are
// clamped to [1e-7, 1-1e-7] inside the logs.
NodeId loss_node(Graph& g, NodeId prediction, const TaskHead& head,
                 const LabeledExample& example,
                 const std::vector<double>& class_weights);

// The assembled model graph for one example.
struct ModelGraph {
  Graph graph;
  NodeId prediction = -1;
  NodeId attention = -1;
  NodeId loss = -1;  // set when built with a target
  std::map<std::string, NodeId> param_nodes;

  ModelGraph(uint64_t seed, bool train) : graph(seed, train) {}
};

ModelGraph build_model_graph(ModelParams& params,
                             const std::vector<int64_t>& indices, bool train,
                             uint64_t seed);

// --- Whole-model evaluation ------------------------------------------------

struct ModelOutput {
  std::vector<double> prediction;  // width per head
  std::vector<double> attention;   // one weight per input position
};

ModelOutput model_forward(ModelParams& params,
                          const std::vector<int64_t>& indices, bool train,
                          uint64_t seed);

double loss_value(const std::vector<double>& prediction, const TaskHead& head,
                  const LabeledExample& example,
                  const std::vector<double>& class_weights);

// Decision rules mapping head outputs to task predictions: regression keeps
// the scalar; ordinal takes the argmax class; multilabel thresholds each
// probability at 0.5.
int64_t argmax_class(const std::vector<double>& probabilities);
std::bitset<11> threshold_labels(const std::vector<double>& probabilities);

// --- Persistence -----------------------------------------------------------
// Checkpoint: text header (format version, config fields, vocabulary,
// tensor manifest) + little-endian float64 payload; loading validates every
// shape against the config.
void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

}  // namespace affect
