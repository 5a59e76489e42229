#include "affect/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "affect/archive.hpp"
#include "affect/rng.hpp"
#include "affect/util.hpp"

namespace affect {

namespace {

constexpr double kProbFloor = 1e-7;

struct TensorSpec {
  std::string name;
  std::vector<int64_t> shape;
  bool lstm_bias = false;
};

std::vector<TensorSpec> tensor_specs(const ModelConfig& cfg) {
  std::vector<TensorSpec> specs;
  const int64_t L = cfg.lstm_size;
  for (int64_t layer = 0; layer < cfg.lstm_layers; ++layer) {
    const int64_t in = layer == 0 ? cfg.embed_dim : cfg.annotation_width();
    for (const char* dir : {"fw", "bw"}) {
      const std::string p =
          "lstm.l" + std::to_string(layer) + "." + dir + ".";
      specs.push_back({p + "w_x", {in, 4 * L}, false});
      specs.push_back({p + "w_h", {L, 4 * L}, false});
      specs.push_back({p + "b", {4 * L}, true});
    }
  }
  int64_t in = cfg.annotation_width();
  for (int64_t layer = 0; layer < cfg.attention_layers; ++layer) {
    const bool last = layer == cfg.attention_layers - 1;
    const int64_t out = last ? 1 : cfg.attention_width();
    const std::string p = "attn.l" + std::to_string(layer) + ".";
    specs.push_back({p + "w", {in, out}, false});
    specs.push_back({p + "b", {out}, false});
    in = out;
  }
  specs.push_back({"head.w", {cfg.annotation_width(), cfg.head.output_width()},
                   false});
  specs.push_back({"head.b", {cfg.head.output_width()}, false});
  return specs;
}

std::string head_kind_name(HeadKind kind) {
  switch (kind) {
    case HeadKind::regression:
      return "regression";
    case HeadKind::ordinal:
      return "ordinal";
    case HeadKind::multilabel:
      return "multilabel";
  }
  throw std::runtime_error("bad head kind");
}

HeadKind parse_head_kind(const std::string& name) {
  if (name == "regression") return HeadKind::regression;
  if (name == "ordinal") return HeadKind::ordinal;
  if (name == "multilabel") return HeadKind::multilabel;
  throw UserError("unknown head kind '" + name + "'");
}

}  // namespace

TaskHead head_for_task(TaskId task) {
  switch (task) {
    case TaskId::ei_reg:
    case TaskId::v_reg:
      return {HeadKind::regression, 1};
    case TaskId::ei_oc:
      return {HeadKind::ordinal, 4};
    case TaskId::v_oc:
      return {HeadKind::ordinal, 7};
    case TaskId::pretrain:
      return {HeadKind::ordinal, 3};
    case TaskId::e_c:
      return {HeadKind::multilabel, 11};
  }
  throw std::runtime_error("bad task id");
}

void validate(const ModelConfig& cfg) {
  if (cfg.embed_dim < 1 || cfg.lstm_size < 1 || cfg.lstm_layers < 1 ||
      cfg.attention_layers < 1 || cfg.attention_hidden < 0)
    throw UserError("model sizes must be >= 1");
  if (cfg.noise_sigma < 0.0)
    throw UserError("noise sigma must be >= 0");
  if (cfg.embed_dropout < 0.0 || cfg.embed_dropout >= 1.0 ||
      cfg.repr_dropout < 0.0 || cfg.repr_dropout >= 1.0)
    throw UserError("dropout must be in [0,1)");
  if (cfg.head.kind == HeadKind::ordinal && cfg.head.classes < 2)
    throw UserError("ordinal head needs at least 2 classes");
  if (cfg.head.kind == HeadKind::multilabel && cfg.head.classes < 1)
    throw UserError("multilabel head needs at least 1 label");
  if (cfg.head.kind == HeadKind::regression && cfg.head.classes != 1)
    throw UserError("regression head has exactly 1 output");
}

Tensor* ModelParams::find(const std::string& name) {
  for (auto& [n, t] : trainable)
    if (n == name) return &t;
  return nullptr;
}

const Tensor* ModelParams::find(const std::string& name) const {
  for (const auto& [n, t] : trainable)
    if (n == name) return &t;
  return nullptr;
}

std::vector<std::string> trainable_names(const ModelConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& spec : tensor_specs(cfg)) names.push_back(spec.name);
  return names;
}

bool is_encoder_tensor(const std::string& name) {
  return name.rfind("lstm.", 0) == 0 || name.rfind("attn.", 0) == 0;
}

bool is_head_tensor(const std::string& name) {
  return name.rfind("head.", 0) == 0;
}

ModelParams init_params(const ModelConfig& cfg, EmbeddingMatrix embedding,
                        uint64_t seed) {
  validate(cfg);
  if (embedding.dim != cfg.embed_dim)
    throw UserError("embedding dimension " + std::to_string(embedding.dim) +
                    " does not match configured width " +
                    std::to_string(cfg.embed_dim));
  if (embedding.vocab.size() < 2)
    throw UserError("embedding vocabulary is empty");

  ModelParams params;
  params.config = cfg;
  params.config.attention_hidden = cfg.attention_width();  // pin the default
  params.embedding = std::move(embedding);

  Rng rng(seed);
  for (const auto& spec : tensor_specs(params.config)) {
    Tensor t = Tensor::zeros(spec.shape);
    if (t.rank() == 2) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(spec.shape[0]));
      for (double& x : t.data) x = rng.uniform(-bound, bound);
    } else if (spec.lstm_bias) {
      // Forget-gate block starts open so early gradients flow through time.
      const int64_t L = params.config.lstm_size;
      std::fill_n(t.data.begin() + L, L, 1.0);
    }
    params.trainable.emplace_back(spec.name, std::move(t));
  }
  return params;
}

NodeId embed_forward(Graph& g, const std::vector<int64_t>& indices,
                     const ModelParams& params) {
  if (indices.empty()) throw std::runtime_error("empty input");
  const int64_t n = static_cast<int64_t>(indices.size());
  const int64_t w = params.embedding.dim;
  Tensor rows = Tensor::zeros({n, w});
  for (int64_t i = 0; i < n; ++i) {
    if (indices[i] < 0 || indices[i] >= params.embedding.vocab.size())
      throw std::runtime_error("embedding index " +
                               std::to_string(indices[i]) + " out of range");
    std::copy_n(params.embedding.row_ptr(indices[i]), w,
                &rows.data[i * w]);
  }
  NodeId x = g.constant(std::move(rows), "embedded");
  x = g.gauss_noise(x, params.config.noise_sigma);
  return g.dropout(x, params.config.embed_dropout);
}

LstmStep lstm_cell(Graph& g, NodeId x_t, NodeId h_prev, NodeId c_prev,
                   NodeId w_x, NodeId w_h, NodeId b, int64_t lstm_size) {
  const int64_t L = lstm_size;
  const NodeId gates =
      g.add_row(g.add(g.matmul(x_t, w_x), g.matmul(h_prev, w_h)), b);
  const NodeId i = g.sigmoid(g.slice(gates, 1, 0, L));
  const NodeId f = g.sigmoid(g.slice(gates, 1, L, L));
  const NodeId cand = g.tanh(g.slice(gates, 1, 2 * L, L));
  const NodeId o = g.sigmoid(g.slice(gates, 1, 3 * L, L));
  const NodeId c = g.add(g.mul(f, c_prev), g.mul(i, cand));
  const NodeId h = g.mul(o, g.tanh(c));
  return {h, c};
}

namespace {

NodeId param_node(Graph& g, ModelParams& params,
                  std::map<std::string, NodeId>& param_nodes,
                  const std::string& name) {
  const auto it = param_nodes.find(name);
  if (it != param_nodes.end()) return it->second;
  Tensor* storage = params.find(name);
  if (!storage) throw std::runtime_error("unknown parameter: " + name);
  const NodeId id = g.param(name, storage);
  param_nodes.emplace(name, id);
  return id;
}

}  // namespace

NodeId bilstm_forward(Graph& g, NodeId embedded, int64_t steps,
                      ModelParams& params,
                      std::map<std::string, NodeId>& param_nodes) {
  const int64_t L = params.config.lstm_size;
  NodeId layer_in = embedded;
  for (int64_t layer = 0; layer < params.config.lstm_layers; ++layer) {
    std::vector<NodeId> fw(steps), bw(steps);
    for (const char* dir : {"fw", "bw"}) {
      const std::string p =
          "lstm.l" + std::to_string(layer) + "." + dir + ".";
      const NodeId w_x = param_node(g, params, param_nodes, p + "w_x");
      const NodeId w_h = param_node(g, params, param_nodes, p + "w_h");
      const NodeId b = param_node(g, params, param_nodes, p + "b");
      NodeId h = g.constant(Tensor::zeros({1, L}));
      NodeId c = g.constant(Tensor::zeros({1, L}));
      const bool forward = dir[0] == 'f';
      for (int64_t s = 0; s < steps; ++s) {
        const int64_t t = forward ? s : steps - 1 - s;
        const NodeId x_t = g.slice(layer_in, 0, t, 1);
        const LstmStep step = lstm_cell(g, x_t, h, c, w_x, w_h, b, L);
        h = step.h;
        c = step.c;
        (forward ? fw : bw)[t] = h;
      }
    }
    std::vector<NodeId> rows(steps);
    for (int64_t t = 0; t < steps; ++t)
      rows[t] = g.concat({fw[t], bw[t]}, 1);
    layer_in = steps == 1 ? rows[0] : g.concat(rows, 0);
  }
  return layer_in;
}

AttentionOut deep_attention(Graph& g, NodeId annotations, int64_t steps,
                            ModelParams& params,
                            std::map<std::string, NodeId>& param_nodes) {
  NodeId z = annotations;
  for (int64_t layer = 0; layer < params.config.attention_layers; ++layer) {
    const std::string p = "attn.l" + std::to_string(layer) + ".";
    const NodeId w = param_node(g, params, param_nodes, p + "w");
    const NodeId b = param_node(g, params, param_nodes, p + "b");
    z = g.add_row(g.matmul(z, w), b);
    if (layer + 1 < params.config.attention_layers) z = g.tanh(z);
  }
  const NodeId scores = g.reshape(z, {steps});
  const NodeId a = g.softmax(scores);
  const NodeId summary = g.matmul(g.reshape(a, {1, steps}), annotations);
  return {summary, a};
}

NodeId head_forward(Graph& g, NodeId summary, const TaskHead& head,
                    ModelParams& params,
                    std::map<std::string, NodeId>& param_nodes) {
  const NodeId w = param_node(g, params, param_nodes, "head.w");
  const NodeId b = param_node(g, params, param_nodes, "head.b");
  const NodeId z = g.add_row(g.matmul(summary, w), b);
  return head.kind == HeadKind::ordinal ? g.softmax(z) : g.sigmoid(z);
}

NodeId loss_node(Graph& g, NodeId prediction, const TaskHead& head,
                 const LabeledExample& example,
                 const std::vector<double>& class_weights) {
  if (!class_weights.empty() &&
      static_cast<int64_t>(class_weights.size()) != head.classes)
    throw std::runtime_error("class weight count does not match head");
  switch (head.kind) {
    case HeadKind::regression: {
      if (example.scalar < 0.0 || example.scalar > 1.0)
        throw std::runtime_error("regression target outside [0,1]");
      const NodeId target =
          g.constant(Tensor::full({1, 1}, {example.scalar}), "target");
      const NodeId diff = g.sub(prediction, target);
      return g.mean(g.mul(diff, diff));
    }
    case HeadKind::ordinal: {
      if (example.ordinal < 0 || example.ordinal >= head.classes)
        throw std::runtime_error("ordinal target out of range");
      const double weight = class_weights.empty()
                                ? 1.0
                                : class_weights[example.ordinal];
      const NodeId p = g.slice(prediction, 1, example.ordinal, 1);
      const NodeId lg = g.log(g.clamp(p, kProbFloor, 1.0));
      return g.affine(g.mean(lg), -weight, 0.0);
    }
    case HeadKind::multilabel: {
      if (head.classes != 11)
        throw std::runtime_error("multilabel head expects 11 labels");
      std::vector<double> y(head.classes);
      for (int64_t i = 0; i < head.classes; ++i)
        y[i] = example.labels[i] ? 1.0 : 0.0;
      const NodeId yn =
          g.constant(Tensor::full({1, head.classes}, y), "target");
      const NodeId p = g.clamp(prediction, kProbFloor, 1.0 - kProbFloor);
      const NodeId hit = g.mul(yn, g.log(p));
      const NodeId miss =
          g.mul(g.affine(yn, -1.0, 1.0), g.log(g.affine(p, -1.0, 1.0)));
      return g.affine(g.mean(g.add(hit, miss)), -1.0, 0.0);
    }
  }
  throw std::runtime_error("bad head kind");
}

ModelGraph build_model_graph(ModelParams& params,
                             const std::vector<int64_t>& indices, bool train,
                             uint64_t seed) {
  validate(params.config);
  ModelGraph mg(seed, train);
  Graph& g = mg.graph;
  const int64_t steps = static_cast<int64_t>(indices.size());
  const NodeId x = embed_forward(g, indices, params);
  const NodeId ann = bilstm_forward(g, x, steps, params, mg.param_nodes);
  const AttentionOut att =
      deep_attention(g, ann, steps, params, mg.param_nodes);
  const NodeId r = g.dropout(att.summary, params.config.repr_dropout);
  mg.prediction =
      head_forward(g, r, params.config.head, params, mg.param_nodes);
  mg.attention = att.weights;
  return mg;
}

ModelOutput model_forward(ModelParams& params,
                          const std::vector<int64_t>& indices, bool train,
                          uint64_t seed) {
  ModelGraph mg = build_model_graph(params, indices, train, seed);
  mg.graph.evaluate();
  ModelOutput out;
  out.prediction = mg.graph.value(mg.prediction).data;
  out.attention = mg.graph.value(mg.attention).data;
  return out;
}

double loss_value(const std::vector<double>& prediction, const TaskHead& head,
                  const LabeledExample& example,
                  const std::vector<double>& class_weights) {
  Graph g(0, false);
  const NodeId p = g.constant(
      Tensor::full({1, static_cast<int64_t>(prediction.size())}, prediction),
      "prediction");
  const NodeId l = loss_node(g, p, head, example, class_weights);
  g.evaluate();
  return g.value(l).data[0];
}

int64_t argmax_class(const std::vector<double>& probabilities) {
  int64_t best = 0;
  for (size_t i = 1; i < probabilities.size(); ++i)
    if (probabilities[i] > probabilities[best])
      best = static_cast<int64_t>(i);
  return best;
}

std::bitset<11> threshold_labels(const std::vector<double>& probabilities) {
  std::bitset<11> out;
  for (size_t i = 0; i < probabilities.size() && i < 11; ++i)
    if (probabilities[i] >= 0.5) out.set(i);
  return out;
}

void save_model(const ModelParams& params, const std::string& path) {
  const ModelConfig& cfg = params.config;
  Archive a;
  a.kind = "model";
  a.meta = {
      {"head_kind", head_kind_name(cfg.head.kind)},
      {"head_classes", std::to_string(cfg.head.classes)},
      {"embed_dim", std::to_string(cfg.embed_dim)},
      {"lstm_size", std::to_string(cfg.lstm_size)},
      {"lstm_layers", std::to_string(cfg.lstm_layers)},
      {"attention_layers", std::to_string(cfg.attention_layers)},
      {"attention_hidden", std::to_string(cfg.attention_hidden)},
      {"noise_sigma", format_exact(cfg.noise_sigma)},
      {"embed_dropout", format_exact(cfg.embed_dropout)},
      {"repr_dropout", format_exact(cfg.repr_dropout)},
  };
  a.has_vocab = true;
  a.vocab = params.embedding.vocab;
  Tensor emb;
  emb.shape = {params.embedding.vocab.size(), params.embedding.dim};
  emb.data = params.embedding.rows;
  a.tensors.emplace_back("embedding", std::move(emb));
  for (const auto& [name, tensor] : params.trainable)
    a.tensors.emplace_back(name, tensor);
  save_archive(a, path);
}

ModelParams load_model(const std::string& path) {
  const Archive a = load_archive(path, "model");
  ModelParams params;
  ModelConfig& cfg = params.config;
  cfg.head.kind = parse_head_kind(a.meta_value("head_kind"));
  cfg.head.classes = parse_int(a.meta_value("head_classes"), path);
  cfg.embed_dim = parse_int(a.meta_value("embed_dim"), path);
  cfg.lstm_size = parse_int(a.meta_value("lstm_size"), path);
  cfg.lstm_layers = parse_int(a.meta_value("lstm_layers"), path);
  cfg.attention_layers = parse_int(a.meta_value("attention_layers"), path);
  cfg.attention_hidden = parse_int(a.meta_value("attention_hidden"), path);
  cfg.noise_sigma = parse_double(a.meta_value("noise_sigma"), path);
  cfg.embed_dropout = parse_double(a.meta_value("embed_dropout"), path);
  cfg.repr_dropout = parse_double(a.meta_value("repr_dropout"), path);
  validate(cfg);
  if (!a.has_vocab) throw UserError(path + ": checkpoint lacks a vocabulary");

  params.embedding.vocab = a.vocab;
  params.embedding.dim = cfg.embed_dim;
  const auto specs = tensor_specs(cfg);
  if (a.tensors.size() != specs.size() + 1)
    throw UserError(path + ": tensor manifest does not match configuration");
  if (a.tensors[0].first != "embedding")
    throw UserError(path + ": first tensor must be the embedding");
  {
    const Tensor& emb = a.tensors[0].second;
    const std::vector<int64_t> want = {a.vocab.size(), cfg.embed_dim};
    if (emb.shape != want)
      throw UserError(path + ": embedding shape " + shape_str(emb.shape) +
                      ", expected " + shape_str(want));
    params.embedding.rows = emb.data;
    std::fill_n(params.embedding.row_ptr(Vocabulary::pad_index()),
                params.embedding.dim, 0.0);
  }
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& [name, tensor] = a.tensors[i + 1];
    if (name != specs[i].name)
      throw UserError(path + ": tensor '" + name + "' where '" +
                      specs[i].name + "' was expected");
    if (tensor.shape != specs[i].shape)
      throw UserError(path + ": tensor '" + name + "' has shape " +
                      shape_str(tensor.shape) + ", expected " +
                      shape_str(specs[i].shape));
    params.trainable.emplace_back(name, tensor);
  }
  return params;
}

}  // namespace affect
