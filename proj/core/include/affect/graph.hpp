#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "affect/rng.hpp"

namespace affect {

// Dense row-major tensor of rank 0 (scalar), 1 (vector) or 2 (matrix).
// Value-semantic; freely shareable once produced.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<double> data;

  Tensor() = default;
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> v);
  static Tensor zeros(std::vector<int64_t> shape);
  static Tensor full(std::vector<int64_t> shape, std::vector<double> data);

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int64_t dim(int axis) const { return shape[axis]; }
  // Rank-2 element access.
  double& at(int64_t r, int64_t c) { return data[r * shape[1] + c]; }
  double at(int64_t r, int64_t c) const { return data[r * shape[1] + c]; }
};

int64_t shape_size(const std::vector<int64_t>& shape);
std::string shape_str(const std::vector<int64_t>& shape);

using NodeId = int;

// Define-by-run reverse-mode differentiation over Tensors. A graph is built
// once, evaluated (forward, caching every node), then differentiated
// backwards from a scalar output. Construction order is the topological
// order. Single-threaded per instance; distinct graphs may run concurrently.
//
// Stochastic nodes (dropout, Gaussian noise) draw from a stream that is
// re-seeded at the start of every evaluate() call, so repeated evaluations
// of the same graph see identical masks — which is what makes central
// finite differences valid on stochastic graphs.
class Graph {
 public:
  explicit Graph(uint64_t seed = 0, bool train = false);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // Leaves. `param` keeps a non-owning pointer that is re-read on every
  // evaluate, so external perturbations (finite differences, optimizer
  // steps) are picked up; the storage must outlive the graph.
  NodeId input(const std::string& name, std::vector<int64_t> shape);
  NodeId param(const std::string& name, Tensor* storage);
  NodeId constant(Tensor value, const std::string& name = "");

  // Element-wise; shapes must match exactly (no broadcasting).
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  // (r×k)·(k×c) matrix product.
  NodeId matmul(NodeId a, NodeId b);
  // Adds a length-c vector to every row of an r×c matrix.
  NodeId add_row(NodeId m, NodeId v);
  // scale*x + shift, element-wise with scalar coefficients.
  NodeId affine(NodeId x, double scale, double shift);
  NodeId concat(const std::vector<NodeId>& parts, int axis);
  NodeId slice(NodeId x, int axis, int64_t start, int64_t len);
  NodeId tanh(NodeId x);
  NodeId sigmoid(NodeId x);
  // Along the last axis, log-sum-exp stabilized.
  NodeId softmax(NodeId x);
  NodeId log(NodeId x);
  NodeId clamp(NodeId x, double lo, double hi);
  // Inverted scaling: kept entries divided by (1-p); identity in eval mode
  // and when p = 0. p in [0,1).
  NodeId dropout(NodeId x, double p);
  // Adds N(0, sigma^2) noise in train mode; identity in eval mode and when
  // sigma = 0.
  NodeId gauss_noise(NodeId x, double sigma);
  NodeId sum(NodeId x);
  NodeId mean(NodeId x);
  NodeId reshape(NodeId x, std::vector<int64_t> shape);

  void mark_output(NodeId id, const std::string& name);

  // Forward pass. Binds named inputs, re-reads parameter storage, re-seeds
  // the stochastic stream, computes every node in order and verifies each
  // result is finite. Returns the marked outputs by name.
  std::map<std::string, Tensor> evaluate(
      const std::map<std::string, Tensor>& inputs = {});

  // Reverse pass from a scalar node, after evaluate(). Returns gradients
  // for the requested nodes keyed by node name (all parameters when `wrt`
  // is empty).
  std::map<std::string, Tensor> gradients(NodeId scalar_output,
                                          const std::vector<NodeId>& wrt = {});

  const Tensor& value(NodeId id) const;
  const Tensor& grad(NodeId id) const;

  bool train_mode() const { return train_; }
  uint64_t seed() const { return seed_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  std::vector<NodeId> param_nodes() const;
  std::string node_label(NodeId id) const;
  Tensor* param_storage(NodeId id) const;

 private:
  enum class Op {
    input, param, constant, add, sub, mul, matmul, add_row, affine, concat,
    slice, tanh_fn, sigmoid_fn, softmax_fn, log_fn, clamp_fn, dropout,
    gauss_noise, sum_all, mean_all, reshape
  };

  struct Node {
    Op op;
    std::string name;
    std::vector<NodeId> inputs;
    std::vector<int64_t> shape;
    double a = 0.0;  // affine scale / dropout p / noise sigma / clamp lo
    double b = 0.0;  // affine shift / clamp hi
    int axis = 0;
    int64_t start = 0;
    int64_t len = 0;
    Tensor* bound = nullptr;  // param storage
    Tensor value;
    Tensor grad;
    Tensor aux;  // dropout mask
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;
  void forward(Node& n);
  void backward(const Node& n);
  [[noreturn]] void fail(NodeId id, const std::string& what) const;
  void require_rank(NodeId id, int rank, const char* op_name) const;

  uint64_t seed_;
  bool train_;
  Rng rng_;
  std::vector<Node> nodes_;
  std::vector<std::pair<NodeId, std::string>> outputs_;
  bool evaluated_ = false;
};

// Gradient verification against central finite differences with step eps:
// every parameter element is perturbed in its own storage and the graph is
// re-evaluated, so stochastic masks stay frozen. Relative error is
// |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
  bool ok = true;
};

struct GradCheckReport {
  bool ok = true;
  double max_rel_err = 0.0;
  std::vector<GradCheckEntry> entries;
};

std::map<std::string, Tensor> fd_gradients(
    Graph& graph, NodeId scalar_output,
    const std::map<std::string, Tensor>& inputs, double eps = 1e-5);

GradCheckReport compare_gradients(const std::map<std::string, Tensor>& analytic,
                                  const std::map<std::string, Tensor>& fd,
                                  double tolerance);

// The default eps suits graphs whose gradients stay well above the
// double-precision noise floor eps_machine * |f| / (2 * eps). Deep models can
// produce legitimate gradients near 1e-10; for those a larger step (e.g. 1e-3)
// trades a little truncation error for much less rounding error.
GradCheckReport check_gradients(Graph& graph, NodeId scalar_output,
                                const std::map<std::string, Tensor>& inputs,
                                double tolerance, double eps = 1e-5);

}  // namespace affect
