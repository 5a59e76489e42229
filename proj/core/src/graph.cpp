#include "affect/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace affect {

namespace {

const char* op_name(int op);

}  // namespace

Tensor Tensor::scalar(double v) {
  Tensor t;
  t.data = {v};
  return t;
}

Tensor Tensor::row(std::vector<double> v) {
  Tensor t;
  t.shape = {static_cast<int64_t>(v.size())};
  t.data = std::move(v);
  return t;
}

Tensor Tensor::zeros(std::vector<int64_t> shape) {
  Tensor t;
  t.data.assign(static_cast<size_t>(shape_size(shape)), 0.0);
  t.shape = std::move(shape);
  return t;
}

Tensor Tensor::full(std::vector<int64_t> shape, std::vector<double> data) {
  if (shape_size(shape) != static_cast<int64_t>(data.size()))
    throw std::runtime_error("tensor data does not match shape " +
                             shape_str(shape));
  Tensor t;
  t.shape = std::move(shape);
  t.data = std::move(data);
  return t;
}

int64_t shape_size(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<int64_t>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Graph::Graph(uint64_t seed, bool train)
    : seed_(seed), train_(train), rng_(seed) {}

NodeId Graph::push(Node node) {
  for (int64_t d : node.shape)
    if (d < 1 && !(node.shape.empty()))
      throw std::runtime_error("non-positive dimension in " +
                               shape_str(node.shape));
  nodes_.push_back(std::move(node));
  evaluated_ = false;
  return static_cast<NodeId>(nodes_.size()) - 1;
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
    throw std::runtime_error("bad node id " + std::to_string(id));
  return nodes_[id];
}

std::string Graph::node_label(NodeId id) const {
  const Node& n = node(id);
  if (!n.name.empty()) return n.name;
  return std::string(op_name(static_cast<int>(n.op))) + "#" +
         std::to_string(id);
}

void Graph::fail(NodeId id, const std::string& what) const {
  throw std::runtime_error(node_label(id) + ": " + what);
}

void Graph::require_rank(NodeId id, int rank, const char* op) const {
  if (node(id).shape.size() != static_cast<size_t>(rank))
    throw std::runtime_error(std::string(op) + ": " + node_label(id) +
                             " has shape " + shape_str(node(id).shape) +
                             ", expected rank " + std::to_string(rank));
}

NodeId Graph::input(const std::string& name, std::vector<int64_t> shape) {
  if (name.empty()) throw std::runtime_error("input needs a name");
  Node n;
  n.op = Op::input;
  n.name = name;
  n.shape = std::move(shape);
  return push(std::move(n));
}

NodeId Graph::param(const std::string& name, Tensor* storage) {
  if (name.empty()) throw std::runtime_error("param needs a name");
  if (!storage) throw std::runtime_error("param " + name + ": null storage");
  Node n;
  n.op = Op::param;
  n.name = name;
  n.shape = storage->shape;
  n.bound = storage;
  return push(std::move(n));
}

NodeId Graph::constant(Tensor value, const std::string& name) {
  Node n;
  n.op = Op::constant;
  n.name = name;
  n.shape = value.shape;
  n.value = std::move(value);
  return push(std::move(n));
}

namespace {

void require_same_shape(const std::vector<int64_t>& a,
                        const std::vector<int64_t>& b, const char* op) {
  if (a != b)
    throw std::runtime_error(std::string(op) + ": shape mismatch " +
                             shape_str(a) + " vs " + shape_str(b));
}

}  // namespace

NodeId Graph::add(NodeId a, NodeId b) {
  require_same_shape(node(a).shape, node(b).shape, "add");
  Node n;
  n.op = Op::add;
  n.inputs = {a, b};
  n.shape = node(a).shape;
  return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  require_same_shape(node(a).shape, node(b).shape, "sub");
  Node n;
  n.op = Op::sub;
  n.inputs = {a, b};
  n.shape = node(a).shape;
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  require_same_shape(node(a).shape, node(b).shape, "mul");
  Node n;
  n.op = Op::mul;
  n.inputs = {a, b};
  n.shape = node(a).shape;
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (node(a).shape[1] != node(b).shape[0])
    throw std::runtime_error("matmul: inner dimensions disagree, " +
                             shape_str(node(a).shape) + " vs " +
                             shape_str(node(b).shape));
  Node n;
  n.op = Op::matmul;
  n.inputs = {a, b};
  n.shape = {node(a).shape[0], node(b).shape[1]};
  return push(std::move(n));
}

NodeId Graph::add_row(NodeId m, NodeId v) {
  require_rank(m, 2, "add_row");
  require_rank(v, 1, "add_row");
  if (node(m).shape[1] != node(v).shape[0])
    throw std::runtime_error("add_row: row length " +
                             shape_str(node(v).shape) +
                             " does not match matrix " +
                             shape_str(node(m).shape));
  Node n;
  n.op = Op::add_row;
  n.inputs = {m, v};
  n.shape = node(m).shape;
  return push(std::move(n));
}

NodeId Graph::affine(NodeId x, double scale, double shift) {
  Node n;
  n.op = Op::affine;
  n.inputs = {x};
  n.shape = node(x).shape;
  n.a = scale;
  n.b = shift;
  return push(std::move(n));
}

NodeId Graph::concat(const std::vector<NodeId>& parts, int axis) {
  if (parts.empty()) throw std::runtime_error("concat: no inputs");
  const auto& first = node(parts[0]).shape;
  if (axis < 0 || axis >= static_cast<int>(first.size()))
    throw std::runtime_error("concat: axis " + std::to_string(axis) +
                             " out of range for " + shape_str(first));
  std::vector<int64_t> shape = first;
  for (size_t i = 1; i < parts.size(); ++i) {
    const auto& s = node(parts[i]).shape;
    if (s.size() != first.size())
      throw std::runtime_error("concat: rank mismatch " + shape_str(first) +
                               " vs " + shape_str(s));
    for (size_t d = 0; d < s.size(); ++d)
      if (static_cast<int>(d) != axis && s[d] != first[d])
        throw std::runtime_error("concat: shape mismatch " + shape_str(first) +
                                 " vs " + shape_str(s));
    shape[axis] += s[axis];
  }
  Node n;
  n.op = Op::concat;
  n.inputs = parts;
  n.shape = std::move(shape);
  n.axis = axis;
  return push(std::move(n));
}

NodeId Graph::slice(NodeId x, int axis, int64_t start, int64_t len) {
  const auto& s = node(x).shape;
  if (axis < 0 || axis >= static_cast<int>(s.size()))
    throw std::runtime_error("slice: axis " + std::to_string(axis) +
                             " out of range for " + shape_str(s));
  if (start < 0 || len < 1 || start + len > s[axis])
    throw std::runtime_error("slice: range [" + std::to_string(start) + "," +
                             std::to_string(start + len) + ") out of bounds " +
                             "for " + shape_str(s));
  Node n;
  n.op = Op::slice;
  n.inputs = {x};
  n.shape = s;
  n.shape[axis] = len;
  n.axis = axis;
  n.start = start;
  n.len = len;
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId x) {
  Node n;
  n.op = Op::tanh_fn;
  n.inputs = {x};
  n.shape = node(x).shape;
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId x) {
  Node n;
  n.op = Op::sigmoid_fn;
  n.inputs = {x};
  n.shape = node(x).shape;
  return push(std::move(n));
}

NodeId Graph::softmax(NodeId x) {
  if (node(x).shape.empty())
    throw std::runtime_error("softmax: scalar input " + node_label(x));
  Node n;
  n.op = Op::softmax_fn;
  n.inputs = {x};
  n.shape = node(x).shape;
  return push(std::move(n));
}

NodeId Graph::log(NodeId x) {
  Node n;
  n.op = Op::log_fn;
  n.inputs = {x};
  n.shape = node(x).shape;
  return push(std::move(n));
}

NodeId Graph::clamp(NodeId x, double lo, double hi) {
  if (!(lo < hi)) throw std::runtime_error("clamp: empty range");
  Node n;
  n.op = Op::clamp_fn;
  n.inputs = {x};
  n.shape = node(x).shape;
  n.a = lo;
  n.b = hi;
  return push(std::move(n));
}

NodeId Graph::dropout(NodeId x, double p) {
  if (p < 0.0 || p >= 1.0)
    throw std::runtime_error("dropout: p must be in [0,1)");
  Node n;
  n.op = Op::dropout;
  n.inputs = {x};
  n.shape = node(x).shape;
  n.a = p;
  return push(std::move(n));
}

NodeId Graph::gauss_noise(NodeId x, double sigma) {
  if (sigma < 0.0) throw std::runtime_error("gauss_noise: negative sigma");
  Node n;
  n.op = Op::gauss_noise;
  n.inputs = {x};
  n.shape = node(x).shape;
  n.a = sigma;
  return push(std::move(n));
}

NodeId Graph::sum(NodeId x) {
  Node n;
  n.op = Op::sum_all;
  n.inputs = {x};
  return push(std::move(n));
}

NodeId Graph::mean(NodeId x) {
  Node n;
  n.op = Op::mean_all;
  n.inputs = {x};
  return push(std::move(n));
}

NodeId Graph::reshape(NodeId x, std::vector<int64_t> shape) {
  if (shape_size(shape) != shape_size(node(x).shape))
    throw std::runtime_error("reshape: cannot view " +
                             shape_str(node(x).shape) + " as " +
                             shape_str(shape));
  Node n;
  n.op = Op::reshape;
  n.inputs = {x};
  n.shape = std::move(shape);
  return push(std::move(n));
}

void Graph::mark_output(NodeId id, const std::string& name) {
  node(id);  // range check
  outputs_.emplace_back(id, name);
}

std::vector<NodeId> Graph::param_nodes() const {
  std::vector<NodeId> ids;
  for (size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].op == Op::param) ids.push_back(static_cast<NodeId>(i));
  return ids;
}

Tensor* Graph::param_storage(NodeId id) const { return node(id).bound; }

const Tensor& Graph::value(NodeId id) const {
  if (!evaluated_) throw std::runtime_error("value() before evaluate()");
  return node(id).value;
}

const Tensor& Graph::grad(NodeId id) const { return node(id).grad; }

void Graph::forward(Node& n) {
  auto in = [&](size_t i) -> const Tensor& {
    return nodes_[n.inputs[i]].value;
  };
  switch (n.op) {
    case Op::input:
    case Op::constant:
      break;  // bound by evaluate()
    case Op::param:
      if (n.bound->shape != n.shape)
        throw std::runtime_error(n.name + ": parameter storage reshaped to " +
                                 shape_str(n.bound->shape) + ", expected " +
                                 shape_str(n.shape));
      n.value = *n.bound;
      break;
    case Op::add: {
      n.value = in(0);
      const Tensor& b = in(1);
      for (int64_t i = 0; i < n.value.size(); ++i) n.value.data[i] += b.data[i];
      break;
    }
    case Op::sub: {
      n.value = in(0);
      const Tensor& b = in(1);
      for (int64_t i = 0; i < n.value.size(); ++i) n.value.data[i] -= b.data[i];
      break;
    }
    case Op::mul: {
      n.value = in(0);
      const Tensor& b = in(1);
      for (int64_t i = 0; i < n.value.size(); ++i) n.value.data[i] *= b.data[i];
      break;
    }
    case Op::matmul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const int64_t r = a.shape[0], k = a.shape[1], c = b.shape[1];
      n.value = Tensor::zeros({r, c});
      for (int64_t i = 0; i < r; ++i)
        for (int64_t p = 0; p < k; ++p) {
          const double av = a.data[i * k + p];
          if (av == 0.0) continue;
          const double* brow = &b.data[p * c];
          double* crow = &n.value.data[i * c];
          for (int64_t j = 0; j < c; ++j) crow[j] += av * brow[j];
        }
      break;
    }
    case Op::add_row: {
      n.value = in(0);
      const Tensor& v = in(1);
      const int64_t r = n.value.shape[0], c = n.value.shape[1];
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) n.value.data[i * c + j] += v.data[j];
      break;
    }
    case Op::affine: {
      n.value = in(0);
      for (double& x : n.value.data) x = n.a * x + n.b;
      break;
    }
    case Op::concat: {
      n.value = Tensor::zeros(n.shape);
      // Row-major copy: an index along `axis` selects a contiguous block of
      // `inner` entries repeated `outer` times.
      int64_t outer = 1, inner = 1;
      for (int d = 0; d < n.axis; ++d) outer *= n.shape[d];
      for (size_t d = n.axis + 1; d < n.shape.size(); ++d) inner *= n.shape[d];
      const int64_t total_axis = n.shape[n.axis];
      int64_t offset = 0;
      for (NodeId part : n.inputs) {
        const Tensor& p = nodes_[part].value;
        const int64_t len = p.shape[n.axis];
        for (int64_t o = 0; o < outer; ++o)
          std::copy_n(&p.data[o * len * inner], len * inner,
                      &n.value.data[(o * total_axis + offset) * inner]);
        offset += len;
      }
      break;
    }
    case Op::slice: {
      const Tensor& x = in(0);
      n.value = Tensor::zeros(n.shape);
      int64_t outer = 1, inner = 1;
      for (int d = 0; d < n.axis; ++d) outer *= x.shape[d];
      for (size_t d = n.axis + 1; d < x.shape.size(); ++d) inner *= x.shape[d];
      const int64_t total_axis = x.shape[n.axis];
      for (int64_t o = 0; o < outer; ++o)
        std::copy_n(&x.data[(o * total_axis + n.start) * inner],
                    n.len * inner, &n.value.data[o * n.len * inner]);
      break;
    }
    case Op::tanh_fn: {
      n.value = in(0);
      for (double& x : n.value.data) x = std::tanh(x);
      break;
    }
    case Op::sigmoid_fn: {
      n.value = in(0);
      for (double& x : n.value.data)
        x = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                     : std::exp(x) / (1.0 + std::exp(x));
      break;
    }
    case Op::softmax_fn: {
      const Tensor& x = in(0);
      n.value = x;
      const int64_t cols = x.shape.back();
      const int64_t rows = x.size() / cols;
      for (int64_t i = 0; i < rows; ++i) {
        double* row = &n.value.data[i * cols];
        const double m = *std::max_element(row, row + cols);
        double s = 0.0;
        for (int64_t j = 0; j < cols; ++j) s += (row[j] = std::exp(row[j] - m));
        for (int64_t j = 0; j < cols; ++j) row[j] /= s;
      }
      break;
    }
    case Op::log_fn: {
      n.value = in(0);
      for (double& x : n.value.data) x = std::log(x);
      break;
    }
    case Op::clamp_fn: {
      n.value = in(0);
      for (double& x : n.value.data) x = std::min(n.b, std::max(n.a, x));
      break;
    }
    case Op::dropout: {
      n.value = in(0);
      if (train_ && n.a > 0.0) {
        n.aux = Tensor::zeros(n.shape);
        const double keep = 1.0 - n.a;
        for (int64_t i = 0; i < n.value.size(); ++i) {
          const double m = rng_.uniform01() >= n.a ? 1.0 / keep : 0.0;
          n.aux.data[i] = m;
          n.value.data[i] *= m;
        }
      } else {
        n.aux = Tensor();
      }
      break;
    }
    case Op::gauss_noise: {
      n.value = in(0);
      if (train_ && n.a > 0.0)
        for (double& x : n.value.data) x += n.a * rng_.normal();
      break;
    }
    case Op::sum_all: {
      double s = 0.0;
      for (double x : in(0).data) s += x;
      n.value = Tensor::scalar(s);
      break;
    }
    case Op::mean_all: {
      double s = 0.0;
      for (double x : in(0).data) s += x;
      n.value = Tensor::scalar(s / static_cast<double>(in(0).size()));
      break;
    }
    case Op::reshape: {
      n.value = in(0);
      n.value.shape = n.shape;
      break;
    }
  }
}

std::map<std::string, Tensor> Graph::evaluate(
    const std::map<std::string, Tensor>& inputs) {
  // One stream per evaluation: stochastic masks depend only on the seed and
  // the graph structure, never on how often the graph has run before.
  rng_ = Rng(seed_);

  std::map<std::string, bool> used;
  for (auto& n : nodes_) {
    if (n.op == Op::input) {
      auto it = inputs.find(n.name);
      if (it == inputs.end())
        throw std::runtime_error("unbound input: " + n.name);
      if (it->second.shape != n.shape)
        throw std::runtime_error("input " + n.name + ": expected shape " +
                                 shape_str(n.shape) + ", got " +
                                 shape_str(it->second.shape));
      n.value = it->second;
      used[n.name] = true;
    }
  }
  for (const auto& [name, tensor] : inputs)
    if (!used.count(name))
      throw std::runtime_error("unknown input: " + name);

  for (size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    forward(n);
    for (double x : n.value.data)
      if (!std::isfinite(x))
        fail(static_cast<NodeId>(i), "non-finite value in forward pass");
  }
  evaluated_ = true;

  std::map<std::string, Tensor> out;
  for (const auto& [id, name] : outputs_) out[name] = nodes_[id].value;
  return out;
}

void Graph::backward(const Node& n) {
  auto in_val = [&](size_t i) -> const Tensor& {
    return nodes_[n.inputs[i]].value;
  };
  auto in_grad = [&](size_t i) -> Tensor& {
    return nodes_[n.inputs[i]].grad;
  };
  const Tensor& g = n.grad;
  switch (n.op) {
    case Op::input:
    case Op::param:
    case Op::constant:
      break;
    case Op::add:
      for (int64_t i = 0; i < g.size(); ++i) {
        in_grad(0).data[i] += g.data[i];
        in_grad(1).data[i] += g.data[i];
      }
      break;
    case Op::sub:
      for (int64_t i = 0; i < g.size(); ++i) {
        in_grad(0).data[i] += g.data[i];
        in_grad(1).data[i] -= g.data[i];
      }
      break;
    case Op::mul:
      for (int64_t i = 0; i < g.size(); ++i) {
        in_grad(0).data[i] += g.data[i] * in_val(1).data[i];
        in_grad(1).data[i] += g.data[i] * in_val(0).data[i];
      }
      break;
    case Op::matmul: {
      const Tensor& a = in_val(0);
      const Tensor& b = in_val(1);
      Tensor& da = in_grad(0);
      Tensor& db = in_grad(1);
      const int64_t r = a.shape[0], k = a.shape[1], c = b.shape[1];
      // dA = dC · B^T
      for (int64_t i = 0; i < r; ++i)
        for (int64_t p = 0; p < k; ++p) {
          double s = 0.0;
          const double* grow = &g.data[i * c];
          const double* brow = &b.data[p * c];
          for (int64_t j = 0; j < c; ++j) s += grow[j] * brow[j];
          da.data[i * k + p] += s;
        }
      // dB = A^T · dC
      for (int64_t p = 0; p < k; ++p)
        for (int64_t i = 0; i < r; ++i) {
          const double av = a.data[i * k + p];
          if (av == 0.0) continue;
          const double* grow = &g.data[i * c];
          double* drow = &db.data[p * c];
          for (int64_t j = 0; j < c; ++j) drow[j] += av * grow[j];
        }
      break;
    }
    case Op::add_row: {
      const int64_t r = n.shape[0], c = n.shape[1];
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < c; ++j) {
          in_grad(0).data[i * c + j] += g.data[i * c + j];
          in_grad(1).data[j] += g.data[i * c + j];
        }
      break;
    }
    case Op::affine:
      for (int64_t i = 0; i < g.size(); ++i)
        in_grad(0).data[i] += n.a * g.data[i];
      break;
    case Op::concat: {
      int64_t outer = 1, inner = 1;
      for (int d = 0; d < n.axis; ++d) outer *= n.shape[d];
      for (size_t d = n.axis + 1; d < n.shape.size(); ++d) inner *= n.shape[d];
      const int64_t total_axis = n.shape[n.axis];
      int64_t offset = 0;
      for (size_t part = 0; part < n.inputs.size(); ++part) {
        Tensor& dp = in_grad(part);
        const int64_t len = dp.shape[n.axis];
        for (int64_t o = 0; o < outer; ++o) {
          const double* src = &g.data[(o * total_axis + offset) * inner];
          double* dst = &dp.data[o * len * inner];
          for (int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
        }
        offset += len;
      }
      break;
    }
    case Op::slice: {
      Tensor& dx = in_grad(0);
      int64_t outer = 1, inner = 1;
      for (int d = 0; d < n.axis; ++d) outer *= dx.shape[d];
      for (size_t d = n.axis + 1; d < dx.shape.size(); ++d) inner *= dx.shape[d];
      const int64_t total_axis = dx.shape[n.axis];
      for (int64_t o = 0; o < outer; ++o) {
        const double* src = &g.data[o * n.len * inner];
        double* dst = &dx.data[(o * total_axis + n.start) * inner];
        for (int64_t i = 0; i < n.len * inner; ++i) dst[i] += src[i];
      }
      break;
    }
    case Op::tanh_fn:
      for (int64_t i = 0; i < g.size(); ++i) {
        const double y = n.value.data[i];
        in_grad(0).data[i] += g.data[i] * (1.0 - y * y);
      }
      break;
    case Op::sigmoid_fn:
      for (int64_t i = 0; i < g.size(); ++i) {
        const double y = n.value.data[i];
        in_grad(0).data[i] += g.data[i] * y * (1.0 - y);
      }
      break;
    case Op::softmax_fn: {
      const int64_t cols = n.shape.back();
      const int64_t rows = n.value.size() / cols;
      for (int64_t i = 0; i < rows; ++i) {
        const double* y = &n.value.data[i * cols];
        const double* dy = &g.data[i * cols];
        double dot = 0.0;
        for (int64_t j = 0; j < cols; ++j) dot += dy[j] * y[j];
        double* dx = &in_grad(0).data[i * cols];
        for (int64_t j = 0; j < cols; ++j) dx[j] += y[j] * (dy[j] - dot);
      }
      break;
    }
    case Op::log_fn:
      for (int64_t i = 0; i < g.size(); ++i)
        in_grad(0).data[i] += g.data[i] / in_val(0).data[i];
      break;
    case Op::clamp_fn:
      for (int64_t i = 0; i < g.size(); ++i) {
        const double x = in_val(0).data[i];
        if (x >= n.a && x <= n.b) in_grad(0).data[i] += g.data[i];
      }
      break;
    case Op::dropout:
      if (!n.aux.data.empty())
        for (int64_t i = 0; i < g.size(); ++i)
          in_grad(0).data[i] += g.data[i] * n.aux.data[i];
      else
        for (int64_t i = 0; i < g.size(); ++i)
          in_grad(0).data[i] += g.data[i];
      break;
    case Op::gauss_noise:
      for (int64_t i = 0; i < g.size(); ++i)
        in_grad(0).data[i] += g.data[i];
      break;
    case Op::sum_all:
      for (double& dx : in_grad(0).data) dx += g.data[0];
      break;
    case Op::mean_all: {
      const double d = g.data[0] / static_cast<double>(in_val(0).size());
      for (double& dx : in_grad(0).data) dx += d;
      break;
    }
    case Op::reshape:
      for (int64_t i = 0; i < g.size(); ++i)
        in_grad(0).data[i] += g.data[i];
      break;
  }
}

std::map<std::string, Tensor> Graph::gradients(NodeId scalar_output,
                                               const std::vector<NodeId>& wrt) {
  if (!evaluated_)
    throw std::runtime_error("gradients() before evaluate()");
  const Node& out = node(scalar_output);
  if (!out.shape.empty())
    throw std::runtime_error("gradients: output " + node_label(scalar_output) +
                             " has shape " + shape_str(out.shape) +
                             ", expected a scalar");

  for (auto& n : nodes_) n.grad = Tensor::zeros(n.shape);
  nodes_[scalar_output].grad.data[0] = 1.0;
  for (NodeId id = scalar_output; id >= 0; --id) backward(nodes_[id]);

  std::vector<NodeId> targets = wrt.empty() ? param_nodes() : wrt;
  std::map<std::string, Tensor> out_map;
  for (NodeId id : targets) out_map[node_label(id)] = node(id).grad;
  return out_map;
}

std::map<std::string, Tensor> fd_gradients(
    Graph& graph, NodeId scalar_output,
    const std::map<std::string, Tensor>& inputs, double eps) {
  std::map<std::string, Tensor> out;
  for (NodeId id : graph.param_nodes()) {
    Tensor* storage = graph.param_storage(id);
    Tensor fd = Tensor::zeros(storage->shape);
    for (int64_t i = 0; i < storage->size(); ++i) {
      const double saved = storage->data[i];
      storage->data[i] = saved + eps;
      graph.evaluate(inputs);
      const double hi = graph.value(scalar_output).data[0];
      storage->data[i] = saved - eps;
      graph.evaluate(inputs);
      const double lo = graph.value(scalar_output).data[0];
      storage->data[i] = saved;
      fd.data[i] = (hi - lo) / (2.0 * eps);
    }
    out[graph.node_label(id)] = std::move(fd);
  }
  // Leave the graph evaluated at the unperturbed point.
  graph.evaluate(inputs);
  return out;
}

GradCheckReport compare_gradients(const std::map<std::string, Tensor>& analytic,
                                  const std::map<std::string, Tensor>& fd,
                                  double tolerance) {
  GradCheckReport report;
  for (const auto& [name, g_fd] : fd) {
    const auto it = analytic.find(name);
    if (it == analytic.end())
      throw std::runtime_error("gradient check: no analytic gradient for " +
                               name);
    const Tensor& g_ad = it->second;
    GradCheckEntry entry;
    entry.param = name;
    for (int64_t i = 0; i < g_fd.size(); ++i) {
      const double num = std::fabs(g_ad.data[i] - g_fd.data[i]);
      const double den =
          std::max(1e-8, std::fabs(g_ad.data[i]) + std::fabs(g_fd.data[i]));
      entry.max_rel_err = std::max(entry.max_rel_err, num / den);
    }
    entry.ok = entry.max_rel_err < tolerance;
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.ok = report.ok && entry.ok;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

GradCheckReport check_gradients(Graph& graph, NodeId scalar_output,
                                const std::map<std::string, Tensor>& inputs,
                                double tolerance, double eps) {
  graph.evaluate(inputs);
  const auto analytic = graph.gradients(scalar_output);
  const auto fd = fd_gradients(graph, scalar_output, inputs, eps);
  return compare_gradients(analytic, fd, tolerance);
}

namespace {

const char* op_name(int op) {
  static const char* names[] = {
      "input",   "param",   "constant", "add",     "sub",     "mul",
      "matmul",  "add_row", "affine",   "concat",  "slice",   "tanh",
      "sigmoid", "softmax", "log",      "clamp",   "dropout", "gauss_noise",
      "sum",     "mean",    "reshape"};
  return names[op];
}

}  // namespace

}  // namespace affect
