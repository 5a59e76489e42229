#include "affect/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "affect/archive.hpp"
#include "affect/util.hpp"

namespace affect {

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "bow") return FeatureKind::bow;
  if (name == "nbow") return FeatureKind::nbow;
  if (name == "nbow-affective") return FeatureKind::nbow_affective;
  throw UserError("unknown feature kind '" + name +
                  "' (expected bow, nbow, or nbow-affective)");
}

std::string feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::bow:
      return "bow";
    case FeatureKind::nbow:
      return "nbow";
    case FeatureKind::nbow_affective:
      return "nbow-affective";
  }
  throw std::runtime_error("bad feature kind");
}

namespace {

bool reserved_index(int64_t idx) {
  return idx < 0 || idx == Vocabulary::unk_index() ||
         idx == Vocabulary::pad_index();
}

std::string linear_kind_name(LinearKind kind) {
  switch (kind) {
    case LinearKind::classifier:
      return "classifier";
    case LinearKind::multilabel:
      return "multilabel";
    case LinearKind::regressor:
      return "regressor";
  }
  throw std::runtime_error("bad linear kind");
}

LinearKind parse_linear_kind(const std::string& name) {
  if (name == "classifier") return LinearKind::classifier;
  if (name == "multilabel") return LinearKind::multilabel;
  if (name == "regressor") return LinearKind::regressor;
  throw UserError("unknown linear model kind '" + name + "'");
}

void check_features(const std::vector<std::vector<double>>& X) {
  if (X.empty()) throw UserError("empty feature matrix");
  for (const auto& row : X)
    if (row.size() != X.front().size())
      throw UserError("inconsistent feature dimensions");
  if (X.front().empty()) throw UserError("zero-dimensional features");
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TfidfModel fit_tfidf(const std::vector<std::vector<Token>>& docs) {
  if (docs.empty()) throw UserError("empty training corpus");
  TfidfModel model;
  model.vocab = Vocabulary::build(docs, 1);
  model.n_docs = static_cast<int64_t>(docs.size());
  std::vector<int64_t> df(model.vocab.size(), 0);
  for (const auto& doc : docs) {
    std::set<int64_t> seen;
    for (const auto& token : doc) {
      const int64_t idx = model.vocab.find(token.surface);
      if (!reserved_index(idx)) seen.insert(idx);
    }
    for (int64_t idx : seen) ++df[idx];
  }
  model.idf.resize(model.vocab.size());
  for (int64_t i = 0; i < model.vocab.size(); ++i)
    model.idf[i] = std::log(static_cast<double>(1 + model.n_docs) /
                            static_cast<double>(1 + df[i])) +
                   1.0;
  return model;
}

std::vector<double> tfidf_features(const TfidfModel& model,
                                   const std::vector<Token>& tokens) {
  std::vector<double> vec(model.vocab.size(), 0.0);
  for (const auto& token : tokens) {
    const int64_t idx = model.vocab.find(token.surface);
    if (!reserved_index(idx)) vec[idx] += 1.0;  // raw term frequency
  }
  double sq = 0.0;
  for (size_t i = 0; i < vec.size(); ++i) {
    vec[i] *= model.idf[i];
    sq += vec[i] * vec[i];
  }
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : vec) v *= inv;
  }
  return vec;
}

std::vector<double> nbow_features(const std::vector<Token>& tokens,
                                  const EmbeddingMatrix& embeddings,
                                  const AffectiveLexicon* lexicon) {
  const int64_t base = embeddings.dim;
  const int64_t dim = base + (lexicon ? 10 : 0);
  std::vector<double> acc(dim, 0.0);
  int64_t count = 0;
  for (const auto& token : tokens) {
    const int64_t idx = embeddings.vocab.find(token.surface);
    if (reserved_index(idx)) continue;
    ++count;
    const double* row = embeddings.row_ptr(idx);
    for (int64_t d = 0; d < base; ++d) acc[d] += row[d];
    if (lexicon) {
      const auto it = lexicon->norms.find(token.surface);
      if (it != lexicon->norms.end())
        for (int64_t d = 0; d < 10; ++d) acc[base + d] += it->second[d];
    }
  }
  if (count > 0)
    for (double& v : acc) v /= static_cast<double>(count);
  return acc;
}

double hinge_objective(const std::vector<double>& w, double b,
                       const std::vector<std::vector<double>>& X,
                       const std::vector<int>& targets, double C) {
  double obj = 0.5 * dot(w, w);
  for (size_t i = 0; i < X.size(); ++i) {
    const double margin = targets[i] * (dot(w, X[i]) + b);
    obj += C * std::max(0.0, 1.0 - margin);
  }
  return obj;
}

double epsilon_objective(const std::vector<double>& w, double b,
                         const std::vector<std::vector<double>>& X,
                         const std::vector<double>& y, double C,
                         double epsilon) {
  double obj = 0.5 * dot(w, w);
  for (size_t i = 0; i < X.size(); ++i) {
    const double residual = std::abs(dot(w, X[i]) + b - y[i]);
    obj += C * std::max(0.0, residual - epsilon);
  }
  return obj;
}

namespace {

// Shared descent loop: full-batch sub-gradient steps from zero
// initialization, with the step size halved until the objective does not
// increase. The recorded objective sequence is therefore non-increasing.
template <typename Subgradient, typename Objective>
std::pair<std::vector<double>, double> descend(
    int64_t dim, const SvmConfig& cfg, const Subgradient& subgradient,
    const Objective& objective, std::vector<double>* history) {
  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  double obj = objective(w, b);
  double lr = cfg.lr;
  std::vector<double> gw(dim);
  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double gb = 0.0;
    std::fill(gw.begin(), gw.end(), 0.0);
    subgradient(w, b, gw, gb);
    while (lr > 1e-12) {
      std::vector<double> w2(dim);
      for (int64_t d = 0; d < dim; ++d) w2[d] = w[d] - lr * gw[d];
      const double b2 = b - lr * gb;
      const double obj2 = objective(w2, b2);
      if (obj2 <= obj) {
        w = std::move(w2);
        b = b2;
        obj = obj2;
        break;
      }
      lr *= 0.5;
    }
    if (history) history->push_back(obj);
  }
  return {std::move(w), b};
}

}  // namespace

std::pair<std::vector<double>, double> train_binary_hinge(
    const std::vector<std::vector<double>>& X, const std::vector<int>& targets,
    const SvmConfig& cfg, std::vector<double>* objective_history) {
  check_features(X);
  if (targets.size() != X.size()) throw UserError("target count mismatch");
  for (int t : targets)
    if (t != 1 && t != -1) throw UserError("binary targets must be +1 or -1");
  if (cfg.C < 0.0) throw UserError("C must be >= 0");

  const int64_t dim = static_cast<int64_t>(X.front().size());
  const auto subgradient = [&](const std::vector<double>& w, double b,
                               std::vector<double>& gw, double& gb) {
    for (int64_t d = 0; d < dim; ++d) gw[d] = w[d];  // unregularized bias
    for (size_t i = 0; i < X.size(); ++i) {
      if (targets[i] * (dot(w, X[i]) + b) < 1.0) {
        for (int64_t d = 0; d < dim; ++d)
          gw[d] -= cfg.C * targets[i] * X[i][d];
        gb -= cfg.C * targets[i];
      }
    }
  };
  const auto objective = [&](const std::vector<double>& w, double b) {
    return hinge_objective(w, b, X, targets, cfg.C);
  };
  return descend(dim, cfg, subgradient, objective, objective_history);
}

BaselineModel train_linear_svm(const std::vector<std::vector<double>>& X,
                               const std::vector<int64_t>& y, int64_t classes,
                               const SvmConfig& cfg) {
  check_features(X);
  if (y.size() != X.size()) throw UserError("label count mismatch");
  if (classes < 2) throw UserError("classifier needs at least 2 classes");
  std::set<int64_t> distinct;
  for (int64_t label : y) {
    if (label < 0 || label >= classes)
      throw UserError("label " + std::to_string(label) + " outside [0," +
                      std::to_string(classes) + ")");
    distinct.insert(label);
  }
  if (distinct.size() < 2)
    throw UserError("training labels contain a single class");

  const int64_t dim = static_cast<int64_t>(X.front().size());
  BaselineModel model;
  model.kind = LinearKind::classifier;
  model.classes = classes;
  model.w = Tensor::zeros({classes, dim});
  model.b = Tensor::zeros({classes});
  std::vector<int> targets(X.size());
  for (int64_t c = 0; c < classes; ++c) {
    for (size_t i = 0; i < y.size(); ++i) targets[i] = y[i] == c ? 1 : -1;
    const auto [w, b] = train_binary_hinge(X, targets, cfg);
    std::copy(w.begin(), w.end(), &model.w.data[c * dim]);
    model.b.data[c] = b;
  }
  return model;
}

BaselineModel train_multilabel_svm(const std::vector<std::vector<double>>& X,
                                   const std::vector<std::bitset<11>>& y,
                                   const SvmConfig& cfg) {
  check_features(X);
  if (y.size() != X.size()) throw UserError("label count mismatch");
  const int64_t dim = static_cast<int64_t>(X.front().size());
  BaselineModel model;
  model.kind = LinearKind::multilabel;
  model.classes = 11;
  model.w = Tensor::zeros({11, dim});
  model.b = Tensor::zeros({11});
  std::vector<int> targets(X.size());
  for (int64_t c = 0; c < 11; ++c) {
    for (size_t i = 0; i < y.size(); ++i) targets[i] = y[i][c] ? 1 : -1;
    const auto [w, b] = train_binary_hinge(X, targets, cfg);
    std::copy(w.begin(), w.end(), &model.w.data[c * dim]);
    model.b.data[c] = b;
  }
  return model;
}

BaselineModel train_linear_svr(const std::vector<std::vector<double>>& X,
                               const std::vector<double>& y,
                               const SvmConfig& cfg) {
  check_features(X);
  if (y.size() != X.size()) throw UserError("target count mismatch");
  for (double v : y)
    if (!(v >= 0.0 && v <= 1.0))
      throw UserError("regression targets must lie in [0,1]");
  if (cfg.epsilon < 0.0) throw UserError("epsilon must be >= 0");

  const int64_t dim = static_cast<int64_t>(X.front().size());
  const auto subgradient = [&](const std::vector<double>& w, double b,
                               std::vector<double>& gw, double& gb) {
    for (int64_t d = 0; d < dim; ++d) gw[d] = w[d];
    for (size_t i = 0; i < X.size(); ++i) {
      const double residual = dot(w, X[i]) + b - y[i];
      if (std::abs(residual) > cfg.epsilon) {
        const double sign = residual > 0.0 ? 1.0 : -1.0;
        for (int64_t d = 0; d < dim; ++d) gw[d] += cfg.C * sign * X[i][d];
        gb += cfg.C * sign;
      }
    }
  };
  const auto objective = [&](const std::vector<double>& w, double b) {
    return epsilon_objective(w, b, X, y, cfg.C, cfg.epsilon);
  };
  const auto [w, b] = descend(dim, cfg, subgradient, objective, nullptr);

  BaselineModel model;
  model.kind = LinearKind::regressor;
  model.classes = 1;
  model.w = Tensor::zeros({1, dim});
  std::copy(w.begin(), w.end(), model.w.data.begin());
  model.b = Tensor::full({1}, {b});
  return model;
}

namespace {

std::vector<double> decision_values(const BaselineModel& model,
                                    const std::vector<double>& x) {
  if (static_cast<int64_t>(x.size()) != model.dim())
    throw UserError("feature dimension " + std::to_string(x.size()) +
                    " does not match model dimension " +
                    std::to_string(model.dim()));
  std::vector<double> d(model.classes);
  for (int64_t c = 0; c < model.classes; ++c) {
    double s = model.b.data[c];
    for (int64_t i = 0; i < model.dim(); ++i)
      s += model.w.data[c * model.dim() + i] * x[i];
    d[c] = s;
  }
  return d;
}

}  // namespace

int64_t predict_class(const BaselineModel& model,
                      const std::vector<double>& x) {
  if (model.kind != LinearKind::classifier)
    throw UserError("model is not a classifier");
  const auto d = decision_values(model, x);
  int64_t best = 0;
  for (size_t c = 1; c < d.size(); ++c)
    if (d[c] > d[best]) best = static_cast<int64_t>(c);
  return best;
}

std::bitset<11> predict_labels(const BaselineModel& model,
                               const std::vector<double>& x) {
  if (model.kind != LinearKind::multilabel)
    throw UserError("model is not a multilabel classifier");
  const auto d = decision_values(model, x);
  std::bitset<11> out;
  for (size_t c = 0; c < d.size() && c < 11; ++c)
    if (d[c] > 0.0) out.set(c);
  return out;
}

double predict_score(const BaselineModel& model, const std::vector<double>& x) {
  if (model.kind != LinearKind::regressor)
    throw UserError("model is not a regressor");
  return std::clamp(decision_values(model, x)[0], 0.0, 1.0);
}

void save_baseline(const BaselineModel& model, const std::string& path) {
  Archive a;
  a.kind = "baseline";
  a.meta = {
      {"source", feature_kind_name(model.source)},
      {"kind", linear_kind_name(model.kind)},
      {"classes", std::to_string(model.classes)},
      {"n_docs", std::to_string(model.tfidf.n_docs)},
  };
  a.tensors.emplace_back("w", model.w);
  a.tensors.emplace_back("b", model.b);
  if (model.source == FeatureKind::bow) {
    a.has_vocab = true;
    a.vocab = model.tfidf.vocab;
    Tensor idf;
    idf.shape = {static_cast<int64_t>(model.tfidf.idf.size())};
    idf.data = model.tfidf.idf;
    a.tensors.emplace_back("idf", std::move(idf));
  }
  save_archive(a, path);
}

BaselineModel load_baseline(const std::string& path) {
  const Archive a = load_archive(path, "baseline");
  BaselineModel model;
  model.source = parse_feature_kind(a.meta_value("source"));
  model.kind = parse_linear_kind(a.meta_value("kind"));
  model.classes = parse_int(a.meta_value("classes"), path);
  if (model.classes < 1) throw UserError(path + ": bad class count");
  model.w = a.tensor("w");
  model.b = a.tensor("b");
  if (model.w.rank() != 2 || model.w.shape[0] != model.classes)
    throw UserError(path + ": weight tensor shape mismatch");
  if (model.b.shape != std::vector<int64_t>{model.classes})
    throw UserError(path + ": bias tensor shape mismatch");
  if (model.source == FeatureKind::bow) {
    if (!a.has_vocab) throw UserError(path + ": bow model lacks a vocabulary");
    model.tfidf.vocab = a.vocab;
    model.tfidf.n_docs = parse_int(a.meta_value("n_docs"), path);
    const Tensor idf = a.tensor("idf");
    if (idf.shape != std::vector<int64_t>{model.tfidf.vocab.size()})
      throw UserError(path + ": idf tensor shape mismatch");
    model.tfidf.idf = idf.data;
  }
  return model;
}

}  // namespace affect
