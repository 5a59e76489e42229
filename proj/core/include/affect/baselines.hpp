// Feature baselines: unigram bag-of-words with TF-IDF weighting, the
// embedding-centroid representation, and the centroid extended with the
// ten affective dimensions — each fed to a linear max-margin model
// (one-vs-rest hinge for classification, epsilon-insensitive loss for the
// regression subtasks).
#pragma once

#include <bitset>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "affect/embeddings.hpp"
#include "affect/graph.hpp"
#include "affect/lexicon.hpp"
#include "affect/text.hpp"

namespace affect {

enum class FeatureKind { bow, nbow, nbow_affective };

FeatureKind parse_feature_kind(const std::string& name);
std::string feature_kind_name(FeatureKind kind);

// Document-frequency statistics fitted on the training split only, so
// test-time features never leak test vocabulary.
struct TfidfModel {
  Vocabulary vocab;
  std::vector<double> idf;  // aligned with vocab indices
  int64_t n_docs = 0;
};

// idf = ln((1 + n_docs) / (1 + df)) + 1. Words appearing in every document
// get idf 1; the reserved <unk>/<pad> slots never contribute.
TfidfModel fit_tfidf(const std::vector<std::vector<Token>>& docs);

// Dense tf*idf vector over the training vocabulary, L2-normalized (an
// empty or fully unseen document yields the zero vector). Unseen words are
// ignored, not mapped to <unk>.
std::vector<double> tfidf_features(const TfidfModel& model,
                                   const std::vector<Token>& tokens);

// Centroid of the in-vocabulary embedding rows; with a lexicon the rows
// are extended by the word's ten affective scores before averaging, so the
// output gains ten dimensions. An all-OOV input yields the zero vector.
std::vector<double> nbow_features(const std::vector<Token>& tokens,
                                  const EmbeddingMatrix& embeddings,
                                  const AffectiveLexicon* lexicon = nullptr);

struct SvmConfig {
  double C = 0.6;        // scales the loss term against ||w||^2 / 2
  double epsilon = 0.1;  // insensitive tube for the regression variant
  int64_t epochs = 300;
  double lr = 0.5;  // initial step; halved whenever a step would not descend
};

// classifier: argmax over one-vs-rest decision values; multilabel: one
// independent binary decision per label; regressor: single linear score.
enum class LinearKind { classifier, multilabel, regressor };

struct BaselineModel {
  FeatureKind source = FeatureKind::bow;
  LinearKind kind = LinearKind::classifier;
  int64_t classes = 0;  // 1 for the regressor
  Tensor w;             // {classes, dim}
  Tensor b;             // {classes}
  // Populated only for bow features; empty otherwise.
  TfidfModel tfidf;

  int64_t dim() const { return w.shape.empty() ? 0 : w.shape[1]; }
};

// Objectives minimized by the trainers; exposed so descent is testable.
double hinge_objective(const std::vector<double>& w, double b,
                       const std::vector<std::vector<double>>& X,
                       const std::vector<int>& targets, double C);
double epsilon_objective(const std::vector<double>& w, double b,
                         const std::vector<std::vector<double>>& X,
                         const std::vector<double>& y, double C,
                         double epsilon);

// One binary L2-regularized hinge problem (targets in {-1,+1}), solved by
// deterministic full-batch sub-gradient descent from zero initialization;
// any step that would increase the objective is retried with a halved
// step size, so the recorded objective never increases. The bias is not
// regularized.
std::pair<std::vector<double>, double> train_binary_hinge(
    const std::vector<std::vector<double>>& X, const std::vector<int>& targets,
    const SvmConfig& cfg, std::vector<double>* objective_history = nullptr);

// One-vs-rest classifier over labels 0..classes-1. Fewer than two distinct
// labels in y is an error.
BaselineModel train_linear_svm(const std::vector<std::vector<double>>& X,
                               const std::vector<int64_t>& y, int64_t classes,
                               const SvmConfig& cfg);

// Eleven independent binary classifiers, one per emotion label.
BaselineModel train_multilabel_svm(const std::vector<std::vector<double>>& X,
                                   const std::vector<std::bitset<11>>& y,
                                   const SvmConfig& cfg);

// Epsilon-insensitive linear regression; y must lie in [0,1].
BaselineModel train_linear_svr(const std::vector<std::vector<double>>& X,
                               const std::vector<double>& y,
                               const SvmConfig& cfg);

// Predictions. Feature dimension mismatches are an error; classification
// ties resolve to the lowest class index; regression scores are clipped
// to [0,1].
int64_t predict_class(const BaselineModel& model,
                      const std::vector<double>& x);
std::bitset<11> predict_labels(const BaselineModel& model,
                               const std::vector<double>& x);
double predict_score(const BaselineModel& model, const std::vector<double>& x);

// Same archive container as model checkpoints, kind "baseline".
void save_baseline(const BaselineModel& model, const std::string& path);
BaselineModel load_baseline(const std::string& path);

}  // namespace affect
