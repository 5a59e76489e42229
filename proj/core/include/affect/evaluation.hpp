// Metrics and reporting: Pearson correlation for the regression tasks,
// accuracy for the ordinal tasks, multi-label Jaccard for E-c, the
// multi-run averaging protocol, the paired sentence bias audit, and
// attention heat-map rendering.
#pragma once

#include <bitset>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "affect/datasets.hpp"
#include "affect/model.hpp"

namespace affect {

// Sample Pearson correlation. Requires at least two points and nonzero
// variance on both sides; a constant input is an error.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Fraction of positions where pred == gold. Aligned, non-empty inputs.
double accuracy(const std::vector<int64_t>& pred,
                const std::vector<int64_t>& gold);

// Mean over examples of |pred & gold| / |pred | gold|, with the both-empty
// case counting as 1 (perfect agreement on "no labels").
double jaccard_multilabel(const std::vector<std::bitset<11>>& pred,
                          const std::vector<std::bitset<11>>& gold);

// Headline metric per task: "pearson" (EI-reg, V-reg), "accuracy" (EI-oc,
// V-oc, pretrain-sentiment), "jaccard" (E-c).
std::string task_metric_name(TaskId task);

// Runs the model on every example (deterministic eval mode) and computes
// the task's headline metric against the gold labels. The model head must
// match the dataset's task.
double evaluate_model(ModelParams& params, const TaskDataset& data);

struct EvalReport {
  TaskId task = TaskId::ei_reg;
  std::string metric;
  double value = 0.0;               // mean of run_values
  std::vector<double> run_values;   // one entry per run
};

// Averaging protocol: invokes run_metric with seeds seed+0 .. seed+runs-1
// and reports the mean plus per-run values. A failing run aborts the whole
// evaluation with a diagnostic naming the run index.
EvalReport averaged_eval(TaskId task,
                         const std::function<double(uint64_t)>& run_metric,
                         uint64_t seed, int64_t runs = 10);

// CSV "task,metric,value,run_values..." — one row per report, per-run
// values appended as extra columns.
void save_report(const std::vector<EvalReport>& reports,
                 const std::string& path);

// A pair of sentences that differ only in social context, grouped by a
// free-form tag (e.g. "gender"). Loaded from TSV "id<TAB>sentence_a<TAB>
// sentence_b<TAB>tag"; an optional header line starting with "id" is
// skipped.
struct BiasPair {
  std::string id;
  std::string sentence_a;
  std::string sentence_b;
  std::string tag;
};

std::vector<BiasPair> load_bias_pairs(const std::string& path);

struct BiasResult {
  std::string tag;
  int64_t pair_count = 0;
  double avg_diff = 0.0;  // mean of score(a) - score(b)
  double p_value = 1.0;   // two-sided paired sign-flip permutation test
};

// Two-sided p-value of the paired sign-flip permutation test on the mean
// difference: exact enumeration of all 2^n sign patterns when n <= 20,
// otherwise 100,000 seeded resamples with the add-one estimate
// (1 + hits) / (1 + draws). Always in (0, 1].
double sign_flip_p_value(const std::vector<double>& diffs, uint64_t seed);

// Scores both sentences of every pair with `score` and reports, per tag in
// lexicographic order, the average difference and its permutation p-value.
std::vector<BiasResult> bias_eval(
    const std::vector<BiasPair>& pairs,
    const std::function<double(const std::string&)>& score, uint64_t seed);

enum class HeatmapFormat { html, ansi };

// One visual span per token with intensity a_i / max(a). The HTML variant
// is a self-contained document; the ANSI variant colors token backgrounds
// for terminals. Byte output depends only on (tokens, weights, format).
std::string render_heatmap(const std::vector<std::string>& tokens,
                           const std::vector<double>& weights,
                           HeatmapFormat format);

}  // namespace affect
