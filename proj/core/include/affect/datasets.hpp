#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "affect/lexicon.hpp"
#include "affect/text.hpp"

namespace affect {

enum class TaskId { ei_reg, ei_oc, v_reg, v_oc, e_c, pretrain };

TaskId parse_task_id(const std::string& name);
std::string task_id_name(TaskId task);

// Canonical emotion label order for the multilabel task.
inline constexpr std::array<const char*, 11> kEmotionLabels = {
    "anger",     "anticipation", "disgust",  "fear",
    "joy",       "love",         "optimism", "pessimism",
    "sadness",   "surprise",     "trust"};

// Emotions that have their own intensity datasets.
inline constexpr std::array<const char*, 4> kIntensityEmotions = {
    "anger", "fear", "joy", "sadness"};

// One annotated tweet. Which target field is meaningful depends on the
// task: scalar for EI-reg/V-reg in [0,1]; ordinal class for EI-oc (0..3),
// V-oc (0..6, encoding -3..3) and pretraining sentiment (0..2); labels for
// E-c.
struct LabeledExample {
  std::string id;
  std::string text;
  double scalar = 0.0;
  int64_t ordinal = 0;
  std::bitset<11> labels;
};

struct TaskDataset {
  TaskId task = TaskId::ei_reg;
  std::string emotion;  // EI tasks only: anger | fear | joy | sadness
  std::vector<LabeledExample> examples;

  int64_t size() const { return static_cast<int64_t>(examples.size()); }
};

// Number of ordinal classes for classification-style tasks.
int64_t task_class_count(TaskId task);

// Tab-separated formats, one example per line, optional header line whose
// first field is "ID":
//   EI-reg / V-reg:  id  text  dimension  score
//   EI-oc  / V-oc:   id  text  dimension  class_int   (V-oc: -3..3)
//   E-c:             id  text  11 0/1 columns in canonical label order
//   pretrain:        id  text  negative|neutral|positive
TaskDataset load_dataset(const std::string& path, TaskId task);
void save_dataset(const TaskDataset& dataset, const std::string& path);

// --- Synthetic data for tests -------------------------------------------

struct SynthAffectConfig {
  int64_t clusters = 2;
  int64_t words_per_cluster = 20;
  int64_t docs = 500;
  uint64_t seed = 1;
};

// Documents whose words co-occur within planted clusters, with per-word
// affect norms planted per cluster and a small annotated subset exposed as
// seed lexica. Deterministic per seed.
struct SynthAffectCorpus {
  std::vector<std::vector<Token>> corpus;
  AffectiveLexicon planted;
  std::vector<SeedLexicon> seed_lexica;  // one per canonical dimension
  std::vector<std::string> seed_words;   // the annotated subset
  std::vector<std::vector<std::string>> cluster_words;
};

SynthAffectCorpus synth_affect_corpus(const SynthAffectConfig& cfg);

// Writes corpus.txt (one document per line), <dimension>.tsv seed files and
// planted.tsv into dir.
void write_affect_corpus(const SynthAffectCorpus& synth,
                         const std::string& dir);

// Learnable toy datasets: the signal is the fraction of "strong" tokens in
// the text (per-label cue words for E-c). Deterministic per seed.
TaskDataset synth_task_dataset(TaskId task, int64_t size, uint64_t seed);

}  // namespace affect
