#include "affect/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "affect/rng.hpp"
#include "affect/util.hpp"

namespace affect {

namespace {

constexpr const char* kTaskNames[] = {"EI-reg", "EI-oc", "V-reg",
                                      "V-oc",   "E-c",   "pretrain-sentiment"};

bool is_intensity_emotion(const std::string& s) {
  return std::find(kIntensityEmotions.begin(), kIntensityEmotions.end(), s) !=
         kIntensityEmotions.end();
}

double round6(double x) { return std::round(x * 1e6) / 1e6; }

void check_plain_text(const std::string& text, const std::string& where) {
  if (text.find('\t') != std::string::npos ||
      text.find('\n') != std::string::npos)
    throw UserError(where + ": text contains a tab or newline");
}

}  // namespace

TaskId parse_task_id(const std::string& name) {
  for (size_t i = 0; i < std::size(kTaskNames); ++i)
    if (name == kTaskNames[i]) return static_cast<TaskId>(i);
  std::string valid;
  for (const char* t : kTaskNames) {
    if (!valid.empty()) valid += ", ";
    valid += t;
  }
  throw UserError("unknown task '" + name + "'; expected one of: " + valid);
}

std::string task_id_name(TaskId task) {
  return kTaskNames[static_cast<int>(task)];
}

int64_t task_class_count(TaskId task) {
  switch (task) {
    case TaskId::ei_oc:
      return 4;
    case TaskId::v_oc:
      return 7;
    case TaskId::pretrain:
      return 3;
    default:
      throw std::runtime_error(task_id_name(task) +
                               " is not an ordinal task");
  }
}

TaskDataset load_dataset(const std::string& path, TaskId task) {
  TaskDataset ds;
  ds.task = task;
  const auto lines = read_lines(path);
  for (size_t li = 0; li < lines.size(); ++li) {
    const std::string where = path + ":" + std::to_string(li + 1);
    const auto fields = split_fields(lines[li], '\t');
    if (li == 0 && !fields.empty() && fields[0] == "ID") continue;

    LabeledExample ex;
    switch (task) {
      case TaskId::ei_reg:
      case TaskId::ei_oc:
      case TaskId::v_reg:
      case TaskId::v_oc: {
        if (fields.size() != 4)
          throw UserError(where + ": expected 4 columns, found " +
                          std::to_string(fields.size()));
        ex.id = fields[0];
        ex.text = fields[1];
        const std::string& dim = fields[2];
        if (task == TaskId::ei_reg || task == TaskId::ei_oc) {
          if (!is_intensity_emotion(dim))
            throw UserError(where + ": unknown emotion '" + dim + "'");
          if (ds.emotion.empty())
            ds.emotion = dim;
          else if (ds.emotion != dim)
            throw UserError(where + ": mixed emotions '" + ds.emotion +
                            "' and '" + dim + "' in one dataset");
        } else if (dim != "valence") {
          throw UserError(where + ": expected dimension 'valence', found '" +
                          dim + "'");
        }
        if (task == TaskId::ei_reg || task == TaskId::v_reg) {
          ex.scalar = parse_double(fields[3], where);
          if (ex.scalar < 0.0 || ex.scalar > 1.0)
            throw UserError(where + ": score outside [0,1]");
        } else if (task == TaskId::ei_oc) {
          ex.ordinal = parse_int(fields[3], where);
          if (ex.ordinal < 0 || ex.ordinal > 3)
            throw UserError(where + ": class outside 0..3");
        } else {
          const int64_t v = parse_int(fields[3], where);
          if (v < -3 || v > 3)
            throw UserError(where + ": class outside -3..3");
          ex.ordinal = v + 3;
        }
        break;
      }
      case TaskId::e_c: {
        if (fields.size() != 13)
          throw UserError(where + ": expected 13 columns, found " +
                          std::to_string(fields.size()));
        ex.id = fields[0];
        ex.text = fields[1];
        for (size_t i = 0; i < 11; ++i) {
          if (fields[i + 2] == "1")
            ex.labels.set(i);
          else if (fields[i + 2] != "0")
            throw UserError(where + ": label column must be 0 or 1, found '" +
                            fields[i + 2] + "'");
        }
        break;
      }
      case TaskId::pretrain: {
        if (fields.size() != 3)
          throw UserError(where + ": expected 3 columns, found " +
                          std::to_string(fields.size()));
        ex.id = fields[0];
        ex.text = fields[1];
        if (fields[2] == "negative")
          ex.ordinal = 0;
        else if (fields[2] == "neutral")
          ex.ordinal = 1;
        else if (fields[2] == "positive")
          ex.ordinal = 2;
        else
          throw UserError(where + ": unknown sentiment '" + fields[2] + "'");
        break;
      }
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

void save_dataset(const TaskDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write file: " + path);

  switch (dataset.task) {
    case TaskId::ei_reg:
    case TaskId::v_reg:
      out << "ID\tTweet\tAffect Dimension\tIntensity Score\n";
      break;
    case TaskId::ei_oc:
    case TaskId::v_oc:
      out << "ID\tTweet\tAffect Dimension\tIntensity Class\n";
      break;
    case TaskId::e_c: {
      out << "ID\tTweet";
      for (const char* label : kEmotionLabels) out << '\t' << label;
      out << '\n';
      break;
    }
    case TaskId::pretrain:
      out << "ID\tTweet\tSentiment\n";
      break;
  }

  const bool ei = dataset.task == TaskId::ei_reg || dataset.task == TaskId::ei_oc;
  const std::string dim = ei ? dataset.emotion : "valence";
  for (const auto& ex : dataset.examples) {
    check_plain_text(ex.text, path + " (" + ex.id + ")");
    out << ex.id << '\t' << ex.text;
    switch (dataset.task) {
      case TaskId::ei_reg:
      case TaskId::v_reg:
        out << '\t' << dim << '\t' << format_float(ex.scalar);
        break;
      case TaskId::ei_oc:
        out << '\t' << dim << '\t' << ex.ordinal;
        break;
      case TaskId::v_oc:
        out << '\t' << dim << '\t' << (ex.ordinal - 3);
        break;
      case TaskId::e_c:
        for (size_t i = 0; i < 11; ++i) out << '\t' << (ex.labels[i] ? 1 : 0);
        break;
      case TaskId::pretrain:
        out << '\t'
            << (ex.ordinal == 0 ? "negative"
                                : ex.ordinal == 1 ? "neutral" : "positive");
        break;
    }
    out << '\n';
  }
  if (!out) throw UserError("write failed: " + path);
}

SynthAffectCorpus synth_affect_corpus(const SynthAffectConfig& cfg) {
  if (cfg.clusters < 2) throw UserError("need at least 2 clusters");
  if (cfg.words_per_cluster < 4 || cfg.docs < 1)
    throw UserError("invalid synthetic corpus configuration");

  SynthAffectCorpus synth;
  Rng rng(cfg.seed);

  synth.cluster_words.resize(cfg.clusters);
  for (int64_t c = 0; c < cfg.clusters; ++c)
    for (int64_t k = 0; k < cfg.words_per_cluster; ++k)
      synth.cluster_words[c].push_back("c" + std::to_string(c) + "w" +
                                       std::to_string(k));

  // Per-cluster base ratings with alternating sign, shrinking slightly per
  // dimension; each word gets a small jitter around its cluster's base.
  for (int64_t c = 0; c < cfg.clusters; ++c) {
    const double sign = (c % 2 == 0) ? 1.0 : -1.0;
    for (const auto& word : synth.cluster_words[c]) {
      std::array<double, 10> norms;
      for (size_t d = 0; d < 10; ++d) {
        const double base = sign * (0.9 - 0.04 * static_cast<double>(d));
        norms[d] = std::clamp(
            round6(base + 0.05 * (2.0 * rng.uniform01() - 1.0)), -1.0, 1.0);
      }
      synth.planted.norms.emplace(word, norms);
    }
  }

  static const char* kFillers[] = {"the", "and", "of"};
  for (int64_t doc = 0; doc < cfg.docs; ++doc) {
    const auto& words = synth.cluster_words[doc % cfg.clusters];
    const int64_t len = 8 + static_cast<int64_t>(rng.below(5));
    std::vector<Token> tokens;
    for (int64_t i = 0; i < len; ++i) {
      if (rng.uniform01() < 0.15)
        tokens.push_back(word_token(kFillers[rng.below(3)]));
      else
        tokens.push_back(word_token(words[rng.below(words.size())]));
    }
    synth.corpus.push_back(std::move(tokens));
  }

  // The first quarter of each cluster is "manually annotated" and becomes
  // the seed lexica; recovery is judged on the rest.
  const int64_t annotated = (cfg.words_per_cluster + 3) / 4;
  for (int64_t c = 0; c < cfg.clusters; ++c)
    for (int64_t k = 0; k < annotated; ++k)
      synth.seed_words.push_back(synth.cluster_words[c][k]);
  std::sort(synth.seed_words.begin(), synth.seed_words.end());

  for (size_t d = 0; d < 10; ++d) {
    SeedLexicon lex;
    lex.dimension = kAffectDimensions[d];
    for (const auto& word : synth.seed_words)
      lex.ratings[word] = synth.planted.norms.at(word)[d];
    synth.seed_lexica.push_back(std::move(lex));
  }
  return synth;
}

void write_affect_corpus(const SynthAffectCorpus& synth,
                         const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto join = [](const std::vector<Token>& tokens) {
    std::string line;
    for (const auto& tok : tokens) {
      if (!line.empty()) line += ' ';
      line += tok.surface;
    }
    return line;
  };
  std::ofstream out(dir + "/corpus.txt", std::ios::binary);
  if (!out) throw UserError("cannot write file: " + dir + "/corpus.txt");
  for (const auto& doc : synth.corpus) out << join(doc) << '\n';
  if (!out) throw UserError("write failed: " + dir + "/corpus.txt");

  for (const auto& lex : synth.seed_lexica)
    save_seed_lexicon(lex, dir + "/" + lex.dimension + ".tsv");
  save_lexicon(synth.planted, dir + "/planted.tsv");
}

TaskDataset synth_task_dataset(TaskId task, int64_t size, uint64_t seed) {
  if (size < 1) throw UserError("dataset size must be >= 1");
  static const char* kStrong[] = {"furious", "blazing", "rage",  "scream",
                                  "storm",   "burning", "wild",  "fierce"};
  static const char* kCalm[] = {"calm",  "mild",  "quiet", "gentle",
                                "soft",  "steady", "plain", "still"};

  TaskDataset ds;
  ds.task = task;
  if (task == TaskId::ei_reg || task == TaskId::ei_oc) ds.emotion = "joy";

  Rng rng(mix_seed(seed, static_cast<uint64_t>(task) + 1));
  for (int64_t i = 0; i < size; ++i) {
    LabeledExample ex;
    ex.id = "synth-" + std::to_string(i);

    std::vector<std::string> tokens;
    if (task == TaskId::e_c) {
      for (size_t label = 0; label < 11; ++label) {
        if (rng.uniform01() >= 0.35) continue;
        ex.labels.set(label);
        const int64_t reps = 1 + static_cast<int64_t>(rng.below(2));
        for (int64_t r = 0; r < reps; ++r)
          tokens.push_back(kEmotionLabels[label]);
      }
      const int64_t fillers = 2 + static_cast<int64_t>(rng.below(3));
      for (int64_t f = 0; f < fillers; ++f)
        tokens.push_back(kCalm[rng.below(std::size(kCalm))]);
    } else {
      const int64_t len = 4 + static_cast<int64_t>(rng.below(7));
      const int64_t strong = static_cast<int64_t>(rng.below(len + 1));
      for (int64_t t = 0; t < len; ++t) {
        if (t < strong)
          tokens.push_back(kStrong[rng.below(std::size(kStrong))]);
        else
          tokens.push_back(kCalm[rng.below(std::size(kCalm))]);
      }
      const double frac =
          static_cast<double>(strong) / static_cast<double>(len);
      switch (task) {
        case TaskId::ei_reg:
        case TaskId::v_reg:
          ex.scalar = round6(0.15 + 0.7 * frac * frac);
          break;
        case TaskId::ei_oc:
          ex.ordinal = std::min<int64_t>(3, static_cast<int64_t>(frac * 4.0));
          break;
        case TaskId::v_oc:
          ex.ordinal = static_cast<int64_t>(std::lround(frac * 6.0));
          break;
        case TaskId::pretrain:
          ex.ordinal = frac < 1.0 / 3.0 ? 0 : frac < 2.0 / 3.0 ? 1 : 2;
          break;
        case TaskId::e_c:
          break;  // handled above
      }
    }
    rng.shuffle(tokens);
    for (size_t t = 0; t < tokens.size(); ++t) {
      if (t) ex.text += ' ';
      ex.text += tokens[t];
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

}  // namespace affect
