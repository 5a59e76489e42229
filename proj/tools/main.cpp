// affect — command-line front end for the affective text analysis library.
//
// Subcommands cover the full pipeline: embedding pretraining, lexicon
// expansion, embedding composition, sentiment pretraining, per-task
// fine-tuning, evaluation, feature baselines, attention visualization, the
// paired-sentence bias audit, and a finite-difference gradient check.
//
// Every subcommand accepts --config-file with flat "key = value" lines;
// precedence is defaults < config file < explicit flags, and unknown keys
// are rejected. Commands that write an output artifact echo the fully
// resolved configuration next to it as run-config.txt. Exit codes:
// 0 success, 1 invalid input, 2 internal failure.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "affect/baselines.hpp"
#include "affect/datasets.hpp"
#include "affect/embeddings.hpp"
#include "affect/evaluation.hpp"
#include "affect/graph.hpp"
#include "affect/lexicon.hpp"
#include "affect/model.hpp"
#include "affect/rng.hpp"
#include "affect/text.hpp"
#include "affect/training.hpp"
#include "affect/util.hpp"

namespace fs = std::filesystem;
using namespace affect;

namespace {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

std::vector<std::vector<Token>> load_corpus(const std::string& path) {
  std::vector<std::vector<Token>> corpus;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    auto tokens = tokenize(line);
    if (!tokens.empty()) corpus.push_back(std::move(tokens));
  }
  if (corpus.empty()) throw UserError(path + ": no documents");
  return corpus;
}

// Echoes the resolved configuration into the directory that receives the
// primary output artifact.
void write_run_config(const std::string& artifact_path,
                      const std::string& command, const KeyValues& config) {
  const fs::path dir = fs::path(artifact_path).parent_path();
  const fs::path file = dir.empty() ? fs::path("run-config.txt")
                                    : dir / "run-config.txt";
  std::ofstream out(file, std::ios::binary);
  if (!out) throw UserError("cannot write file: " + file.string());
  out << "command = " << command << '\n';
  for (const auto& [key, value] : config)
    out << key << " = " << value << '\n';
  if (!out) throw UserError("write failed: " + file.string());
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write file: " + path);
  out << bytes;
  if (!out) throw UserError("write failed: " + path);
}

std::string trim_ws(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Expands a subcommand's --config-file into explicit "--key=value"
// arguments before the real parse. Keys are validated against the
// subcommand's own options and rejected when unknown; keys already given
// on the command line are skipped, so explicit flags win. Underscores in
// keys match hyphenated option names and a "command" line is ignored,
// which makes every run-config.txt echo directly reusable as a config
// file.
std::vector<std::string> expand_config_args(CLI::App& app,
                                            std::vector<std::string> args) {
  if (args.empty() || args[0].empty() || args[0][0] == '-') return args;
  CLI::App* cmd = app.get_subcommand_no_throw(args[0]);
  if (cmd == nullptr) return args;

  std::string path;
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config-file" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config-file=", 0) == 0)
      path = args[i].substr(std::string("--config-file=").size());
  }
  if (path.empty()) return args;

  const auto given_on_command_line = [&args](const std::string& flag) {
    const std::string prefixed = flag + "=";
    for (size_t i = 1; i < args.size(); ++i)
      if (args[i] == flag || args[i].rfind(prefixed, 0) == 0) return true;
    return false;
  };

  const std::vector<std::string> lines = read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string line = trim_ws(lines[i]);
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    const std::string where = path + ":" + std::to_string(i + 1);
    if (eq == std::string::npos)
      throw UserError(where + ": expected 'key = value'");
    std::string key = trim_ws(line.substr(0, eq));
    const std::string value = trim_ws(line.substr(eq + 1));
    if (key.empty()) throw UserError(where + ": expected 'key = value'");
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "command") continue;  // run-config.txt metadata line
    if (key == "config-file" || key == "help")
      throw UserError(where + ": key '" + key +
                      "' is not allowed in a config file");
    const std::string flag = "--" + key;
    if (cmd->get_option_no_throw(flag) == nullptr)
      throw UserError(where + ": unknown config key '" + key + "' for " +
                      args[0]);
    if (!given_on_command_line(flag)) args.push_back(flag + "=" + value);
  }
  return args;
}

// Deterministic hold-out when no explicit dev file is given: every fifth
// example (starting with the first) becomes the dev set.
std::pair<TaskDataset, TaskDataset> split_train_dev(const TaskDataset& all) {
  if (all.examples.size() < 2)
    throw UserError("need at least 2 examples to hold out a dev set; "
                    "pass --dev");
  TaskDataset train, dev;
  train.task = dev.task = all.task;
  train.emotion = dev.emotion = all.emotion;
  for (size_t i = 0; i < all.examples.size(); ++i)
    (i % 5 == 0 ? dev : train).examples.push_back(all.examples[i]);
  return {std::move(train), std::move(dev)};
}

std::vector<int64_t> encode_text(const std::string& text,
                                 const Vocabulary& vocab,
                                 const std::string& what) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw UserError(what + " produced no tokens");
  return encode(tokens, vocab);
}

KeyValues train_config_entries(const TrainConfig& tc) {
  return {
      {"batch_size", std::to_string(tc.batch_size)},
      {"clip_norm", format_exact(tc.clip_norm)},
      {"lr", format_exact(tc.lr)},
      {"beta1", format_exact(tc.beta1)},
      {"beta2", format_exact(tc.beta2)},
      {"eps", format_exact(tc.eps)},
      {"max_epochs", std::to_string(tc.max_epochs)},
      {"patience", std::to_string(tc.patience)},
      {"seed", std::to_string(tc.seed)},
      {"mode", train_mode_name(tc.mode)},
  };
}

void append(KeyValues& dst, KeyValues more) {
  for (auto& kv : more) dst.push_back(std::move(kv));
}

// Adds the Adam/early-stopping flags shared by pretrain and finetune.
void add_train_options(CLI::App* cmd, TrainConfig& tc) {
  cmd->add_option("--batch-size", tc.batch_size, "mini-batch size")
      ->capture_default_str();
  cmd->add_option("--clip-norm", tc.clip_norm, "global gradient norm cap")
      ->capture_default_str();
  cmd->add_option("--lr", tc.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--max-epochs", tc.max_epochs, "epoch budget")
      ->capture_default_str();
  cmd->add_option("--patience", tc.patience,
                  "non-improving dev epochs before early stop")
      ->capture_default_str();
  cmd->add_option("--seed", tc.seed, "run seed")->capture_default_str();
}

void print_train_summary(const TrainResult& result) {
  const EpochRecord& best = result.history[result.best_epoch - 1];
  std::cout << "trained " << result.history.size() << " epoch(s)"
            << (result.stopped_early ? " (stopped early)" : "")
            << "; best epoch " << result.best_epoch << ": dev loss "
            << format_float(best.dev_loss) << ", dev metric "
            << format_float(best.dev_metric) << '\n';
}

std::string report_csv(const EvalReport& report) {
  std::string row = task_id_name(report.task) + "," + report.metric + "," +
                    format_float(report.value);
  for (double v : report.run_values) row += "," + format_float(v);
  return "task,metric,value,run_values\n" + row + "\n";
}

// ---------------------------------------------------------------------------
// Subcommand option blocks and runners.

struct TrainEmbeddingsOpts {
  std::string corpus, out;
  SgnsConfig cfg;
};

void run_train_embeddings(const TrainEmbeddingsOpts& o) {
  const auto corpus = load_corpus(o.corpus);
  const EmbeddingMatrix emb = train_skipgram(corpus, o.cfg);
  save_text(emb, o.out);
  write_run_config(o.out, "train-embeddings",
                   {{"corpus", o.corpus},
                    {"out", o.out},
                    {"dim", std::to_string(o.cfg.dim)},
                    {"window", std::to_string(o.cfg.window)},
                    {"negatives", std::to_string(o.cfg.negatives)},
                    {"min_count", std::to_string(o.cfg.min_count)},
                    {"epochs", std::to_string(o.cfg.epochs)},
                    {"lr", format_exact(o.cfg.learning_rate)},
                    {"seed", std::to_string(o.cfg.seed)}});
  std::cout << "wrote " << o.out << " (" << emb.vocab.size()
            << " tokens, dim " << emb.dim << ")\n";
}

struct BuildLexiconOpts {
  std::string corpus, seeds, embeddings, out;
  int64_t window = 5;
  int64_t min_count = 1;
  int64_t seed_count = 50;
  double ridge = 1e-3;
};

void run_build_lexicon(const BuildLexiconOpts& o) {
  const auto corpus = load_corpus(o.corpus);
  const EmbeddingMatrix emb = load_text(o.embeddings);
  const Vocabulary cvocab = Vocabulary::build(corpus, o.min_count);
  const ContextModel ctx = build_context_model(corpus, cvocab, o.window);

  std::vector<AffectModel> models;
  for (const char* dimension : kAffectDimensions) {
    const std::string path =
        (fs::path(o.seeds) / (std::string(dimension) + ".tsv")).string();
    const SeedLexicon seed_lex = load_seed_lexicon(path);
    const auto seeds = select_seeds(seed_lex, ctx, o.seed_count);
    models.push_back(fit_affect_model(seed_lex, seeds, ctx, o.ridge));
  }

  // Annotate the embedding vocabulary; words without context statistics
  // (and the special markers) are left out and compose to zero norms.
  std::vector<std::pair<std::string, int64_t>> kept;
  for (const auto& [word, count] : emb.vocab.entries())
    if (!is_special_surface(word) && ctx.vocab.contains(word))
      kept.emplace_back(word, count);
  const AffectiveLexicon lex =
      expand_lexicon(Vocabulary::from_entries(std::move(kept)), models, ctx);
  save_lexicon(lex, o.out);
  write_run_config(o.out, "build-lexicon",
                   {{"corpus", o.corpus},
                    {"seeds", o.seeds},
                    {"embeddings", o.embeddings},
                    {"out", o.out},
                    {"window", std::to_string(o.window)},
                    {"min_count", std::to_string(o.min_count)},
                    {"seed_count", std::to_string(o.seed_count)},
                    {"ridge", format_exact(o.ridge)}});
  std::cout << "wrote " << o.out << " (" << lex.norms.size() << " words)\n";
}

struct ComposeOpts {
  std::string embeddings, lexicon, out;
};

void run_compose(const ComposeOpts& o) {
  const EmbeddingMatrix emb = load_text(o.embeddings);
  const AffectiveLexicon lex = load_lexicon(o.lexicon);
  const EmbeddingMatrix composed = compose_embeddings(emb, lex);
  save_text(composed, o.out);
  write_run_config(o.out, "compose",
                   {{"embeddings", o.embeddings},
                    {"lexicon", o.lexicon},
                    {"out", o.out}});
  std::cout << "wrote " << o.out << " (dim " << composed.dim << ")\n";
}

struct PretrainOpts {
  std::string data, dev, embeddings, out;
  int64_t lstm_size = 250;
  int64_t lstm_layers = 2;
  int64_t attention_layers = 2;
  int64_t attention_hidden = 0;  // 0 selects twice the annotation width
  double noise_sigma = 0.2;
  double embed_dropout = 0.1;
  double repr_dropout = 0.3;
  TrainConfig tc;
};

void add_model_options(CLI::App* cmd, PretrainOpts& o) {
  cmd->add_option("--lstm-size", o.lstm_size, "LSTM units per direction")
      ->capture_default_str();
  cmd->add_option("--lstm-layers", o.lstm_layers, "stacked BiLSTM layers")
      ->capture_default_str();
  cmd->add_option("--attention-layers", o.attention_layers,
                  "attention MLP layers")
      ->capture_default_str();
  cmd->add_option("--attention-hidden", o.attention_hidden,
                  "attention hidden width (0 = twice the annotation width)")
      ->capture_default_str();
  cmd->add_option("--noise-sigma", o.noise_sigma,
                  "Gaussian noise on embedded inputs")
      ->capture_default_str();
  cmd->add_option("--embed-dropout", o.embed_dropout,
                  "dropout after embedding")
      ->capture_default_str();
  cmd->add_option("--repr-dropout", o.repr_dropout,
                  "dropout on the attended summary")
      ->capture_default_str();
}

KeyValues model_config_entries(const PretrainOpts& o) {
  return {
      {"lstm_size", std::to_string(o.lstm_size)},
      {"lstm_layers", std::to_string(o.lstm_layers)},
      {"attention_layers", std::to_string(o.attention_layers)},
      {"attention_hidden", std::to_string(o.attention_hidden)},
      {"noise_sigma", format_exact(o.noise_sigma)},
      {"embed_dropout", format_exact(o.embed_dropout)},
      {"repr_dropout", format_exact(o.repr_dropout)},
  };
}

void run_pretrain(PretrainOpts& o) {
  const TaskDataset all = load_dataset(o.data, TaskId::pretrain);
  TaskDataset train, dev;
  if (o.dev.empty()) {
    std::tie(train, dev) = split_train_dev(all);
  } else {
    train = all;
    dev = load_dataset(o.dev, TaskId::pretrain);
  }

  EmbeddingMatrix emb = load_text(o.embeddings);
  ModelConfig cfg;
  cfg.embed_dim = emb.dim;
  cfg.lstm_size = o.lstm_size;
  cfg.lstm_layers = o.lstm_layers;
  cfg.attention_layers = o.attention_layers;
  cfg.attention_hidden = o.attention_hidden;
  cfg.noise_sigma = o.noise_sigma;
  cfg.embed_dropout = o.embed_dropout;
  cfg.repr_dropout = o.repr_dropout;
  cfg.head = head_for_task(TaskId::pretrain);

  o.tc.mode = TrainMode::rd;
  ModelParams params = init_params(cfg, std::move(emb), o.tc.seed);
  const TrainResult result =
      train_model(std::move(params), train, dev, o.tc);
  save_model(result.params, o.out);
  save_history(result.history, o.out + ".history.csv");

  KeyValues kv = {{"data", o.data},
                  {"dev", o.dev},
                  {"embeddings", o.embeddings},
                  {"out", o.out}};
  append(kv, model_config_entries(o));
  append(kv, train_config_entries(o.tc));
  write_run_config(o.out, "pretrain", kv);
  print_train_summary(result);
}

struct FinetuneOpts {
  std::string task, mode = "rd", ckpt, data, dev, out;
  TrainConfig tc;
};

void run_finetune(FinetuneOpts& o) {
  const TaskId task = parse_task_id(o.task);
  std::string mode_name = o.mode;
  for (char& c : mode_name) c = static_cast<char>(std::toupper(c));
  const TrainMode mode = parse_train_mode(mode_name);

  ModelParams ckpt = load_model(o.ckpt);
  const TaskDataset all = load_dataset(o.data, task);
  TaskDataset train, dev;
  if (o.dev.empty()) {
    std::tie(train, dev) = split_train_dev(all);
  } else {
    train = all;
    dev = load_dataset(o.dev, task);
  }

  ModelParams params;
  if (mode == TrainMode::rd) {
    // The checkpoint only supplies the embedding and architecture; all
    // trainable weights start fresh.
    ModelConfig cfg = ckpt.config;
    cfg.head = head_for_task(task);
    params = init_params(cfg, std::move(ckpt.embedding), o.tc.seed);
  } else {
    params = transfer(ckpt, head_for_task(task), mode, o.tc.seed);
  }

  o.tc.mode = mode;
  const TrainResult result =
      train_model(std::move(params), train, dev, o.tc);
  save_model(result.params, o.out);
  save_history(result.history, o.out + ".history.csv");

  KeyValues kv = {{"task", task_id_name(task)},
                  {"ckpt", o.ckpt},
                  {"data", o.data},
                  {"dev", o.dev},
                  {"out", o.out}};
  append(kv, train_config_entries(o.tc));
  write_run_config(o.out, "finetune", kv);
  print_train_summary(result);
}

struct EvaluateOpts {
  std::string task, ckpt, data, out;
  int64_t runs = 1;
  uint64_t seed = 1;
};

void run_evaluate(const EvaluateOpts& o) {
  const TaskId task = parse_task_id(o.task);
  ModelParams params = load_model(o.ckpt);
  const TaskDataset data = load_dataset(o.data, task);
  const EvalReport report = averaged_eval(
      task, [&](uint64_t) { return evaluate_model(params, data); }, o.seed,
      o.runs);
  if (o.out.empty()) {
    std::cout << report_csv(report);
  } else {
    save_report({report}, o.out);
    write_run_config(o.out, "evaluate",
                     {{"task", task_id_name(task)},
                      {"ckpt", o.ckpt},
                      {"data", o.data},
                      {"out", o.out},
                      {"runs", std::to_string(o.runs)},
                      {"seed", std::to_string(o.seed)}});
    std::cout << "wrote " << o.out << " (" << report.metric << " "
              << format_float(report.value) << ")\n";
  }
}

struct BaselineOpts {
  std::string kind, task, data, test, embeddings, lexicon, out, model_out;
  SvmConfig svm;
};

void run_baseline(const BaselineOpts& o) {
  // Accept the short flag spelling alongside the canonical name.
  const FeatureKind kind = parse_feature_kind(
      o.kind == "nbow-affect" ? "nbow-affective" : o.kind);
  const TaskId task = parse_task_id(o.task);
  const TaskDataset train = load_dataset(o.data, task);
  const TaskDataset test =
      o.test.empty() ? train : load_dataset(o.test, task);

  const auto doc_tokens = [](const TaskDataset& ds) {
    std::vector<std::vector<Token>> docs;
    docs.reserve(ds.examples.size());
    for (const auto& ex : ds.examples) docs.push_back(tokenize(ex.text));
    return docs;
  };
  const auto train_docs = doc_tokens(train);
  const auto test_docs = doc_tokens(test);

  TfidfModel tfidf;
  EmbeddingMatrix emb;
  AffectiveLexicon lex;
  if (kind == FeatureKind::bow) {
    tfidf = fit_tfidf(train_docs);
  } else {
    if (o.embeddings.empty())
      throw UserError("--embeddings is required for nbow features");
    emb = load_text(o.embeddings);
    if (kind == FeatureKind::nbow_affective) {
      if (o.lexicon.empty())
        throw UserError("--lexicon is required for nbow-affective features");
      lex = load_lexicon(o.lexicon);
    }
  }
  const auto features = [&](const std::vector<std::vector<Token>>& docs) {
    std::vector<std::vector<double>> X;
    X.reserve(docs.size());
    for (const auto& doc : docs)
      X.push_back(kind == FeatureKind::bow
                      ? tfidf_features(tfidf, doc)
                      : nbow_features(doc, emb,
                                      kind == FeatureKind::nbow_affective
                                          ? &lex
                                          : nullptr));
    return X;
  };
  const auto X_train = features(train_docs);
  const auto X_test = features(test_docs);

  const TaskHead head = head_for_task(task);
  BaselineModel model;
  switch (head.kind) {
    case HeadKind::regression: {
      std::vector<double> y;
      for (const auto& ex : train.examples) y.push_back(ex.scalar);
      model = train_linear_svr(X_train, y, o.svm);
      break;
    }
    case HeadKind::ordinal: {
      std::vector<int64_t> y;
      for (const auto& ex : train.examples) y.push_back(ex.ordinal);
      model = train_linear_svm(X_train, y, head.classes, o.svm);
      break;
    }
    case HeadKind::multilabel: {
      std::vector<std::bitset<11>> y;
      for (const auto& ex : train.examples) y.push_back(ex.labels);
      model = train_multilabel_svm(X_train, y, o.svm);
      break;
    }
  }
  model.source = kind;
  if (kind == FeatureKind::bow) model.tfidf = tfidf;

  double value = 0.0;
  const size_t n = test.examples.size();
  switch (head.kind) {
    case HeadKind::regression: {
      std::vector<double> yhat(n), y(n);
      for (size_t i = 0; i < n; ++i) {
        yhat[i] = predict_score(model, X_test[i]);
        y[i] = test.examples[i].scalar;
      }
      value = pearson(yhat, y);
      break;
    }
    case HeadKind::ordinal: {
      std::vector<int64_t> yhat(n), y(n);
      for (size_t i = 0; i < n; ++i) {
        yhat[i] = predict_class(model, X_test[i]);
        y[i] = test.examples[i].ordinal;
      }
      value = accuracy(yhat, y);
      break;
    }
    case HeadKind::multilabel: {
      std::vector<std::bitset<11>> yhat(n), y(n);
      for (size_t i = 0; i < n; ++i) {
        yhat[i] = predict_labels(model, X_test[i]);
        y[i] = test.examples[i].labels;
      }
      value = jaccard_multilabel(yhat, y);
      break;
    }
  }

  EvalReport report;
  report.task = task;
  report.metric = task_metric_name(task);
  report.value = value;
  report.run_values = {value};

  if (!o.model_out.empty()) save_baseline(model, o.model_out);
  if (o.out.empty()) {
    std::cout << report_csv(report);
  } else {
    save_report({report}, o.out);
    write_run_config(o.out, "baseline",
                     {{"kind", feature_kind_name(kind)},
                      {"task", task_id_name(task)},
                      {"data", o.data},
                      {"test", o.test},
                      {"embeddings", o.embeddings},
                      {"lexicon", o.lexicon},
                      {"out", o.out},
                      {"model_out", o.model_out},
                      {"C", format_exact(o.svm.C)},
                      {"epsilon", format_exact(o.svm.epsilon)},
                      {"epochs", std::to_string(o.svm.epochs)},
                      {"lr", format_exact(o.svm.lr)}});
    std::cout << "wrote " << o.out << " (" << report.metric << " "
              << format_float(report.value) << ")\n";
  }
}

struct VisualizeOpts {
  std::string ckpt, text, format = "html", out;
};

void run_visualize(const VisualizeOpts& o) {
  HeatmapFormat format;
  if (o.format == "html") {
    format = HeatmapFormat::html;
  } else if (o.format == "ansi") {
    format = HeatmapFormat::ansi;
  } else {
    throw UserError("unknown format '" + o.format +
                    "' (expected html or ansi)");
  }
  ModelParams params = load_model(o.ckpt);
  const auto tokens = tokenize(o.text);
  if (tokens.empty()) throw UserError("text produced no tokens");
  const auto indices = encode(tokens, params.embedding.vocab);
  const ModelOutput out =
      model_forward(params, indices, /*train=*/false, 0);
  std::vector<std::string> surfaces;
  surfaces.reserve(tokens.size());
  for (const auto& token : tokens) surfaces.push_back(token.surface);
  const std::string bytes = render_heatmap(surfaces, out.attention, format);
  if (o.out.empty()) {
    std::cout << bytes;
  } else {
    write_bytes(o.out, bytes);
    write_run_config(o.out, "visualize",
                     {{"ckpt", o.ckpt},
                      {"text", o.text},
                      {"format", o.format},
                      {"out", o.out}});
    std::cout << "wrote " << o.out << '\n';
  }
}

struct BiasAuditOpts {
  std::string ckpt, pairs, out;
  uint64_t seed = 1;
};

void run_bias_audit(const BiasAuditOpts& o) {
  ModelParams params = load_model(o.ckpt);
  const HeadKind head = params.config.head.kind;
  if (head == HeadKind::multilabel)
    throw UserError("bias audit requires a regression or ordinal checkpoint");
  const auto pairs = load_bias_pairs(o.pairs);

  // Scalar prediction score: the regression output directly, or the
  // probability-weighted class index for ordinal heads.
  const auto score = [&](const std::string& text) {
    const auto indices =
        encode_text(text, params.embedding.vocab, "sentence '" + text + "'");
    const auto pred =
        model_forward(params, indices, /*train=*/false, 0).prediction;
    if (head == HeadKind::regression) return pred[0];
    double expected = 0.0;
    for (size_t i = 0; i < pred.size(); ++i)
      expected += static_cast<double>(i) * pred[i];
    return expected;
  };

  const auto results = bias_eval(pairs, score, o.seed);
  std::string csv = "tag,pairs,avg_diff,p_value\n";
  for (const auto& r : results)
    csv += r.tag + "," + std::to_string(r.pair_count) + "," +
           format_float(r.avg_diff) + "," + format_float(r.p_value) + "\n";
  if (o.out.empty()) {
    std::cout << csv;
  } else {
    write_bytes(o.out, csv);
    write_run_config(o.out, "bias-audit",
                     {{"ckpt", o.ckpt},
                      {"pairs", o.pairs},
                      {"out", o.out},
                      {"seed", std::to_string(o.seed)}});
    std::cout << "wrote " << o.out << '\n';
  }
}

struct GradcheckOpts {
  uint64_t seed = 7;
  double tolerance = 1e-4;
};

// Small but complete model (stochastic layers active, every head kind):
// reverse-mode gradients against central finite differences.
void run_gradcheck(const GradcheckOpts& o) {
  Rng rng(o.seed);
  std::vector<std::pair<std::string, int64_t>> entries;
  for (int i = 0; i < 10; ++i)
    entries.emplace_back("w" + std::to_string(i), 10 - i);
  EmbeddingMatrix emb;
  emb.vocab = Vocabulary::from_entries(std::move(entries));
  emb.dim = 8;
  emb.rows.assign(emb.vocab.size() * emb.dim, 0.0);
  for (int64_t i = 0; i < emb.vocab.size(); ++i) {
    if (i == Vocabulary::pad_index()) continue;
    for (int64_t d = 0; d < emb.dim; ++d)
      emb.rows[i * emb.dim + d] = rng.uniform(-0.5, 0.5);
  }
  const std::vector<int64_t> indices = {2, 5, 7, 3, 9};

  struct Case {
    TaskHead head;
    LabeledExample example;
  };
  std::vector<Case> cases(3);
  cases[0].head = {HeadKind::regression, 1};
  cases[0].example.scalar = 0.7;
  cases[1].head = {HeadKind::ordinal, 4};
  cases[1].example.ordinal = 2;
  cases[2].head = {HeadKind::multilabel, 11};
  cases[2].example.labels.set(0);
  cases[2].example.labels.set(4);
  cases[2].example.labels.set(8);

  bool ok = true;
  double worst = 0.0;
  for (size_t i = 0; i < cases.size(); ++i) {
    ModelConfig cfg;
    cfg.embed_dim = emb.dim;
    cfg.lstm_size = 4;
    cfg.lstm_layers = 2;
    cfg.attention_layers = 2;
    cfg.head = cases[i].head;
    ModelParams params = init_params(cfg, emb, mix_seed(o.seed, i));
    ModelGraph mg = build_model_graph(params, indices, /*train=*/true,
                                      mix_seed(o.seed, i, 1));
    const NodeId loss = loss_node(mg.graph, mg.prediction, cfg.head,
                                  cases[i].example, {});
    // eps = 1e-3: the deep stack produces legitimate gradients down to
    // ~1e-10, where central differences at eps = 1e-5 are dominated by
    // cancellation (floor ~ eps_machine * |loss| / (2 * eps) ~ 7e-12 per
    // element). A larger step keeps truncation error ~eps^2 ~ 1e-6 relative
    // while pushing the rounding floor well below the smallest gradients.
    const GradCheckReport report =
        check_gradients(mg.graph, loss, {}, o.tolerance, /*eps=*/1e-3);
    std::cout << "head " << i << ": " << report.entries.size()
              << " tensors, max rel err " << format_float(report.max_rel_err)
              << (report.ok ? "" : "  FAILED") << '\n';
    ok = ok && report.ok;
    worst = std::max(worst, report.max_rel_err);
  }
  if (!ok)
    throw std::runtime_error("gradient check failed (max rel err " +
                             format_float(worst) + ")");
  std::cout << "gradient check passed; max rel err " << format_float(worst)
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"affective text analysis toolkit"};
  app.require_subcommand(1);

  // Registered as a plain option; expand_config_args does the actual file
  // handling before the parse so that required options may be satisfied
  // from the file and unknown keys are rejected with a named diagnostic.
  const auto configure = [](CLI::App* cmd) {
    cmd->add_option("--config-file",
                    "flat key = value file; flags override it");
  };

  TrainEmbeddingsOpts te;
  auto* te_cmd = app.add_subcommand("train-embeddings",
                                    "Train skip-gram word embeddings");
  configure(te_cmd);
  te_cmd->add_option("--corpus", te.corpus, "corpus, one document per line")
      ->required();
  te_cmd->add_option("--out", te.out, "output embedding text file")
      ->required();
  te_cmd->add_option("--dim", te.cfg.dim, "embedding width")
      ->capture_default_str();
  te_cmd->add_option("--window", te.cfg.window, "context window")
      ->capture_default_str();
  te_cmd->add_option("--negatives", te.cfg.negatives,
                     "negative samples per pair")
      ->capture_default_str();
  te_cmd->add_option("--min-count", te.cfg.min_count,
                     "minimum corpus frequency")
      ->capture_default_str();
  te_cmd->add_option("--epochs", te.cfg.epochs, "training epochs")
      ->capture_default_str();
  te_cmd->add_option("--lr", te.cfg.learning_rate, "initial learning rate")
      ->capture_default_str();
  te_cmd->add_option("--seed", te.cfg.seed, "run seed")
      ->capture_default_str();
  te_cmd->callback([&te] { run_train_embeddings(te); });

  BuildLexiconOpts bl;
  auto* bl_cmd = app.add_subcommand(
      "build-lexicon", "Expand seed affect ratings over a corpus");
  configure(bl_cmd);
  bl_cmd->add_option("--corpus", bl.corpus, "corpus, one document per line")
      ->required();
  bl_cmd->add_option("--seeds", bl.seeds,
                     "directory with <dimension>.tsv seed lexica")
      ->required();
  bl_cmd->add_option("--embeddings", bl.embeddings,
                     "embedding file naming the words to annotate")
      ->required();
  bl_cmd->add_option("--out", bl.out, "output lexicon TSV")->required();
  bl_cmd->add_option("--window", bl.window, "co-occurrence window")
      ->capture_default_str();
  bl_cmd->add_option("--min-count", bl.min_count,
                     "minimum corpus frequency for context words")
      ->capture_default_str();
  bl_cmd->add_option("--seed-count", bl.seed_count,
                     "strongest annotated words kept as seeds")
      ->capture_default_str();
  bl_cmd->add_option("--ridge", bl.ridge, "ridge strength for the fit")
      ->capture_default_str();
  bl_cmd->callback([&bl] { run_build_lexicon(bl); });

  ComposeOpts co;
  auto* co_cmd = app.add_subcommand(
      "compose", "Append the ten affective dimensions to embeddings");
  configure(co_cmd);
  co_cmd->add_option("--embeddings", co.embeddings, "embedding text file")
      ->required();
  co_cmd->add_option("--lexicon", co.lexicon, "expanded lexicon TSV")
      ->required();
  co_cmd->add_option("--out", co.out, "output embedding text file")
      ->required();
  co_cmd->callback([&co] { run_compose(co); });

  PretrainOpts pt;
  auto* pt_cmd = app.add_subcommand(
      "pretrain", "Train the sentiment model used for transfer");
  configure(pt_cmd);
  pt_cmd->add_option("--data", pt.data, "pretrain-sentiment TSV")->required();
  pt_cmd->add_option("--dev", pt.dev,
                     "dev TSV (default: every fifth training example)");
  pt_cmd->add_option("--embeddings", pt.embeddings, "embedding text file")
      ->required();
  pt_cmd->add_option("--out", pt.out, "output checkpoint")->required();
  add_model_options(pt_cmd, pt);
  add_train_options(pt_cmd, pt.tc);
  pt_cmd->callback([&pt] { run_pretrain(pt); });

  FinetuneOpts ft;
  auto* ft_cmd =
      app.add_subcommand("finetune", "Train a task model from a checkpoint");
  configure(ft_cmd);
  ft_cmd->add_option("--task", ft.task,
                     "EI-reg, EI-oc, V-reg, V-oc, or E-c")
      ->required();
  ft_cmd->add_option("--mode", ft.mode, "rd, tl-fr, or tl-ft")
      ->capture_default_str();
  ft_cmd->add_option("--ckpt", ft.ckpt, "source checkpoint")->required();
  ft_cmd->add_option("--data", ft.data, "task TSV")->required();
  ft_cmd->add_option("--dev", ft.dev,
                     "dev TSV (default: every fifth training example)");
  ft_cmd->add_option("--out", ft.out, "output checkpoint")->required();
  add_train_options(ft_cmd, ft.tc);
  ft_cmd->callback([&ft] { run_finetune(ft); });

  EvaluateOpts ev;
  auto* ev_cmd =
      app.add_subcommand("evaluate", "Score a checkpoint on a dataset");
  configure(ev_cmd);
  ev_cmd->add_option("--task", ev.task, "task id")->required();
  ev_cmd->add_option("--ckpt", ev.ckpt, "checkpoint")->required();
  ev_cmd->add_option("--data", ev.data, "task TSV")->required();
  ev_cmd->add_option("--out", ev.out, "report CSV (default: stdout)");
  ev_cmd->add_option("--runs", ev.runs, "evaluation repetitions")
      ->capture_default_str();
  ev_cmd->add_option("--seed", ev.seed, "base seed for the run protocol")
      ->capture_default_str();
  ev_cmd->callback([&ev] { run_evaluate(ev); });

  BaselineOpts ba;
  auto* ba_cmd = app.add_subcommand(
      "baseline", "Train and score a feature baseline");
  configure(ba_cmd);
  ba_cmd->add_option("--kind", ba.kind, "bow, nbow, or nbow-affect")
      ->required();
  ba_cmd->add_option("--task", ba.task, "task id")->required();
  ba_cmd->add_option("--data", ba.data, "training TSV")->required();
  ba_cmd->add_option("--test", ba.test, "evaluation TSV (default: --data)");
  ba_cmd->add_option("--embeddings", ba.embeddings,
                     "embedding file (nbow kinds)");
  ba_cmd->add_option("--lexicon", ba.lexicon,
                     "expanded lexicon (nbow-affect)");
  ba_cmd->add_option("--out", ba.out, "report CSV (default: stdout)");
  ba_cmd->add_option("--model-out", ba.model_out, "save the trained model");
  ba_cmd->add_option("--C", ba.svm.C, "loss weight")->capture_default_str();
  ba_cmd->add_option("--epsilon", ba.svm.epsilon,
                     "insensitive tube for regression")
      ->capture_default_str();
  ba_cmd->add_option("--epochs", ba.svm.epochs, "descent epochs")
      ->capture_default_str();
  ba_cmd->add_option("--lr", ba.svm.lr, "initial step size")
      ->capture_default_str();
  ba_cmd->callback([&ba] { run_baseline(ba); });

  VisualizeOpts vz;
  auto* vz_cmd = app.add_subcommand(
      "visualize", "Render attention weights for a text");
  configure(vz_cmd);
  vz_cmd->add_option("--ckpt", vz.ckpt, "checkpoint")->required();
  vz_cmd->add_option("--text", vz.text, "input text")->required();
  vz_cmd->add_option("--format", vz.format, "html or ansi")
      ->capture_default_str();
  vz_cmd->add_option("--out", vz.out, "output file (default: stdout)");
  vz_cmd->callback([&vz] { run_visualize(vz); });

  BiasAuditOpts bd;
  auto* bd_cmd = app.add_subcommand(
      "bias-audit", "Score sentence pairs and test mean differences");
  configure(bd_cmd);
  bd_cmd->add_option("--ckpt", bd.ckpt, "checkpoint")->required();
  bd_cmd->add_option("--pairs", bd.pairs,
                     "TSV id<TAB>sentence_a<TAB>sentence_b<TAB>tag")
      ->required();
  bd_cmd->add_option("--out", bd.out, "report CSV (default: stdout)");
  bd_cmd->add_option("--seed", bd.seed, "permutation seed")
      ->capture_default_str();
  bd_cmd->callback([&bd] { run_bias_audit(bd); });

  GradcheckOpts gc;
  auto* gc_cmd = app.add_subcommand(
      "gradcheck", "Verify model gradients against finite differences");
  configure(gc_cmd);
  gc_cmd->add_option("--seed", gc.seed, "run seed")->capture_default_str();
  gc_cmd->add_option("--tolerance", gc.tolerance,
                     "maximum accepted relative error")
      ->capture_default_str();
  gc_cmd->callback([&gc] { run_gradcheck(gc); });

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config_args(app, std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11 wants reversed args
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
