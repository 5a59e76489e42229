#include "affect/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "affect/rng.hpp"
#include "affect/text.hpp"
#include "affect/util.hpp"

namespace affect {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw UserError("length mismatch");
  const size_t n = x.size();
  if (n < 2) throw UserError("need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UserError("constant input");
  return sxy / std::sqrt(sxx * syy);
}

double accuracy(const std::vector<int64_t>& pred,
                const std::vector<int64_t>& gold) {
  if (pred.size() != gold.size()) throw UserError("length mismatch");
  if (pred.empty()) throw UserError("empty input");
  size_t hits = 0;
  for (size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == gold[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double jaccard_multilabel(const std::vector<std::bitset<11>>& pred,
                          const std::vector<std::bitset<11>>& gold) {
  if (pred.size() != gold.size()) throw UserError("length mismatch");
  if (pred.empty()) throw UserError("empty input");
  double sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const size_t both = (pred[i] & gold[i]).count();
    const size_t any = (pred[i] | gold[i]).count();
    sum += any == 0 ? 1.0 : static_cast<double>(both) /
                                static_cast<double>(any);
  }
  return sum / static_cast<double>(pred.size());
}

std::string task_metric_name(TaskId task) {
  switch (head_for_task(task).kind) {
    case HeadKind::regression:
      return "pearson";
    case HeadKind::ordinal:
      return "accuracy";
    case HeadKind::multilabel:
      return "jaccard";
  }
  throw std::runtime_error("bad head kind");
}

double evaluate_model(ModelParams& params, const TaskDataset& data) {
  if (data.examples.empty()) throw UserError("empty dataset");
  const TaskHead expected = head_for_task(data.task);
  const TaskHead& head = params.config.head;
  if (head.kind != expected.kind || head.classes != expected.classes)
    throw UserError("model head does not match task " +
                    task_id_name(data.task));

  const size_t n = data.examples.size();
  std::vector<std::vector<double>> preds(n);
  for (size_t i = 0; i < n; ++i) {
    const auto indices =
        encode(tokenize(data.examples[i].text), params.embedding.vocab);
    if (indices.empty())
      throw UserError("example '" + data.examples[i].id + "' has no tokens");
    preds[i] =
        model_forward(params, indices, /*train=*/false, 0).prediction;
  }

  switch (head.kind) {
    case HeadKind::regression: {
      std::vector<double> yhat(n), y(n);
      for (size_t i = 0; i < n; ++i) {
        yhat[i] = preds[i][0];
        y[i] = data.examples[i].scalar;
      }
      return pearson(yhat, y);
    }
    case HeadKind::ordinal: {
      std::vector<int64_t> yhat(n), y(n);
      for (size_t i = 0; i < n; ++i) {
        yhat[i] = argmax_class(preds[i]);
        y[i] = data.examples[i].ordinal;
      }
      return accuracy(yhat, y);
    }
    case HeadKind::multilabel: {
      std::vector<std::bitset<11>> yhat(n), y(n);
      for (size_t i = 0; i < n; ++i) {
        yhat[i] = threshold_labels(preds[i]);
        y[i] = data.examples[i].labels;
      }
      return jaccard_multilabel(yhat, y);
    }
  }
  throw std::runtime_error("bad head kind");
}

EvalReport averaged_eval(TaskId task,
                         const std::function<double(uint64_t)>& run_metric,
                         uint64_t seed, int64_t runs) {
  if (runs < 1) throw UserError("run count must be >= 1");
  EvalReport report;
  report.task = task;
  report.metric = task_metric_name(task);
  report.run_values.reserve(runs);
  double sum = 0.0;
  for (int64_t i = 0; i < runs; ++i) {
    double value = 0.0;
    try {
      value = run_metric(seed + static_cast<uint64_t>(i));
    } catch (const std::exception& e) {
      throw UserError("run " + std::to_string(i + 1) + " of " +
                      std::to_string(runs) + " failed: " + e.what());
    }
    report.run_values.push_back(value);
    sum += value;
  }
  report.value = sum / static_cast<double>(runs);
  return report;
}

void save_report(const std::vector<EvalReport>& reports,
                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write file: " + path);
  out << "task,metric,value,run_values\n";
  for (const auto& r : reports) {
    out << task_id_name(r.task) << ',' << r.metric << ','
        << format_float(r.value);
    for (double v : r.run_values) out << ',' << format_float(v);
    out << '\n';
  }
  if (!out) throw UserError("write failed: " + path);
}

std::vector<BiasPair> load_bias_pairs(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<BiasPair> pairs;
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    const auto fields = split_fields(line, '\t');
    if (i == 0 && !fields.empty() && fields[0] == "id") continue;  // header
    const std::string where = path + ":" + std::to_string(i + 1);
    if (fields.size() != 4)
      throw UserError(where + ": expected 4 tab-separated fields, got " +
                      std::to_string(fields.size()));
    if (fields[1].empty() || fields[2].empty())
      throw UserError(where + ": empty sentence");
    pairs.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  if (pairs.empty()) throw UserError(path + ": no sentence pairs");
  return pairs;
}

double sign_flip_p_value(const std::vector<double>& diffs, uint64_t seed) {
  const size_t n = diffs.size();
  if (n == 0) throw UserError("no differences");
  double observed = 0.0;
  for (double d : diffs) observed += d;
  const double threshold =
      std::abs(observed) - 1e-12 * std::max(1.0, std::abs(observed));

  if (n <= 20) {
    const uint64_t patterns = uint64_t{1} << n;
    uint64_t hits = 0;
    for (uint64_t mask = 0; mask < patterns; ++mask) {
      double sum = 0.0;
      for (size_t i = 0; i < n; ++i)
        sum += (mask >> i) & 1 ? -diffs[i] : diffs[i];
      if (std::abs(sum) >= threshold) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(patterns);
  }

  constexpr int64_t kResamples = 100000;
  Rng rng(seed);
  int64_t hits = 0;
  for (int64_t r = 0; r < kResamples; ++r) {
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i)
      sum += rng.next_u64() & 1 ? -diffs[i] : diffs[i];
    if (std::abs(sum) >= threshold) ++hits;
  }
  // Add-one estimate keeps the p-value strictly positive.
  return static_cast<double>(1 + hits) / static_cast<double>(1 + kResamples);
}

std::vector<BiasResult> bias_eval(
    const std::vector<BiasPair>& pairs,
    const std::function<double(const std::string&)>& score, uint64_t seed) {
  if (pairs.empty()) throw UserError("no sentence pairs");
  std::map<std::string, std::vector<double>> by_tag;
  for (const auto& pair : pairs)
    by_tag[pair.tag].push_back(score(pair.sentence_a) -
                               score(pair.sentence_b));

  std::vector<BiasResult> results;
  uint64_t tag_index = 0;
  for (const auto& [tag, diffs] : by_tag) {
    BiasResult r;
    r.tag = tag;
    r.pair_count = static_cast<int64_t>(diffs.size());
    for (double d : diffs) r.avg_diff += d;
    r.avg_diff /= static_cast<double>(diffs.size());
    r.p_value = sign_flip_p_value(diffs, mix_seed(seed, tag_index++));
    results.push_back(std::move(r));
  }
  return results;
}

namespace {

std::string escape_html(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string render_heatmap(const std::vector<std::string>& tokens,
                           const std::vector<double>& weights,
                           HeatmapFormat format) {
  if (tokens.size() != weights.size())
    throw UserError("token/weight length mismatch");
  if (tokens.empty()) throw UserError("empty input");
  double sum = 0.0, max = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw UserError("attention weights must be nonnegative");
    sum += w;
    max = std::max(max, w);
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw UserError("attention weights must sum to 1");

  std::string out;
  if (format == HeatmapFormat::html) {
    out +=
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n"
        "<meta charset=\"utf-8\">\n<title>attention weights</title>\n"
        "<style>\n"
        "body { font: 16px/2 sans-serif; margin: 2rem; }\n"
        ".tok { padding: 2px 4px; border-radius: 3px; }\n"
        "</style>\n</head>\n<body>\n<p>\n";
    for (size_t i = 0; i < tokens.size(); ++i) {
      out += "<span class=\"tok\" style=\"background: rgba(214,69,49,";
      out += fixed3(weights[i] / max);
      out += ")\">" + escape_html(tokens[i]) + "</span>\n";
    }
    out += "</p>\n</body>\n</html>\n";
    return out;
  }

  // Terminal rendering: six-step red background scale.
  static const char* kCodes[6] = {"49",        "48;5;52",  "48;5;88",
                                  "48;5;124",  "48;5;160", "48;5;196"};
  for (size_t i = 0; i < tokens.size(); ++i) {
    const int bucket = std::min(
        5, static_cast<int>(std::floor(weights[i] / max * 5.0 + 0.5)));
    if (i > 0) out += ' ';
    out += "\x1b[";
    out += kCodes[bucket];
    out += 'm';
    out += tokens[i];
    out += "\x1b[0m";
  }
  out += '\n';
  return out;
}

}  // namespace affect
