// Microbenchmarks for the hot paths: graph matrix product, BiLSTM forward
// and backward passes, one skip-gram epoch, and PPMI context-model
// construction.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <string>
#include <vector>

#include "affect/embeddings.hpp"
#include "affect/graph.hpp"
#include "affect/lexicon.hpp"
#include "affect/model.hpp"
#include "affect/rng.hpp"
#include "affect/text.hpp"

namespace {

using namespace affect;

Tensor random_tensor(std::vector<int64_t> shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& x : t.data) x = rng.uniform(-1.0, 1.0);
  return t;
}

void bench_matmul(benchmark::State& state) {
  const int64_t n = state.range(0);
  Rng rng(1);
  Tensor a = random_tensor({n, n}, rng);
  Tensor b = random_tensor({n, n}, rng);
  Graph g(1, false);
  const NodeId pa = g.param("a", &a);
  const NodeId pb = g.param("b", &b);
  const NodeId loss = g.mean(g.matmul(pa, pb));
  g.mark_output(loss, "loss");
  for (auto _ : state) {
    g.evaluate();
    benchmark::DoNotOptimize(g.value(loss).data[0]);
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(bench_matmul)->Arg(32)->Arg(64)->Arg(128);

ModelParams bench_model(int64_t lstm_size) {
  std::vector<std::pair<std::string, int64_t>> entries;
  for (int i = 0; i < 50; ++i)
    entries.emplace_back("w" + std::to_string(i), 50 - i);
  EmbeddingMatrix emb;
  emb.vocab = Vocabulary::from_entries(std::move(entries));
  emb.dim = 32;
  emb.rows.assign(emb.vocab.size() * emb.dim, 0.0);
  Rng rng(2);
  for (int64_t i = 0; i < emb.vocab.size(); ++i) {
    if (i == Vocabulary::pad_index()) continue;
    for (int64_t d = 0; d < emb.dim; ++d)
      emb.rows[i * emb.dim + d] = rng.uniform(-0.5, 0.5);
  }
  ModelConfig cfg;
  cfg.embed_dim = emb.dim;
  cfg.lstm_size = lstm_size;
  cfg.lstm_layers = 2;
  cfg.attention_layers = 2;
  cfg.head = {HeadKind::regression, 1};
  return init_params(cfg, std::move(emb), 3);
}

std::vector<int64_t> bench_indices(int64_t steps) {
  std::vector<int64_t> indices(steps);
  Rng rng(4);
  for (auto& idx : indices) idx = 2 + static_cast<int64_t>(rng.below(50));
  return indices;
}

void bench_bilstm_forward(benchmark::State& state) {
  ModelParams params = bench_model(state.range(0));
  const auto indices = bench_indices(20);
  for (auto _ : state) {
    ModelGraph mg = build_model_graph(params, indices, false, 1);
    mg.graph.evaluate();
    benchmark::DoNotOptimize(mg.graph.value(mg.prediction).data[0]);
  }
}
BENCHMARK(bench_bilstm_forward)->Arg(16)->Arg(64);

void bench_bilstm_backward(benchmark::State& state) {
  ModelParams params = bench_model(state.range(0));
  const auto indices = bench_indices(20);
  LabeledExample example;
  example.scalar = 0.5;
  for (auto _ : state) {
    ModelGraph mg = build_model_graph(params, indices, true, 1);
    const NodeId loss =
        loss_node(mg.graph, mg.prediction, params.config.head, example, {});
    mg.graph.evaluate();
    auto grads = mg.graph.gradients(loss);
    benchmark::DoNotOptimize(grads.begin()->second.data[0]);
  }
}
BENCHMARK(bench_bilstm_backward)->Arg(16)->Arg(64);

std::vector<std::vector<Token>> bench_corpus(int64_t docs) {
  Rng rng(5);
  std::vector<std::vector<Token>> corpus(docs);
  for (auto& doc : corpus) {
    const int64_t len = 8 + static_cast<int64_t>(rng.below(8));
    for (int64_t i = 0; i < len; ++i)
      doc.push_back(word_token("w" + std::to_string(rng.below(200))));
  }
  return corpus;
}

void bench_sgns_epoch(benchmark::State& state) {
  const auto corpus = bench_corpus(state.range(0));
  SgnsConfig cfg;
  cfg.dim = 32;
  cfg.min_count = 1;
  cfg.epochs = 1;
  for (auto _ : state) {
    EmbeddingMatrix emb = train_skipgram(corpus, cfg);
    benchmark::DoNotOptimize(emb.rows[0]);
  }
}
BENCHMARK(bench_sgns_epoch)->Arg(200)->Arg(1000);

void bench_ppmi_build(benchmark::State& state) {
  const auto corpus = bench_corpus(state.range(0));
  const Vocabulary vocab = Vocabulary::build(corpus, 1);
  for (auto _ : state) {
    ContextModel ctx = build_context_model(corpus, vocab, 5);
    benchmark::DoNotOptimize(ctx.rows.size());
  }
}
BENCHMARK(bench_ppmi_build)->Arg(200)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
