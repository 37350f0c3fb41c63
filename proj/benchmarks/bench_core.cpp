// Microbenchmarks for the hot paths: the policy forward/backward passes,
// autoregressive sampling, GAE, and the compression probe.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "golden/model.hpp"
#include "golden/ppo.hpp"
#include "golden/reward.hpp"
#include "golden/rng.hpp"
#include "golden/vocab.hpp"

namespace {

using namespace golden;

PolicySpec bench_spec() {
  PolicySpec spec;
  spec.vocab_size = Vocab::builtin().size();
  spec.embed_dim = 24;
  spec.hidden_dim = 48;
  spec.n_layers = 2;
  spec.context_len = 128;
  spec.seed = 7;
  return spec;
}

std::vector<int> bench_tokens(int n) {
  Rng rng(11);
  std::vector<int> tokens{Vocab::kBos};
  for (int i = 1; i < n; ++i) {
    tokens.push_back(4 + static_cast<int>(rng.uniform_below(80)));
  }
  return tokens;
}

void BM_Forward(benchmark::State& state) {
  PolicyParams params = init_policy(bench_spec());
  std::vector<int> tokens = bench_tokens(static_cast<int>(state.range(0)));
  Workspace ws;
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(params, tokens, ws));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(64)->Arg(128);

void BM_Backward(benchmark::State& state) {
  PolicyParams params = init_policy(bench_spec());
  std::vector<int> tokens = bench_tokens(static_cast<int>(state.range(0)));
  Workspace ws;
  PolicyOutput out = forward(params, tokens, ws);
  PolicyOutput grad = PolicyOutput::zeros(out.seq_len, out.vocab);
  Rng rng(13);
  for (auto& g : grad.logits) g = rng.normal();
  std::vector<double> accum(params.layout.total, 0.0);
  for (auto _ : state) {
    backward(params, ws, grad, accum);
    benchmark::DoNotOptimize(accum.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Backward)->Arg(16)->Arg(64)->Arg(128);

void BM_Sample(benchmark::State& state) {
  PolicyParams params = init_policy(bench_spec());
  std::vector<int> prompt = bench_tokens(8);
  prompt.erase(prompt.begin());  // sample() adds BOS itself
  uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sample(params, prompt, 1.0, static_cast<int>(state.range(0)), seed++));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sample)->Arg(16)->Arg(64);

void BM_Gae(benchmark::State& state) {
  Rng rng(17);
  std::vector<double> rewards(static_cast<size_t>(state.range(0)));
  std::vector<double> values(rewards.size());
  for (auto& r : rewards) r = rng.normal();
  for (auto& v : values) v = rng.normal();
  std::vector<double> adv, ret;
  for (auto _ : state) {
    gae(rewards, values, 0.99, 0.95, adv, ret);
    benchmark::DoNotOptimize(adv.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Gae)->Arg(64)->Arg(1024);

void BM_CompressedLen(benchmark::State& state) {
  Vocab vocab = Vocab::builtin();
  Rng rng(19);
  std::vector<int> ids;
  for (int i = 0; i < state.range(0); ++i) {
    ids.push_back(4 + static_cast<int>(rng.uniform_below(80)));
  }
  std::string text = vocab.detokenize(ids);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compressed_len(text, 4.0));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_CompressedLen)->Arg(32)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
