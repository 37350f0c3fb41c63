#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "golden/corpus.hpp"
#include "golden/model.hpp"
#include "golden/ppo.hpp"
#include "golden/reward.hpp"
#include "golden/rng.hpp"
#include "golden/util.hpp"
#include "golden/vocab.hpp"

using namespace golden;

namespace {

// Brute-force GAE: literal nested sum over the remaining horizon.
void brute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
               double gamma, double lambda, std::vector<double>& adv,
               std::vector<double>& ret) {
  const int T = static_cast<int>(rewards.size());
  adv.assign(rewards.size(), 0.0);
  ret.assign(rewards.size(), 0.0);
  for (int t = 0; t < T; ++t) {
    double a = 0.0;
    for (int k = 0; t + k < T; ++k) {
      double v_next = t + k + 1 < T ? values[static_cast<size_t>(t + k + 1)] : 0.0;
      double delta = rewards[static_cast<size_t>(t + k)] + gamma * v_next -
                     values[static_cast<size_t>(t + k)];
      a += std::pow(gamma * lambda, k) * delta;
    }
    adv[static_cast<size_t>(t)] = a;
    ret[static_cast<size_t>(t)] = a + values[static_cast<size_t>(t)];
  }
}

PolicySpec rollout_spec(const Vocab& vocab, uint64_t seed) {
  PolicySpec s;
  s.vocab_size = vocab.size();
  s.embed_dim = 12;
  s.hidden_dim = 24;
  s.n_layers = 1;
  s.context_len = 64;
  s.seed = seed;
  return s;
}

DatasetSplit tiny_corpus(uint64_t seed, const Vocab& vocab) {
  CorpusSpec spec;
  spec.n_examples = 40;
  spec.lengths = LengthDist::fixed(6);
  spec.seed = seed;
  return synth_corpus(spec, vocab);
}

PpoConfig tiny_ppo() {
  PpoConfig c;
  c.rollouts_per_batch = 8;
  c.max_gen_len = 10;
  c.total_episodes = 16;
  c.eval_every = 8;
  c.seed = 5;
  return c;
}

RewardConfig len6_reward() {
  RewardConfig r;
  r.target_len = 6;
  r.e = 50.0;
  r.bpt = 4.0;
  return r;
}

// Batch advantage normalization exactly as the update performs it.
std::vector<std::vector<double>> normalized_advantages(const std::vector<Rollout>& rollouts) {
  size_t n_tok = 0;
  double mean = 0.0;
  for (const Rollout& r : rollouts) {
    for (double a : r.advantages) mean += a;
    n_tok += r.advantages.size();
  }
  mean /= static_cast<double>(n_tok);
  double var = 0.0;
  for (const Rollout& r : rollouts) {
    for (double a : r.advantages) var += (a - mean) * (a - mean);
  }
  double inv_std = 1.0 / (std::sqrt(var / static_cast<double>(n_tok)) + 1e-8);
  std::vector<std::vector<double>> out(rollouts.size());
  for (size_t i = 0; i < rollouts.size(); ++i) {
    out[i].resize(rollouts[i].advantages.size());
    for (size_t t = 0; t < out[i].size(); ++t) {
      out[i][t] = (rollouts[i].advantages[t] - mean) * inv_std;
    }
  }
  return out;
}

std::vector<int> rollout_prefix(const Rollout& r) {
  std::vector<int> prefix;
  prefix.push_back(Vocab::kBos);
  prefix.insert(prefix.end(), r.prompt.begin(), r.prompt.end());
  prefix.insert(prefix.end(), r.tokens.begin(), r.tokens.end() - 1);
  return prefix;
}

}  // namespace

TEST_CASE("terminal-only reward with unit discounting telescopes") {
  std::vector<double> rewards{0.0, 0.0, 1.0};
  std::vector<double> values{0.0, 0.0, 0.0};
  std::vector<double> adv, ret;
  gae(rewards, values, 1.0, 1.0, adv, ret);
  REQUIRE(adv.size() == 3);
  for (double a : adv) CHECK(a == doctest::Approx(1.0).epsilon(1e-12));
  for (double r : ret) CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lambda zero reduces GAE to one-step TD residuals") {
  std::vector<double> rewards{0.5, -1.0, 2.0, 0.25};
  std::vector<double> values{0.1, 0.2, -0.3, 0.4};
  std::vector<double> adv, ret;
  gae(rewards, values, 0.9, 0.0, adv, ret);
  for (size_t t = 0; t < rewards.size(); ++t) {
    double v_next = t + 1 < values.size() ? values[t + 1] : 0.0;
    double delta = rewards[t] + 0.9 * v_next - values[t];
    CHECK(adv[t] == doctest::Approx(delta).epsilon(1e-12));
    CHECK(ret[t] == doctest::Approx(delta + values[t]).epsilon(1e-12));
  }
}

TEST_CASE("GAE matches the brute-force nested sum on random instances") {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    int T = 1 + static_cast<int>(rng.uniform_below(10));
    std::vector<double> rewards(static_cast<size_t>(T)), values(static_cast<size_t>(T));
    for (auto& r : rewards) r = rng.normal();
    for (auto& v : values) v = rng.normal();
    double gamma = rng.uniform01();
    double lambda = rng.uniform01();
    std::vector<double> adv, ret, b_adv, b_ret;
    gae(rewards, values, gamma, lambda, adv, ret);
    brute_gae(rewards, values, gamma, lambda, b_adv, b_ret);
    for (int t = 0; t < T; ++t) {
      CHECK(std::abs(adv[static_cast<size_t>(t)] - b_adv[static_cast<size_t>(t)]) < 1e-10);
      CHECK(std::abs(ret[static_cast<size_t>(t)] - b_ret[static_cast<size_t>(t)]) < 1e-10);
    }
  }
}

TEST_CASE("stage schedules parse, validate and re-render") {
  StageSpec spec = StageSpec::parse("general:32:2000+compatible:16,32:3000");
  REQUIRE(spec.stages.size() == 2);
  CHECK(spec.stages[0].mode == RewardMode::general);
  CHECK(spec.stages[0].targets == std::vector<int>{32});
  CHECK(spec.stages[0].episodes == 2000);
  CHECK(spec.stages[1].mode == RewardMode::compatible);
  CHECK(spec.stages[1].targets == std::vector<int>{16, 32});
  CHECK(spec.stages[1].episodes == 3000);
  CHECK(spec.to_string() == "general:32:2000+compatible:16,32:3000");
  CHECK(StageSpec::parse("choice::500").stages[0].targets.empty());

  CHECK_THROWS_AS((void)StageSpec::parse("general:16,32:100"), ConfigError);
  CHECK_THROWS_AS((void)StageSpec::parse("compatible::100"), ConfigError);
  CHECK_THROWS_AS((void)StageSpec::parse("general:32:0"), ConfigError);
  CHECK_THROWS_AS((void)StageSpec::parse("general:32"), ConfigError);
  CHECK_THROWS_AS((void)StageSpec::parse("osmotic:32:10"), ConfigError);
}

TEST_CASE("rollout collection is deterministic") {
  Vocab vocab = Vocab::builtin();
  DatasetSplit ds = tiny_corpus(1, vocab);
  PolicyParams params = init_policy(rollout_spec(vocab, 2));
  PpoConfig config = tiny_ppo();
  RewardConfig reward = len6_reward();
  auto a = collect_rollouts(params, params, ds.train, 8, 0, config, reward, vocab);
  auto b = collect_rollouts(params, params, ds.train, 8, 0, config, reward, vocab);
  REQUIRE(a.size() == 8);
  REQUIRE(b.size() == 8);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].tokens == b[i].tokens);
    CHECK(a[i].logprobs == b[i].logprobs);
    CHECK(a[i].rewards == b[i].rewards);
    CHECK(a[i].advantages == b[i].advantages);
    CHECK(a[i].example_index == b[i].example_index);
  }
  // Distinct episode indices give distinct seeds and (almost surely) episodes.
  auto c = collect_rollouts(params, params, ds.train, 8, 100, config, reward, vocab);
  bool any_diff = false;
  for (size_t i = 0; i < a.size(); ++i) any_diff = any_diff || a[i].tokens != c[i].tokens;
  CHECK(any_diff);
}

TEST_CASE("with zero KL coefficient only the terminal token is rewarded") {
  Vocab vocab = Vocab::builtin();
  DatasetSplit ds = tiny_corpus(3, vocab);
  PolicyParams params = init_policy(rollout_spec(vocab, 4));
  PpoConfig config = tiny_ppo();
  config.kl_coef = 0.0;
  RewardConfig reward = len6_reward();
  auto rollouts = collect_rollouts(params, params, ds.train, 8, 0, config, reward, vocab);
  for (const Rollout& r : rollouts) {
    REQUIRE(!r.rewards.empty());
    for (size_t t = 0; t + 1 < r.rewards.size(); ++t) CHECK(r.rewards[t] == 0.0);

    // Terminal reward must equal an independent recomputation from the text.
    std::span<const int> content(r.tokens.data(),
                                 r.tokens.size() - (r.tokens.back() == Vocab::kEos ? 1 : 0));
    std::string text = vocab.detokenize(content);
    RewardBreakdown again = total_reward(text, static_cast<int>(content.size()),
                                         ds.train[r.example_index], reward, vocab);
    CHECK(r.rewards.back() == doctest::Approx(again.r_total).epsilon(1e-12));
    CHECK(r.breakdown.r_total == doctest::Approx(again.r_total).epsilon(1e-12));
    CHECK(r.breakdown.l == again.l);
  }
}

TEST_CASE("identical acting and reference policies produce zero KL shaping") {
  Vocab vocab = Vocab::builtin();
  DatasetSplit ds = tiny_corpus(5, vocab);
  PolicyParams params = init_policy(rollout_spec(vocab, 6));
  PpoConfig config = tiny_ppo();
  config.kl_coef = 0.1;
  auto rollouts = collect_rollouts(params, params, ds.train, 8, 0, config, len6_reward(), vocab);
  for (const Rollout& r : rollouts) {
    REQUIRE(r.ref_logprobs.size() == r.logprobs.size());
    for (size_t t = 0; t < r.logprobs.size(); ++t) {
      CHECK(r.logprobs[t] == doctest::Approx(r.ref_logprobs[t]).epsilon(1e-12));
    }
    for (size_t t = 0; t + 1 < r.rewards.size(); ++t) {
      CHECK(r.rewards[t] == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("sampled logprobs equal a teacher-forced replay at the same temperature") {
  Vocab vocab = Vocab::builtin();
  DatasetSplit ds = tiny_corpus(7, vocab);
  PolicyParams params = init_policy(rollout_spec(vocab, 8));
  PpoConfig config = tiny_ppo();
  config.temperature = 0.8;
  auto rollouts = collect_rollouts(params, params, ds.train, 4, 0, config, len6_reward(), vocab);
  for (const Rollout& r : rollouts) {
    std::vector<int> prefix = rollout_prefix(r);
    PolicyOutput out = forward(params, prefix);
    std::vector<double> scaled(static_cast<size_t>(out.vocab));
    for (size_t i = 0; i < r.tokens.size(); ++i) {
      int row = static_cast<int>(r.prompt.size() + i);
      for (int j = 0; j < out.vocab; ++j) {
        scaled[static_cast<size_t>(j)] = out.logit(row, j) / config.temperature;
      }
      std::vector<double> lp = log_softmax(scaled);
      CHECK(r.logprobs[i] ==
            doctest::Approx(lp[static_cast<size_t>(r.tokens[i])]).epsilon(1e-12));
      CHECK(r.values[i] == doctest::Approx(out.values[static_cast<size_t>(row)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("rollout advantages are exactly GAE over the shaped rewards") {
  Vocab vocab = Vocab::builtin();
  DatasetSplit ds = tiny_corpus(9, vocab);
  PolicyParams params = init_policy(rollout_spec(vocab, 10));
  PpoConfig config = tiny_ppo();
  config.kl_coef = 0.05;
  auto rollouts = collect_rollouts(params, params, ds.train, 6, 0, config, len6_reward(), vocab);
  for (const Rollout& r : rollouts) {
    std::vector<double> adv, ret;
    brute_gae(r.rewards, r.values, config.gamma, config.gae_lambda, adv, ret);
    REQUIRE(adv.size() == r.advantages.size());
    for (size_t t = 0; t < adv.size(); ++t) {
      CHECK(std::abs(r.advantages[t] - adv[t]) < 1e-10);
      CHECK(std::abs(r.returns[t] - ret[t]) < 1e-10);
    }
  }
}

TEST_CASE("at the sampling point the PPO gradient is the REINFORCE gradient") {
  Vocab vocab = Vocab::builtin();
  DatasetSplit ds = tiny_corpus(11, vocab);
  PolicyParams params = init_policy(rollout_spec(vocab, 12));
  PpoConfig config = tiny_ppo();
  config.kl_coef = 0.0;
  config.update_epochs = 1;
  config.value_coef = 0.0;
  config.entropy_coef = 0.0;
  config.clip_eps = 0.99;
  auto rollouts = collect_rollouts(params, params, ds.train, 8, 0, config, len6_reward(), vocab);

  std::vector<double> ppo_grad(params.layout.total, 0.0);
  PpoStats stats = ppo_gradient(params, rollouts, config, ppo_grad);

  // Vanilla REINFORCE with the same normalized advantages as baseline-corrected
  // weights: d loss / d logit = -A_t * (1[j=a] - p_j) / (tau * n_tok).
  auto norm_adv = normalized_advantages(rollouts);
  size_t n_tok = 0;
  for (const Rollout& r : rollouts) n_tok += r.tokens.size();
  const double inv_ntok = 1.0 / static_cast<double>(n_tok);
  std::vector<double> rf_grad(params.layout.total, 0.0);
  double mean_surrogate = 0.0;
  for (size_t ri = 0; ri < rollouts.size(); ++ri) {
    const Rollout& r = rollouts[ri];
    std::vector<int> prefix = rollout_prefix(r);
    PolicyOutput out = forward(params, prefix);
    PolicyOutput out_grad = PolicyOutput::zeros(out.seq_len, out.vocab);
    std::vector<double> scaled(static_cast<size_t>(out.vocab));
    for (size_t i = 0; i < r.tokens.size(); ++i) {
      int row = static_cast<int>(r.prompt.size() + i);
      for (int j = 0; j < out.vocab; ++j) {
        scaled[static_cast<size_t>(j)] = out.logit(row, j) / config.temperature;
      }
      std::vector<double> lp = log_softmax(scaled);
      double adv = norm_adv[ri][i];
      mean_surrogate += adv * inv_ntok;
      double d = adv * inv_ntok;
      double* grow =
          out_grad.logits.data() + static_cast<size_t>(row) * static_cast<size_t>(out.vocab);
      for (int j = 0; j < out.vocab; ++j) {
        double pj = std::exp(lp[static_cast<size_t>(j)]);
        double ind = j == r.tokens[i] ? 1.0 : 0.0;
        grow[j] = -d * (ind - pj) / config.temperature;
      }
    }
    std::vector<double> g = backward(params, prefix, out_grad);
    for (size_t k = 0; k < g.size(); ++k) rf_grad[k] += g[k];
  }

  double max_abs = 0.0, max_diff = 0.0;
  for (size_t k = 0; k < rf_grad.size(); ++k) {
    max_abs = std::max(max_abs, std::abs(rf_grad[k]));
    max_diff = std::max(max_diff, std::abs(rf_grad[k] - ppo_grad[k]));
  }
  REQUIRE(max_abs > 0.0);
  CHECK(max_diff / max_abs < 1e-5);
  CHECK(stats.clip_fraction == 0.0);
  CHECK(stats.policy_loss == doctest::Approx(-mean_surrogate).epsilon(1e-9));
}

TEST_CASE("fully clipped tokens contribute exactly zero gradient") {
  Vocab vocab = Vocab::builtin();
  DatasetSplit ds = tiny_corpus(13, vocab);
  PolicyParams params = init_policy(rollout_spec(vocab, 14));
  PpoConfig config = tiny_ppo();
  config.kl_coef = 0.0;
  config.update_epochs = 1;
  config.value_coef = 0.0;
  config.entropy_coef = 0.0;
  auto rollouts = collect_rollouts(params, params, ds.train, 8, 0, config, len6_reward(), vocab);

  // Push every token's old logprob so that the ratio lands far outside the
  // clip band on the side matching its advantage sign.
  auto norm_adv = normalized_advantages(rollouts);
  for (size_t ri = 0; ri < rollouts.size(); ++ri) {
    for (size_t i = 0; i < rollouts[ri].logprobs.size(); ++i) {
      if (norm_adv[ri][i] > 0.0) {
        rollouts[ri].logprobs[i] -= 5.0;  // rho = e^5, advantage positive
      } else {
        rollouts[ri].logprobs[i] += 5.0;  // rho = e^-5, advantage negative
      }
    }
  }

  std::vector<double> grad(params.layout.total, 0.0);
  PpoStats stats = ppo_gradient(params, rollouts, config, grad);
  size_t n_zero_adv = 0;
  for (auto& per : norm_adv) {
    for (double a : per) {
      if (a == 0.0) ++n_zero_adv;
    }
  }
  REQUIRE(n_zero_adv == 0);
  CHECK(stats.clip_fraction == 1.0);
  for (double g : grad) CHECK(std::abs(g) < 1e-7);
}

TEST_CASE("clip arithmetic on a crafted two-token batch") {
  Vocab vocab = Vocab::builtin();
  DatasetSplit ds = tiny_corpus(15, vocab);
  PolicyParams params = init_policy(rollout_spec(vocab, 16));
  PpoConfig config = tiny_ppo();
  config.kl_coef = 0.0;
  config.max_gen_len = 1;  // one decision per rollout
  config.value_coef = 0.0;
  config.entropy_coef = 0.0;
  auto rollouts = collect_rollouts(params, params, ds.train, 2, 0, config, len6_reward(), vocab);
  REQUIRE(rollouts[0].tokens.size() == 1);
  REQUIRE(rollouts[1].tokens.size() == 1);

  // Advantages {1, -1} normalize to ~{+1, -1}.
  rollouts[0].advantages = {1.0};
  rollouts[1].advantages = {-1.0};
  // Token 0: rho = 1.5 with positive advantage -> clipped surrogate 1.2.
  rollouts[0].logprobs[0] -= std::log(1.5);
  // Token 1: rho = 1 with negative advantage -> surrogate -1.
  std::vector<double> grad(params.layout.total, 0.0);
  PpoStats stats = ppo_gradient(params, rollouts, config, grad);
  CHECK(stats.clip_fraction == doctest::Approx(0.5));
  CHECK(stats.policy_loss == doctest::Approx(-(1.2 - 1.0) / 2.0).epsilon(1e-6));
}

TEST_CASE("the PPO loss gradient matches finite differences") {
  Vocab vocab = Vocab::builtin();
  DatasetSplit ds = tiny_corpus(17, vocab);
  PolicyParams params = init_policy(rollout_spec(vocab, 18));
  PpoConfig config = tiny_ppo();
  config.kl_coef = 0.05;
  config.entropy_coef = 0.01;
  auto rollouts = collect_rollouts(params, params, ds.train, 4, 0, config, len6_reward(), vocab);

  std::vector<double> grad(params.layout.total, 0.0);
  ppo_gradient(params, rollouts, config, grad);

  auto norm_adv = normalized_advantages(rollouts);
  size_t n_tok = 0;
  for (const Rollout& r : rollouts) n_tok += r.tokens.size();
  const double inv_ntok = 1.0 / static_cast<double>(n_tok);
  const double lo = 1.0 - config.clip_eps, hi = 1.0 + config.clip_eps;

  auto loss_of = [&](const PolicyParams& p) {
    double loss = 0.0;
    for (size_t ri = 0; ri < rollouts.size(); ++ri) {
      const Rollout& r = rollouts[ri];
      std::vector<int> prefix = rollout_prefix(r);
      PolicyOutput out = forward(p, prefix);
      std::vector<double> scaled(static_cast<size_t>(out.vocab));
      for (size_t i = 0; i < r.tokens.size(); ++i) {
        int row = static_cast<int>(r.prompt.size() + i);
        for (int j = 0; j < out.vocab; ++j) {
          scaled[static_cast<size_t>(j)] = out.logit(row, j) / config.temperature;
        }
        std::vector<double> lp = log_softmax(scaled);
        double rho = std::exp(lp[static_cast<size_t>(r.tokens[i])] - r.logprobs[i]);
        double adv = norm_adv[ri][i];
        loss -= std::min(rho * adv, std::clamp(rho, lo, hi) * adv) * inv_ntok;
        double entropy = 0.0;
        for (double l : lp) entropy -= std::exp(l) * l;
        loss -= config.entropy_coef * entropy * inv_ntok;
        double verr = out.values[static_cast<size_t>(row)] - r.returns[i];
        loss += config.value_coef * verr * verr * inv_ntok;
      }
    }
    return loss;
  };

  Rng rng(55);
  double max_rel = 0.0;
  for (int probe = 0; probe < 50; ++probe) {
    size_t k = rng.uniform_below(params.layout.total);
    PolicyParams p = params;
    double orig = static_cast<double>(p.values[k]);
    double eps = 1e-4 * std::max(1.0, std::abs(orig));
    p.values[k] = static_cast<float>(orig + eps);
    double up_at = static_cast<double>(p.values[k]);
    double up = loss_of(p);
    p.values[k] = static_cast<float>(orig - eps);
    double down_at = static_cast<double>(p.values[k]);
    double down = loss_of(p);
    double fd = (up - down) / (up_at - down_at);
    double rel = std::abs(fd - grad[k]) / std::max(std::abs(fd) + std::abs(grad[k]), 1e-2);
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel < 1e-3);
}

TEST_CASE("update rejects empty batches and mismatched accumulators") {
  Vocab vocab = Vocab::builtin();
  PolicyParams params = init_policy(rollout_spec(vocab, 20));
  PpoConfig config = tiny_ppo();
  AdamState opt;
  std::vector<Rollout> none;
  CHECK_THROWS_AS((void)ppo_update(params, none, config, opt), StageError);
  std::vector<double> wrong(3, 0.0);
  CHECK_THROWS_AS((void)ppo_gradient(params, none, config, wrong), StageError);
}

TEST_CASE("zero episodes leave the policy untouched") {
  Vocab vocab = Vocab::builtin();
  DatasetSplit ds = tiny_corpus(21, vocab);
  PolicyParams params = init_policy(rollout_spec(vocab, 22));
  PpoConfig config = tiny_ppo();
  config.total_episodes = 0;
  PpoResult result = ppo_train(params, ds, config, len6_reward(), vocab);
  CHECK(result.params.values == params.values);
  CHECK(result.episodes_run == 0);
}

TEST_CASE("ppo training runs, snapshots and stays deterministic") {
  Vocab vocab = Vocab::builtin();
  DatasetSplit ds = tiny_corpus(23, vocab);
  PolicyParams params = init_policy(rollout_spec(vocab, 24));
  PpoConfig config = tiny_ppo();  // 16 episodes in batches of 8, snapshot every 8
  PpoResult a = ppo_train(params, ds, config, len6_reward(), vocab);
  PpoResult b = ppo_train(params, ds, config, len6_reward(), vocab);
  CHECK(a.episodes_run == 16);
  REQUIRE(a.history.size() == 2);
  CHECK(a.history[0].episode == 8);
  CHECK(a.history[1].episode == 16);
  CHECK(a.final_params.values == b.final_params.values);
  CHECK(a.params.values == b.params.values);
  CHECK(metrics_csv(a.history) == metrics_csv(b.history));
  CHECK(a.snapshot_params.size() == a.history.size());
}

TEST_CASE("a single-stage schedule is identical to direct training") {
  Vocab vocab = Vocab::builtin();
  DatasetSplit ds = tiny_corpus(25, vocab);
  PolicyParams params = init_policy(rollout_spec(vocab, 26));
  PpoConfig config = tiny_ppo();
  RewardConfig reward = len6_reward();

  PpoResult direct = ppo_train(params, ds, config, reward, vocab);
  StageResult staged =
      stepped_train(params, ds, StageSpec::parse("general:6:16"), config, reward, vocab);
  REQUIRE(staged.stages.size() == 1);
  CHECK(staged.params.values == direct.params.values);
  CHECK(metrics_csv(staged.stages[0].history) == metrics_csv(direct.history));
}

TEST_CASE("metrics CSV uses the fixed snapshot schema") {
  PpoSnapshot snap;
  snap.episode = 100;
  snap.mean_reward = 0.5;
  snap.valid_fraction = 0.75;
  snap.mean_len = 31.5;
  snap.mean_kl = 0.01;
  snap.clip_fraction = 0.125;
  snap.degeneracy_fraction = 0.0;
  std::string csv = metrics_csv({snap});
  CHECK(csv ==
        "episode,mean_reward,valid_fraction,mean_len,mean_kl,clip_fraction,"
        "degeneracy_fraction\n100,0.5,0.75,31.5,0.01,0.125,0\n");
}
