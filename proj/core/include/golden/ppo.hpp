#pragma once

// PPO against the golden rewards: parallel rollout collection with per-token
// KL shaping toward a frozen reference policy, generalized advantage
// estimation, clipped-surrogate updates, and the stepped multi-target
// training schedule.

#include <string>
#include <vector>

#include "golden/corpus.hpp"
#include "golden/eval.hpp"
#include "golden/model.hpp"
#include "golden/reward.hpp"

namespace golden {

struct PpoConfig {
  double clip_eps = 0.2;
  double gamma = 1.0;
  double gae_lambda = 0.95;
  double kl_coef = 0.05;  // beta; per-token penalty toward the reference
  double learning_rate = 3e-4;
  int rollouts_per_batch = 32;
  int update_epochs = 4;
  double temperature = 1.0;
  int max_gen_len = 64;
  int total_episodes = 10000;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double sft_mix_coef = 0.0;  // optional supervised loss mixed into training
  double clip_norm = 1.0;
  int eval_every = 1000;        // episodes between validation snapshots
  double degeneracy_stop = 0.2; // halt when this fraction of outputs collapses
  uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

// One sampled episode with everything the update step needs.
struct Rollout {
  std::vector<int> prompt;
  std::vector<int> tokens;           // generated tokens, EOS included if hit
  std::vector<double> logprobs;      // acting policy, at the sampling temperature
  std::vector<double> ref_logprobs;  // frozen reference, same temperature
  std::vector<double> values;        // value estimate at each decision point
  std::vector<double> rewards;       // KL shaping; terminal golden reward on top
  std::vector<double> advantages;
  std::vector<double> returns;
  RewardBreakdown breakdown;
  size_t example_index = 0;
  uint64_t seed = 0;

  int steps() const { return static_cast<int>(tokens.size()); }
};

struct StageSpec {
  struct Stage {
    RewardMode mode = RewardMode::general;
    std::vector<int> targets;
    int episodes = 0;
  };
  std::vector<Stage> stages;

  void validate() const;  // throws ConfigError
  // "general:32:2000+compatible:16,32:3000"
  static StageSpec parse(std::string_view text);
  std::string to_string() const;
};

// Samples `count` episodes from the acting policy over prompts drawn from
// `examples`. Shaped reward r_t = -kl_coef * (logpi_act - logpi_ref); the
// golden terminal reward is added at the last generated token. Episode i uses
// the seed derived from (config.seed, first_episode + i).
std::vector<Rollout> collect_rollouts(const PolicyParams& acting, const PolicyParams& reference,
                                      const std::vector<Example>& examples, int count,
                                      uint64_t first_episode, const PpoConfig& config,
                                      const RewardConfig& reward, const Vocab& vocab);

// delta_t = r_t + gamma * v_{t+1} - v_t (terminal bootstrap 0);
// A_t = sum_k (gamma * lambda)^k delta_{t+k}; returns = A + v.
void gae(std::span<const double> rewards, std::span<const double> values, double gamma,
         double lambda, std::vector<double>& advantages, std::vector<double>& returns);

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double mean_kl = 0.0;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  int t = 0;
};

// One clipped-surrogate pass: accumulates d(loss)/d(params) into grad (sized
// to the parameter layout) and returns the pass statistics. Advantages are
// normalized to zero mean and unit variance across the batch first.
PpoStats ppo_gradient(const PolicyParams& params, const std::vector<Rollout>& rollouts,
                      const PpoConfig& config, std::span<double> grad);

// Runs config.update_epochs gradient passes over the batch, each followed by
// a norm-clipped Adam step. Stats are averaged over the passes. Non-finite
// losses abort with the offending rollout's seed in the message.
PpoStats ppo_update(PolicyParams& params, const std::vector<Rollout>& rollouts,
                    const PpoConfig& config, AdamState& opt);

struct PpoSnapshot {
  uint64_t episode = 0;
  double mean_reward = 0.0;
  double valid_fraction = 0.0;
  double mean_len = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  double degeneracy_fraction = 0.0;
};

struct PpoResult {
  PolicyParams params;       // best validation checkpoint
  PolicyParams final_params; // parameters at the last update
  std::vector<PpoSnapshot> history;
  std::vector<PolicyParams> snapshot_params;  // aligned with history
  bool stopped_degenerate = false;
  uint64_t episodes_run = 0;
};

// Full training loop: collect, estimate advantages, update, and snapshot on
// the validation split every eval_every episodes. Keeps the best checkpoint
// by valid fraction and stops early when degeneracy crosses the ceiling.
PpoResult ppo_train(const PolicyParams& initial, const DatasetSplit& split,
                    const PpoConfig& config, const RewardConfig& reward, const Vocab& vocab);

struct StageResult {
  std::vector<PpoResult> stages;
  PolicyParams params;  // output of the last stage
};

// Runs ppo_train once per stage, threading the trained parameters through and
// restricting each stage to examples compatible with its target set.
StageResult stepped_train(const PolicyParams& initial, const DatasetSplit& split,
                          const StageSpec& stages, const PpoConfig& config,
                          const RewardConfig& reward, const Vocab& vocab);

// CSV with the fixed snapshot schema: episode, mean_reward, valid_fraction,
// mean_len, mean_kl, clip_fraction, degeneracy_fraction.
std::string metrics_csv(const std::vector<PpoSnapshot>& history);

}  // namespace golden
