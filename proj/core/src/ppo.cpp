#include "golden/ppo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "golden/rng.hpp"
#include "golden/sft.hpp"
#include "golden/util.hpp"

namespace golden {

void PpoConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("ppo: clip_eps must lie in (0, 1)");
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("ppo: gamma must lie in [0, 1]");
  if (gae_lambda < 0.0 || gae_lambda > 1.0) throw ConfigError("ppo: gae_lambda must lie in [0, 1]");
  if (kl_coef < 0.0) throw ConfigError("ppo: kl_coef must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("ppo: learning_rate must be positive");
  if (rollouts_per_batch < 1) throw ConfigError("ppo: rollouts_per_batch must be >= 1");
  if (update_epochs < 1) throw ConfigError("ppo: update_epochs must be >= 1");
  if (!(temperature > 0.0)) throw ConfigError("ppo: temperature must be positive");
  if (max_gen_len < 1) throw ConfigError("ppo: max_gen_len must be >= 1");
  if (total_episodes < 0) throw ConfigError("ppo: total_episodes must be >= 0");
  if (entropy_coef < 0.0) throw ConfigError("ppo: entropy_coef must be >= 0");
  if (value_coef < 0.0) throw ConfigError("ppo: value_coef must be >= 0");
  if (sft_mix_coef < 0.0) throw ConfigError("ppo: sft_mix_coef must be >= 0");
  if (!(clip_norm > 0.0)) throw ConfigError("ppo: clip_norm must be positive");
  if (eval_every < 1) throw ConfigError("ppo: eval_every must be >= 1");
  if (!(degeneracy_stop > 0.0 && degeneracy_stop <= 1.0)) {
    throw ConfigError("ppo: degeneracy_stop must lie in (0, 1]");
  }
}

void StageSpec::validate() const {
  if (stages.empty()) throw ConfigError("stages: schedule must be nonempty");
  for (const Stage& s : stages) {
    if (s.episodes < 1) throw ConfigError("stages: episode budgets must be positive");
    if (s.mode == RewardMode::general && s.targets.size() != 1) {
      throw ConfigError("stages: a general stage needs exactly one target");
    }
    if (s.mode == RewardMode::compatible && s.targets.empty()) {
      throw ConfigError("stages: a compatible stage needs at least one target");
    }
    for (int t : s.targets) {
      if (t < 1) throw ConfigError("stages: targets must be >= 1");
    }
  }
}

StageSpec StageSpec::parse(std::string_view text) {
  StageSpec spec;
  for (const std::string& part : split(std::string(text), '+')) {
    std::vector<std::string> fields = split(part, ':');
    if (fields.size() != 3) {
      throw ConfigError("stages: expected mode:targets:episodes, got '" + part + "'");
    }
    Stage st;
    st.mode = parse_reward_mode(trim(fields[0]));
    std::string targets(trim(fields[1]));
    if (!targets.empty()) {
      for (const std::string& t : split(targets, ',')) {
        try {
          st.targets.push_back(std::stoi(std::string(trim(t))));
        } catch (const std::exception&) {
          throw ConfigError("stages: bad target '" + t + "'");
        }
      }
    }
    try {
      st.episodes = std::stoi(std::string(trim(fields[2])));
    } catch (const std::exception&) {
      throw ConfigError("stages: bad episode budget in '" + part + "'");
    }
    spec.stages.push_back(std::move(st));
  }
  spec.validate();
  return spec;
}

std::string StageSpec::to_string() const {
  std::string out;
  for (size_t i = 0; i < stages.size(); ++i) {
    if (i > 0) out.push_back('+');
    const Stage& s = stages[i];
    out += golden::to_string(s.mode);
    out.push_back(':');
    for (size_t j = 0; j < s.targets.size(); ++j) {
      if (j > 0) out.push_back(',');
      out += std::to_string(s.targets[j]);
    }
    out.push_back(':');
    out += std::to_string(s.episodes);
  }
  return out;
}

void gae(std::span<const double> rewards, std::span<const double> values, double gamma,
         double lambda, std::vector<double>& advantages, std::vector<double>& returns) {
  if (rewards.size() != values.size()) {
    throw std::invalid_argument("gae: rewards and values differ in length");
  }
  size_t n = rewards.size();
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  double acc = 0.0;
  for (size_t i = n; i-- > 0;) {
    double next_v = i + 1 < n ? values[i + 1] : 0.0;
    double delta = rewards[i] + gamma * next_v - values[i];
    acc = delta + gamma * lambda * acc;
    advantages[i] = acc;
    returns[i] = acc + values[i];
  }
}

namespace {

// Log-probabilities of the chosen tokens under `params` at the sampling
// temperature, teacher-forcing BOS + prompt + gen. Row prompt_len + i emits
// the distribution that produced gen[i].
std::vector<double> replay_logprobs(const PolicyParams& params, std::span<const int> prompt,
                                    std::span<const int> gen, double temperature) {
  std::vector<int> prefix;
  prefix.reserve(1 + prompt.size() + gen.size() - 1);
  prefix.push_back(Vocab::kBos);
  prefix.insert(prefix.end(), prompt.begin(), prompt.end());
  prefix.insert(prefix.end(), gen.begin(), gen.end() - 1);
  PolicyOutput out = forward(params, prefix);
  std::vector<double> lps(gen.size());
  std::vector<double> scaled(static_cast<size_t>(out.vocab));
  for (size_t i = 0; i < gen.size(); ++i) {
    size_t row = prompt.size() + i;
    for (int j = 0; j < out.vocab; ++j) {
      scaled[static_cast<size_t>(j)] = out.logit(static_cast<int>(row), j) / temperature;
    }
    lps[i] = log_softmax(scaled)[static_cast<size_t>(gen[i])];
  }
  return lps;
}

int episode_target(const Example& ex, const RewardConfig& reward) {
  if (reward.mode == RewardMode::general) return reward.target_len;
  if (reward.mode == RewardMode::compatible && ex.l_gt.has_value()) return *ex.l_gt;
  return 0;
}

}  // namespace

std::vector<Rollout> collect_rollouts(const PolicyParams& acting, const PolicyParams& reference,
                                      const std::vector<Example>& examples, int count,
                                      uint64_t first_episode, const PpoConfig& config,
                                      const RewardConfig& reward, const Vocab& vocab) {
  config.validate();
  reward.validate();
  if (examples.empty()) throw StageError("ppo: no prompts to roll out");
  if (count < 0) throw std::invalid_argument("collect_rollouts: count must be >= 0");

  std::vector<Rollout> rollouts(static_cast<size_t>(count));
  parallel_for(static_cast<size_t>(count), [&](size_t i) {
    Rollout& r = rollouts[i];
    r.seed = Rng::derive(config.seed, first_episode + i);
    Rng ep_rng(r.seed);
    r.example_index = ep_rng.uniform_below(examples.size());
    const Example& ex = examples[r.example_index];
    r.prompt = ex.prompt;

    SampleResult s = sample(acting, r.prompt, config.temperature, config.max_gen_len,
                            Rng::derive(r.seed, 1));
    r.tokens = std::move(s.tokens);
    r.logprobs = std::move(s.logprobs);
    r.values = std::move(s.values);

    if (config.kl_coef > 0.0) {
      r.ref_logprobs = replay_logprobs(reference, r.prompt, r.tokens, config.temperature);
    } else {
      r.ref_logprobs.assign(r.tokens.size(), 0.0);
    }

    int content = s.hit_eos ? static_cast<int>(r.tokens.size()) - 1
                            : static_cast<int>(r.tokens.size());
    std::span<const int> body(r.tokens.data(), static_cast<size_t>(content));
    std::string text = vocab.detokenize(body);
    r.breakdown = total_reward(text, content, ex, reward, vocab);

    r.rewards.resize(r.tokens.size());
    for (size_t t = 0; t < r.tokens.size(); ++t) {
      r.rewards[t] = config.kl_coef > 0.0
                         ? -config.kl_coef * (r.logprobs[t] - r.ref_logprobs[t])
                         : 0.0;
    }
    double terminal = r.breakdown.r_total;
    if (reward.w > 0.0) {
      int l_gt = episode_target(ex, reward);
      if (l_gt > 0 && static_cast<int>(r.tokens.size()) > l_gt) {
        // EOS-probability bonus read off the acting policy's raw logits at
        // the target decision index.
        std::vector<int> prefix;
        prefix.push_back(Vocab::kBos);
        prefix.insert(prefix.end(), r.prompt.begin(), r.prompt.end());
        prefix.insert(prefix.end(), r.tokens.begin(), r.tokens.begin() + l_gt);
        PolicyOutput out = forward(acting, prefix);
        int row = static_cast<int>(prefix.size()) - 1;
        std::vector<double> logits(static_cast<size_t>(out.vocab));
        for (int j = 0; j < out.vocab; ++j) logits[static_cast<size_t>(j)] = out.logit(row, j);
        terminal += pro_reward(logits, Vocab::kEos, reward.w);
      }
    }
    r.rewards.back() += terminal;
    gae(r.rewards, r.values, config.gamma, config.gae_lambda, r.advantages, r.returns);
  });
  return rollouts;
}

namespace {

struct ChunkGrad {
  std::vector<double> grad;
  double policy_obj = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  long clipped = 0;
  bool finite = true;
  size_t bad_rollout = 0;
};

}  // namespace

PpoStats ppo_gradient(const PolicyParams& params, const std::vector<Rollout>& rollouts,
                      const PpoConfig& config, std::span<double> grad) {
  config.validate();
  if (rollouts.empty()) throw StageError("ppo: gradient requested for an empty batch");
  const size_t n_params = params.layout.total;
  if (grad.size() != n_params) {
    throw std::invalid_argument("ppo_gradient: accumulator size mismatch");
  }

  // Per-batch advantage normalization.
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
  std::vector<std::vector<double>> norm_adv(rollouts.size());
  for (size_t i = 0; i < rollouts.size(); ++i) {
    norm_adv[i].resize(rollouts[i].advantages.size());
    for (size_t t = 0; t < norm_adv[i].size(); ++t) {
      norm_adv[i][t] = (rollouts[i].advantages[t] - mean) * inv_std;
    }
  }

  double kl_sum = 0.0;
  for (const Rollout& r : rollouts) {
    for (size_t t = 0; t < r.logprobs.size(); ++t) kl_sum += r.logprobs[t] - r.ref_logprobs[t];
  }

  PpoStats stats;
  stats.mean_kl = kl_sum / static_cast<double>(n_tok);
  const double inv_ntok = 1.0 / static_cast<double>(n_tok);
  const double tau = config.temperature;
  const double lo = 1.0 - config.clip_eps;
  const double hi = 1.0 + config.clip_eps;

  size_t n_chunks = std::min<size_t>(rollouts.size(), 8);
  std::vector<ChunkGrad> chunks(n_chunks);

  // Chunked so each rollout's contribution lands in a fixed accumulator in a
  // fixed order; the merge below is deterministic.
  parallel_for(n_chunks, [&](size_t ci) {
    ChunkGrad& c = chunks[ci];
    c.grad.assign(n_params, 0.0);
    Workspace ws;
    for (size_t ri = ci; ri < rollouts.size(); ri += n_chunks) {
      const Rollout& r = rollouts[ri];
      size_t p_len = r.prompt.size();
      size_t n_gen = r.tokens.size();
      std::vector<int> prefix;
      prefix.reserve(1 + p_len + n_gen - 1);
      prefix.push_back(Vocab::kBos);
      prefix.insert(prefix.end(), r.prompt.begin(), r.prompt.end());
      prefix.insert(prefix.end(), r.tokens.begin(), r.tokens.end() - 1);

      PolicyOutput out = forward(params, prefix, ws);
      PolicyOutput out_grad = PolicyOutput::zeros(out.seq_len, out.vocab);
      std::vector<double> scaled(static_cast<size_t>(out.vocab));

      for (size_t i = 0; i < n_gen; ++i) {
        int row = static_cast<int>(p_len + i);
        for (int j = 0; j < out.vocab; ++j) {
          scaled[static_cast<size_t>(j)] = out.logit(row, j) / tau;
        }
        std::vector<double> lp = log_softmax(scaled);
        int a = r.tokens[i];
        double lp_new = lp[static_cast<size_t>(a)];
        double rho = std::exp(lp_new - r.logprobs[i]);
        double adv = norm_adv[ri][i];

        bool clipped = (rho > hi && adv > 0.0) || (rho < lo && adv < 0.0);
        double surrogate = std::min(rho * adv, std::clamp(rho, lo, hi) * adv);
        c.policy_obj += surrogate * inv_ntok;
        if (clipped) ++c.clipped;

        double dj_dlp = clipped ? 0.0 : rho * adv * inv_ntok;

        double entropy = 0.0;
        for (size_t j = 0; j < lp.size(); ++j) entropy -= std::exp(lp[j]) * lp[j];
        c.entropy += entropy * inv_ntok;

        double* grow =
            out_grad.logits.data() + static_cast<size_t>(row) * static_cast<size_t>(out.vocab);
        for (int j = 0; j < out.vocab; ++j) {
          double pj = std::exp(lp[static_cast<size_t>(j)]);
          double d_lp_dz = ((j == a ? 1.0 : 0.0) - pj) / tau;
          // loss = -objective, so the policy term enters negated
          grow[j] = -dj_dlp * d_lp_dz;
          if (config.entropy_coef > 0.0) {
            double dh_dz = -pj * (lp[static_cast<size_t>(j)] + entropy) / tau;
            grow[j] -= config.entropy_coef * dh_dz * inv_ntok;
          }
        }

        double v = out.values[static_cast<size_t>(row)];
        double verr = v - r.returns[i];
        c.value_loss += verr * verr * inv_ntok;
        out_grad.values[static_cast<size_t>(row)] = 2.0 * config.value_coef * verr * inv_ntok;

        if (!std::isfinite(rho) || !std::isfinite(surrogate)) {
          c.finite = false;
          c.bad_rollout = ri;
        }
      }
      backward(params, ws, out_grad, c.grad);
    }
  });

  for (const ChunkGrad& c : chunks) {
    if (!c.finite) {
      const Rollout& bad = rollouts[c.bad_rollout];
      std::string toks;
      for (size_t i = 0; i < bad.tokens.size() && i < 32; ++i) {
        if (i > 0) toks.push_back(' ');
        toks += std::to_string(bad.tokens[i]);
      }
      throw StageError("ppo: non-finite loss (rollout seed " + std::to_string(bad.seed) +
                       ", tokens " + toks + ")");
    }
  }

  long n_clipped = 0;
  for (const ChunkGrad& c : chunks) {
    for (size_t i = 0; i < n_params; ++i) grad[i] += c.grad[i];
    stats.policy_loss -= c.policy_obj;
    stats.value_loss += c.value_loss;
    stats.entropy += c.entropy;
    n_clipped += c.clipped;
  }
  stats.clip_fraction = static_cast<double>(n_clipped) / static_cast<double>(n_tok);
  return stats;
}

PpoStats ppo_update(PolicyParams& params, const std::vector<Rollout>& rollouts,
                    const PpoConfig& config, AdamState& opt) {
  config.validate();
  if (rollouts.empty()) throw StageError("ppo: update called with no rollouts");
  const size_t n_params = params.layout.total;
  if (opt.m.size() != n_params) {
    opt.m.assign(n_params, 0.0);
    opt.v.assign(n_params, 0.0);
    opt.t = 0;
  }

  PpoStats stats;
  std::vector<double> grad(n_params, 0.0);
  for (int pass = 0; pass < config.update_epochs; ++pass) {
    std::fill(grad.begin(), grad.end(), 0.0);
    PpoStats pass_stats = ppo_gradient(params, rollouts, config, grad);
    stats.policy_loss += pass_stats.policy_loss / config.update_epochs;
    stats.value_loss += pass_stats.value_loss / config.update_epochs;
    stats.entropy += pass_stats.entropy / config.update_epochs;
    stats.clip_fraction += pass_stats.clip_fraction / config.update_epochs;
    stats.mean_kl = pass_stats.mean_kl;

    double norm_sq = 0.0;
    for (size_t i = 0; i < n_params; ++i) norm_sq += grad[i] * grad[i];
    double norm = std::sqrt(norm_sq);
    double scale = norm > config.clip_norm ? config.clip_norm / norm : 1.0;

    opt.t += 1;
    const double b1 = 0.9;
    const double b2 = 0.999;
    double bc1 = 1.0 - std::pow(b1, opt.t);
    double bc2 = 1.0 - std::pow(b2, opt.t);
    for (size_t i = 0; i < n_params; ++i) {
      double g = grad[i] * scale;
      opt.m[i] = b1 * opt.m[i] + (1.0 - b1) * g;
      opt.v[i] = b2 * opt.v[i] + (1.0 - b2) * g * g;
      double step = config.learning_rate * (opt.m[i] / bc1) / (std::sqrt(opt.v[i] / bc2) + 1e-8);
      params.values[i] = static_cast<float>(static_cast<double>(params.values[i]) - step);
    }
  }
  return stats;
}

namespace {

DatasetSplit validation_view(const DatasetSplit& split) {
  DatasetSplit v;
  v.seed = split.seed;
  v.test = split.validation;
  return v;
}

PpoSnapshot take_snapshot(const PolicyParams& params, const DatasetSplit& split,
                          const PpoConfig& config, const RewardConfig& reward, const Vocab& vocab,
                          uint64_t episode) {
  // Snapshot the policy at its own sampling temperature: PPO optimizes the
  // sampled distribution, so best-checkpoint selection and the degeneracy
  // stop should track that distribution rather than the argmax trajectory.
  // The seed is fixed so successive snapshots are paired comparisons.
  EvalConfig ec;
  ec.temperature = config.temperature;
  ec.seed = Rng::derive(config.seed, 0x5eed);
  ec.max_gen_len = config.max_gen_len;
  DatasetSplit view = validation_view(split);
  EvalOutcome outcome = evaluate(params, view, ec, reward, vocab);
  PpoSnapshot snap;
  snap.episode = episode;
  snap.valid_fraction = outcome.report.valid_fraction;
  snap.mean_len = outcome.report.mean_len;
  snap.degeneracy_fraction = outcome.report.degeneracy_fraction;
  return snap;
}

}  // namespace

PpoResult ppo_train(const PolicyParams& initial, const DatasetSplit& split,
                    const PpoConfig& config, const RewardConfig& reward, const Vocab& vocab) {
  config.validate();
  reward.validate();
  if (split.train.empty()) throw StageError("ppo: training split is empty");
  if (split.validation.empty()) throw StageError("ppo: validation split is empty");

  PpoResult result;
  result.params = initial;
  result.final_params = initial;
  if (config.total_episodes == 0) return result;

  const PolicyParams reference = initial;  // frozen
  PolicyParams current = initial;
  AdamState opt;
  double best_valid = -1.0;

  std::vector<SftPair> mix_pairs;
  Rng mix_rng(Rng::derive(config.seed, 0x9e3779b9u));
  if (config.sft_mix_coef > 0.0) {
    SftConfig sc;
    sc.strategy = SftStrategy::plain;
    mix_pairs = make_sft_batch(split.train, sc, vocab);
  }

  uint64_t next_eval = config.eval_every;
  double last_reward = 0.0;
  double last_kl = 0.0;
  double last_clip = 0.0;

  while (result.episodes_run < static_cast<uint64_t>(config.total_episodes)) {
    uint64_t remaining = static_cast<uint64_t>(config.total_episodes) - result.episodes_run;
    int count = static_cast<int>(
        std::min<uint64_t>(remaining, static_cast<uint64_t>(config.rollouts_per_batch)));
    std::vector<Rollout> batch = collect_rollouts(current, reference, split.train, count,
                                                  result.episodes_run, config, reward, vocab);
    PpoStats stats = ppo_update(current, batch, config, opt);
    result.episodes_run += static_cast<uint64_t>(count);

    double reward_sum = 0.0;
    for (const Rollout& r : batch) reward_sum += r.breakdown.r_total;
    last_reward = reward_sum / count;
    last_kl = stats.mean_kl;
    last_clip = stats.clip_fraction;

    if (config.sft_mix_coef > 0.0 && !mix_pairs.empty()) {
      // One interleaved supervised step on ground-truth data, scaled down by
      // the mixing coefficient.
      size_t pick = mix_rng.uniform_below(mix_pairs.size());
      const SftPair& pair = mix_pairs[pick];
      Workspace ws;
      PolicyOutput out = forward(current, pair.input, ws);
      LossGrad ce = cross_entropy_loss(out, pair.target);
      std::vector<double> g(current.layout.total, 0.0);
      backward(current, ws, ce.grad, g);
      double norm_sq = 0.0;
      for (double x : g) norm_sq += x * x;
      double norm = std::sqrt(norm_sq);
      double scale = norm > config.clip_norm ? config.clip_norm / norm : 1.0;
      double lr = config.learning_rate * config.sft_mix_coef * scale;
      for (size_t i = 0; i < g.size(); ++i) {
        current.values[i] = static_cast<float>(static_cast<double>(current.values[i]) - lr * g[i]);
      }
    }

    bool final_batch = result.episodes_run >= static_cast<uint64_t>(config.total_episodes);
    if (result.episodes_run >= next_eval || final_batch) {
      while (next_eval <= result.episodes_run) next_eval += config.eval_every;
      PpoSnapshot snap =
          take_snapshot(current, split, config, reward, vocab, result.episodes_run);
      snap.mean_reward = last_reward;
      snap.mean_kl = last_kl;
      snap.clip_fraction = last_clip;
      result.history.push_back(snap);
      result.snapshot_params.push_back(current);
      if (snap.valid_fraction >= best_valid) {
        best_valid = snap.valid_fraction;
        result.params = current;
      }
      if (snap.degeneracy_fraction > config.degeneracy_stop) {
        result.stopped_degenerate = true;
        break;
      }
    }
  }
  result.final_params = current;
  return result;
}

namespace {

std::vector<Example> stage_examples(const std::vector<Example>& in, const StageSpec::Stage& st) {
  std::vector<Example> out;
  for (const Example& ex : in) {
    switch (st.mode) {
      case RewardMode::general: {
        // Single shared target: keep untargeted prompts plus ones that ask
        // for exactly this length.
        bool ok = ex.tag != ExampleTag::choice &&
                  (!ex.l_gt.has_value() || *ex.l_gt == st.targets[0]);
        if (ok) out.push_back(ex);
        break;
      }
      case RewardMode::compatible: {
        if (ex.l_gt.has_value() &&
            std::find(st.targets.begin(), st.targets.end(), *ex.l_gt) != st.targets.end()) {
          out.push_back(ex);
        }
        break;
      }
      case RewardMode::choice: {
        if (ex.tag == ExampleTag::choice) out.push_back(ex);
        break;
      }
    }
  }
  return out;
}

}  // namespace

StageResult stepped_train(const PolicyParams& initial, const DatasetSplit& split,
                          const StageSpec& stages, const PpoConfig& config,
                          const RewardConfig& reward, const Vocab& vocab) {
  stages.validate();
  StageResult result;
  result.params = initial;
  for (size_t si = 0; si < stages.stages.size(); ++si) {
    const StageSpec::Stage& st = stages.stages[si];
    DatasetSplit stage_split;
    stage_split.seed = split.seed;
    stage_split.train = stage_examples(split.train, st);
    stage_split.validation = stage_examples(split.validation, st);
    stage_split.test = stage_examples(split.test, st);
    if (stage_split.train.empty() || stage_split.validation.empty()) {
      throw StageError("stage " + std::to_string(si) + " has no compatible examples");
    }

    RewardConfig stage_reward = reward;
    stage_reward.mode = st.mode;
    if (st.mode == RewardMode::general) stage_reward.target_len = st.targets[0];

    PpoConfig stage_config = config;
    stage_config.total_episodes = st.episodes;
    // A single-stage schedule must reproduce a plain ppo_train run exactly,
    // so the first stage keeps the configured seed untouched.
    stage_config.seed = si == 0 ? config.seed : Rng::derive(config.seed, 0xabcd0000u + si);

    PpoResult stage_result =
        ppo_train(result.params, stage_split, stage_config, stage_reward, vocab);
    result.params = stage_result.params;
    result.stages.push_back(std::move(stage_result));
  }
  return result;
}

std::string metrics_csv(const std::vector<PpoSnapshot>& history) {
  std::string out =
      "episode,mean_reward,valid_fraction,mean_len,mean_kl,clip_fraction,degeneracy_fraction\n";
  for (const PpoSnapshot& s : history) {
    out += std::to_string(s.episode) + "," + format_double(s.mean_reward) + "," +
           format_double(s.valid_fraction) + "," + format_double(s.mean_len) + "," +
           format_double(s.mean_kl) + "," + format_double(s.clip_fraction) + "," +
           format_double(s.degeneracy_fraction) + "\n";
  }
  return out;
}

}  // namespace golden
