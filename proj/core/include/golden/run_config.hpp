#pragma once

// Run configuration: a line-based `section.key = value` format covering every
// module, with canonical re-serialization and a stable content hash.

#include <filesystem>
#include <string>

#include "golden/corpus.hpp"
#include "golden/eval.hpp"
#include "golden/model.hpp"
#include "golden/ppo.hpp"
#include "golden/reward.hpp"
#include "golden/sft.hpp"

namespace golden {

struct RunConfig {
  std::string run_id = "run";
  std::string out_dir = "runs";
  uint64_t seed = 1;

  CorpusSpec corpus;
  PolicySpec model;  // vocab_size is filled from the builtin vocabulary
  SftConfig sft;
  PpoConfig ppo;
  std::string ppo_init = "sft";  // "sft" | "fresh": PPO's starting checkpoint
  std::string stages;            // nonempty: stepped schedule, StageSpec syntax
  RewardConfig reward;
  bool bpt_auto = true;  // measure bytes-per-token from the corpus
  EvalConfig eval;

  void validate() const;  // throws ConfigError

  // Per-stage configs with seeds derived from the run seed.
  CorpusSpec corpus_spec() const;
  PolicySpec policy_spec() const;
  SftConfig sft_config() const;
  PpoConfig ppo_config() const;
  EvalConfig eval_config() const;
  RewardConfig reward_config(double resolved_bpt) const;

  // Every key in sorted order, one `key = value` line each.
  std::string canonical() const;
  std::string config_hash() const;  // SHA-256 over the canonical bytes
};

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text);

}  // namespace golden
