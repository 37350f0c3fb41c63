#pragma once

// Programmatic "golden" rewards. Every signal here is computed from the
// episode text alone: hard length bands, a compression probe that catches
// degenerate repetition, an EOS-probability bonus, and the bifurcated
// single-choice reward. All functions are pure and thread-safe.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "golden/corpus.hpp"

namespace golden {

enum class RewardMode { general, compatible, choice };

RewardMode parse_reward_mode(std::string_view text);
std::string to_string(RewardMode mode);

struct RewardConfig {
  RewardMode mode = RewardMode::general;
  int target_len = 32;     // l_gt when every episode shares one target
  double e = 50.0;         // percent error band for the length reward
  double e_hat = 50.0;     // percent band for the validity (compression) check
  double w = 0.0;          // weight of the EOS-probability bonus; 0 disables it
  double bpt = 4.0;        // corpus mean bytes per token
  int deflate_level = 6;   // fixed so training and evaluation compress identically
  bool validity_enabled = true;
  bool inclusive_bounds = true;
  double alpha_format = 0.5;   // choice mode: weight for "looks like an answer"
  double alpha_correct = 0.5;  // choice mode: weight for "the answer is right"
  // Known-failed shaping variants, kept reachable but off by default.
  double gibberish_penalty = 0.0;  // subtracted when the compression probe fires
  double gzip_length_coef = 0.0;   // adds coef * compressed_len / l_gt

  void validate() const;  // throws ConfigError
};

// 1 iff the output length sits inside the band around l_gt, where the band
// half-width is e percent of l_gt. Inclusive endpoints by default.
int general_reward(int l, int l_gt, double e, bool inclusive = true);

// Per-prompt variant: reads l_gt from the example. Throws StageError when the
// example carries no target.
int compatible_reward(int l, const Example& example, double e, bool inclusive = true);

// DEFLATE-compress the UTF-8 bytes of text and convert the compressed byte
// count into token-equivalent units by dividing by bpt.
double compressed_len(const std::string& text, double bpt, int level = 6);

// compressed_len / l; degenerate repetition drives this toward zero while
// diverse grammar text stays near one.
double compression_ratio(const std::string& text, int l, double bpt, int level = 6);

// 1 iff l_gt - compressed_len(text) < e_hat% * l_gt. One-sided: only outputs
// whose compressed length collapses below the band are rejected.
int validity_reward(const std::string& text, int l_gt, double e_hat, double bpt, int level = 6);

// w * softmax(logits)[eos_id].
double pro_reward(std::span<const double> logits, int eos_id, double w);

// Analytic gradient of pro_reward with respect to the logits.
std::vector<double> pro_reward_grad(std::span<const double> logits, int eos_id, double w);

// First standalone option letter (A-D) in the text, ignoring punctuation stuck
// to the token ("B." or "(B)" both parse as B).
std::optional<char> parse_choice_letter(const std::string& text);

// alpha_format * [a letter parsed] + alpha_correct * [that letter == gold].
double choice_reward(const std::string& text, char gold, double alpha_format,
                     double alpha_correct);

struct RewardBreakdown {
  int l = 0;
  int l_gt = 0;
  double r_len = 0.0;
  double r_validity = 1.0;
  double r_total = 0.0;
  double compressed = 0.0;  // token-equivalent compressed length of the text
};

// Episode reward for the configured mode: length (or choice) reward gated by
// the validity check, plus the optional failed-variant shaping terms. The
// vocabulary is needed only to re-derive the gold letter of choice prompts.
RewardBreakdown total_reward(const std::string& text, int l, const Example& example,
                             const RewardConfig& config, const Vocab& vocab);

}  // namespace golden
