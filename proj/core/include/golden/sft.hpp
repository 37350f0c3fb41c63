#pragma once

// Supervised fine-tuning with the three length-control strategies: train only
// on in-band responses, append a "TOTAL <n> TOKENS" count suffix as extra
// supervision, or add a continuous penalty on end-of-sequence probability mass
// away from the target position.

#include <optional>
#include <string>
#include <vector>

#include "golden/corpus.hpp"
#include "golden/model.hpp"
#include "golden/vocab.hpp"

namespace golden {

enum class SftStrategy { plain, length_filtered, prompt_augmented, eos_positional };

SftStrategy parse_sft_strategy(std::string_view text);
std::string to_string(SftStrategy strategy);

struct SftConfig {
  SftStrategy strategy = SftStrategy::plain;
  double learning_rate = 0.05;
  int batch_size = 16;
  int epochs = 10;
  double eos_loss_weight = 0.0;  // w_e; only meaningful for eos_positional
  int target_len = 32;           // l_gt for strategies that need one
  double band = 50.0;            // percent band used by length_filtered
  double clip_norm = 1.0;        // global gradient-norm ceiling
  uint64_t seed = 1;             // batch shuffling

  void validate() const;  // throws ConfigError
};

// One teacher-forcing pair. input is BOS + prompt + body with the last token
// dropped; target[t] is the token expected after consuming input[0..t], with
// kPad marking prompt positions the loss must skip.
struct SftPair {
  std::vector<int> input;
  std::vector<int> target;
  int gen_begin = 0;  // first row whose prediction belongs to the body
  std::optional<int> l_gt;
};

// Token rendering of "a total of <n> tokenizers" in the toy grammar:
// TOTAL <digits> TOKENS.
std::vector<int> count_suffix_tokens(int n, const Vocab& vocab);

// Builds training pairs for the configured strategy. length_filtered keeps
// only in-band examples (StageError when none survive); prompt_augmented
// inserts the count suffix between the response body and EOS.
std::vector<SftPair> make_sft_batch(const std::vector<Example>& examples, const SftConfig& config,
                                    const Vocab& vocab);

struct LossGrad {
  double loss = 0.0;
  PolicyOutput grad;  // d loss / d logits; value rows are zero
};

// Mean negative log-likelihood over rows whose target is not kPad.
LossGrad cross_entropy_loss(const PolicyOutput& out, std::span<const int> targets);

// w_e * sum_t kappa(t, l_gt) * p_eos(t) over decision rows t = 0..T-1, where
// kappa = min(((t - l_gt) / l_gt)^2, 4). Zero exactly when all EOS mass sits
// at t = l_gt. Requires l_gt < T.
LossGrad eos_position_loss(const PolicyOutput& out, int l_gt, double w_e, int eos_id = Vocab::kEos);

struct SftStepRow {
  int step = 0;
  int epoch = 0;
  double loss = 0.0;
  double eos_loss = 0.0;
};

struct SftResult {
  PolicyParams params;
  std::vector<SftStepRow> curve;
};

// Plain SGD with gradient clipping over shuffled minibatches. Deterministic
// under a fixed seed; non-finite loss aborts with a StageError.
SftResult sft_train(const PolicyParams& params, const DatasetSplit& split, const SftConfig& config,
                    const Vocab& vocab);

// Mean loss per epoch from a step curve, for convergence checks.
std::vector<double> epoch_mean_loss(const std::vector<SftStepRow>& curve);

}  // namespace golden
