#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "golden/vocab.hpp"

namespace golden {

// Architecture tag recorded in checkpoints: single-head causal self-attention
// trunk with learned positional embeddings, RMSNorm and a GELU MLP.
inline constexpr const char* kArchTag = "attn1";

struct PolicySpec {
  int vocab_size = 0;
  int embed_dim = 0;
  int hidden_dim = 0;
  int n_layers = 1;
  int context_len = 0;
  uint64_t seed = 0;

  void validate() const;  // throws ConfigError, including the parameter budget
};

struct TensorSlice {
  std::string name;
  size_t offset = 0;
  int rows = 0;
  int cols = 0;

  size_t size() const { return static_cast<size_t>(rows) * static_cast<size_t>(cols); }
};

// Maps named tensors onto the flat parameter vector, covering it exactly.
struct ParamLayout {
  std::vector<TensorSlice> tensors;
  size_t total = 0;

  static ParamLayout build(const PolicySpec& spec);
  const TensorSlice& at(std::string_view name) const;
};

struct PolicyParams {
  PolicySpec spec;
  std::string arch = kArchTag;
  ParamLayout layout;
  std::vector<float> values;

  std::span<const float> tensor(std::string_view name) const;
  std::span<float> tensor(std::string_view name);
};

// Per-position logits and scalar value estimates for one sequence. Also used
// as the carrier for output-side gradients in backward().
struct PolicyOutput {
  int seq_len = 0;
  int vocab = 0;
  std::vector<double> logits;  // seq_len * vocab, row-major
  std::vector<double> values;  // seq_len

  double logit(int t, int i) const {
    return logits[static_cast<size_t>(t) * static_cast<size_t>(vocab) + static_cast<size_t>(i)];
  }
  static PolicyOutput zeros(int seq_len, int vocab);
};

// Activation tape for one sequence; reusable across calls. Forward fills it,
// backward consumes it.
struct Workspace {
  // sized on first use for a given spec
  int cap = 0;
  int len = 0;
  std::vector<int> tokens;
  std::vector<double> x0;                 // embeddings, cap*D
  struct LayerTape {
    std::vector<double> n1, q, k, v, a, x2, n2, z, h, x3;  // cap*D or cap*H
    std::vector<double> att;                               // cap*cap rows
    std::vector<double> inv_r1, inv_r2;                    // cap
  };
  std::vector<LayerTape> layers;
  std::vector<double> xf;                 // cap*D
  std::vector<double> inv_rf;             // cap
  std::vector<double> logits;             // cap*V
  std::vector<double> values;             // cap
};

PolicyParams init_policy(const PolicySpec& spec);

// Causal forward pass; logits at position t depend only on tokens <= t.
// Throws StageError on context overflow.
PolicyOutput forward(const PolicyParams& params, std::span<const int> tokens);
PolicyOutput forward(const PolicyParams& params, std::span<const int> tokens, Workspace& ws);

// Exact reverse-mode gradient of forward() w.r.t. the parameters, given
// dL/dlogits and dL/dvalue packed in a PolicyOutput. The Workspace overload
// reuses the tape of the immediately preceding forward() on the same tokens
// and accumulates into grad_accum (sized layout.total).
std::vector<double> backward(const PolicyParams& params, std::span<const int> tokens,
                             const PolicyOutput& out_grad);
void backward(const PolicyParams& params, const Workspace& ws, const PolicyOutput& out_grad,
              std::span<double> grad_accum);

// Incremental decoder with cached attention state; step() returns exactly the
// logits/value that a full forward over the consumed prefix would produce.
class Decoder {
 public:
  explicit Decoder(const PolicyParams& params);

  struct Step {
    std::span<const double> logits;  // vocab_size, valid until the next step()
    double value = 0.0;
  };

  void reset();
  Step step(int token);
  int length() const { return ws_.len; }

 private:
  const PolicyParams& params_;
  Workspace ws_;
};

struct SampleResult {
  std::vector<int> tokens;        // generated tokens, terminal EOS included if produced
  std::vector<double> logprobs;   // log-prob of each generated token under the sampling dist's policy
  std::vector<double> values;     // value estimate at each decision point
  bool hit_eos = false;

  int content_len() const {
    return static_cast<int>(tokens.size()) - (hit_eos ? 1 : 0);
  }
};

// Autoregressive sampling from BOS + prompt. temperature == 0 is exact argmax
// decoding (ties broken toward the lowest id). Generation halts at the first
// EOS or after max_gen_len content tokens.
SampleResult sample(const PolicyParams& params, std::span<const int> prompt, double temperature,
                    int max_gen_len, uint64_t seed, int eos_id = Vocab::kEos);

// Checkpoint file: magic "GLDN", version byte, length-prefixed header
// (arch tag + spec fields), then the parameter vector as little-endian
// 32-bit floats. Round-trips bit-exactly.
void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_checkpoint(const std::filesystem::path& path);

// log-softmax of one logits row; numerically stable.
std::vector<double> log_softmax(std::span<const double> logits);
std::vector<double> softmax(std::span<const double> logits);

}  // namespace golden
