#include "golden/sft.hpp"

#include <algorithm>
#include <cmath>

#include "golden/rng.hpp"
#include "golden/util.hpp"

namespace golden {

SftStrategy parse_sft_strategy(std::string_view text) {
  if (text == "plain") return SftStrategy::plain;
  if (text == "length-filtered") return SftStrategy::length_filtered;
  if (text == "prompt-augmented") return SftStrategy::prompt_augmented;
  if (text == "eos-positional") return SftStrategy::eos_positional;
  throw ConfigError("unknown sft strategy: " + std::string(text));
}

std::string to_string(SftStrategy strategy) {
  switch (strategy) {
    case SftStrategy::plain: return "plain";
    case SftStrategy::length_filtered: return "length-filtered";
    case SftStrategy::prompt_augmented: return "prompt-augmented";
    case SftStrategy::eos_positional: return "eos-positional";
  }
  throw std::logic_error("unreachable sft strategy");
}

void SftConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("sft: learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("sft: batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("sft: epochs must be >= 0");
  if (eos_loss_weight < 0.0) throw ConfigError("sft: eos_loss_weight must be >= 0");
  if (eos_loss_weight > 0.0 && strategy != SftStrategy::eos_positional) {
    throw ConfigError("sft: eos_loss_weight requires the eos-positional strategy");
  }
  if (strategy != SftStrategy::plain && target_len < 1) {
    throw ConfigError("sft: target_len must be >= 1 for this strategy");
  }
  if (band < 0.0 || band > 100.0) throw ConfigError("sft: band must lie in [0, 100]");
  if (!(clip_norm > 0.0)) throw ConfigError("sft: clip_norm must be positive");
}

std::vector<int> count_suffix_tokens(int n, const Vocab& vocab) {
  if (n < 0) throw std::invalid_argument("count suffix needs a nonnegative count");
  std::vector<int> out;
  out.push_back(vocab.id("TOTAL"));
  for (int d : digit_tokens(n, vocab)) out.push_back(d);
  out.push_back(vocab.id("TOKENS"));
  return out;
}

namespace {

SftPair pair_from(const Example& ex, const std::vector<int>& body) {
  SftPair p;
  std::vector<int> full;
  full.reserve(1 + ex.prompt.size() + body.size());
  full.push_back(Vocab::kBos);
  full.insert(full.end(), ex.prompt.begin(), ex.prompt.end());
  full.insert(full.end(), body.begin(), body.end());
  p.input.assign(full.begin(), full.end() - 1);
  p.target.resize(p.input.size());
  size_t prompt_end = 1 + ex.prompt.size();  // first body index in full
  for (size_t t = 0; t < p.input.size(); ++t) {
    p.target[t] = t + 1 >= prompt_end ? full[t + 1] : Vocab::kPad;
  }
  p.gen_begin = static_cast<int>(ex.prompt.size());
  p.l_gt = ex.l_gt;
  return p;
}

}  // namespace

std::vector<SftPair> make_sft_batch(const std::vector<Example>& examples, const SftConfig& config,
                                    const Vocab& vocab) {
  if (examples.empty()) throw StageError("sft: no examples to build batches from");
  const std::vector<Example>* source = &examples;
  std::vector<Example> filtered;
  if (config.strategy == SftStrategy::length_filtered) {
    filtered = filter_by_length(examples, config.target_len, config.band);
    source = &filtered;
  }
  std::vector<SftPair> pairs;
  pairs.reserve(source->size());
  for (const Example& ex : *source) {
    if (ex.response.empty() || ex.response.back() != Vocab::kEos) {
      throw StageError("sft: example response does not end with EOS");
    }
    if (config.strategy == SftStrategy::prompt_augmented) {
      std::vector<int> body(ex.response.begin(), ex.response.end() - 1);
      std::vector<int> suffix = count_suffix_tokens(ex.response_len(), vocab);
      body.insert(body.end(), suffix.begin(), suffix.end());
      body.push_back(Vocab::kEos);
      pairs.push_back(pair_from(ex, body));
    } else {
      pairs.push_back(pair_from(ex, ex.response));
    }
  }
  return pairs;
}

LossGrad cross_entropy_loss(const PolicyOutput& out, std::span<const int> targets) {
  if (static_cast<int>(targets.size()) != out.seq_len) {
    throw std::invalid_argument("cross_entropy_loss: target length mismatch");
  }
  LossGrad lg;
  lg.grad = PolicyOutput::zeros(out.seq_len, out.vocab);
  int n_valid = 0;
  for (int t = 0; t < out.seq_len; ++t) {
    if (targets[static_cast<size_t>(t)] != Vocab::kPad) ++n_valid;
  }
  if (n_valid == 0) return lg;
  for (int t = 0; t < out.seq_len; ++t) {
    int tgt = targets[static_cast<size_t>(t)];
    if (tgt == Vocab::kPad) continue;
    if (tgt < 0 || tgt >= out.vocab) throw std::invalid_argument("cross_entropy_loss: bad target id");
    std::span<const double> row(out.logits.data() + static_cast<size_t>(t) * out.vocab,
                                static_cast<size_t>(out.vocab));
    std::vector<double> lp = log_softmax(row);
    lg.loss -= lp[static_cast<size_t>(tgt)] / n_valid;
    double* grow = lg.grad.logits.data() + static_cast<size_t>(t) * out.vocab;
    for (int i = 0; i < out.vocab; ++i) {
      double p = std::exp(lp[static_cast<size_t>(i)]);
      grow[i] = (p - (i == tgt ? 1.0 : 0.0)) / n_valid;
    }
  }
  return lg;
}

LossGrad eos_position_loss(const PolicyOutput& out, int l_gt, double w_e, int eos_id) {
  if (l_gt < 1) throw std::invalid_argument("eos_position_loss: l_gt must be >= 1");
  if (l_gt >= out.seq_len) {
    throw std::invalid_argument("eos_position_loss: l_gt must be below the sequence length");
  }
  if (eos_id < 0 || eos_id >= out.vocab) {
    throw std::invalid_argument("eos_position_loss: eos id out of range");
  }
  LossGrad lg;
  lg.grad = PolicyOutput::zeros(out.seq_len, out.vocab);
  for (int t = 0; t < out.seq_len; ++t) {
    double rel = (static_cast<double>(t) - l_gt) / l_gt;
    double kappa = std::min(rel * rel, 4.0);
    if (kappa == 0.0) continue;
    std::span<const double> row(out.logits.data() + static_cast<size_t>(t) * out.vocab,
                                static_cast<size_t>(out.vocab));
    std::vector<double> p = softmax(row);
    double pe = p[static_cast<size_t>(eos_id)];
    lg.loss += w_e * kappa * pe;
    double* grow = lg.grad.logits.data() + static_cast<size_t>(t) * out.vocab;
    for (int i = 0; i < out.vocab; ++i) {
      double ind = i == eos_id ? 1.0 : 0.0;
      grow[i] += w_e * kappa * pe * (ind - p[static_cast<size_t>(i)]);
    }
  }
  return lg;
}

std::vector<double> epoch_mean_loss(const std::vector<SftStepRow>& curve) {
  std::vector<double> sums;
  std::vector<int> counts;
  for (const auto& row : curve) {
    if (row.epoch >= static_cast<int>(sums.size())) {
      sums.resize(static_cast<size_t>(row.epoch) + 1, 0.0);
      counts.resize(static_cast<size_t>(row.epoch) + 1, 0);
    }
    sums[static_cast<size_t>(row.epoch)] += row.loss;
    counts[static_cast<size_t>(row.epoch)] += 1;
  }
  std::vector<double> means(sums.size());
  for (size_t i = 0; i < sums.size(); ++i) {
    means[i] = counts[i] > 0 ? sums[i] / counts[i] : 0.0;
  }
  return means;
}

SftResult sft_train(const PolicyParams& params, const DatasetSplit& split, const SftConfig& config,
                    const Vocab& vocab) {
  config.validate();
  if (vocab.size() != params.spec.vocab_size) {
    throw ConfigError("sft: vocabulary size does not match the model");
  }
  SftResult result;
  result.params = params;
  if (config.epochs == 0) return result;

  std::vector<SftPair> pairs = make_sft_batch(split.train, config, vocab);
  for (const SftPair& p : pairs) {
    if (static_cast<int>(p.input.size()) > params.spec.context_len) {
      throw StageError("sft: training pair exceeds the model context length");
    }
  }

  Rng rng(config.seed);
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  const size_t n_params = result.params.layout.total;
  std::vector<double> grad(n_params, 0.0);
  int step = 0;

  struct Chunk {
    std::vector<double> grad;
    double loss = 0.0;
    double eos = 0.0;
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(config.batch_size)) {
      size_t end = std::min(order.size(), begin + static_cast<size_t>(config.batch_size));
      size_t batch_n = end - begin;

      // Chunked accumulation with a serial ordered merge keeps the float
      // summation order fixed, so reruns are bit-identical.
      size_t n_chunks = std::min<size_t>(batch_n, 8);
      std::vector<Chunk> chunks(n_chunks);
      parallel_for(n_chunks, [&](size_t ci) {
        Chunk& c = chunks[ci];
        c.grad.assign(n_params, 0.0);
        Workspace ws;
        for (size_t bi = ci; bi < batch_n; bi += n_chunks) {
          const SftPair& pair = pairs[order[begin + bi]];
          PolicyOutput out = forward(result.params, pair.input, ws);
          LossGrad ce = cross_entropy_loss(out, pair.target);
          double eos_part = 0.0;
          if (config.strategy == SftStrategy::eos_positional && config.eos_loss_weight > 0.0) {
            // Penalize EOS probability mass away from the target decision
            // index, over the body rows only; bodies shorter than the target
            // contribute nothing.
            int gen_rows = out.seq_len - pair.gen_begin;
            int l_gt = pair.l_gt.value_or(config.target_len);
            if (l_gt < gen_rows) {
              PolicyOutput gen;
              gen.seq_len = gen_rows;
              gen.vocab = out.vocab;
              gen.logits.assign(
                  out.logits.begin() + static_cast<std::ptrdiff_t>(pair.gen_begin) * out.vocab,
                  out.logits.end());
              gen.values.assign(static_cast<size_t>(gen_rows), 0.0);
              LossGrad el = eos_position_loss(gen, l_gt, config.eos_loss_weight);
              eos_part = el.loss;
              size_t base = static_cast<size_t>(pair.gen_begin) * static_cast<size_t>(out.vocab);
              for (size_t i = 0; i < el.grad.logits.size(); ++i) {
                ce.grad.logits[base + i] += el.grad.logits[i];
              }
            }
          }
          backward(result.params, ws, ce.grad, c.grad);
          c.loss += ce.loss + eos_part;
          c.eos += eos_part;
        }
      });

      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      double batch_eos = 0.0;
      for (const Chunk& c : chunks) {
        for (size_t i = 0; i < n_params; ++i) grad[i] += c.grad[i];
        batch_loss += c.loss;
        batch_eos += c.eos;
      }

      double inv_n = 1.0 / static_cast<double>(batch_n);
      double norm_sq = 0.0;
      for (size_t i = 0; i < n_params; ++i) {
        grad[i] *= inv_n;
        norm_sq += grad[i] * grad[i];
      }
      double norm = std::sqrt(norm_sq);
      double scale = norm > config.clip_norm ? config.clip_norm / norm : 1.0;
      for (size_t i = 0; i < n_params; ++i) {
        double v = static_cast<double>(result.params.values[i]) -
                   config.learning_rate * scale * grad[i];
        result.params.values[i] = static_cast<float>(v);
      }

      double mean_loss = batch_loss * inv_n;
      if (!std::isfinite(mean_loss)) {
        throw StageError("sft diverged at step " + std::to_string(step) +
                         " (non-finite loss); lower the learning rate");
      }
      result.curve.push_back({step, epoch, mean_loss, batch_eos * inv_n});
      ++step;
    }
  }
  return result;
}

}  // namespace golden
