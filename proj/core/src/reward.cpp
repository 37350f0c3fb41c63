#include "golden/reward.hpp"

#include <zlib.h>

#include <cctype>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "golden/model.hpp"
#include "golden/util.hpp"

namespace golden {

RewardMode parse_reward_mode(std::string_view text) {
  if (text == "general") return RewardMode::general;
  if (text == "compatible") return RewardMode::compatible;
  if (text == "choice") return RewardMode::choice;
  throw ConfigError("unknown reward mode: " + std::string(text));
}

std::string to_string(RewardMode mode) {
  switch (mode) {
    case RewardMode::general: return "general";
    case RewardMode::compatible: return "compatible";
    case RewardMode::choice: return "choice";
  }
  throw std::logic_error("unreachable reward mode");
}

void RewardConfig::validate() const {
  if (e < 0.0 || e > 100.0) throw ConfigError("reward: e must lie in [0, 100]");
  if (e_hat < 0.0 || e_hat > 100.0) throw ConfigError("reward: e_hat must lie in [0, 100]");
  if (w < 0.0) throw ConfigError("reward: w must be >= 0");
  if (!(bpt > 0.0)) throw ConfigError("reward: bpt must be positive");
  if (deflate_level < 0 || deflate_level > 9) {
    throw ConfigError("reward: deflate_level must lie in [0, 9]");
  }
  if (mode == RewardMode::general && target_len < 1) {
    throw ConfigError("reward: target_len must be >= 1 in general mode");
  }
  if (alpha_format < 0.0 || alpha_correct < 0.0 ||
      std::abs(alpha_format + alpha_correct - 1.0) > 1e-9) {
    throw ConfigError("reward: choice weights must be nonnegative and sum to 1");
  }
  if (gibberish_penalty < 0.0) throw ConfigError("reward: gibberish_penalty must be >= 0");
  if (gzip_length_coef < 0.0) throw ConfigError("reward: gzip_length_coef must be >= 0");
}

int general_reward(int l, int l_gt, double e, bool inclusive) {
  if (l < 0) throw std::invalid_argument("general_reward: l must be >= 0");
  if (l_gt < 1) throw std::invalid_argument("general_reward: l_gt must be >= 1");
  double band = e / 100.0 * l_gt;
  double dev = std::abs(static_cast<double>(l) - static_cast<double>(l_gt));
  return (inclusive ? dev <= band : dev < band) ? 1 : 0;
}

int compatible_reward(int l, const Example& example, double e, bool inclusive) {
  if (!example.l_gt.has_value()) {
    throw StageError("compatible reward needs a per-example length target");
  }
  return general_reward(l, *example.l_gt, e, inclusive);
}

double compressed_len(const std::string& text, double bpt, int level) {
  if (!(bpt > 0.0)) throw std::invalid_argument("compressed_len: bpt must be positive");
  uLong bound = compressBound(static_cast<uLong>(text.size()));
  std::vector<Bytef> buf(static_cast<size_t>(bound));
  uLongf out_len = bound;
  int rc = compress2(buf.data(), &out_len, reinterpret_cast<const Bytef*>(text.data()),
                     static_cast<uLong>(text.size()), level);
  if (rc != Z_OK) throw StageError("deflate failed with code " + std::to_string(rc));
  return static_cast<double>(out_len) / bpt;
}

double compression_ratio(const std::string& text, int l, double bpt, int level) {
  if (l <= 0) return 0.0;
  return compressed_len(text, bpt, level) / static_cast<double>(l);
}

int validity_reward(const std::string& text, int l_gt, double e_hat, double bpt, int level) {
  if (l_gt < 1) throw std::invalid_argument("validity_reward: l_gt must be >= 1");
  double shortfall = static_cast<double>(l_gt) - compressed_len(text, bpt, level);
  return shortfall < e_hat / 100.0 * l_gt ? 1 : 0;
}

double pro_reward(std::span<const double> logits, int eos_id, double w) {
  if (eos_id < 0 || static_cast<size_t>(eos_id) >= logits.size()) {
    throw std::invalid_argument("pro_reward: eos id out of range");
  }
  std::vector<double> p = softmax(logits);
  return w * p[static_cast<size_t>(eos_id)];
}

std::vector<double> pro_reward_grad(std::span<const double> logits, int eos_id, double w) {
  if (eos_id < 0 || static_cast<size_t>(eos_id) >= logits.size()) {
    throw std::invalid_argument("pro_reward: eos id out of range");
  }
  std::vector<double> p = softmax(logits);
  double pe = p[static_cast<size_t>(eos_id)];
  std::vector<double> g(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    double ind = static_cast<int>(i) == eos_id ? 1.0 : 0.0;
    g[i] = w * pe * (ind - p[i]);
  }
  return g;
}

std::optional<char> parse_choice_letter(const std::string& text) {
  for (const std::string& raw : split(text, ' ')) {
    size_t b = 0;
    size_t e = raw.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(raw[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(raw[e - 1]))) --e;
    if (e - b == 1 && raw[b] >= 'A' && raw[b] <= 'D') return raw[b];
  }
  return std::nullopt;
}

double choice_reward(const std::string& text, char gold, double alpha_format,
                     double alpha_correct) {
  if (gold < 'A' || gold > 'D') throw std::invalid_argument("choice_reward: bad gold letter");
  std::optional<char> parsed = parse_choice_letter(text);
  double r = 0.0;
  if (parsed.has_value()) {
    r += alpha_format;
    if (*parsed == gold) r += alpha_correct;
  }
  return r;
}

RewardBreakdown total_reward(const std::string& text, int l, const Example& example,
                             const RewardConfig& config, const Vocab& vocab) {
  config.validate();
  RewardBreakdown b;
  b.l = l;
  b.compressed = compressed_len(text, config.bpt, config.deflate_level);

  if (config.mode == RewardMode::choice) {
    char gold = choice_gold_letter(example, vocab);
    b.r_len = choice_reward(text, gold, config.alpha_format, config.alpha_correct);
    b.r_total = b.r_len;
    return b;
  }

  int l_gt = config.mode == RewardMode::general
                 ? config.target_len
                 : (example.l_gt.has_value()
                        ? *example.l_gt
                        : throw StageError("compatible reward needs a per-example length target"));
  b.l_gt = l_gt;
  b.r_len = general_reward(l, l_gt, config.e, config.inclusive_bounds);
  b.r_validity = config.validity_enabled
                     ? validity_reward(text, l_gt, config.e_hat, config.bpt, config.deflate_level)
                     : 1.0;
  b.r_total = b.r_len * b.r_validity;

  if (config.gzip_length_coef > 0.0 && l_gt > 0) {
    b.r_total += config.gzip_length_coef * b.compressed / l_gt;
  }
  if (config.gibberish_penalty > 0.0 && l > 0 &&
      b.compressed / static_cast<double>(l) < 0.25) {
    b.r_total = std::max(0.0, b.r_total - config.gibberish_penalty);
  }
  return b;
}

}  // namespace golden
