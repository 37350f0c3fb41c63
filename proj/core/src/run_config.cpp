#include "golden/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "golden/rng.hpp"
#include "golden/util.hpp"

namespace golden {

namespace {

int parse_int(const std::string& v) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("expected an integer, got '" + v + "'");
  }
  return out;
}

uint64_t parse_u64(const std::string& v) {
  uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& v) {
  try {
    size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(out)) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("expected a real number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

std::string format_ratios(const double (&r)[3]) {
  return format_double(r[0]) + "," + format_double(r[1]) + "," + format_double(r[2]);
}

void parse_ratios(const std::string& v, double (&r)[3]) {
  std::vector<std::string> parts = split(v, ',');
  if (parts.size() != 3) throw ConfigError("expected three ratios, got '" + v + "'");
  for (int i = 0; i < 3; ++i) r[i] = parse_real(std::string(trim(parts[static_cast<size_t>(i)])));
}

struct Key {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::map<std::string, Key>& key_table() {
  static const std::map<std::string, Key> table = [] {
    std::map<std::string, Key> t;
    auto add = [&t](const std::string& name, std::function<void(RunConfig&, const std::string&)> set,
                    std::function<std::string(const RunConfig&)> get) {
      t[name] = Key{std::move(set), std::move(get)};
    };

    add("run.id", [](RunConfig& c, const std::string& v) { c.run_id = v; },
        [](const RunConfig& c) { return c.run_id; });
    add("run.out", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
        [](const RunConfig& c) { return c.out_dir; });
    add("run.seed", [](RunConfig& c, const std::string& v) { c.seed = parse_u64(v); },
        [](const RunConfig& c) { return std::to_string(c.seed); });

    add("corpus.n", [](RunConfig& c, const std::string& v) { c.corpus.n_examples = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.corpus.n_examples); });
    add("corpus.lengths",
        [](RunConfig& c, const std::string& v) { c.corpus.lengths = LengthDist::parse(v); },
        [](const RunConfig& c) { return c.corpus.lengths.to_string(); });
    add("corpus.mix", [](RunConfig& c, const std::string& v) { c.corpus.mix = TaskMix::parse(v); },
        [](const RunConfig& c) { return c.corpus.mix.to_string(); });
    add("corpus.max_gen_len",
        [](RunConfig& c, const std::string& v) { c.corpus.max_gen_len = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.corpus.max_gen_len); });
    add("corpus.ratios",
        [](RunConfig& c, const std::string& v) { parse_ratios(v, c.corpus.ratios); },
        [](const RunConfig& c) { return format_ratios(c.corpus.ratios); });

    add("model.embed_dim",
        [](RunConfig& c, const std::string& v) { c.model.embed_dim = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.model.embed_dim); });
    add("model.hidden_dim",
        [](RunConfig& c, const std::string& v) { c.model.hidden_dim = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.model.hidden_dim); });
    add("model.n_layers",
        [](RunConfig& c, const std::string& v) { c.model.n_layers = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.model.n_layers); });
    add("model.context_len",
        [](RunConfig& c, const std::string& v) { c.model.context_len = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.model.context_len); });

    add("sft.strategy",
        [](RunConfig& c, const std::string& v) { c.sft.strategy = parse_sft_strategy(v); },
        [](const RunConfig& c) { return to_string(c.sft.strategy); });
    add("sft.learning_rate",
        [](RunConfig& c, const std::string& v) { c.sft.learning_rate = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.sft.learning_rate); });
    add("sft.batch_size",
        [](RunConfig& c, const std::string& v) { c.sft.batch_size = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.sft.batch_size); });
    add("sft.epochs", [](RunConfig& c, const std::string& v) { c.sft.epochs = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.sft.epochs); });
    add("sft.eos_loss_weight",
        [](RunConfig& c, const std::string& v) { c.sft.eos_loss_weight = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.sft.eos_loss_weight); });
    add("sft.target_len",
        [](RunConfig& c, const std::string& v) { c.sft.target_len = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.sft.target_len); });
    add("sft.band", [](RunConfig& c, const std::string& v) { c.sft.band = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.sft.band); });
    add("sft.clip_norm",
        [](RunConfig& c, const std::string& v) { c.sft.clip_norm = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.sft.clip_norm); });

    add("ppo.clip_eps", [](RunConfig& c, const std::string& v) { c.ppo.clip_eps = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.ppo.clip_eps); });
    add("ppo.gamma", [](RunConfig& c, const std::string& v) { c.ppo.gamma = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.ppo.gamma); });
    add("ppo.gae_lambda",
        [](RunConfig& c, const std::string& v) { c.ppo.gae_lambda = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.ppo.gae_lambda); });
    add("ppo.kl_coef", [](RunConfig& c, const std::string& v) { c.ppo.kl_coef = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.ppo.kl_coef); });
    add("ppo.learning_rate",
        [](RunConfig& c, const std::string& v) { c.ppo.learning_rate = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.ppo.learning_rate); });
    add("ppo.rollouts_per_batch",
        [](RunConfig& c, const std::string& v) { c.ppo.rollouts_per_batch = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.ppo.rollouts_per_batch); });
    add("ppo.update_epochs",
        [](RunConfig& c, const std::string& v) { c.ppo.update_epochs = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.ppo.update_epochs); });
    add("ppo.temperature",
        [](RunConfig& c, const std::string& v) { c.ppo.temperature = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.ppo.temperature); });
    add("ppo.max_gen_len",
        [](RunConfig& c, const std::string& v) { c.ppo.max_gen_len = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.ppo.max_gen_len); });
    add("ppo.total_episodes",
        [](RunConfig& c, const std::string& v) { c.ppo.total_episodes = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.ppo.total_episodes); });
    add("ppo.entropy_coef",
        [](RunConfig& c, const std::string& v) { c.ppo.entropy_coef = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.ppo.entropy_coef); });
    add("ppo.value_coef",
        [](RunConfig& c, const std::string& v) { c.ppo.value_coef = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.ppo.value_coef); });
    add("ppo.sft_mix_coef",
        [](RunConfig& c, const std::string& v) { c.ppo.sft_mix_coef = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.ppo.sft_mix_coef); });
    add("ppo.clip_norm",
        [](RunConfig& c, const std::string& v) { c.ppo.clip_norm = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.ppo.clip_norm); });
    add("ppo.eval_every",
        [](RunConfig& c, const std::string& v) { c.ppo.eval_every = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.ppo.eval_every); });
    add("ppo.degeneracy_stop",
        [](RunConfig& c, const std::string& v) { c.ppo.degeneracy_stop = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.ppo.degeneracy_stop); });
    add("ppo.init",
        [](RunConfig& c, const std::string& v) {
          if (v != "sft" && v != "fresh") throw ConfigError("ppo.init must be sft or fresh");
          c.ppo_init = v;
        },
        [](const RunConfig& c) { return c.ppo_init; });
    add("ppo.stages",
        [](RunConfig& c, const std::string& v) {
          if (!v.empty()) StageSpec::parse(v);  // syntax check
          c.stages = v;
        },
        [](const RunConfig& c) { return c.stages; });

    add("reward.mode",
        [](RunConfig& c, const std::string& v) { c.reward.mode = parse_reward_mode(v); },
        [](const RunConfig& c) { return to_string(c.reward.mode); });
    add("reward.target_len",
        [](RunConfig& c, const std::string& v) { c.reward.target_len = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.reward.target_len); });
    add("reward.e", [](RunConfig& c, const std::string& v) { c.reward.e = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.reward.e); });
    add("reward.e_hat", [](RunConfig& c, const std::string& v) { c.reward.e_hat = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.reward.e_hat); });
    add("reward.w", [](RunConfig& c, const std::string& v) { c.reward.w = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.reward.w); });
    add("reward.bpt",
        [](RunConfig& c, const std::string& v) {
          if (v == "auto") {
            c.bpt_auto = true;
            c.reward.bpt = 4.0;
          } else {
            c.bpt_auto = false;
            c.reward.bpt = parse_real(v);
          }
        },
        [](const RunConfig& c) { return c.bpt_auto ? "auto" : format_double(c.reward.bpt); });
    add("reward.deflate_level",
        [](RunConfig& c, const std::string& v) { c.reward.deflate_level = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.reward.deflate_level); });
    add("reward.validity_enabled",
        [](RunConfig& c, const std::string& v) { c.reward.validity_enabled = parse_bool(v); },
        [](const RunConfig& c) { return c.reward.validity_enabled ? "true" : "false"; });
    add("reward.inclusive_bounds",
        [](RunConfig& c, const std::string& v) { c.reward.inclusive_bounds = parse_bool(v); },
        [](const RunConfig& c) { return c.reward.inclusive_bounds ? "true" : "false"; });
    add("reward.alpha_format",
        [](RunConfig& c, const std::string& v) { c.reward.alpha_format = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.reward.alpha_format); });
    add("reward.alpha_correct",
        [](RunConfig& c, const std::string& v) { c.reward.alpha_correct = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.reward.alpha_correct); });
    add("reward.gibberish_penalty",
        [](RunConfig& c, const std::string& v) { c.reward.gibberish_penalty = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.reward.gibberish_penalty); });
    add("reward.gzip_length_coef",
        [](RunConfig& c, const std::string& v) { c.reward.gzip_length_coef = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.reward.gzip_length_coef); });

    add("eval.temperature",
        [](RunConfig& c, const std::string& v) { c.eval.temperature = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.eval.temperature); });
    add("eval.max_gen_len",
        [](RunConfig& c, const std::string& v) { c.eval.max_gen_len = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.eval.max_gen_len); });
    add("eval.ratio_floor",
        [](RunConfig& c, const std::string& v) { c.eval.ratio_floor = parse_real(v); },
        [](const RunConfig& c) { return format_double(c.eval.ratio_floor); });
    add("eval.instruct_target",
        [](RunConfig& c, const std::string& v) { c.eval.instruct_target = parse_int(v); },
        [](const RunConfig& c) { return std::to_string(c.eval.instruct_target); });

    return t;
  }();
  return table;
}

// The sanity checks inside section validate() phrase messages as
// "section: field ..."; recover the key so the error can cite the line that
// set it.
std::string blame_key(const std::string& message) {
  size_t colon = message.find(':');
  if (colon == std::string::npos) return {};
  std::string section = message.substr(0, colon);
  std::string rest(trim(std::string_view(message).substr(colon + 1)));
  size_t space = rest.find(' ');
  if (space == std::string::npos) return {};
  return section + "." + rest.substr(0, space);
}

}  // namespace

void RunConfig::validate() const {
  if (run_id.empty()) throw ConfigError("run: id must not be empty");
  for (char ch : run_id) {
    bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
              ch == '-' || ch == '_' || ch == '.';
    if (!ok) throw ConfigError("run: id may only use letters, digits, '-', '_' and '.'");
  }
  if (out_dir.empty()) throw ConfigError("run: out must not be empty");
  corpus.validate();
  model.validate();
  sft.validate();
  ppo.validate();
  reward.validate();
  eval.validate();
  if (!stages.empty()) StageSpec::parse(stages);
}

CorpusSpec RunConfig::corpus_spec() const {
  CorpusSpec s = corpus;
  s.seed = Rng::derive(seed, 1);
  return s;
}

PolicySpec RunConfig::policy_spec() const {
  PolicySpec s = model;
  s.seed = Rng::derive(seed, 2);
  return s;
}

SftConfig RunConfig::sft_config() const {
  SftConfig s = sft;
  s.seed = Rng::derive(seed, 3);
  return s;
}

PpoConfig RunConfig::ppo_config() const {
  PpoConfig s = ppo;
  s.seed = Rng::derive(seed, 4);
  return s;
}

EvalConfig RunConfig::eval_config() const {
  EvalConfig s = eval;
  s.seed = Rng::derive(seed, 5);
  return s;
}

RewardConfig RunConfig::reward_config(double resolved_bpt) const {
  RewardConfig r = reward;
  if (bpt_auto) {
    if (!(resolved_bpt > 0.0)) throw StageError("bytes-per-token has not been resolved yet");
    r.bpt = resolved_bpt;
  }
  return r;
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [name, key] : key_table()) {
    out += name;
    out += " = ";
    out += key.get(*this);
    out.push_back('\n');
  }
  return out;
}

std::string RunConfig::config_hash() const { return sha256_hex(canonical()); }

RunConfig parse_config_text(const std::string& text) {
  RunConfig config;
  config.model.vocab_size = Vocab::builtin().size();
  config.model.embed_dim = 24;
  config.model.hidden_dim = 48;
  config.model.n_layers = 2;
  config.model.context_len = 128;

  std::map<std::string, int> key_lines;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    size_t eq = sv.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'section.key = value'");
    }
    std::string key(trim(sv.substr(0, eq)));
    std::string value(trim(sv.substr(eq + 1)));
    auto it = key_table().find(key);
    if (it == key_table().end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    try {
      it->second.set(config, value);
    } catch (const ConfigError& err) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + err.what());
    }
    key_lines[key] = line_no;
  }

  try {
    config.validate();
  } catch (const ConfigError& err) {
    std::string key = blame_key(err.what());
    auto it = key_lines.find(key);
    if (it != key_lines.end()) {
      throw ConfigError("line " + std::to_string(it->second) + ": " + err.what());
    }
    throw;
  }
  return config;
}

RunConfig parse_config(const std::filesystem::path& path) {
  return parse_config_text(read_file(path));
}

}  // namespace golden
