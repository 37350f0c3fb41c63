#include "golden/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "golden/rng.hpp"
#include "golden/util.hpp"

namespace golden {

void EvalConfig::validate() const {
  if (temperature < 0.0) throw ConfigError("eval: temperature must be >= 0");
  if (max_gen_len < 1) throw ConfigError("eval: max_gen_len must be >= 1");
  if (!(ratio_floor >= 0.0 && ratio_floor <= 1.0)) {
    throw ConfigError("eval: ratio_floor must lie in [0, 1]");
  }
  if (instruct_target < 0) throw ConfigError("eval: instruct_target must be >= 0");
}

ValidityCheck is_valid(const std::string& output, int l_gt, double e, double bpt,
                       double ratio_floor, int deflate_level) {
  ValidityCheck c;
  int l = 0;
  for (const std::string& tok : split(output, ' ')) {
    if (!tok.empty()) ++l;
  }
  c.length_ok = general_reward(l, l_gt, e) == 1;
  if (!c.length_ok) c.reasons.push_back("length");
  if (output.find("<unk>") != std::string::npos) {
    c.degenerate = true;
    c.reasons.push_back("unk");
  }
  if (l >= 1 && compression_ratio(output, l, bpt, deflate_level) < ratio_floor) {
    c.degenerate = true;
    c.reasons.push_back("degenerate");
  }
  c.valid = c.length_ok && !c.degenerate;
  return c;
}

ChoiceDiagnostics choice_diagnostics(const std::vector<std::string>& outputs,
                                     const std::vector<char>& golds) {
  if (outputs.size() != golds.size()) {
    throw std::invalid_argument("choice_diagnostics: outputs and golds differ in length");
  }
  ChoiceDiagnostics d;
  if (outputs.empty()) return d;
  int parsed = 0;
  int correct = 0;
  for (size_t i = 0; i < outputs.size(); ++i) {
    std::optional<char> letter = parse_choice_letter(outputs[i]);
    if (!letter.has_value()) continue;
    ++parsed;
    d.letter_counts[static_cast<size_t>(*letter - 'A')] += 1;
    if (*letter == golds[i]) ++correct;
  }
  double n = static_cast<double>(outputs.size());
  d.format_rate = parsed / n;
  d.accuracy = correct / n;
  if (parsed > 0) {
    int top = *std::max_element(d.letter_counts.begin(), d.letter_counts.end());
    if (static_cast<double>(top) / parsed > 0.8 && d.accuracy <= 0.25 + 0.10) {
      d.hacking_flag = true;
    }
  }
  return d;
}

EvalOutcome evaluate(const PolicyParams& params, const DatasetSplit& split,
                     const EvalConfig& config, const RewardConfig& reward, const Vocab& vocab) {
  config.validate();
  reward.validate();
  const std::vector<Example>& tests = split.test;
  if (tests.empty()) throw StageError("eval: test split is empty");

  struct PerExample {
    std::string text;
    int len = 0;
    int l_gt = 0;
    bool valid = false;
    bool degenerate = false;
  };
  std::vector<PerExample> rows(tests.size());

  parallel_for(tests.size(), [&](size_t i) {
    const Example& ex = tests[i];
    std::vector<int> prompt = config.exemplar;
    if (config.instruct_target > 0 && ex.tag != ExampleTag::choice) {
      std::vector<int> re = reinstruct_prompt(ex.prompt, config.instruct_target, vocab);
      prompt.insert(prompt.end(), re.begin(), re.end());
    } else {
      prompt.insert(prompt.end(), ex.prompt.begin(), ex.prompt.end());
    }
    uint64_t seed = Rng::derive(config.seed, static_cast<uint64_t>(i));
    SampleResult s = sample(params, prompt, config.temperature, config.max_gen_len, seed);
    PerExample& row = rows[i];
    row.len = s.content_len();
    std::span<const int> content(s.tokens.data(), static_cast<size_t>(row.len));
    row.text = vocab.detokenize(content);
    if (reward.mode != RewardMode::choice) {
      // A rewritten prompt asks for instruct_target tokens, overriding
      // whatever the example originally requested.
      if (config.instruct_target > 0) {
        row.l_gt = config.instruct_target;
      } else if (reward.mode == RewardMode::general) {
        row.l_gt = reward.target_len;
      } else if (ex.l_gt.has_value()) {
        row.l_gt = *ex.l_gt;
      } else {
        throw StageError("eval: compatible mode needs per-example targets");
      }
      ValidityCheck c =
          is_valid(row.text, row.l_gt, reward.e, reward.bpt, config.ratio_floor,
                   reward.deflate_level);
      row.valid = c.valid;
      row.degenerate = c.degenerate;
    } else {
      ValidityCheck c = is_valid(row.text, 1, 100.0, reward.bpt, config.ratio_floor,
                                 reward.deflate_level);
      row.degenerate = c.degenerate;
    }
  });

  EvalOutcome out;
  EvalReport& rep = out.report;
  rep.n = static_cast<int>(rows.size());

  int max_target = 0;
  for (const PerExample& r : rows) max_target = std::max(max_target, r.l_gt);
  rep.bucket_width = std::max(1, max_target / 10);

  int max_len = 0;
  double len_sum = 0.0;
  int n_valid = 0;
  int n_degen = 0;
  std::map<int, TargetRow> targets;
  for (const PerExample& r : rows) {
    max_len = std::max(max_len, r.len);
    len_sum += r.len;
    if (r.valid) ++n_valid;
    if (r.degenerate) ++n_degen;
  }
  rep.histogram.assign(static_cast<size_t>(max_len / rep.bucket_width) + 1, 0);
  for (const PerExample& r : rows) {
    rep.histogram[static_cast<size_t>(r.len / rep.bucket_width)] += 1;
  }
  rep.mean_len = len_sum / rep.n;
  rep.degeneracy_fraction = static_cast<double>(n_degen) / rep.n;

  if (reward.mode == RewardMode::choice) {
    std::vector<std::string> outputs;
    std::vector<char> golds;
    outputs.reserve(rows.size());
    golds.reserve(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      outputs.push_back(rows[i].text);
      golds.push_back(choice_gold_letter(tests[i], vocab));
    }
    rep.choice = choice_diagnostics(outputs, golds);
    // An output counts as valid when it parses as an answer at all.
    rep.valid_fraction = rep.choice.format_rate;
  } else {
    rep.valid_fraction = static_cast<double>(n_valid) / rep.n;
    for (const PerExample& r : rows) {
      TargetRow& t = targets[r.l_gt];
      t.l_gt = r.l_gt;
      t.n += 1;
      t.mean_len += r.len;
      if (r.valid) t.valid_fraction += 1.0;
    }
    for (auto& [key, t] : targets) {
      t.valid_fraction /= t.n;
      t.mean_len /= t.n;
      rep.per_target.push_back(t);
    }
  }

  out.dump_lines.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const Example& ex = tests[i];
    std::string line = to_string(ex.tag);
    line.push_back('\t');
    line += ex.l_gt ? std::to_string(*ex.l_gt) : "-";
    line.push_back('\t');
    line += vocab.detokenize(ex.prompt);
    line.push_back('\t');
    std::span<const int> ref(ex.response.data(), static_cast<size_t>(ex.response_len()));
    line += vocab.detokenize(ref);
    line.push_back('\t');
    line += rows[i].text;
    out.dump_lines.push_back(std::move(line));
  }
  return out;
}

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out.push_back('|');
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int> split_ints(const std::string& text) {
  std::vector<int> out;
  if (text.empty()) return out;
  for (const std::string& part : split(text, '|')) out.push_back(std::stoi(part));
  return out;
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::string out = "# goldenlab-eval-report v1\n";
    out += "metric,value\n";
    out += "n," + std::to_string(report.n) + "\n";
    out += "valid_fraction," + format_double(report.valid_fraction) + "\n";
    out += "mean_len," + format_double(report.mean_len) + "\n";
    out += "degeneracy_fraction," + format_double(report.degeneracy_fraction) + "\n";
    out += "bucket_width," + std::to_string(report.bucket_width) + "\n";
    out += "histogram," + join_ints(report.histogram) + "\n";
    out += "format_rate," + format_double(report.choice.format_rate) + "\n";
    out += "accuracy," + format_double(report.choice.accuracy) + "\n";
    out += "letters," + join_ints(report.choice.letter_counts) + "\n";
    out += "hacking_flag," + std::string(report.choice.hacking_flag ? "1" : "0") + "\n";
    for (const TargetRow& t : report.per_target) {
      out += "target:" + std::to_string(t.l_gt) + "," + format_double(t.valid_fraction) + "|" +
             format_double(t.mean_len) + "|" + std::to_string(t.n) + "\n";
    }
    return out;
  }

  std::ostringstream out;
  out << "n evaluated        " << report.n << "\n";
  out << "valid fraction     " << format_double(report.valid_fraction) << "\n";
  out << "mean length        " << format_double(report.mean_len) << "\n";
  out << "degeneracy         " << format_double(report.degeneracy_fraction) << "\n";
  if (!report.per_target.empty()) {
    out << "per-target (l_gt, valid, mean_len, n):\n";
    for (const TargetRow& t : report.per_target) {
      out << "  " << t.l_gt << "  " << format_double(t.valid_fraction) << "  "
          << format_double(t.mean_len) << "  " << t.n << "\n";
    }
  }
  if (report.choice.format_rate > 0.0 || report.choice.accuracy > 0.0) {
    out << "choice format rate " << format_double(report.choice.format_rate) << "\n";
    out << "choice accuracy    " << format_double(report.choice.accuracy) << "\n";
    out << "answer histogram   A=" << report.choice.letter_counts[0]
        << " B=" << report.choice.letter_counts[1] << " C=" << report.choice.letter_counts[2]
        << " D=" << report.choice.letter_counts[3] << "\n";
    if (report.choice.hacking_flag) out << "reward-hacking flag raised\n";
  }
  return out.str();
}

EvalReport parse_report_csv(const std::string& document) {
  EvalReport rep;
  std::istringstream in(document);
  std::string line;
  bool versioned = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("goldenlab-eval-report v1") != std::string::npos) versioned = true;
      continue;
    }
    if (line == "metric,value") continue;
    size_t comma = line.find(',');
    if (comma == std::string::npos) throw StageError("malformed report line: " + line);
    std::string key = line.substr(0, comma);
    std::string value = line.substr(comma + 1);
    if (key == "n") rep.n = std::stoi(value);
    else if (key == "valid_fraction") rep.valid_fraction = std::stod(value);
    else if (key == "mean_len") rep.mean_len = std::stod(value);
    else if (key == "degeneracy_fraction") rep.degeneracy_fraction = std::stod(value);
    else if (key == "bucket_width") rep.bucket_width = std::stoi(value);
    else if (key == "histogram") rep.histogram = split_ints(value);
    else if (key == "format_rate") rep.choice.format_rate = std::stod(value);
    else if (key == "accuracy") rep.choice.accuracy = std::stod(value);
    else if (key == "letters") rep.choice.letter_counts = split_ints(value);
    else if (key == "hacking_flag") rep.choice.hacking_flag = value == "1";
    else if (key.rfind("target:", 0) == 0) {
      TargetRow t;
      t.l_gt = std::stoi(key.substr(7));
      std::vector<std::string> parts = split(value, '|');
      if (parts.size() != 3) throw StageError("malformed target row: " + line);
      t.valid_fraction = std::stod(parts[0]);
      t.mean_len = std::stod(parts[1]);
      t.n = std::stoi(parts[2]);
      rep.per_target.push_back(t);
    } else {
      throw StageError("unknown report metric: " + key);
    }
  }
  if (!versioned) throw StageError("report is missing its version header");
  return rep;
}

}  // namespace golden
