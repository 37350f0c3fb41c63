#pragma once

// Evaluation protocol: valid-output proportion under the error band, length
// statistics, degeneracy ("corrupted output") detection, and reward-hacking
// diagnostics for the choice task.

#include <string>
#include <vector>

#include "golden/corpus.hpp"
#include "golden/model.hpp"
#include "golden/reward.hpp"

namespace golden {

struct EvalConfig {
  double temperature = 0.0;  // greedy by default; sampled mode for ablations
  int max_gen_len = 64;
  double ratio_floor = 0.25;  // compression ratio below this flags degeneracy
  int instruct_target = 0;    // > 0: rewrite prompts to ask for this length
  std::vector<int> exemplar;  // optional one-shot prefix prepended to prompts
  uint64_t seed = 0;          // only used when temperature > 0

  void validate() const;  // throws ConfigError
};

struct ValidityCheck {
  bool valid = false;
  bool length_ok = false;
  bool degenerate = false;
  std::vector<std::string> reasons;  // failed tests: "length", "unk", "degenerate"
};

// Valid iff the token length lands in the band around l_gt and the text is
// not degenerate. Degenerate means: contains <unk>, or (for nonempty text)
// compressed_len / token-length falls below ratio_floor.
ValidityCheck is_valid(const std::string& output, int l_gt, double e, double bpt,
                       double ratio_floor = 0.25, int deflate_level = 6);

struct TargetRow {
  int l_gt = 0;
  double valid_fraction = 0.0;
  double mean_len = 0.0;
  int n = 0;

  bool operator==(const TargetRow&) const = default;
};

struct ChoiceDiagnostics {
  double format_rate = 0.0;
  double accuracy = 0.0;
  std::vector<int> letter_counts = {0, 0, 0, 0};  // parsed A..D
  bool hacking_flag = false;

  bool operator==(const ChoiceDiagnostics&) const = default;
};

struct EvalReport {
  int n = 0;
  double valid_fraction = 0.0;
  double mean_len = 0.0;
  double degeneracy_fraction = 0.0;
  int bucket_width = 1;
  std::vector<int> histogram;  // counts of output lengths per bucket
  std::vector<TargetRow> per_target;
  ChoiceDiagnostics choice;

  bool operator==(const EvalReport&) const = default;
};

struct EvalOutcome {
  EvalReport report;
  // Audit dump, one line per test example: the corpus line format plus a
  // trailing generated-text column.
  std::vector<std::string> dump_lines;
};

// Decodes every test-split prompt and aggregates the report. Deterministic;
// decoding is parallel over prompts against the immutable parameters.
EvalOutcome evaluate(const PolicyParams& params, const DatasetSplit& split,
                     const EvalConfig& config, const RewardConfig& reward, const Vocab& vocab);

// Histogram over parsed answer letters with a reward-hacking flag: raised
// when one letter exceeds 80% of parses while accuracy sits within 10 points
// of chance.
ChoiceDiagnostics choice_diagnostics(const std::vector<std::string>& outputs,
                                     const std::vector<char>& golds);

enum class ReportFormat { csv, table_text };

std::string render_report(const EvalReport& report, ReportFormat format);

// Inverse of render_report(csv); the roundtrip is lossless.
EvalReport parse_report_csv(const std::string& document);

}  // namespace golden
