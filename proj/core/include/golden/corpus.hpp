#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "golden/vocab.hpp"

namespace golden {

enum class ExampleTag { plain, length_instructed, choice };

std::string to_string(ExampleTag tag);
ExampleTag example_tag_from_string(std::string_view s);

// One prompt/reference pair. The response ends with exactly one EOS at its
// final position. l_gt is set only for length-instructed examples.
struct Example {
  std::vector<int> prompt;
  std::vector<int> response;
  std::optional<int> l_gt;
  ExampleTag tag = ExampleTag::plain;

  // Content tokens, i.e. response length excluding the terminal EOS.
  int response_len() const { return static_cast<int>(response.size()) - 1; }
};

struct DatasetSplit {
  std::vector<Example> train;
  std::vector<Example> validation;
  std::vector<Example> test;
  uint64_t seed = 0;

  size_t total() const { return train.size() + validation.size() + test.size(); }
};

// Supported response-length distributions: a single fixed length, a uniform
// integer range, or a uniform draw over an explicit value set.
struct LengthDist {
  enum class Kind { fixed, uniform, set };
  Kind kind = Kind::fixed;
  int lo = 0;
  int hi = 0;
  std::vector<int> values;

  static LengthDist fixed(int l) { return {Kind::fixed, l, l, {}}; }
  static LengthDist uniform(int lo, int hi) { return {Kind::uniform, lo, hi, {}}; }
  static LengthDist of_set(std::vector<int> vals);

  int min_len() const;
  int max_len() const;
  std::string to_string() const;
  static LengthDist parse(std::string_view text);  // "32", "8..64" or "{16,32}"
};

struct TaskMix {
  double plain = 1.0;
  double length_instructed = 0.0;
  double choice = 0.0;

  std::string to_string() const;
  static TaskMix parse(std::string_view text);  // "plain=0.5,length=0.5"
};

struct CorpusSpec {
  int n_examples = 1000;
  LengthDist lengths = LengthDist::uniform(8, 64);
  uint64_t seed = 0;
  TaskMix mix;
  int max_gen_len = 64;
  // train/validation/test; mirrors a 10000/2000/500 layout.
  double ratios[3] = {0.8, 0.16, 0.04};

  void validate() const;
};

// Deterministic synthetic corpus: template-grammar Q/A pairs and
// single-digit-arithmetic choice questions.
DatasetSplit synth_corpus(const CorpusSpec& spec, const Vocab& vocab);

// Keeps examples whose response length l satisfies |l - l_gt| <= band% * l_gt.
// Throws StageError if any split would become empty.
DatasetSplit filter_by_length(const DatasetSplit& ds, int l_gt, double band_percent);

// Same band filter over a flat example list; StageError when nothing survives.
std::vector<Example> filter_by_length(const std::vector<Example>& examples, int l_gt,
                                      double band_percent);

// Recomputes the correct option letter of a choice example from its prompt
// arithmetic. Throws std::invalid_argument for non-choice examples.
char choice_gold_letter(const Example& ex, const Vocab& vocab);

// Replaces (or inserts) the length-instruction prefix "LEN <digits> :" so the
// prompt asks for l_gt tokens.
std::vector<int> reinstruct_prompt(std::span<const int> prompt, int l_gt, const Vocab& vocab);

// Renders a number as individual digit tokens.
std::vector<int> digit_tokens(int value, const Vocab& vocab);

// Mean UTF-8 bytes per response token over all reference responses,
// including the separating spaces. Used as the compression probe's unit.
double mean_bytes_per_token(const DatasetSplit& ds, const Vocab& vocab);

// One example per line: tag \t l_gt-or-dash \t prompt \t response, LF endings.
void save_examples(const std::filesystem::path& path, std::span<const Example> examples,
                   const Vocab& vocab);
std::vector<Example> load_examples(const std::filesystem::path& path, const Vocab& vocab);

void save_split(const std::filesystem::path& dir, const DatasetSplit& ds, const Vocab& vocab);
DatasetSplit load_split(const std::filesystem::path& dir, const Vocab& vocab);

}  // namespace golden
