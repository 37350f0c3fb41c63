#include "golden/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "golden/rng.hpp"
#include "golden/util.hpp"

namespace golden {

namespace {

struct WordPools {
  std::vector<int> determiners, adjectives, nouns, verbs, connectors;
  int period, comma, question, colon;
  int q, tell, about, what, is;
  int len_tok, answer, plus, minus;
  int letters[4];

  explicit WordPools(const Vocab& v) {
    auto ids = [&v](std::initializer_list<const char*> words) {
      std::vector<int> out;
      for (const char* w : words) out.push_back(v.id(w));
      return out;
    };
    determiners = ids({"the", "a", "one", "every"});
    adjectives = ids({"red", "blue", "green", "small", "big", "quick", "quiet",
                      "bright", "plain", "odd", "cold", "warm"});
    nouns = ids({"cat", "dog", "bird", "fox", "tree", "road", "river", "stone",
                 "house", "cloud", "boat", "field", "lamp", "book", "door",
                 "hill", "wind", "star", "fish", "horse", "garden", "market",
                 "bridge", "tower"});
    verbs = ids({"sees", "finds", "follows", "makes", "takes", "keeps", "moves",
                 "holds", "meets", "leaves", "builds", "paints", "watches",
                 "carries", "crosses", "opens"});
    connectors = ids({"and", "then", "while", "so"});
    period = v.id(".");
    comma = v.id(",");
    question = v.id("?");
    colon = v.id(":");
    q = v.id("Q");
    tell = v.id("tell");
    about = v.id("about");
    what = v.id("what");
    is = v.id("is");
    len_tok = v.id("LEN");
    answer = v.id("answer");
    plus = v.id("plus");
    minus = v.id("minus");
    const char* ls[4] = {"A", "B", "C", "D"};
    for (int i = 0; i < 4; ++i) letters[i] = v.id(ls[i]);
  }

  int pick(Rng& rng, const std::vector<int>& pool) const {
    return pool[rng.uniform_below(pool.size())];
  }
};

// Subject-verb-object clauses joined by connectors, cut at exactly len tokens.
std::vector<int> grammar_text(Rng& rng, int len, const WordPools& p) {
  std::vector<int> out;
  while (static_cast<int>(out.size()) < len) {
    if (!out.empty()) {
      out.push_back(rng.uniform01() < 0.25 ? p.period : p.pick(rng, p.connectors));
      if (static_cast<int>(out.size()) >= len) break;
    }
    out.push_back(p.pick(rng, p.determiners));
    if (rng.uniform01() < 0.4) out.push_back(p.pick(rng, p.adjectives));
    out.push_back(p.pick(rng, p.nouns));
    out.push_back(p.pick(rng, p.verbs));
    out.push_back(p.pick(rng, p.determiners));
    if (rng.uniform01() < 0.4) out.push_back(p.pick(rng, p.adjectives));
    out.push_back(p.pick(rng, p.nouns));
  }
  out.resize(static_cast<size_t>(len));
  return out;
}

void append_digits(std::vector<int>& out, int value, const Vocab& vocab) {
  std::string s = std::to_string(value);
  for (char c : s) {
    out.push_back(vocab.id(std::string(1, c)));
  }
}

// "Q <serial> : tell about the <noun> ?"
std::vector<int> plain_prompt(Rng& rng, int serial, const WordPools& p, const Vocab& vocab) {
  std::vector<int> out;
  out.push_back(p.q);
  append_digits(out, serial, vocab);
  out.push_back(p.colon);
  out.push_back(p.tell);
  out.push_back(p.about);
  out.push_back(p.pick(rng, p.determiners));
  out.push_back(p.pick(rng, p.nouns));
  out.push_back(p.question);
  return out;
}

Example make_plain(Rng& rng, int serial, int len, const WordPools& p, const Vocab& vocab) {
  Example ex;
  ex.tag = ExampleTag::plain;
  ex.prompt = plain_prompt(rng, serial, p, vocab);
  ex.response = grammar_text(rng, len, p);
  ex.response.push_back(Vocab::kEos);
  return ex;
}

Example make_length_instructed(Rng& rng, int serial, int len, const WordPools& p,
                               const Vocab& vocab) {
  Example ex;
  ex.tag = ExampleTag::length_instructed;
  ex.l_gt = len;
  std::vector<int> prefix;
  prefix.push_back(p.len_tok);
  append_digits(prefix, len, vocab);
  prefix.push_back(p.colon);
  auto core = plain_prompt(rng, serial, p, vocab);
  prefix.insert(prefix.end(), core.begin(), core.end());
  ex.prompt = std::move(prefix);
  ex.response = grammar_text(rng, len, p);
  ex.response.push_back(Vocab::kEos);
  return ex;
}

// Single-digit arithmetic, four labeled options, exactly one correct.
Example make_choice(Rng& rng, int serial, const WordPools& p, const Vocab& vocab) {
  int a = rng.uniform_int(0, 9);
  int b = rng.uniform_int(0, 9);
  bool add = rng.uniform01() < 0.5;
  if (!add && b > a) std::swap(a, b);
  int correct = add ? a + b : a - b;

  std::vector<int> options = {correct};
  while (options.size() < 4) {
    int delta = rng.uniform_int(1, 5);
    int cand = rng.uniform01() < 0.5 ? correct + delta : correct - delta;
    if (cand < 0) cand = correct + delta;
    if (std::find(options.begin(), options.end(), cand) == options.end()) {
      options.push_back(cand);
    }
  }
  rng.shuffle(options);
  int gold = static_cast<int>(
      std::find(options.begin(), options.end(), correct) - options.begin());

  Example ex;
  ex.tag = ExampleTag::choice;
  ex.prompt.push_back(p.q);
  append_digits(ex.prompt, serial, vocab);
  ex.prompt.push_back(p.colon);
  ex.prompt.push_back(p.what);
  ex.prompt.push_back(p.is);
  append_digits(ex.prompt, a, vocab);
  ex.prompt.push_back(add ? p.plus : p.minus);
  append_digits(ex.prompt, b, vocab);
  ex.prompt.push_back(p.question);
  for (int i = 0; i < 4; ++i) {
    ex.prompt.push_back(p.letters[i]);
    ex.prompt.push_back(p.colon);
    append_digits(ex.prompt, options[static_cast<size_t>(i)], vocab);
  }
  ex.response.push_back(p.answer);
  ex.response.push_back(p.letters[gold]);
  ex.response.push_back(Vocab::kEos);
  return ex;
}

int draw_length(Rng& rng, const LengthDist& d) {
  switch (d.kind) {
    case LengthDist::Kind::fixed:
      return d.lo;
    case LengthDist::Kind::uniform:
      return rng.uniform_int(d.lo, d.hi);
    case LengthDist::Kind::set:
      return d.values[rng.uniform_below(d.values.size())];
  }
  return d.lo;
}

std::vector<Example> filter_examples(const std::vector<Example>& in, int l_gt, double band) {
  std::vector<Example> out;
  double tol = band / 100.0 * l_gt;
  for (const auto& ex : in) {
    if (std::abs(ex.response_len() - l_gt) <= tol) out.push_back(ex);
  }
  return out;
}

}  // namespace

std::string to_string(ExampleTag tag) {
  switch (tag) {
    case ExampleTag::plain: return "plain";
    case ExampleTag::length_instructed: return "length";
    case ExampleTag::choice: return "choice";
  }
  return "plain";
}

ExampleTag example_tag_from_string(std::string_view s) {
  if (s == "plain") return ExampleTag::plain;
  if (s == "length") return ExampleTag::length_instructed;
  if (s == "choice") return ExampleTag::choice;
  throw ConfigError("unknown example tag: " + std::string(s));
}

LengthDist LengthDist::of_set(std::vector<int> vals) {
  if (vals.empty()) throw ConfigError("length set must be nonempty");
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  LengthDist d;
  d.kind = Kind::set;
  d.values = std::move(vals);
  d.lo = d.values.front();
  d.hi = d.values.back();
  return d;
}

int LengthDist::min_len() const { return kind == Kind::set ? values.front() : lo; }
int LengthDist::max_len() const { return kind == Kind::set ? values.back() : hi; }

std::string LengthDist::to_string() const {
  switch (kind) {
    case Kind::fixed:
      return std::to_string(lo);
    case Kind::uniform:
      return std::to_string(lo) + ".." + std::to_string(hi);
    case Kind::set: {
      std::string out = "{";
      for (size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(values[i]);
      }
      return out + "}";
    }
  }
  return "";
}

LengthDist LengthDist::parse(std::string_view text) {
  auto s = trim(text);
  if (s.empty()) throw ConfigError("empty length distribution");
  try {
    if (s.front() == '{') {
      if (s.back() != '}') throw ConfigError("unterminated length set");
      std::vector<int> vals;
      for (auto& part : split(s.substr(1, s.size() - 2), ',')) {
        vals.push_back(std::stoi(std::string(trim(part))));
      }
      return of_set(std::move(vals));
    }
    size_t dots = s.find("..");
    if (dots != std::string_view::npos) {
      int lo = std::stoi(std::string(trim(s.substr(0, dots))));
      int hi = std::stoi(std::string(trim(s.substr(dots + 2))));
      if (lo > hi) throw ConfigError("length range lo > hi");
      return uniform(lo, hi);
    }
    return fixed(std::stoi(std::string(s)));
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad length distribution: " + std::string(text));
  }
}

std::string TaskMix::to_string() const {
  std::vector<std::string> parts;
  if (plain > 0) parts.push_back("plain=" + format_double(plain));
  if (length_instructed > 0) parts.push_back("length=" + format_double(length_instructed));
  if (choice > 0) parts.push_back("choice=" + format_double(choice));
  if (parts.empty()) parts.push_back("plain=0");
  return join(parts, ",");
}

TaskMix TaskMix::parse(std::string_view text) {
  TaskMix mix{0.0, 0.0, 0.0};
  for (auto& part : split(text, ',')) {
    auto kv = split(trim(part), '=');
    if (kv.size() != 2) throw ConfigError("bad task mix entry: " + std::string(part));
    double v = std::stod(kv[1]);
    auto key = trim(kv[0]);
    if (key == "plain") mix.plain = v;
    else if (key == "length") mix.length_instructed = v;
    else if (key == "choice") mix.choice = v;
    else throw ConfigError("unknown task mix key: " + std::string(key));
  }
  return mix;
}

void CorpusSpec::validate() const {
  if (n_examples < 30) throw ConfigError("corpus.n must be >= 30");
  if (lengths.min_len() < 1 || lengths.max_len() > max_gen_len) {
    throw ConfigError("length distribution support must lie in [1, max_gen_len]");
  }
  double mix_sum = mix.plain + mix.length_instructed + mix.choice;
  if (mix.plain < 0 || mix.length_instructed < 0 || mix.choice < 0 ||
      std::abs(mix_sum - 1.0) > 1e-9) {
    throw ConfigError("task mix fractions must be nonnegative and sum to 1");
  }
  double ratio_sum = ratios[0] + ratios[1] + ratios[2];
  if (ratios[0] <= 0 || ratios[1] <= 0 || ratios[2] <= 0 ||
      std::abs(ratio_sum - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be positive and sum to 1");
  }
}

DatasetSplit synth_corpus(const CorpusSpec& spec, const Vocab& vocab) {
  spec.validate();
  WordPools pools(vocab);
  Rng rng(spec.seed);

  std::vector<Example> all;
  all.reserve(static_cast<size_t>(spec.n_examples));
  for (int i = 0; i < spec.n_examples; ++i) {
    double u = rng.uniform01();
    if (u < spec.mix.plain) {
      all.push_back(make_plain(rng, i, draw_length(rng, spec.lengths), pools, vocab));
    } else if (u < spec.mix.plain + spec.mix.length_instructed) {
      all.push_back(make_length_instructed(rng, i, draw_length(rng, spec.lengths), pools, vocab));
    } else {
      all.push_back(make_choice(rng, i, pools, vocab));
    }
  }

  DatasetSplit ds;
  ds.seed = spec.seed;
  size_t n = all.size();
  size_t n_train = static_cast<size_t>(std::floor(spec.ratios[0] * static_cast<double>(n)));
  size_t n_val = static_cast<size_t>(std::floor(spec.ratios[1] * static_cast<double>(n)));
  for (size_t i = 0; i < n; ++i) {
    if (i < n_train) ds.train.push_back(std::move(all[i]));
    else if (i < n_train + n_val) ds.validation.push_back(std::move(all[i]));
    else ds.test.push_back(std::move(all[i]));
  }
  return ds;
}

DatasetSplit filter_by_length(const DatasetSplit& ds, int l_gt, double band_percent) {
  if (band_percent < 0 || band_percent > 100) {
    throw ConfigError("length filter band must be in [0, 100]");
  }
  DatasetSplit out;
  out.seed = ds.seed;
  out.train = filter_examples(ds.train, l_gt, band_percent);
  out.validation = filter_examples(ds.validation, l_gt, band_percent);
  out.test = filter_examples(ds.test, l_gt, band_percent);
  if (out.train.empty() || out.validation.empty() || out.test.empty()) {
    throw StageError("length filter emptied a split (l_gt=" + std::to_string(l_gt) +
                     ", band=" + format_double(band_percent) + "%)");
  }
  return out;
}

std::vector<Example> filter_by_length(const std::vector<Example>& examples, int l_gt,
                                      double band_percent) {
  if (band_percent < 0 || band_percent > 100) {
    throw ConfigError("length filter band must be in [0, 100]");
  }
  std::vector<Example> out = filter_examples(examples, l_gt, band_percent);
  if (out.empty()) {
    throw StageError("length filter kept no examples (l_gt=" + std::to_string(l_gt) +
                     ", band=" + format_double(band_percent) + "%)");
  }
  return out;
}

char choice_gold_letter(const Example& ex, const Vocab& vocab) {
  if (ex.tag != ExampleTag::choice) {
    throw std::invalid_argument("choice_gold_letter on non-choice example");
  }
  WordPools p(vocab);
  const auto& t = ex.prompt;
  auto read_number = [&](size_t& i) {
    int value = 0;
    bool any = false;
    while (i < t.size()) {
      const std::string& s = vocab.symbol(t[i]);
      if (s.size() == 1 && s[0] >= '0' && s[0] <= '9') {
        value = value * 10 + (s[0] - '0');
        any = true;
        ++i;
      } else {
        break;
      }
    }
    if (!any) throw std::invalid_argument("malformed choice prompt: number expected");
    return value;
  };

  size_t i = 0;
  while (i < t.size() && t[i] != p.is) ++i;
  if (i == t.size()) throw std::invalid_argument("malformed choice prompt: no 'is'");
  ++i;
  int a = read_number(i);
  if (i >= t.size()) throw std::invalid_argument("malformed choice prompt");
  bool add = t[i] == p.plus;
  ++i;
  int b = read_number(i);
  int correct = add ? a + b : a - b;
  if (i >= t.size() || t[i] != p.question) {
    throw std::invalid_argument("malformed choice prompt: '?' expected");
  }
  ++i;
  for (int opt = 0; opt < 4; ++opt) {
    if (i + 1 >= t.size() || t[i] != p.letters[opt] || t[i + 1] != p.colon) {
      throw std::invalid_argument("malformed choice prompt: options");
    }
    i += 2;
    if (read_number(i) == correct) {
      return static_cast<char>('A' + opt);
    }
  }
  throw std::invalid_argument("choice prompt has no correct option");
}

std::vector<int> reinstruct_prompt(std::span<const int> prompt, int l_gt, const Vocab& vocab) {
  WordPools p(vocab);
  std::vector<int> out;
  out.push_back(p.len_tok);
  append_digits(out, l_gt, vocab);
  out.push_back(p.colon);

  size_t skip = 0;
  if (!prompt.empty() && prompt[0] == p.len_tok) {
    skip = 1;
    while (skip < prompt.size()) {
      const std::string& s = vocab.symbol(prompt[skip]);
      if (s.size() == 1 && s[0] >= '0' && s[0] <= '9') ++skip;
      else break;
    }
    if (skip < prompt.size() && prompt[skip] == p.colon) ++skip;
  }
  out.insert(out.end(), prompt.begin() + static_cast<std::ptrdiff_t>(skip), prompt.end());
  return out;
}

std::vector<int> digit_tokens(int value, const Vocab& vocab) {
  std::vector<int> out;
  append_digits(out, value, vocab);
  return out;
}

double mean_bytes_per_token(const DatasetSplit& ds, const Vocab& vocab) {
  size_t bytes = 0;
  size_t tokens = 0;
  auto account = [&](const std::vector<Example>& list) {
    for (const auto& ex : list) {
      std::span<const int> content(ex.response.data(),
                                   static_cast<size_t>(ex.response_len()));
      bytes += vocab.detokenize(content).size();
      tokens += content.size();
    }
  };
  account(ds.train);
  account(ds.validation);
  account(ds.test);
  if (tokens == 0) throw StageError("cannot compute bytes-per-token of an empty dataset");
  return static_cast<double>(bytes) / static_cast<double>(tokens);
}

void save_examples(const std::filesystem::path& path, std::span<const Example> examples,
                   const Vocab& vocab) {
  std::string out;
  for (const auto& ex : examples) {
    out += to_string(ex.tag);
    out.push_back('\t');
    out += ex.l_gt ? std::to_string(*ex.l_gt) : "-";
    out.push_back('\t');
    out += vocab.detokenize(ex.prompt);
    out.push_back('\t');
    std::span<const int> content(ex.response.data(), static_cast<size_t>(ex.response_len()));
    out += vocab.detokenize(content);
    out.push_back('\n');
  }
  write_file(path, out);
}

std::vector<Example> load_examples(const std::filesystem::path& path, const Vocab& vocab) {
  std::string text = read_file(path);
  std::vector<Example> out;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 4) {
      throw StageError(path.string() + ":" + std::to_string(lineno) +
                       ": expected 4 tab-separated fields");
    }
    Example ex;
    ex.tag = example_tag_from_string(fields[0]);
    if (fields[1] != "-") ex.l_gt = std::stoi(fields[1]);
    ex.prompt = vocab.tokenize(fields[2]);
    ex.response = vocab.tokenize(fields[3]);
    ex.response.push_back(Vocab::kEos);
    out.push_back(std::move(ex));
  }
  return out;
}

void save_split(const std::filesystem::path& dir, const DatasetSplit& ds, const Vocab& vocab) {
  std::filesystem::create_directories(dir);
  save_examples(dir / "train.tsv", ds.train, vocab);
  save_examples(dir / "validation.tsv", ds.validation, vocab);
  save_examples(dir / "test.tsv", ds.test, vocab);
  vocab.save(dir / "vocab.txt");
}

DatasetSplit load_split(const std::filesystem::path& dir, const Vocab& vocab) {
  DatasetSplit ds;
  ds.train = load_examples(dir / "train.tsv", vocab);
  ds.validation = load_examples(dir / "validation.tsv", vocab);
  ds.test = load_examples(dir / "test.tsv", vocab);
  return ds;
}

}  // namespace golden
