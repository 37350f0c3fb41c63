#include "golden/vocab.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

#include "golden/util.hpp"

namespace golden {

namespace {

const char* kReserved[4] = {"<bos>", "<eos>", "<pad>", "<unk>"};

std::vector<std::string> builtin_symbols() {
  std::vector<std::string> s = {kReserved[0], kReserved[1], kReserved[2], kReserved[3]};
  auto add = [&s](std::initializer_list<const char*> words) {
    for (const char* w : words) s.emplace_back(w);
  };
  // determiners / conjunctions / glue
  add({"the", "a", "one", "every", "and", "then", "while", "so"});
  // adjectives
  add({"red", "blue", "green", "small", "big", "quick", "quiet", "bright",
       "plain", "odd", "cold", "warm"});
  // nouns
  add({"cat", "dog", "bird", "fox", "tree", "road", "river", "stone", "house",
       "cloud", "boat", "field", "lamp", "book", "door", "hill", "wind", "star",
       "fish", "horse", "garden", "market", "bridge", "tower"});
  // verbs
  add({"sees", "finds", "follows", "makes", "takes", "keeps", "moves", "holds",
       "meets", "leaves", "builds", "paints", "watches", "carries", "crosses",
       "opens"});
  // punctuation and prompt scaffolding
  add({".", ",", "?", ":", "Q", "tell", "about", "what", "is"});
  // length instruction + digits
  add({"LEN", "0", "1", "2", "3", "4", "5", "6", "7", "8", "9"});
  // choice questions
  add({"A", "B", "C", "D", "answer", "plus", "minus"});
  // count-suffix augmentation
  add({"TOTAL", "TOKENS"});
  return s;
}

}  // namespace

Vocab::Vocab(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.size() < 8) {
    throw ConfigError("vocab must have at least 8 symbols");
  }
  for (int i = 0; i < 4; ++i) {
    if (symbols_[static_cast<size_t>(i)] != kReserved[i]) {
      throw ConfigError("vocab reserved symbol mismatch at id " + std::to_string(i));
    }
  }
  for (size_t i = 0; i < symbols_.size(); ++i) {
    auto [it, inserted] = index_.emplace(symbols_[i], static_cast<int>(i));
    if (!inserted) {
      throw ConfigError("duplicate vocab symbol: " + symbols_[i]);
    }
  }
}

Vocab Vocab::builtin() { return Vocab(builtin_symbols()); }

int Vocab::id(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::tokenize(std::string_view text) const {
  std::vector<int> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) {
      out.push_back(id(text.substr(start, i - start)));
    }
  }
  return out;
}

std::string Vocab::detokenize(std::span<const int> ids) const {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += symbol(ids[i]);
  }
  return out;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::string out;
  for (const auto& s : symbols_) {
    out += s;
    out.push_back('\n');
  }
  write_file(path, out);
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::string text = read_file(path);
  std::vector<std::string> symbols;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    symbols.push_back(line);
  }
  return Vocab(std::move(symbols));
}

}  // namespace golden
