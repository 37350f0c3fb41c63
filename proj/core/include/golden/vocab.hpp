#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace golden {

// Bijective token <-> id map. Ids are dense in [0, size()); the first four
// ids are reserved control symbols.
class Vocab {
 public:
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;
  static constexpr int kPad = 2;
  static constexpr int kUnk = 3;

  // symbols must start with the four reserved markers.
  explicit Vocab(std::vector<std::string> symbols);

  // The fixed vocabulary of the synthetic corpus grammar.
  static Vocab builtin();

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string& symbol(int id) const { return symbols_.at(static_cast<size_t>(id)); }
  // Returns kUnk for unknown symbols.
  int id(std::string_view symbol) const;
  bool contains(std::string_view symbol) const { return index_.count(std::string(symbol)) > 0; }

  // Whitespace-delimited word tokenization over the corpus alphabet.
  std::vector<int> tokenize(std::string_view text) const;
  std::string detokenize(std::span<const int> ids) const;

  void save(const std::filesystem::path& path) const;   // one symbol per line, line = id
  static Vocab load(const std::filesystem::path& path);

  bool operator==(const Vocab& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace golden
