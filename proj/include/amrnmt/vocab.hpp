#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace amrnmt {

/// Bidirectional token↔id map with reserved specials and frequency-based
/// truncation. Ids 0..3 are always <pad>, <unk>, <s>, </s>.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;

  Vocabulary();

  /// Ranks tokens by frequency (ties lexicographic), keeps the top
  /// max_size − 4, and reports the kept fraction of token occurrences.
  static Vocabulary build(const std::vector<std::string>& tokens, int max_size);

  int id_of(const std::string& token) const;  // kUnk when absent
  const std::string& token_of(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  double coverage() const { return coverage_; }

  /// File format: one token per line, line i holding id i + 4 (specials implicit).
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  double coverage_ = 1.0;
  void push(const std::string& token);
};

}  // namespace amrnmt
