#include "amrnmt/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

namespace amrnmt {

Vocabulary::Vocabulary() {
  for (const char* s : {"<pad>", "<unk>", "<s>", "</s>"}) push(s);
}

void Vocabulary::push(const std::string& token) {
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& tokens, int max_size) {
  if (max_size <= 4) throw std::runtime_error("vocab: max_size must leave room for specials (> 4)");
  std::map<std::string, long> freq;
  for (const auto& t : tokens) ++freq[t];

  std::vector<std::pair<std::string, long>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  long covered = 0;
  const std::size_t keep = static_cast<std::size_t>(max_size - 4);
  for (std::size_t i = 0; i < ranked.size() && i < keep; ++i) {
    v.push(ranked[i].first);
    covered += ranked[i].second;
  }
  v.coverage_ = tokens.empty() ? 1.0 : static_cast<double>(covered) / static_cast<double>(tokens.size());
  return v;
}

int Vocabulary::id_of(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) throw std::runtime_error("vocab: id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("vocab: cannot write " + path);
  for (std::size_t i = 4; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("vocab: cannot read " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    v.push(line);
  }
  return v;
}

}  // namespace amrnmt
