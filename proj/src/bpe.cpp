#include "amrnmt/bpe.hpp"

#include <fstream>
#include <stdexcept>

namespace amrnmt {

namespace {

// Splits UTF-8 text into codepoint-sized symbol strings.
std::vector<std::string> to_symbols(const std::string& word) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < word.size();) {
    const auto c = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (c >= 0xF0)
      len = 4;
    else if (c >= 0xE0)
      len = 3;
    else if (c >= 0xC0)
      len = 2;
    len = std::min(len, word.size() - i);
    out.push_back(word.substr(i, len));
    i += len;
  }
  return out;
}

// One left-to-right pass, continuing after each merged symbol.
void merge_in_place(std::vector<std::string>& syms, const BpeMerge& m) {
  std::vector<std::string> out;
  out.reserve(syms.size());
  std::size_t i = 0;
  while (i < syms.size()) {
    if (i + 1 < syms.size() && syms[i] == m.first && syms[i + 1] == m.second) {
      out.push_back(syms[i] + syms[i + 1]);
      i += 2;
    } else {
      out.push_back(syms[i]);
      ++i;
    }
  }
  syms = std::move(out);
}

}  // namespace

std::vector<BpeMerge> learn_bpe(const std::map<std::string, long>& word_freq, int num_merges) {
  if (num_merges < 0) throw std::runtime_error("learn_bpe: num_merges must be >= 0");
  std::vector<std::pair<std::vector<std::string>, long>> words;
  words.reserve(word_freq.size());
  for (const auto& [w, f] : word_freq) words.emplace_back(to_symbols(w), f);

  std::vector<BpeMerge> merges;
  for (int step = 0; step < num_merges; ++step) {
    std::map<BpeMerge, long> pair_freq;
    for (const auto& [syms, f] : words)
      for (std::size_t i = 0; i + 1 < syms.size(); ++i)
        pair_freq[{syms[i], syms[i + 1]}] += f;
    if (pair_freq.empty()) break;
    // std::map iteration is lexicographic, so the first maximum is the tie winner
    BpeMerge best;
    long best_freq = -1;
    for (const auto& [p, f] : pair_freq)
      if (f > best_freq) {
        best = p;
        best_freq = f;
      }
    merges.push_back(best);
    for (auto& [syms, f] : words) merge_in_place(syms, best);
  }
  return merges;
}

std::vector<BpeMerge> learn_bpe(const std::vector<std::string>& tokens, int num_merges) {
  std::map<std::string, long> freq;
  for (const auto& t : tokens) ++freq[t];
  return learn_bpe(freq, num_merges);
}

std::vector<std::string> apply_bpe(const std::vector<BpeMerge>& merges, const std::string& word) {
  std::vector<std::string> syms = to_symbols(word);
  if (syms.empty()) return {};
  for (const auto& m : merges) merge_in_place(syms, m);
  for (std::size_t i = 0; i + 1 < syms.size(); ++i) syms[i] += "@@";
  return syms;
}

void save_merges(const std::string& path, const std::vector<BpeMerge>& merges) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("bpe: cannot write " + path);
  for (const auto& [a, b] : merges) out << a << ' ' << b << '\n';
}

std::vector<BpeMerge> load_merges(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("bpe: cannot read " + path);
  std::vector<BpeMerge> merges;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos)
      throw std::runtime_error("bpe: malformed merge line in " + path + ": " + line);
    merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }
  return merges;
}

}  // namespace amrnmt
