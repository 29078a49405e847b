#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace amrnmt {

using BpeMerge = std::pair<std::string, std::string>;

/// Greedy highest-frequency pair merges over a word-frequency table; ties
/// break lexicographically by pair. Learning k then k' > k merges agrees on
/// the first k.
std::vector<BpeMerge> learn_bpe(const std::map<std::string, long>& word_freq, int num_merges);
std::vector<BpeMerge> learn_bpe(const std::vector<std::string>& tokens, int num_merges);

/// Replays the merges in order over the word's character sequence; non-final
/// subwords carry the "@@" continuation suffix. Joining the output and
/// stripping "@@ " recovers the word exactly.
std::vector<std::string> apply_bpe(const std::vector<BpeMerge>& merges, const std::string& word);

/// One merge per line, two space-separated symbols.
void save_merges(const std::string& path, const std::vector<BpeMerge>& merges);
std::vector<BpeMerge> load_merges(const std::string& path);

}  // namespace amrnmt
