#pragma once

#include <array>
#include <string>
#include <vector>

namespace amrnmt {

struct BleuReport {
  double bleu = 0.0;  // 0–100
  std::array<double, 4> precisions{};
  double brevity_penalty = 1.0;
  long candidate_length = 0;
  long reference_length = 0;
  long sentences = 0;
};

/// Corpus-level case-sensitive BLEU with clipped n-gram counts and brevity
/// penalty exp(1 − r/c) for c < r; zero when any pₙ is zero (no smoothing).
/// Single reference per candidate; token lines must align.
BleuReport bleu(const std::vector<std::vector<std::string>>& candidates,
                const std::vector<std::vector<std::string>>& references, int max_n = 4);

struct LengthBucket {
  int lo = 1, hi = 0;  // hi == INT_MAX for open-ended
  std::string label;
};

/// Parses "1-10,11-20,21-30,31+" and validates that the ranges partition the
/// positive integers (no gaps, no overlaps, final range open-ended).
std::vector<LengthBucket> parse_buckets(const std::string& spec);

struct BucketedBleu {
  LengthBucket bucket;
  BleuReport report;
};

/// Sentence pairs are assigned by source length (pre-BPE word count), and
/// BLEU is computed per bucket independently.
std::vector<BucketedBleu> bucketed_bleu(const std::vector<std::vector<std::string>>& candidates,
                                        const std::vector<std::vector<std::string>>& references,
                                        const std::vector<int>& source_lengths,
                                        const std::vector<LengthBucket>& buckets, int max_n = 4);

}  // namespace amrnmt
