#include "amrnmt/bleu.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <map>
#include <stdexcept>

namespace amrnmt {

namespace {

using NgramCounts = std::map<std::vector<std::string>, long>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) >= n)
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i)
      ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                        tokens.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  return counts;
}

}  // namespace

BleuReport bleu(const std::vector<std::vector<std::string>>& candidates,
                const std::vector<std::vector<std::string>>& references, int max_n) {
  if (candidates.size() != references.size())
    throw std::runtime_error("bleu: line counts differ: " + std::to_string(candidates.size()) +
                             " candidates vs " + std::to_string(references.size()) + " references");
  if (max_n < 1 || max_n > 4) throw std::runtime_error("bleu: max_n must be in [1,4]");

  BleuReport rep;
  rep.sentences = static_cast<long>(candidates.size());
  std::array<long, 4> matched{}, total{};
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    const auto& cand = candidates[s];
    const auto& ref = references[s];
    rep.candidate_length += static_cast<long>(cand.size());
    rep.reference_length += static_cast<long>(ref.size());
    for (int n = 1; n <= max_n; ++n) {
      const NgramCounts cc = count_ngrams(cand, n);
      const NgramCounts rc = count_ngrams(ref, n);
      for (const auto& [gram, count] : cc) {
        const auto it = rc.find(gram);
        matched[static_cast<std::size_t>(n - 1)] +=
            std::min(count, it == rc.end() ? 0L : it->second);
        total[static_cast<std::size_t>(n - 1)] += count;
      }
    }
  }

  bool all_positive = true;
  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    const double p = total[static_cast<std::size_t>(n)]
                         ? static_cast<double>(matched[static_cast<std::size_t>(n)]) /
                               static_cast<double>(total[static_cast<std::size_t>(n)])
                         : 0.0;
    rep.precisions[static_cast<std::size_t>(n)] = p;
    if (p <= 0.0)
      all_positive = false;
    else
      log_sum += std::log(p);
  }

  if (rep.candidate_length == 0) {
    rep.brevity_penalty = 0.0;
    rep.bleu = 0.0;
    return rep;
  }
  rep.brevity_penalty =
      rep.candidate_length > rep.reference_length
          ? 1.0
          : std::exp(1.0 - static_cast<double>(rep.reference_length) /
                               static_cast<double>(rep.candidate_length));
  rep.bleu = all_positive ? 100.0 * rep.brevity_penalty * std::exp(log_sum / max_n) : 0.0;
  return rep;
}

std::vector<LengthBucket> parse_buckets(const std::string& spec) {
  std::vector<LengthBucket> buckets;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t comma = std::min(spec.find(',', pos), spec.size());
    const std::string part = spec.substr(pos, comma - pos);
    if (part.empty()) throw std::runtime_error("buckets: empty range in '" + spec + "'");
    LengthBucket b;
    b.label = part;
    try {
      if (part.back() == '+') {
        b.lo = std::stoi(part.substr(0, part.size() - 1));
        b.hi = INT_MAX;
      } else {
        const std::size_t dash = part.find('-');
        if (dash == std::string::npos) throw std::runtime_error("");
        b.lo = std::stoi(part.substr(0, dash));
        b.hi = std::stoi(part.substr(dash + 1));
      }
    } catch (...) {
      throw std::runtime_error("buckets: cannot parse range '" + part + "'");
    }
    if (b.lo < 1 || (b.hi != INT_MAX && b.hi < b.lo))
      throw std::runtime_error("buckets: bad range '" + part + "'");
    buckets.push_back(b);
    if (comma == spec.size()) break;
    pos = comma + 1;
  }
  if (buckets.empty()) throw std::runtime_error("buckets: empty specification");
  if (buckets.front().lo != 1)
    throw std::runtime_error("buckets: ranges must start at 1, got " + buckets.front().label);
  for (std::size_t i = 1; i < buckets.size(); ++i) {
    if (buckets[i - 1].hi == INT_MAX)
      throw std::runtime_error("buckets: open-ended range must come last");
    if (buckets[i].lo != buckets[i - 1].hi + 1)
      throw std::runtime_error("buckets: ranges '" + buckets[i - 1].label + "' and '" +
                               buckets[i].label + "' overlap or leave a gap");
  }
  if (buckets.back().hi != INT_MAX)
    throw std::runtime_error("buckets: last range must be open-ended (e.g. 31+)");
  return buckets;
}

std::vector<BucketedBleu> bucketed_bleu(const std::vector<std::vector<std::string>>& candidates,
                                        const std::vector<std::vector<std::string>>& references,
                                        const std::vector<int>& source_lengths,
                                        const std::vector<LengthBucket>& buckets, int max_n) {
  if (candidates.size() != references.size() || candidates.size() != source_lengths.size())
    throw std::runtime_error("bucketed_bleu: candidates, references and lengths must align");
  std::vector<BucketedBleu> out;
  for (const auto& bucket : buckets) {
    std::vector<std::vector<std::string>> cs, rs;
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (source_lengths[i] >= bucket.lo && source_lengths[i] <= bucket.hi) {
        cs.push_back(candidates[i]);
        rs.push_back(references[i]);
      }
    out.push_back({bucket, bleu(cs, rs, max_n)});
  }
  return out;
}

}  // namespace amrnmt
