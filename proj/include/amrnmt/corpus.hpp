#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amrnmt/amr.hpp"
#include "amrnmt/bpe.hpp"
#include "amrnmt/vocab.hpp"

namespace amrnmt {

enum class Mode { Seq2seq, Dual2seq, Dual2seqLinAmr, Dual2seqSelf };

Mode mode_from_string(const std::string& s);
std::string mode_to_string(Mode m);
inline bool mode_needs_amr_file(Mode m) { return m == Mode::Dual2seq || m == Mode::Dual2seqLinAmr; }
inline bool mode_uses_graph(Mode m) { return m == Mode::Dual2seq || m == Mode::Dual2seqSelf; }
inline bool mode_is_dual(Mode m) { return m != Mode::Seq2seq; }

struct ParallelExample {
  std::vector<std::string> src;  // BPE units
  std::vector<std::string> tgt;
  std::optional<AmrGraph> amr;
};

/// Words before BPE segmentation: tokens not ending in "@@" each end a word.
int pre_bpe_word_count(const std::vector<std::string>& tokens);

std::vector<std::string> split_tokens(const std::string& line);
std::string join_tokens(const std::vector<std::string>& tokens);
/// Undoes BPE segmentation: "low@@ er" → "lower".
std::string strip_bpe(const std::vector<std::string>& tokens);
std::vector<std::string> apply_bpe_line(const std::vector<BpeMerge>& merges,
                                        const std::vector<std::string>& words);

/// Loads aligned source/target token files (one sentence per line) and, when
/// given, an AMR file aligned by block index.
std::vector<ParallelExample> load_corpus(const std::string& src_path, const std::string& tgt_path,
                                         const std::string& amr_path = "");

/// Graphs of a batch flattened into one node/edge space with per-example
/// offsets; incidence lists already capped at max_neighbors.
struct GraphBatch {
  std::vector<int> node_label_ids;            // N_total, graph vocabulary
  std::vector<int> edge_label_ids;            // E_total, graph vocabulary
  std::vector<int> edge_src;                  // E_total, global node index
  std::vector<std::vector<int>> in_edges;     // per node: edge indices
  std::vector<std::vector<int>> out_edges;
  std::vector<std::vector<int>> in_neighbors;   // per node: global node indices
  std::vector<std::vector<int>> out_neighbors;
  std::vector<int> offsets;  // per example: first node
  std::vector<int> counts;   // per example: node count
  int max_count = 0;
  int dropped = 0;
  int num_nodes() const { return static_cast<int>(node_label_ids.size()); }
};

struct Batch {
  int size = 0;
  int src_len = 0;
  std::vector<int> src_ids;            // size×src_len, padded
  std::vector<std::uint8_t> src_mask;  // 1 = real token
  int tgt_len = 0;                     // includes <s> and </s>
  std::vector<int> tgt_ids;
  std::vector<std::uint8_t> tgt_mask;
  GraphBatch graph;                    // graph modes
  int amr_seq_len = 0;                 // linamr mode: linearized-AMR token matrix
  std::vector<int> amr_seq_ids;
  std::vector<std::uint8_t> amr_seq_mask;
};

struct BatchOptions {
  Mode mode = Mode::Seq2seq;
  int batch_size = 128;
  int max_len = 50;       // pre-BPE words, either side
  int max_neighbors = 6;
  std::uint64_t seed = 1;
  int epoch = 0;
  bool bucketing = true;  // group by similar source length
};

/// Length-filters, shuffles by (seed, epoch), optionally length-buckets, and
/// pads. Targets get <s>…</s>. Returns batches in final order; `dropped_long`
/// and `dropped_neighbors` report filtering diagnostics when non-null.
std::vector<Batch> make_batches(const std::vector<ParallelExample>& examples,
                                const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                                const Vocabulary& graph_vocab, const BatchOptions& opt,
                                int* dropped_long = nullptr, int* dropped_neighbors = nullptr);

/// Builds the flattened graph batch for a set of graphs (exposed for tests).
GraphBatch build_graph_batch(const std::vector<const AmrGraph*>& graphs,
                             const Vocabulary& graph_vocab, int max_neighbors);

}  // namespace amrnmt
