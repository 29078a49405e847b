#include "amrnmt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "amrnmt/rng.hpp"

namespace amrnmt {

Mode mode_from_string(const std::string& s) {
  if (s == "seq2seq") return Mode::Seq2seq;
  if (s == "dual2seq") return Mode::Dual2seq;
  if (s == "dual2seq-linamr") return Mode::Dual2seqLinAmr;
  if (s == "dual2seq-self") return Mode::Dual2seqSelf;
  throw std::runtime_error("unknown mode '" + s +
                           "' (expected seq2seq, dual2seq, dual2seq-linamr or dual2seq-self)");
}

std::string mode_to_string(Mode m) {
  switch (m) {
    case Mode::Seq2seq: return "seq2seq";
    case Mode::Dual2seq: return "dual2seq";
    case Mode::Dual2seqLinAmr: return "dual2seq-linamr";
    case Mode::Dual2seqSelf: return "dual2seq-self";
  }
  return "?";
}

int pre_bpe_word_count(const std::vector<std::string>& tokens) {
  int words = 0;
  for (const auto& t : tokens)
    if (t.size() < 2 || t.compare(t.size() - 2, 2, "@@") != 0) ++words;
  return words;
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string strip_bpe(const std::vector<std::string>& tokens) {
  std::string joined = join_tokens(tokens);
  std::string out;
  for (std::size_t i = 0; i < joined.size();) {
    if (i + 2 < joined.size() && joined.compare(i, 3, "@@ ") == 0)
      i += 3;
    else
      out += joined[i++];
  }
  return out;
}

std::vector<std::string> apply_bpe_line(const std::vector<BpeMerge>& merges,
                                        const std::vector<std::string>& words) {
  std::vector<std::string> out;
  for (const auto& w : words) {
    auto units = apply_bpe(merges, w);
    out.insert(out.end(), units.begin(), units.end());
  }
  return out;
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("corpus: cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::vector<ParallelExample> load_corpus(const std::string& src_path, const std::string& tgt_path,
                                         const std::string& amr_path) {
  const auto src_lines = read_lines(src_path);
  const auto tgt_lines = read_lines(tgt_path);
  if (src_lines.size() != tgt_lines.size())
    throw std::runtime_error("corpus: line counts differ: " + src_path + " has " +
                             std::to_string(src_lines.size()) + ", " + tgt_path + " has " +
                             std::to_string(tgt_lines.size()));
  std::vector<AmrGraph> graphs;
  if (!amr_path.empty()) {
    std::ifstream in(amr_path);
    if (!in) throw std::runtime_error("corpus: cannot read " + amr_path);
    const auto blocks = read_amr_blocks(in);
    if (blocks.size() != src_lines.size())
      throw std::runtime_error("corpus: " + amr_path + " has " + std::to_string(blocks.size()) +
                               " AMR blocks for " + std::to_string(src_lines.size()) +
                               " sentence pairs");
    graphs.reserve(blocks.size());
    for (const auto& b : blocks) graphs.push_back(parse_penman(b));
  }
  std::vector<ParallelExample> out;
  out.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    ParallelExample ex;
    ex.src = split_tokens(src_lines[i]);
    ex.tgt = split_tokens(tgt_lines[i]);
    if (!graphs.empty()) ex.amr = std::move(graphs[i]);
    out.push_back(std::move(ex));
  }
  return out;
}

GraphBatch build_graph_batch(const std::vector<const AmrGraph*>& graphs,
                             const Vocabulary& graph_vocab, int max_neighbors) {
  GraphBatch gb;
  int node_base = 0, edge_base = 0;
  for (const AmrGraph* g : graphs) {
    gb.offsets.push_back(node_base);
    gb.counts.push_back(static_cast<int>(g->nodes.size()));
    gb.max_count = std::max(gb.max_count, static_cast<int>(g->nodes.size()));
    for (const auto& node : g->nodes) gb.node_label_ids.push_back(graph_vocab.id_of(node.label));
    for (const auto& edge : g->edges) {
      gb.edge_label_ids.push_back(graph_vocab.id_of(edge.label));
      gb.edge_src.push_back(node_base + edge.src);
    }
    const Adjacency adj = build_adjacency(*g, max_neighbors);
    gb.dropped += adj.dropped;
    for (std::size_t j = 0; j < g->nodes.size(); ++j) {
      std::vector<int> ie, oe, in_nb, out_nb;
      for (const auto& entry : adj.in[j]) {
        ie.push_back(edge_base + entry.edge);
        in_nb.push_back(node_base + entry.neighbor);
      }
      for (const auto& entry : adj.out[j]) {
        oe.push_back(edge_base + entry.edge);
        out_nb.push_back(node_base + entry.neighbor);
      }
      gb.in_edges.push_back(std::move(ie));
      gb.out_edges.push_back(std::move(oe));
      gb.in_neighbors.push_back(std::move(in_nb));
      gb.out_neighbors.push_back(std::move(out_nb));
    }
    node_base += static_cast<int>(g->nodes.size());
    edge_base += static_cast<int>(g->edges.size());
  }
  return gb;
}

std::vector<Batch> make_batches(const std::vector<ParallelExample>& examples,
                                const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                                const Vocabulary& graph_vocab, const BatchOptions& opt,
                                int* dropped_long, int* dropped_neighbors) {
  // Length filter: a pair is dropped if either side exceeds max_len pre-BPE words.
  std::vector<int> keep;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (ex.src.empty() || ex.tgt.empty()) continue;
    if (pre_bpe_word_count(ex.src) > opt.max_len || pre_bpe_word_count(ex.tgt) > opt.max_len)
      continue;
    if (opt.mode == Mode::Dual2seq || opt.mode == Mode::Dual2seqLinAmr)
      if (!ex.amr.has_value())
        throw std::runtime_error("make_batches: mode " + mode_to_string(opt.mode) +
                                 " requires an AMR per example");
    keep.push_back(static_cast<int>(i));
  }
  if (dropped_long) *dropped_long = static_cast<int>(examples.size()) - static_cast<int>(keep.size());

  auto rng = make_rng(derive_seed(opt.seed, 0x6261746368ull + static_cast<std::uint64_t>(opt.epoch)));
  std::shuffle(keep.begin(), keep.end(), rng);
  if (opt.bucketing)
    std::stable_sort(keep.begin(), keep.end(), [&](int a, int b) {
      return examples[static_cast<std::size_t>(a)].src.size() <
             examples[static_cast<std::size_t>(b)].src.size();
    });

  std::vector<std::vector<int>> groups;
  for (std::size_t pos = 0; pos < keep.size(); pos += static_cast<std::size_t>(opt.batch_size))
    groups.emplace_back(keep.begin() + static_cast<std::ptrdiff_t>(pos),
                        keep.begin() + static_cast<std::ptrdiff_t>(
                                           std::min(pos + static_cast<std::size_t>(opt.batch_size),
                                                    keep.size())));
  std::shuffle(groups.begin(), groups.end(), rng);

  int total_dropped_neighbors = 0;
  std::vector<Batch> batches;
  for (const auto& group : groups) {
    Batch b;
    b.size = static_cast<int>(group.size());
    std::size_t max_src = 0, max_tgt = 0;
    for (int idx : group) {
      max_src = std::max(max_src, examples[static_cast<std::size_t>(idx)].src.size());
      max_tgt = std::max(max_tgt, examples[static_cast<std::size_t>(idx)].tgt.size());
    }
    b.src_len = static_cast<int>(max_src);
    b.tgt_len = static_cast<int>(max_tgt) + 2;  // <s> … </s>
    b.src_ids.assign(static_cast<std::size_t>(b.size) * b.src_len, Vocabulary::kPad);
    b.src_mask.assign(b.src_ids.size(), 0);
    b.tgt_ids.assign(static_cast<std::size_t>(b.size) * b.tgt_len, Vocabulary::kPad);
    b.tgt_mask.assign(b.tgt_ids.size(), 0);

    std::vector<const AmrGraph*> graphs;
    std::vector<AmrGraph> chain_storage;
    if (opt.mode == Mode::Dual2seqSelf) chain_storage.reserve(group.size());

    for (std::size_t r = 0; r < group.size(); ++r) {
      const auto& ex = examples[static_cast<std::size_t>(group[r])];
      for (std::size_t t = 0; t < ex.src.size(); ++t) {
        b.src_ids[r * max_src + t] = src_vocab.id_of(ex.src[t]);
        b.src_mask[r * max_src + t] = 1;
      }
      const std::size_t tbase = r * static_cast<std::size_t>(b.tgt_len);
      b.tgt_ids[tbase] = Vocabulary::kBos;
      b.tgt_mask[tbase] = 1;
      for (std::size_t t = 0; t < ex.tgt.size(); ++t) {
        b.tgt_ids[tbase + 1 + t] = tgt_vocab.id_of(ex.tgt[t]);
        b.tgt_mask[tbase + 1 + t] = 1;
      }
      b.tgt_ids[tbase + 1 + ex.tgt.size()] = Vocabulary::kEos;
      b.tgt_mask[tbase + 1 + ex.tgt.size()] = 1;

      if (opt.mode == Mode::Dual2seq) {
        graphs.push_back(&*ex.amr);
      } else if (opt.mode == Mode::Dual2seqSelf) {
        chain_storage.push_back(chain_graph(ex.src));
        graphs.push_back(&chain_storage.back());
      }
    }

    if (mode_uses_graph(opt.mode)) {
      b.graph = build_graph_batch(graphs, graph_vocab, opt.max_neighbors);
      total_dropped_neighbors += b.graph.dropped;
    }

    if (opt.mode == Mode::Dual2seqLinAmr) {
      std::vector<std::vector<std::string>> lin;
      std::size_t max_lin = 0;
      for (int idx : group) {
        lin.push_back(linearize(*examples[static_cast<std::size_t>(idx)].amr));
        max_lin = std::max(max_lin, lin.back().size());
      }
      b.amr_seq_len = static_cast<int>(max_lin);
      b.amr_seq_ids.assign(static_cast<std::size_t>(b.size) * max_lin, Vocabulary::kPad);
      b.amr_seq_mask.assign(b.amr_seq_ids.size(), 0);
      for (std::size_t r = 0; r < lin.size(); ++r)
        for (std::size_t t = 0; t < lin[r].size(); ++t) {
          b.amr_seq_ids[r * max_lin + t] = graph_vocab.id_of(lin[r][t]);
          b.amr_seq_mask[r * max_lin + t] = 1;
        }
    }

    batches.push_back(std::move(b));
  }
  if (dropped_neighbors) *dropped_neighbors = total_dropped_neighbors;
  return batches;
}

}  // namespace amrnmt
