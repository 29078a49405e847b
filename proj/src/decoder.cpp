#include "amrnmt/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace amrnmt {

Tensor maybe_dropout(const Tensor& x, DropoutCtx* ctx) {
  if (!ctx || ctx->p <= 0.0) return x;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::uint8_t> keep(x.numel());
  for (auto& k : keep) k = u(ctx->rng) >= ctx->p ? 1 : 0;
  return dropout_mask_mul(x, keep, 1.0 - ctx->p);
}

Memories prepare_memories(const ParamView& pv, const Model& m, const SeqEncoding& enc,
                          const std::vector<std::uint8_t>& src_mask, const Tensor& graph_memory,
                          const std::vector<std::uint8_t>& graph_mask, int graph_len) {
  Memories mem;
  mem.seq = enc.H;
  mem.seq_pre = matmul(enc.H, pv[m.attn_seq.Wm]);
  mem.seq_mask = src_mask;
  mem.seq_len = enc.len;
  if (mode_is_dual(m.cfg.mode)) {
    if (graph_memory.numel() == 0)
      throw std::runtime_error("decoder: mode " + mode_to_string(m.cfg.mode) +
                               " requires a graph memory");
    mem.graph = graph_memory;
    mem.graph_pre = matmul(graph_memory, pv[m.attn_graph.Wm]);
    mem.graph_mask = graph_mask;
    mem.graph_len = graph_len;
    mem.has_graph = true;
  }
  return mem;
}

DecState init_state(const ParamView& pv, const Model& m, const SeqEncoding& enc) {
  Tensor boundary = concat({enc.bound_bwd, enc.bound_fwd}, 1);
  DecState st;
  st.h = add_rowvec(matmul(boundary, pv[m.init_W]), pv[m.init_b]);
  st.c = Tensor({enc.batch, m.cfg.hidden_dim});
  st.zeta = Tensor({enc.batch, 2 * m.cfg.hidden_dim});
  if (mode_is_dual(m.cfg.mode)) st.zeta_g = Tensor({enc.batch, m.cfg.graph_memory_width()});
  return st;
}

AttendResult attend(const ParamView& pv, const AttentionParams& ap, const Tensor& memory,
                    const Tensor& memory_pre, const Tensor& query,
                    const std::vector<std::uint8_t>& mask, int len) {
  const int bsz = query.rows();
  if (memory.rows() != bsz * len)
    throw std::runtime_error("attend: memory " + memory.shape_str() + " does not cover " +
                             std::to_string(bsz) + "x" + std::to_string(len) + " positions");
  Tensor sw = matmul(query, pv[ap.Ws]);
  Tensor pre = add_rowvec(add(memory_pre, repeat_rows(sw, len)), pv[ap.b]);
  Tensor scores = matmul(tanh(pre), pv[ap.v]);
  Tensor eps = reshape(scores, {bsz, len});
  Tensor alpha = softmax_rows(eps, &mask);
  Tensor ctx = weighted_rows_sum(memory, alpha);
  return {alpha, ctx};
}

StepResult decode_step(const ParamView& pv, const Model& m, const DecState& prev,
                       const Tensor& y_embed, const Memories& mem, DropoutCtx* dropout) {
  const bool dual = mode_is_dual(m.cfg.mode);
  if (dual && !mem.has_graph)
    throw std::runtime_error("decode_step: dual mode without a graph memory");

  std::vector<Tensor> in_parts = {y_embed, prev.zeta};
  if (dual && m.cfg.feed_graph_context) in_parts.push_back(prev.zeta_g);
  LstmState ns = lstm_step(pv, m.dec_cell, concat(in_parts, 1), {prev.h, prev.c});

  StepResult r;
  r.state.h = ns.h;
  r.state.c = ns.c;

  AttendResult as = attend(pv, m.attn_seq, mem.seq, mem.seq_pre, ns.h, mem.seq_mask, mem.seq_len);
  r.state.zeta = as.context;
  r.alpha_seq = as.alpha;

  std::vector<Tensor> out_parts = {ns.h, as.context};
  if (dual) {
    AttendResult ag =
        attend(pv, m.attn_graph, mem.graph, mem.graph_pre, ns.h, mem.graph_mask, mem.graph_len);
    r.state.zeta_g = ag.context;
    r.alpha_graph = ag.alpha;
    out_parts.push_back(ag.context);
  }
  Tensor feat = maybe_dropout(concat(out_parts, 1), dropout);
  r.P = softmax_rows(add_rowvec(matmul(feat, pv[m.out_W]), pv[m.out_b]));
  return r;
}

namespace {

constexpr double kLogFloor = 1e-12;

struct Hyp {
  std::vector<int> ids;  // emitted tokens; ends with </s> when finished
  double logp = 0.0;
  DecState state;
  int last_id = Vocabulary::kBos;
  bool finished = false;

  double score(bool norm) const {
    return norm && !ids.empty() ? logp / static_cast<double>(ids.size()) : logp;
  }
};

bool better(const Hyp& a, const Hyp& b, bool norm) {
  const double sa = a.score(norm), sb = b.score(norm);
  if (sa != sb) return sa > sb;
  if (a.logp != b.logp) return a.logp > b.logp;
  return a.ids < b.ids;
}

}  // namespace

std::vector<int> beam_decode(const ParamView& pv, const Model& m, const DecState& init,
                             const Memories& mem, int beam_size, int max_len,
                             bool length_normalize) {
  if (beam_size < 1 || max_len < 1)
    throw std::runtime_error("beam_decode: beam_size and max_len must be >= 1");
  if (init.h.rows() != 1) throw std::runtime_error("beam_decode: batch size must be 1");

  std::vector<Hyp> live(1);
  live[0].state = init;
  std::vector<Hyp> done;

  for (int depth = 0; depth < max_len && !live.empty(); ++depth) {
    std::vector<Hyp> candidates;
    for (const Hyp& hyp : live) {
      Tensor y = embedding_lookup(pv[m.tgt_embed], {hyp.last_id});
      StepResult r = decode_step(pv, m, hyp.state, y, mem, nullptr);
      const int v = r.P.cols();
      std::vector<int> order(static_cast<std::size_t>(v));
      for (int i = 0; i < v; ++i) order[static_cast<std::size_t>(i)] = i;
      std::partial_sort(order.begin(), order.begin() + std::min(beam_size, v), order.end(),
                        [&](int a, int b) {
                          const double pa = r.P.at(0, a), pb = r.P.at(0, b);
                          return pa != pb ? pa > pb : a < b;
                        });
      for (int k = 0; k < std::min(beam_size, v); ++k) {
        const int tok = order[static_cast<std::size_t>(k)];
        Hyp next = hyp;
        next.ids.push_back(tok);
        next.logp += std::log(std::max(r.P.at(0, tok), kLogFloor));
        next.state = r.state;
        next.last_id = tok;
        if (tok == Vocabulary::kEos) {
          next.finished = true;
          done.push_back(std::move(next));
        } else {
          candidates.push_back(std::move(next));
        }
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](const Hyp& a, const Hyp& b) { return better(a, b, length_normalize); });
    if (static_cast<int>(candidates.size()) > beam_size) candidates.resize(static_cast<std::size_t>(beam_size));
    live = std::move(candidates);
  }
  // Hypotheses still alive at max_len compete as truncated sequences.
  for (Hyp& hyp : live) done.push_back(std::move(hyp));
  if (done.empty()) return {};

  const Hyp* best = &done[0];
  for (const Hyp& hyp : done)
    if (better(hyp, *best, length_normalize)) best = &hyp;

  std::vector<int> out = best->ids;
  if (!out.empty() && out.back() == Vocabulary::kEos) out.pop_back();
  return out;
}

double sequence_score(const ParamView& pv, const Model& m, const DecState& init,
                      const Memories& mem, const std::vector<int>& ids, bool length_normalize) {
  DecState st = init;
  int last = Vocabulary::kBos;
  double logp = 0.0;
  for (int tok : ids) {
    Tensor y = embedding_lookup(pv[m.tgt_embed], {last});
    StepResult r = decode_step(pv, m, st, y, mem, nullptr);
    logp += std::log(std::max(r.P.at(0, tok), kLogFloor));
    st = r.state;
    last = tok;
  }
  if (length_normalize && !ids.empty()) logp /= static_cast<double>(ids.size());
  return logp;
}

}  // namespace amrnmt
