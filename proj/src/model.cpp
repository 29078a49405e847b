#include "amrnmt/model.hpp"

#include <stdexcept>

#include "amrnmt/rng.hpp"

namespace amrnmt {

ParamRef ParamStore::add(const std::string& name, std::vector<int> shape) {
  if (by_name_.count(name)) throw std::runtime_error("params: duplicate name " + name);
  by_name_[name] = count();
  names_.push_back(name);
  values_.emplace_back(std::move(shape));
  return ParamRef{count() - 1};
}

int ParamStore::index_of(const std::string& name) const {
  const auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

long ParamStore::total_elements() const {
  long n = 0;
  for (const auto& t : values_) n += static_cast<long>(t.numel());
  return n;
}

ParamView ParamView::watch(Tape& tape, const ParamStore& store) {
  ParamView pv;
  pv.t_.reserve(static_cast<std::size_t>(store.count()));
  for (int i = 0; i < store.count(); ++i) pv.t_.push_back(tape.leaf(store.value_at(i)));
  return pv;
}

ParamView ParamView::values(const ParamStore& store) {
  ParamView pv;
  pv.t_.reserve(static_cast<std::size_t>(store.count()));
  for (int i = 0; i < store.count(); ++i) pv.t_.push_back(store.value_at(i));
  return pv;
}

ParamView ParamView::of(std::vector<Tensor> tensors) {
  ParamView pv;
  pv.t_ = std::move(tensors);
  return pv;
}

namespace {

LstmParams add_lstm(ParamStore& s, const std::string& prefix, int in, int dim) {
  LstmParams p;
  p.in = in;
  p.dim = dim;
  p.W = s.add(prefix + ".W", {in, 4 * dim});
  p.U = s.add(prefix + ".U", {dim, 4 * dim});
  p.b = s.add(prefix + ".b", {4 * dim});
  return p;
}

GrnGateParams add_gate(ParamStore& s, const std::string& prefix, int g) {
  GrnGateParams p;
  p.W = s.add(prefix + ".W", {g, g});
  p.What = s.add(prefix + ".What", {g, g});
  p.U = s.add(prefix + ".U", {g, g});
  p.Uhat = s.add(prefix + ".Uhat", {g, g});
  p.b = s.add(prefix + ".b", {g});
  return p;
}

AttentionParams add_attention(ParamStore& s, const std::string& prefix, int mem_w, int state_w,
                              int attn_w) {
  AttentionParams p;
  p.Wm = s.add(prefix + ".Wm", {mem_w, attn_w});
  p.Ws = s.add(prefix + ".Ws", {state_w, attn_w});
  p.b = s.add(prefix + ".b", {attn_w});
  p.v = s.add(prefix + ".v", {attn_w, 1});
  return p;
}

}  // namespace

Model::Model(const ModelConfig& c) : cfg(c) {
  const int e = c.embed_dim, h = c.hidden_dim, g = c.graph_dim;
  if (e < 1 || h < 1 || (mode_uses_graph(c.mode) && g < 1))
    throw std::runtime_error("model: all dimensions must be >= 1");
  if (c.src_vocab < 5 || c.tgt_vocab < 5 || (mode_is_dual(c.mode) && c.graph_vocab < 5))
    throw std::runtime_error("model: vocabulary sizes not set");

  src_embed = store.add("enc.embed", {c.src_vocab, e});
  enc_fwd = add_lstm(store, "enc.fwd", e, h);
  enc_bwd = add_lstm(store, "enc.bwd", e, h);

  if (mode_uses_graph(cfg.mode)) {
    node_embed = store.add("grn.node_embed", {c.graph_vocab, e});
    edge_embed = store.add("grn.edge_embed", {c.graph_vocab, e});
    edge_proj_W = store.add("grn.edge_proj.W", {2 * e, g});
    edge_proj_b = store.add("grn.edge_proj.b", {g});
    gate_i = add_gate(store, "grn.gate_i", g);
    gate_o = add_gate(store, "grn.gate_o", g);
    gate_f = add_gate(store, "grn.gate_f", g);
    gate_u = add_gate(store, "grn.gate_u", g);
  } else if (cfg.mode == Mode::Dual2seqLinAmr) {
    amr_embed = store.add("amrseq.embed", {c.graph_vocab, e});
    amr_fwd = add_lstm(store, "amrseq.fwd", e, h);
    amr_bwd = add_lstm(store, "amrseq.bwd", e, h);
  }

  tgt_embed = store.add("dec.embed", {c.tgt_vocab, e});
  dec_cell = add_lstm(store, "dec.cell", cfg.decoder_input_width(), h);
  init_W = store.add("dec.init.W", {2 * h, h});
  init_b = store.add("dec.init.b", {h});
  attn_seq = add_attention(store, "dec.attn_seq", 2 * h, h, h);
  if (mode_is_dual(cfg.mode))
    attn_graph = add_attention(store, "dec.attn_graph", cfg.graph_memory_width(), h, h);
  out_W = store.add("dec.out.W", {cfg.output_input_width(), c.tgt_vocab});
  out_b = store.add("dec.out.b", {c.tgt_vocab});
}

void Model::init_params(std::uint64_t seed) {
  auto rng = make_rng(derive_seed(seed, 0x696e6974ull));
  for (int i = 0; i < store.count(); ++i) {
    Tensor& t = store.value_at(i);
    const std::string& name = store.name_at(i);
    const bool is_bias = t.shape.size() == 1;
    if (is_bias) {
      for (auto& v : *t.data) v = 0.0;
    } else {
      fill_uniform(t, rng, -0.08, 0.08);
    }
    // Forget-gate bias starts at 1 (packed cells: second gate block).
    if (is_bias && name.size() > 2 && name.compare(name.size() - 2, 2, ".b") == 0) {
      if (name.find(".fwd.") != std::string::npos || name.find(".bwd.") != std::string::npos ||
          name.find(".cell.") != std::string::npos) {
        const int dim = t.shape[0] / 4;
        for (int j = dim; j < 2 * dim; ++j) (*t.data)[static_cast<std::size_t>(j)] = 1.0;
      } else if (name.find("gate_f") != std::string::npos) {
        for (auto& v : *t.data) v = 1.0;
      }
    }
  }
}

LstmState lstm_step(const ParamView& pv, const LstmParams& p, const Tensor& x,
                    const LstmState& s) {
  const int d = p.dim;
  Tensor z = add_rowvec(add(matmul(x, pv[p.W]), matmul(s.h, pv[p.U])), pv[p.b]);
  Tensor i = sigmoid(slice_cols(z, 0, d));
  Tensor f = sigmoid(slice_cols(z, d, 2 * d));
  Tensor o = sigmoid(slice_cols(z, 2 * d, 3 * d));
  Tensor g = tanh(slice_cols(z, 3 * d, 4 * d));
  Tensor c = add(mul(f, s.c), mul(i, g));
  Tensor h = mul(o, tanh(c));
  return {h, c};
}

namespace {

// B×d column blend factors built from one mask column: 1 keeps the fresh
// state, 0 carries the previous one (padded steps).
void mask_blend(const std::vector<std::uint8_t>& mask, int batch, int len, int t, int d,
                Tensor& keep, Tensor& carry) {
  keep = Tensor({batch, d});
  carry = Tensor({batch, d});
  for (int b = 0; b < batch; ++b) {
    const double mv = mask[static_cast<std::size_t>(b) * len + t] ? 1.0 : 0.0;
    for (int j = 0; j < d; ++j) {
      keep.at(b, j) = mv;
      carry.at(b, j) = 1.0 - mv;
    }
  }
}

LstmState blend(const LstmState& fresh, const LstmState& prev, const Tensor& keep,
                const Tensor& carry) {
  return {add(mul(fresh.h, keep), mul(prev.h, carry)),
          add(mul(fresh.c, keep), mul(prev.c, carry))};
}

}  // namespace

SeqEncoding bilstm_encode(const ParamView& pv, ParamRef embed, const LstmParams& fwd,
                          const LstmParams& bwd, const std::vector<int>& ids,
                          const std::vector<std::uint8_t>& mask, int batch, int len) {
  if (len < 1 || batch < 1) throw std::runtime_error("bilstm: empty sequence");
  const int h = fwd.dim;
  std::vector<Tensor> embeds(static_cast<std::size_t>(len));
  for (int t = 0; t < len; ++t) {
    std::vector<int> col(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) col[static_cast<std::size_t>(b)] = ids[static_cast<std::size_t>(b) * len + t];
    embeds[static_cast<std::size_t>(t)] = embedding_lookup(pv[embed], col);
  }

  std::vector<Tensor> h_fwd(static_cast<std::size_t>(len)), h_bwd(static_cast<std::size_t>(len));
  LstmState st{Tensor({batch, h}), Tensor({batch, h})};
  for (int t = 0; t < len; ++t) {
    Tensor keep, carry;
    mask_blend(mask, batch, len, t, h, keep, carry);
    st = blend(lstm_step(pv, fwd, embeds[static_cast<std::size_t>(t)], st), st, keep, carry);
    h_fwd[static_cast<std::size_t>(t)] = st.h;
  }
  Tensor bound_fwd = st.h;

  st = LstmState{Tensor({batch, h}), Tensor({batch, h})};
  for (int t = len - 1; t >= 0; --t) {
    Tensor keep, carry;
    mask_blend(mask, batch, len, t, h, keep, carry);
    st = blend(lstm_step(pv, bwd, embeds[static_cast<std::size_t>(t)], st), st, keep, carry);
    h_bwd[static_cast<std::size_t>(t)] = st.h;
  }
  Tensor bound_bwd = st.h;

  // Stack per-step rows (t-major), then permute to batch-major (b·len + t).
  std::vector<Tensor> steps(static_cast<std::size_t>(len));
  for (int t = 0; t < len; ++t)
    steps[static_cast<std::size_t>(t)] =
        concat({h_bwd[static_cast<std::size_t>(t)], h_fwd[static_cast<std::size_t>(t)]}, 1);
  Tensor stacked = concat(steps, 0);  // (len·batch)×2h, row t·batch+b
  std::vector<int> perm(static_cast<std::size_t>(batch) * len);
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < len; ++t)
      perm[static_cast<std::size_t>(b) * len + t] = t * batch + b;
  SeqEncoding enc;
  enc.H = gather_rows(stacked, perm);
  enc.bound_fwd = bound_fwd;
  enc.bound_bwd = bound_bwd;
  enc.batch = batch;
  enc.len = len;
  return enc;
}

Tensor edge_repr(const ParamView& pv, const Model& m, const std::vector<int>& edge_label_ids,
                 const std::vector<int>& edge_src_concept_ids) {
  if (edge_label_ids.size() != edge_src_concept_ids.size())
    throw std::runtime_error("edge_repr: label/source id count mismatch");
  Tensor label_e = embedding_lookup(pv[m.edge_embed], edge_label_ids);
  Tensor src_e = embedding_lookup(pv[m.node_embed], edge_src_concept_ids);
  return add_rowvec(matmul(concat({label_e, src_e}, 1), pv[m.edge_proj_W]), pv[m.edge_proj_b]);
}

GrnState grn_step(const ParamView& pv, const Model& m, const GrnState& prev, const Tensor& phi_in,
                  const Tensor& phi_out, const GraphBatch& gb) {
  Tensor psi_in = adjacency_sum(prev.a, gb.in_neighbors);
  Tensor psi_out = adjacency_sum(prev.a, gb.out_neighbors);
  auto pre = [&](const GrnGateParams& gp) {
    Tensor z = add(matmul(phi_in, pv[gp.W]), matmul(phi_out, pv[gp.What]));
    z = add(z, matmul(psi_in, pv[gp.U]));
    z = add(z, matmul(psi_out, pv[gp.Uhat]));
    return add_rowvec(z, pv[gp.b]);
  };
  Tensor gi = sigmoid(pre(m.gate_i));
  Tensor go = sigmoid(pre(m.gate_o));
  Tensor gf = sigmoid(pre(m.gate_f));
  // The candidate gate is σ as printed in the transition equations; tanh is
  // available as a configuration switch.
  Tensor gu = m.cfg.grn_candidate == GrnCandidate::Sigmoid ? sigmoid(pre(m.gate_u))
                                                           : tanh(pre(m.gate_u));
  Tensor c = add(mul(gf, prev.c), mul(gi, gu));
  Tensor a = mul(go, tanh(c));
  return {a, c};
}

Tensor grn_encode(const ParamView& pv, const Model& m, const GraphBatch& gb, int steps) {
  if (steps < 1) throw std::runtime_error("grn: transition steps must be >= 1");
  const int n = gb.num_nodes();
  const int g = m.cfg.graph_dim;
  if (n == 0) throw std::runtime_error("grn: empty graph batch");

  Tensor phi_in, phi_out;
  if (gb.edge_label_ids.empty()) {
    phi_in = Tensor({n, g});
    phi_out = Tensor({n, g});
  } else {
    std::vector<int> src_concepts(gb.edge_src.size());
    for (std::size_t e = 0; e < gb.edge_src.size(); ++e)
      src_concepts[e] = gb.node_label_ids[static_cast<std::size_t>(gb.edge_src[e])];
    Tensor er = edge_repr(pv, m, gb.edge_label_ids, src_concepts);
    phi_in = adjacency_sum(er, gb.in_edges);
    phi_out = adjacency_sum(er, gb.out_edges);
  }

  GrnState st{Tensor({n, g}), Tensor({n, g})};  // a0 = c0 = 0
  for (int t = 0; t < steps; ++t) st = grn_step(pv, m, st, phi_in, phi_out, gb);
  return st.a;
}

}  // namespace amrnmt
