#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "amrnmt/corpus.hpp"
#include "amrnmt/ops.hpp"
#include "amrnmt/tensor.hpp"

namespace amrnmt {

struct ParamRef {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

/// Named parameter collection with stable registration order.
class ParamStore {
 public:
  ParamRef add(const std::string& name, std::vector<int> shape);
  Tensor& value(ParamRef r) { return values_[static_cast<std::size_t>(r.idx)]; }
  const Tensor& value(ParamRef r) const { return values_[static_cast<std::size_t>(r.idx)]; }
  Tensor& value_at(int i) { return values_[static_cast<std::size_t>(i)]; }
  const Tensor& value_at(int i) const { return values_[static_cast<std::size_t>(i)]; }
  const std::string& name_at(int i) const { return names_[static_cast<std::size_t>(i)]; }
  int index_of(const std::string& name) const;
  int count() const { return static_cast<int>(values_.size()); }
  long total_elements() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, int> by_name_;
};

/// Either the tape leaves of all parameters (training) or their raw values
/// (inference); model code is written against this and works for both.
class ParamView {
 public:
  static ParamView watch(Tape& tape, const ParamStore& store);
  static ParamView values(const ParamStore& store);
  /// Wraps an externally built tensor list aligned with the registration
  /// order (gradient-check harnesses).
  static ParamView of(std::vector<Tensor> tensors);
  const Tensor& operator[](ParamRef r) const { return t_[static_cast<std::size_t>(r.idx)]; }
  const Tensor& at(int i) const { return t_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<Tensor> t_;
};

/// One LSTM direction/cell: packed gate weights [i f o g], gate width 4·dim.
struct LstmParams {
  ParamRef W, U, b;
  int in = 0, dim = 0;
};

struct AttentionParams {
  ParamRef Wm, Ws, b, v;  // scores = vᵀ tanh(Wm·mem + Ws·s + b)
};

struct GrnGateParams {
  ParamRef W, What, U, Uhat, b;
};

enum class GrnCandidate { Sigmoid, Tanh };

struct ModelConfig {
  Mode mode = Mode::Dual2seq;
  int embed_dim = 500;
  int hidden_dim = 500;  // per-direction encoder width; also decoder state width
  int graph_dim = 500;
  int transition_steps = 10;
  GrnCandidate grn_candidate = GrnCandidate::Sigmoid;
  bool feed_graph_context = true;
  int src_vocab = 0, tgt_vocab = 0, graph_vocab = 0;

  /// Width of the second attention memory: graph state for GRN modes, 2h for
  /// the linearized-AMR BiLSTM, 0 in seq2seq.
  int graph_memory_width() const {
    if (mode == Mode::Dual2seq || mode == Mode::Dual2seqSelf) return graph_dim;
    if (mode == Mode::Dual2seqLinAmr) return 2 * hidden_dim;
    return 0;
  }
  int decoder_input_width() const {
    return embed_dim + 2 * hidden_dim +
           (mode_is_dual(mode) && feed_graph_context ? graph_memory_width() : 0);
  }
  int output_input_width() const {
    return hidden_dim + 2 * hidden_dim + (mode_is_dual(mode) ? graph_memory_width() : 0);
  }
};

struct Model {
  ModelConfig cfg;
  ParamStore store;

  ParamRef src_embed;
  LstmParams enc_fwd, enc_bwd;

  // GRN graph encoder (dual2seq, dual2seq-self)
  ParamRef node_embed, edge_embed, edge_proj_W, edge_proj_b;
  GrnGateParams gate_i, gate_o, gate_f, gate_u;

  // linearized-AMR BiLSTM (dual2seq-linamr)
  ParamRef amr_embed;
  LstmParams amr_fwd, amr_bwd;

  ParamRef tgt_embed;
  LstmParams dec_cell;
  ParamRef init_W, init_b;  // s0 = W1·[h←_first; h→_last] + b1
  AttentionParams attn_seq, attn_graph;
  ParamRef out_W, out_b;  // V3 rows ordered [s | ζ | ζ̃], b3

  explicit Model(const ModelConfig& c);

  /// uniform(−0.08, 0.08) weights, zero biases except forget gates at 1.
  void init_params(std::uint64_t seed);
  long parameter_count() const { return store.total_elements(); }
};

struct LstmState {
  Tensor h, c;
};
LstmState lstm_step(const ParamView& pv, const LstmParams& p, const Tensor& x, const LstmState& s);

struct SeqEncoding {
  Tensor H;          // (B·L)×2h, row b·L+t = [h←_t ; h→_t]
  Tensor bound_bwd;  // B×h: backward state at position 0
  Tensor bound_fwd;  // B×h: forward state at each example's last real token
  int batch = 0, len = 0;
};

/// ids/mask are row-major B×len; padded positions carry the previous state
/// (masked updates), so bound_fwd can be read at the final column.
SeqEncoding bilstm_encode(const ParamView& pv, ParamRef embed, const LstmParams& fwd,
                          const LstmParams& bwd, const std::vector<int>& ids,
                          const std::vector<std::uint8_t>& mask, int batch, int len);

/// x_{i,j}^l = W4·[e_l ; e_{v_i}] + b4, one row per edge. Depends only on the
/// edge label and the source node's concept.
Tensor edge_repr(const ParamView& pv, const Model& m, const std::vector<int>& edge_label_ids,
                 const std::vector<int>& edge_src_concept_ids);

struct GrnState {
  Tensor a, c;
};

/// One synchronous transition: all nodes update from the t−1 snapshot.
GrnState grn_step(const ParamView& pv, const Model& m, const GrnState& prev, const Tensor& phi_in,
                  const Tensor& phi_out, const GraphBatch& gb);

/// Runs `steps` transitions from the all-zero state; returns the final node
/// state matrix (the graph attention memory). steps must be >= 1.
Tensor grn_encode(const ParamView& pv, const Model& m, const GraphBatch& gb, int steps);

}  // namespace amrnmt
