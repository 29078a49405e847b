#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "amrnmt/model.hpp"

namespace amrnmt {

/// Training-time dropout stream; null pointer = evaluation (no dropout).
struct DropoutCtx {
  double p = 0.0;
  std::mt19937_64 rng;
};

/// Applies inverted-scaling dropout when ctx is non-null and p > 0.
Tensor maybe_dropout(const Tensor& x, DropoutCtx* ctx);

/// Attention memories for one decoded batch. `*_pre` caches Wm·memory.
struct Memories {
  Tensor seq;  // (B·L)×2h
  Tensor seq_pre;
  std::vector<std::uint8_t> seq_mask;  // B×L
  int seq_len = 0;
  Tensor graph;  // (B·Lg)×gw, dual modes only
  Tensor graph_pre;
  std::vector<std::uint8_t> graph_mask;
  int graph_len = 0;
  bool has_graph = false;
};

Memories prepare_memories(const ParamView& pv, const Model& m, const SeqEncoding& enc,
                          const std::vector<std::uint8_t>& src_mask, const Tensor& graph_memory,
                          const std::vector<std::uint8_t>& graph_mask, int graph_len);

struct DecState {
  Tensor h, c;     // decoder LSTM
  Tensor zeta;     // previous sequential context
  Tensor zeta_g;   // previous graph context (dual modes)
};

/// s0 from the encoder boundary states via a dense layer; contexts start at
/// exactly zero.
DecState init_state(const ParamView& pv, const Model& m, const SeqEncoding& enc);

struct AttendResult {
  Tensor alpha;    // B×L, masked softmax row per example
  Tensor context;  // B×mem_width
};

AttendResult attend(const ParamView& pv, const AttentionParams& ap, const Tensor& memory,
                    const Tensor& memory_pre, const Tensor& query,
                    const std::vector<std::uint8_t>& mask, int len);

/// Per-step record kept for inspection and tests.
struct StepResult {
  DecState state;
  Tensor P;           // B×V output distribution
  Tensor alpha_seq;   // B×L
  Tensor alpha_graph; // B×Lg (dual modes)
};

StepResult decode_step(const ParamView& pv, const Model& m, const DecState& prev,
                       const Tensor& y_embed, const Memories& mem, DropoutCtx* dropout);

/// Length-normalized beam search over one example (batch size 1 memories);
/// beam_size 1 is exactly greedy. Returns target-vocabulary ids without
/// <s>/</s>.
std::vector<int> beam_decode(const ParamView& pv, const Model& m, const DecState& init,
                             const Memories& mem, int beam_size, int max_len,
                             bool length_normalize = true);

/// Score beam_decode would assign to emitting exactly `ids` (append </s>
/// yourself for a terminated sequence); exposed for the search tests.
double sequence_score(const ParamView& pv, const Model& m, const DecState& init,
                      const Memories& mem, const std::vector<int>& ids,
                      bool length_normalize = true);

}  // namespace amrnmt
