#pragma once

#include <cstdint>
#include <string>

#include "amrnmt/model.hpp"

namespace amrnmt {

/// One flat configuration for all subcommands. JSON config files use exactly
/// these keys (dashed flag names); command-line flags override file values.
struct RunConfig {
  std::string mode = "dual2seq";
  int embed_dim = 500;
  int hidden_dim = 500;
  int graph_dim = 500;
  int transition_steps = 10;
  double lr = 0.0005;
  int batch_size = 128;
  double dropout = 0.2;
  int epochs = 30;
  std::uint64_t seed = 12345;
  int max_neighbors = 6;
  int max_len = 50;
  int beam_size = 5;
  int max_decode_len = 100;
  int bpe_merges = 8000;
  int src_vocab_size = 40000;
  int tgt_vocab_size = 40000;
  int amr_vocab_size = 40000;
  std::string grn_candidate = "sigmoid";  // candidate gate as printed, or "tanh"
  bool feed_graph_context = true;
  bool length_normalize = true;
  bool bucketing = true;
  double grad_clip = 5.0;  // <= 0 disables

  std::string train_src, train_tgt, train_amr;
  std::string dev_src, dev_tgt, dev_amr;
  std::string vocab_src, vocab_tgt, vocab_amr, merges;
  std::string model;     // checkpoint path (train output / translate input)
  std::string resume;    // checkpoint to continue training from
  std::string out_dir;   // preprocess output directory
  std::string input, input_amr, output;  // translate
  std::string hyp, ref, src;             // evaluate
  std::string length_buckets;            // e.g. "1-10,11-20,21-30,31+"

  Mode mode_enum() const { return mode_from_string(mode); }
  GrnCandidate candidate_enum() const;

  void load_json_file(const std::string& path);  // overlays file values
  std::string to_json() const;                   // pretty, for --show-config

  /// command ∈ {preprocess, train, translate, evaluate}; throws with a
  /// one-line diagnostic on any inconsistency.
  void validate(const std::string& command) const;
};

}  // namespace amrnmt
