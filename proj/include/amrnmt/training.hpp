#pragma once

#include <map>
#include <string>
#include <vector>

#include "amrnmt/config.hpp"
#include "amrnmt/decoder.hpp"
#include "amrnmt/model.hpp"

namespace amrnmt {

struct EncodedBatch {
  SeqEncoding enc;
  Memories mem;
};

/// Runs the mode's encoders over one batch and prepares attention memories.
EncodedBatch encode_batch(const ParamView& pv, const Model& m, const Batch& batch,
                          DropoutCtx* dropout);

struct BatchForward {
  Tensor loss;  // mean NLL per non-pad target token
  long tokens = 0;
};

/// Teacher-forced cross-entropy over one batch. Errors on an all-pad batch.
BatchForward batch_loss(const ParamView& pv, const Model& m, const Batch& batch,
                        DropoutCtx* dropout);

struct AdamState {
  double lr = 0.0005, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;
  std::vector<std::vector<double>> m, v;
};

void adam_init(AdamState& st, const ParamStore& params);
/// Standard bias-corrected update; grads aligned with registration order.
void adam_step(ParamStore& params, const std::vector<Tensor>& grads, AdamState& st);

/// Scales all gradients to global norm max_norm when exceeded; returns the
/// pre-clip norm. max_norm <= 0 disables.
double clip_gradients(std::vector<Tensor>& grads, double max_norm);

struct VocabFileRef {
  std::string path, hash;
};

struct CheckpointMeta {
  int epoch = 0;
  double best_dev_loss = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, VocabFileRef> files;  // "src"/"tgt"/"amr" vocabularies, "merges"
};

std::string file_hash_hex(const std::string& path);  // FNV-1a over the bytes

/// Self-describing JSON checkpoint: schema version, mode, model config,
/// parameters at full precision, optimizer state, and training metadata.
/// save → load round-trips parameter values bitwise.
void save_checkpoint(const std::string& path, const Model& m, const AdamState& opt,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  ModelConfig cfg;
  AdamState opt;
  CheckpointMeta meta;
};

/// Parses and validates the file (schema version, shapes, checksum) and
/// returns the config; call restore_params to fill a Model built from it.
LoadedCheckpoint load_checkpoint(const std::string& path, Model** model_out = nullptr);

/// Loads checkpoint and reconstructs the model in one go.
Model load_model(const std::string& path, LoadedCheckpoint* extra = nullptr);

/// Full training loop: per-epoch shuffled batches, Adam with clipping,
/// dropout on; per-epoch dev loss with dropout off; keeps the best-dev
/// checkpoint at cfg.model. Appends "epoch train dev seconds" TSV lines to
/// log_path (and stdout when echo is set). Returns the best dev loss.
double train_model(const RunConfig& cfg, const std::string& log_path, bool echo = true);

}  // namespace amrnmt
