#include "amrnmt/config.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace amrnmt {

using nlohmann::json;

GrnCandidate RunConfig::candidate_enum() const {
  if (grn_candidate == "sigmoid") return GrnCandidate::Sigmoid;
  if (grn_candidate == "tanh") return GrnCandidate::Tanh;
  throw std::runtime_error("config: grn-candidate must be 'sigmoid' or 'tanh'");
}

namespace {

template <class T>
void pick(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json to_json_obj(const RunConfig& c) {
  return json{{"mode", c.mode},
              {"embed-dim", c.embed_dim},
              {"hidden-dim", c.hidden_dim},
              {"graph-dim", c.graph_dim},
              {"transition-steps", c.transition_steps},
              {"lr", c.lr},
              {"batch-size", c.batch_size},
              {"dropout", c.dropout},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"max-neighbors", c.max_neighbors},
              {"max-len", c.max_len},
              {"beam-size", c.beam_size},
              {"max-decode-len", c.max_decode_len},
              {"bpe-merges", c.bpe_merges},
              {"src-vocab-size", c.src_vocab_size},
              {"tgt-vocab-size", c.tgt_vocab_size},
              {"amr-vocab-size", c.amr_vocab_size},
              {"grn-candidate", c.grn_candidate},
              {"feed-graph-context", c.feed_graph_context},
              {"length-normalize", c.length_normalize},
              {"bucketing", c.bucketing},
              {"grad-clip", c.grad_clip},
              {"train-src", c.train_src},
              {"train-tgt", c.train_tgt},
              {"train-amr", c.train_amr},
              {"dev-src", c.dev_src},
              {"dev-tgt", c.dev_tgt},
              {"dev-amr", c.dev_amr},
              {"vocab-src", c.vocab_src},
              {"vocab-tgt", c.vocab_tgt},
              {"vocab-amr", c.vocab_amr},
              {"merges", c.merges},
              {"model", c.model},
              {"resume", c.resume},
              {"out-dir", c.out_dir},
              {"input", c.input},
              {"input-amr", c.input_amr},
              {"output", c.output},
              {"hyp", c.hyp},
              {"ref", c.ref},
              {"src", c.src},
              {"length-buckets", c.length_buckets}};
}

}  // namespace

void RunConfig::load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot read " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config: " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config: " + path + " must hold a JSON object");
  const json known = to_json_obj(*this);
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.contains(key)) throw std::runtime_error("config: unknown key '" + key + "' in " + path);
  }
  pick(j, "mode", mode);
  pick(j, "embed-dim", embed_dim);
  pick(j, "hidden-dim", hidden_dim);
  pick(j, "graph-dim", graph_dim);
  pick(j, "transition-steps", transition_steps);
  pick(j, "lr", lr);
  pick(j, "batch-size", batch_size);
  pick(j, "dropout", dropout);
  pick(j, "epochs", epochs);
  pick(j, "seed", seed);
  pick(j, "max-neighbors", max_neighbors);
  pick(j, "max-len", max_len);
  pick(j, "beam-size", beam_size);
  pick(j, "max-decode-len", max_decode_len);
  pick(j, "bpe-merges", bpe_merges);
  pick(j, "src-vocab-size", src_vocab_size);
  pick(j, "tgt-vocab-size", tgt_vocab_size);
  pick(j, "amr-vocab-size", amr_vocab_size);
  pick(j, "grn-candidate", grn_candidate);
  pick(j, "feed-graph-context", feed_graph_context);
  pick(j, "length-normalize", length_normalize);
  pick(j, "bucketing", bucketing);
  pick(j, "grad-clip", grad_clip);
  pick(j, "train-src", train_src);
  pick(j, "train-tgt", train_tgt);
  pick(j, "train-amr", train_amr);
  pick(j, "dev-src", dev_src);
  pick(j, "dev-tgt", dev_tgt);
  pick(j, "dev-amr", dev_amr);
  pick(j, "vocab-src", vocab_src);
  pick(j, "vocab-tgt", vocab_tgt);
  pick(j, "vocab-amr", vocab_amr);
  pick(j, "merges", merges);
  pick(j, "model", model);
  pick(j, "resume", resume);
  pick(j, "out-dir", out_dir);
  pick(j, "input", input);
  pick(j, "input-amr", input_amr);
  pick(j, "output", output);
  pick(j, "hyp", hyp);
  pick(j, "ref", ref);
  pick(j, "src", src);
  pick(j, "length-buckets", length_buckets);
}

std::string RunConfig::to_json() const { return to_json_obj(*this).dump(2); }

void RunConfig::validate(const std::string& command) const {
  const Mode md = mode_enum();
  candidate_enum();
  if (embed_dim < 1 || hidden_dim < 1 || graph_dim < 1)
    throw std::runtime_error("config: all dimensions must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw std::runtime_error("config: dropout must be in [0,1)");
  if (transition_steps < 1) throw std::runtime_error("config: transition-steps must be >= 1");
  if (batch_size < 1) throw std::runtime_error("config: batch-size must be >= 1");
  if (max_neighbors < 1) throw std::runtime_error("config: max-neighbors must be >= 1");
  if (beam_size < 1) throw std::runtime_error("config: beam-size must be >= 1");
  if (max_len < 1) throw std::runtime_error("config: max-len must be >= 1");

  auto need = [&](const std::string& value, const char* flag) {
    if (value.empty())
      throw std::runtime_error("config: " + command + " requires --" + std::string(flag));
  };
  if (command == "preprocess") {
    need(train_src, "train-src");
    need(train_tgt, "train-tgt");
    need(out_dir, "out-dir");
    if (mode_needs_amr_file(md)) need(train_amr, "train-amr");
  } else if (command == "train") {
    need(train_src, "train-src");
    need(train_tgt, "train-tgt");
    need(dev_src, "dev-src");
    need(dev_tgt, "dev-tgt");
    need(vocab_src, "vocab-src");
    need(vocab_tgt, "vocab-tgt");
    need(model, "model");
    if (mode_needs_amr_file(md)) {
      need(train_amr, "train-amr");
      need(dev_amr, "dev-amr");
    }
    if (mode_is_dual(md)) need(vocab_amr, "vocab-amr");
  } else if (command == "translate") {
    need(model, "model");
    need(input, "input");
    need(output, "output");
  } else if (command == "evaluate") {
    need(hyp, "hyp");
    need(ref, "ref");
    if (!length_buckets.empty()) need(src, "src");
  }
}

}  // namespace amrnmt
