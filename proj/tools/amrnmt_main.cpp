#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "amrnmt/bleu.hpp"
#include "amrnmt/config.hpp"
#include "amrnmt/decoder.hpp"
#include "amrnmt/training.hpp"

namespace {

using namespace amrnmt;

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
}

// ---------------------------------------------------------------- preprocess

int run_preprocess(const RunConfig& cfg) {
  cfg.validate("preprocess");
  const Mode mode = cfg.mode_enum();

  struct Split {
    std::string name;
    std::vector<std::vector<std::string>> src, tgt;  // raw words
    std::vector<AmrGraph> graphs;
  };
  auto load_split = [&](const std::string& name, const std::string& s, const std::string& t,
                        const std::string& a) {
    Split sp;
    sp.name = name;
    const auto examples = load_corpus(s, t, mode_needs_amr_file(mode) ? a : std::string());
    int dropped = 0;
    for (const auto& ex : examples) {
      if (static_cast<int>(ex.src.size()) > cfg.max_len ||
          static_cast<int>(ex.tgt.size()) > cfg.max_len || ex.src.empty() || ex.tgt.empty()) {
        ++dropped;
        continue;
      }
      sp.src.push_back(ex.src);
      sp.tgt.push_back(ex.tgt);
      if (ex.amr) sp.graphs.push_back(*ex.amr);
    }
    std::cout << "preprocess: " << name << ": kept " << sp.src.size() << " pairs, dropped "
              << dropped << " longer than " << cfg.max_len << " words\n";
    return sp;
  };

  Split train = load_split("train", cfg.train_src, cfg.train_tgt, cfg.train_amr);
  std::vector<Split> splits;
  splits.push_back(std::move(train));
  if (!cfg.dev_src.empty()) splits.push_back(load_split("dev", cfg.dev_src, cfg.dev_tgt, cfg.dev_amr));

  // One merge table learned over both sides of the training split.
  std::map<std::string, long> word_freq;
  for (const auto& sent : splits[0].src)
    for (const auto& w : sent) ++word_freq[w];
  for (const auto& sent : splits[0].tgt)
    for (const auto& w : sent) ++word_freq[w];
  const auto merges = learn_bpe(word_freq, cfg.bpe_merges);
  save_merges(cfg.out_dir + "/bpe.merges", merges);
  std::cout << "preprocess: learned " << merges.size() << " BPE merges\n";

  std::vector<std::string> src_stream, tgt_stream, amr_stream;
  for (auto& sp : splits) {
    std::vector<std::string> src_lines, tgt_lines, amr_blocks;
    for (std::size_t i = 0; i < sp.src.size(); ++i) {
      const auto sbpe = apply_bpe_line(merges, sp.src[i]);
      const auto tbpe = apply_bpe_line(merges, sp.tgt[i]);
      src_lines.push_back(join_tokens(sbpe));
      tgt_lines.push_back(join_tokens(tbpe));
      if (&sp == &splits[0]) {
        src_stream.insert(src_stream.end(), sbpe.begin(), sbpe.end());
        tgt_stream.insert(tgt_stream.end(), tbpe.begin(), tbpe.end());
        if (mode == Mode::Dual2seqSelf) {
          amr_stream.insert(amr_stream.end(), sbpe.begin(), sbpe.end());
          amr_stream.push_back(":next");
        }
      }
      if (!sp.graphs.empty()) {
        amr_blocks.push_back(serialize_penman(sp.graphs[i]));
        if (&sp == &splits[0] && mode_is_dual(mode)) {
          const auto lin = linearize(sp.graphs[i]);
          amr_stream.insert(amr_stream.end(), lin.begin(), lin.end());
        }
      }
    }
    write_lines(cfg.out_dir + "/" + sp.name + ".src.bpe", src_lines);
    write_lines(cfg.out_dir + "/" + sp.name + ".tgt.bpe", tgt_lines);
    if (!amr_blocks.empty()) {
      std::ofstream out(cfg.out_dir + "/" + sp.name + ".amr");
      if (!out) throw std::runtime_error("cannot write " + cfg.out_dir + "/" + sp.name + ".amr");
      for (const auto& b : amr_blocks) out << b << "\n\n";
    }
  }

  const Vocabulary vsrc = Vocabulary::build(src_stream, cfg.src_vocab_size);
  const Vocabulary vtgt = Vocabulary::build(tgt_stream, cfg.tgt_vocab_size);
  vsrc.save(cfg.out_dir + "/vocab.src");
  vtgt.save(cfg.out_dir + "/vocab.tgt");
  std::cout << "preprocess: vocab.src " << vsrc.size() << " entries, coverage " << vsrc.coverage()
            << "\n";
  std::cout << "preprocess: vocab.tgt " << vtgt.size() << " entries, coverage " << vtgt.coverage()
            << "\n";
  if (mode_is_dual(mode)) {
    const Vocabulary vamr = Vocabulary::build(amr_stream, cfg.amr_vocab_size);
    vamr.save(cfg.out_dir + "/vocab.amr");
    std::cout << "preprocess: vocab.amr " << vamr.size() << " entries, coverage " << vamr.coverage()
              << "\n";
  }
  return 0;
}

// --------------------------------------------------------------------- train

int run_train(const RunConfig& cfg) {
  cfg.validate("train");
  const double best = train_model(cfg, cfg.model + ".log");
  std::cout << "train: best dev loss " << best << ", checkpoint at " << cfg.model << "\n";
  return 0;
}

// ----------------------------------------------------------------- translate

int run_translate(const RunConfig& cfg) {
  cfg.validate("translate");
  LoadedCheckpoint lc;
  const Model model = load_model(cfg.model, &lc);
  const Mode mode = model.cfg.mode;

  auto resolve = [&](const std::string& flag_value, const char* key) {
    if (!flag_value.empty()) return flag_value;
    const auto it = lc.meta.files.find(key);
    if (it == lc.meta.files.end() || it->second.path.empty())
      throw std::runtime_error(std::string("translate: checkpoint does not reference ") + key +
                               "; pass the flag explicitly");
    return it->second.path;
  };
  auto check_hash = [&](const std::string& path, const char* key) {
    const auto it = lc.meta.files.find(key);
    if (it != lc.meta.files.end() && !it->second.hash.empty() &&
        it->second.hash != file_hash_hex(path))
      throw std::runtime_error("translate: " + path + " does not match the hash recorded for " +
                               key + " in the checkpoint");
  };

  const std::string src_vocab_path = resolve(cfg.vocab_src, "vocab-src");
  const std::string tgt_vocab_path = resolve(cfg.vocab_tgt, "vocab-tgt");
  check_hash(src_vocab_path, "vocab-src");
  check_hash(tgt_vocab_path, "vocab-tgt");
  const Vocabulary vsrc = Vocabulary::load(src_vocab_path);
  const Vocabulary vtgt = Vocabulary::load(tgt_vocab_path);
  Vocabulary vamr;
  if (mode_is_dual(mode)) {
    const std::string amr_vocab_path = resolve(cfg.vocab_amr, "vocab-amr");
    check_hash(amr_vocab_path, "vocab-amr");
    vamr = Vocabulary::load(amr_vocab_path);
  }
  const std::string merges_path = resolve(cfg.merges, "merges");
  check_hash(merges_path, "merges");
  const auto merges = load_merges(merges_path);

  const auto input_lines = read_lines(cfg.input);
  std::vector<AmrGraph> graphs;
  if (mode_needs_amr_file(mode)) {
    if (cfg.input_amr.empty())
      throw std::runtime_error("translate: mode " + mode_to_string(mode) + " requires --input-amr");
    std::ifstream in(cfg.input_amr);
    if (!in) throw std::runtime_error("cannot read " + cfg.input_amr);
    const auto blocks = read_amr_blocks(in);
    if (blocks.size() != input_lines.size())
      throw std::runtime_error("translate: " + std::to_string(blocks.size()) + " AMR blocks for " +
                               std::to_string(input_lines.size()) + " input lines");
    for (const auto& b : blocks) graphs.push_back(parse_penman(b));
  }

  const ParamView pv = ParamView::values(model.store);
  std::vector<std::string> out_lines;
  for (std::size_t i = 0; i < input_lines.size(); ++i) {
    const auto words = split_tokens(input_lines[i]);
    const auto units = apply_bpe_line(merges, words);
    if (units.empty()) {
      out_lines.emplace_back();
      continue;
    }

    Batch b;
    b.size = 1;
    b.src_len = static_cast<int>(units.size());
    for (const auto& u : units) b.src_ids.push_back(vsrc.id_of(u));
    b.src_mask.assign(units.size(), 1);
    b.tgt_len = 2;  // unused by encode
    AmrGraph chain;
    if (mode == Mode::Dual2seq || mode == Mode::Dual2seqLinAmr) {
      const AmrGraph& g = graphs[i];
      if (mode == Mode::Dual2seq) {
        b.graph = build_graph_batch({&g}, vamr, cfg.max_neighbors);
      } else {
        const auto lin = linearize(g);
        b.amr_seq_len = static_cast<int>(lin.size());
        for (const auto& t : lin) b.amr_seq_ids.push_back(vamr.id_of(t));
        b.amr_seq_mask.assign(lin.size(), 1);
      }
    } else if (mode == Mode::Dual2seqSelf) {
      chain = chain_graph(units);
      b.graph = build_graph_batch({&chain}, vamr, cfg.max_neighbors);
    }

    const EncodedBatch eb = encode_batch(pv, model, b, nullptr);
    const DecState st = init_state(pv, model, eb.enc);
    const auto ids =
        beam_decode(pv, model, st, eb.mem, cfg.beam_size, cfg.max_decode_len, cfg.length_normalize);
    std::vector<std::string> toks;
    for (int id : ids) toks.push_back(vtgt.token_of(id));
    out_lines.push_back(strip_bpe(toks));
  }
  write_lines(cfg.output, out_lines);
  std::cout << "translate: wrote " << out_lines.size() << " lines to " << cfg.output << "\n";
  return 0;
}

// ------------------------------------------------------------------ evaluate

int run_evaluate(const RunConfig& cfg) {
  cfg.validate("evaluate");
  const auto hyp_lines = read_lines(cfg.hyp);
  const auto ref_lines = read_lines(cfg.ref);
  std::vector<std::vector<std::string>> hyp, ref;
  for (const auto& l : hyp_lines) hyp.push_back(split_tokens(l));
  for (const auto& l : ref_lines) ref.push_back(split_tokens(l));

  const BleuReport rep = bleu(hyp, ref);
  std::cout << std::fixed << std::setprecision(2) << "BLEU = " << rep.bleu << std::setprecision(4)
            << " (p1 " << rep.precisions[0] << ", p2 " << rep.precisions[1] << ", p3 "
            << rep.precisions[2] << ", p4 " << rep.precisions[3] << ", BP " << rep.brevity_penalty
            << ", hyp " << rep.candidate_length << " tokens, ref " << rep.reference_length
            << " tokens)\n";

  if (!cfg.length_buckets.empty()) {
    const auto src_lines = read_lines(cfg.src);
    if (src_lines.size() != hyp_lines.size())
      throw std::runtime_error("evaluate: --src line count does not match --hyp");
    std::vector<int> lengths;
    for (const auto& l : src_lines)
      lengths.push_back(pre_bpe_word_count(split_tokens(l)));
    const auto buckets = parse_buckets(cfg.length_buckets);
    for (const auto& [bucket, r] : bucketed_bleu(hyp, ref, lengths, buckets)) {
      std::cout << std::fixed << std::setprecision(2) << "BLEU[" << bucket.label << "] = " << r.bleu
                << " (" << r.sentences << " sentences)\n";
    }
  }
  return 0;
}

void add_options(CLI::App* sub, RunConfig& cfg, std::string& config_file, bool& show_config) {
  sub->add_option("--config", config_file, "JSON config file; explicit flags win");
  sub->add_flag("--show-config", show_config, "print the effective configuration and exit");
  sub->add_option("--mode", cfg.mode, "seq2seq | dual2seq | dual2seq-linamr | dual2seq-self");
  sub->add_option("--embed-dim", cfg.embed_dim);
  sub->add_option("--hidden-dim", cfg.hidden_dim);
  sub->add_option("--graph-dim", cfg.graph_dim);
  sub->add_option("--transition-steps", cfg.transition_steps, "graph state transitions T");
  sub->add_option("--lr", cfg.lr);
  sub->add_option("--batch-size", cfg.batch_size);
  sub->add_option("--dropout", cfg.dropout);
  sub->add_option("--epochs", cfg.epochs);
  sub->add_option("--seed", cfg.seed);
  sub->add_option("--max-neighbors", cfg.max_neighbors);
  sub->add_option("--max-len", cfg.max_len, "length filter in pre-BPE words");
  sub->add_option("--beam-size", cfg.beam_size);
  sub->add_option("--max-decode-len", cfg.max_decode_len);
  sub->add_option("--bpe-merges", cfg.bpe_merges);
  sub->add_option("--src-vocab-size", cfg.src_vocab_size);
  sub->add_option("--tgt-vocab-size", cfg.tgt_vocab_size);
  sub->add_option("--amr-vocab-size", cfg.amr_vocab_size);
  sub->add_option("--grn-candidate", cfg.grn_candidate, "sigmoid (as printed) or tanh");
  sub->add_flag("--feed-graph-context,!--no-feed-graph-context", cfg.feed_graph_context,
                "feed the previous graph context into the decoder LSTM");
  sub->add_flag("--length-normalize,!--no-length-normalize", cfg.length_normalize);
  sub->add_flag("--bucketing,!--no-bucketing", cfg.bucketing);
  sub->add_option("--grad-clip", cfg.grad_clip, "global norm; <= 0 disables");
  sub->add_option("--train-src", cfg.train_src);
  sub->add_option("--train-tgt", cfg.train_tgt);
  sub->add_option("--train-amr", cfg.train_amr);
  sub->add_option("--dev-src", cfg.dev_src);
  sub->add_option("--dev-tgt", cfg.dev_tgt);
  sub->add_option("--dev-amr", cfg.dev_amr);
  sub->add_option("--vocab-src", cfg.vocab_src);
  sub->add_option("--vocab-tgt", cfg.vocab_tgt);
  sub->add_option("--vocab-amr", cfg.vocab_amr);
  sub->add_option("--merges", cfg.merges);
  sub->add_option("--model", cfg.model);
  sub->add_option("--resume", cfg.resume);
  sub->add_option("--out-dir", cfg.out_dir);
  sub->add_option("--input", cfg.input);
  sub->add_option("--input-amr", cfg.input_amr);
  sub->add_option("--output", cfg.output);
  sub->add_option("--hyp", cfg.hyp);
  sub->add_option("--ref", cfg.ref);
  sub->add_option("--src", cfg.src);
  sub->add_option("--length-buckets", cfg.length_buckets, "e.g. 1-10,11-20,21-30,31+");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  if (const char* env = std::getenv("AMRNMT_SEED")) cfg.seed = std::strtoull(env, nullptr, 10);

  // The config file must be applied before flag parsing so flags override it.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    std::string path;
    if (arg == "--config" && i + 1 < argc)
      path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0)
      path = arg.substr(9);
    if (!path.empty()) {
      try {
        cfg.load_json_file(path);
      } catch (const std::exception& e) {
        std::cerr << "amrnmt: " << e.what() << "\n";
        return 1;
      }
    }
  }

  CLI::App app{"AMR-aware neural machine translation"};
  app.require_subcommand(1);
  std::string config_file;
  bool show_config = false;
  CLI::App* cmd_preprocess = app.add_subcommand("preprocess", "learn BPE, build vocabularies, filter corpora");
  CLI::App* cmd_train = app.add_subcommand("train", "train a model, keeping the best-dev checkpoint");
  CLI::App* cmd_translate = app.add_subcommand("translate", "decode an input file with a trained model");
  CLI::App* cmd_evaluate = app.add_subcommand("evaluate", "corpus BLEU, optionally by length bucket");
  for (CLI::App* sub : {cmd_preprocess, cmd_train, cmd_translate, cmd_evaluate})
    add_options(sub, cfg, config_file, show_config);

  CLI11_PARSE(app, argc, argv);

  if (show_config) {
    std::cout << cfg.to_json() << "\n";
    return 0;
  }

  try {
    if (cmd_preprocess->parsed()) return run_preprocess(cfg);
    if (cmd_train->parsed()) return run_train(cfg);
    if (cmd_translate->parsed()) return run_translate(cfg);
    if (cmd_evaluate->parsed()) return run_evaluate(cfg);
  } catch (const std::exception& e) {
    std::cerr << "amrnmt: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
