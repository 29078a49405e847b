#include "amrnmt/training.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "amrnmt/rng.hpp"

namespace amrnmt {

using nlohmann::json;

EncodedBatch encode_batch(const ParamView& pv, const Model& m, const Batch& batch,
                          DropoutCtx* dropout) {
  SeqEncoding enc = bilstm_encode(pv, m.src_embed, m.enc_fwd, m.enc_bwd, batch.src_ids,
                                  batch.src_mask, batch.size, batch.src_len);
  enc.H = maybe_dropout(enc.H, dropout);

  Tensor graph_memory;
  std::vector<std::uint8_t> graph_mask;
  int graph_len = 0;
  if (mode_uses_graph(m.cfg.mode)) {
    if (batch.graph.num_nodes() == 0)
      throw std::runtime_error("encode_batch: mode " + mode_to_string(m.cfg.mode) +
                               " requires per-example graphs");
    Tensor a = grn_encode(pv, m, batch.graph, m.cfg.transition_steps);
    a = maybe_dropout(a, dropout);
    graph_len = batch.graph.max_count;
    graph_memory = pad_rows(a, batch.graph.offsets, batch.graph.counts, graph_len);
    graph_mask.assign(static_cast<std::size_t>(batch.size) * graph_len, 0);
    for (int b = 0; b < batch.size; ++b)
      for (int r = 0; r < batch.graph.counts[static_cast<std::size_t>(b)]; ++r)
        graph_mask[static_cast<std::size_t>(b) * graph_len + r] = 1;
  } else if (m.cfg.mode == Mode::Dual2seqLinAmr) {
    if (batch.amr_seq_len == 0)
      throw std::runtime_error("encode_batch: dual2seq-linamr requires linearized AMR sequences");
    SeqEncoding lin = bilstm_encode(pv, m.amr_embed, m.amr_fwd, m.amr_bwd, batch.amr_seq_ids,
                                    batch.amr_seq_mask, batch.size, batch.amr_seq_len);
    graph_memory = maybe_dropout(lin.H, dropout);
    graph_mask = batch.amr_seq_mask;
    graph_len = batch.amr_seq_len;
  }

  Memories mem = prepare_memories(pv, m, enc, batch.src_mask, graph_memory, graph_mask, graph_len);
  return {std::move(enc), std::move(mem)};
}

BatchForward batch_loss(const ParamView& pv, const Model& m, const Batch& batch,
                        DropoutCtx* dropout) {
  EncodedBatch eb = encode_batch(pv, m, batch, dropout);
  DecState st = init_state(pv, m, eb.enc);

  Tensor total = Tensor::scalar(0.0);
  long count = 0;
  for (int step = 0; step + 1 < batch.tgt_len; ++step) {
    std::vector<int> y_in(static_cast<std::size_t>(batch.size));
    std::vector<int> gold(static_cast<std::size_t>(batch.size));
    std::vector<std::uint8_t> gmask(static_cast<std::size_t>(batch.size));
    for (int b = 0; b < batch.size; ++b) {
      const std::size_t base = static_cast<std::size_t>(b) * batch.tgt_len;
      y_in[static_cast<std::size_t>(b)] = batch.tgt_ids[base + step];
      gold[static_cast<std::size_t>(b)] = batch.tgt_ids[base + step + 1];
      gmask[static_cast<std::size_t>(b)] = batch.tgt_mask[base + step + 1];
      count += gmask[static_cast<std::size_t>(b)];
    }
    Tensor y = embedding_lookup(pv[m.tgt_embed], y_in);
    StepResult r = decode_step(pv, m, st, y, eb.mem, dropout);
    st = r.state;
    total = add(total, nll_pick_sum(r.P, gold, gmask));
  }
  if (count == 0) throw std::runtime_error("batch_loss: all-pad target batch");
  return {scale(total, 1.0 / static_cast<double>(count)), count};
}

void adam_init(AdamState& st, const ParamStore& params) {
  st.step = 0;
  st.m.assign(static_cast<std::size_t>(params.count()), {});
  st.v.assign(static_cast<std::size_t>(params.count()), {});
  for (int i = 0; i < params.count(); ++i) {
    st.m[static_cast<std::size_t>(i)].assign(params.value_at(i).numel(), 0.0);
    st.v[static_cast<std::size_t>(i)].assign(params.value_at(i).numel(), 0.0);
  }
}

void adam_step(ParamStore& params, const std::vector<Tensor>& grads, AdamState& st) {
  if (static_cast<int>(grads.size()) != params.count())
    throw std::runtime_error("adam: gradient count does not match parameters");
  st.step += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (int i = 0; i < params.count(); ++i) {
    Tensor& p = params.value_at(i);
    const Tensor& g = grads[static_cast<std::size_t>(i)];
    if (g.shape != p.shape)
      throw std::runtime_error("adam: gradient shape " + g.shape_str() + " does not match " +
                               p.shape_str());
    auto& mi = st.m[static_cast<std::size_t>(i)];
    auto& vi = st.v[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < p.numel(); ++j) {
      const double gj = (*g.data)[j];
      mi[j] = st.beta1 * mi[j] + (1.0 - st.beta1) * gj;
      vi[j] = st.beta2 * vi[j] + (1.0 - st.beta2) * gj * gj;
      const double mhat = mi[j] / bc1;
      const double vhat = vi[j] / bc2;
      (*p.data)[j] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

double clip_gradients(std::vector<Tensor>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : *g.data) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& g : grads)
      for (auto& v : *g.data) v *= s;
  }
  return norm;
}

namespace {

std::uint64_t fnv1a(const unsigned char* bytes, std::size_t n, std::uint64_t h) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

std::uint64_t params_checksum(const ParamStore& store) {
  std::uint64_t h = 1469598103934665603ull;
  for (int i = 0; i < store.count(); ++i) {
    const auto& data = *store.value_at(i).data;
    h = fnv1a(reinterpret_cast<const unsigned char*>(data.data()), data.size() * sizeof(double), h);
  }
  return h;
}

json config_to_json(const ModelConfig& c) {
  return json{{"mode", mode_to_string(c.mode)},
              {"embed_dim", c.embed_dim},
              {"hidden_dim", c.hidden_dim},
              {"graph_dim", c.graph_dim},
              {"transition_steps", c.transition_steps},
              {"grn_candidate", c.grn_candidate == GrnCandidate::Sigmoid ? "sigmoid" : "tanh"},
              {"feed_graph_context", c.feed_graph_context},
              {"src_vocab", c.src_vocab},
              {"tgt_vocab", c.tgt_vocab},
              {"graph_vocab", c.graph_vocab}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.mode = mode_from_string(j.at("mode").get<std::string>());
  c.embed_dim = j.at("embed_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.graph_dim = j.at("graph_dim").get<int>();
  c.transition_steps = j.at("transition_steps").get<int>();
  c.grn_candidate = j.at("grn_candidate").get<std::string>() == "tanh" ? GrnCandidate::Tanh
                                                                       : GrnCandidate::Sigmoid;
  c.feed_graph_context = j.at("feed_graph_context").get<bool>();
  c.src_vocab = j.at("src_vocab").get<int>();
  c.tgt_vocab = j.at("tgt_vocab").get<int>();
  c.graph_vocab = j.at("graph_vocab").get<int>();
  return c;
}

constexpr int kSchemaVersion = 1;

}  // namespace

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("hash: cannot read " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h = fnv1a(reinterpret_cast<const unsigned char*>(buf), static_cast<std::size_t>(in.gcount()), h);
  return to_hex(h);
}

void save_checkpoint(const std::string& path, const Model& m, const AdamState& opt,
                     const CheckpointMeta& meta) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["mode"] = mode_to_string(m.cfg.mode);
  j["config"] = config_to_json(m.cfg);
  j["epoch"] = meta.epoch;
  j["best_dev_loss"] = meta.best_dev_loss;
  j["seed"] = meta.seed;
  json files = json::object();
  for (const auto& [key, ref] : meta.files) files[key] = {{"path", ref.path}, {"hash", ref.hash}};
  j["files"] = files;

  json params = json::array();
  for (int i = 0; i < m.store.count(); ++i) {
    const Tensor& t = m.store.value_at(i);
    params.push_back({{"name", m.store.name_at(i)}, {"shape", t.shape}, {"data", *t.data}});
  }
  j["params"] = params;
  j["checksum"] = to_hex(params_checksum(m.store));

  json jopt;
  jopt["lr"] = opt.lr;
  jopt["beta1"] = opt.beta1;
  jopt["beta2"] = opt.beta2;
  jopt["eps"] = opt.eps;
  jopt["step"] = opt.step;
  jopt["m"] = opt.m;
  jopt["v"] = opt.v;
  j["optimizer"] = jopt;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << j.dump();
  out << '\n';
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

namespace {

json parse_checkpoint_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: corrupt file " + path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("schema_version"))
    throw std::runtime_error("checkpoint: corrupt file " + path + ": missing schema_version");
  const int version = j.at("schema_version").get<int>();
  if (version != kSchemaVersion)
    throw std::runtime_error("checkpoint: schema version " + std::to_string(version) +
                             " unsupported (expected " + std::to_string(kSchemaVersion) + ")");
  return j;
}

}  // namespace

Model load_model(const std::string& path, LoadedCheckpoint* extra) {
  const json j = parse_checkpoint_json(path);
  LoadedCheckpoint lc;
  try {
    lc.cfg = config_from_json(j.at("config"));
    Model model(lc.cfg);

    const auto& params = j.at("params");
    if (static_cast<int>(params.size()) != model.store.count())
      throw std::runtime_error("parameter count mismatch");
    for (const auto& entry : params) {
      const std::string name = entry.at("name").get<std::string>();
      const int idx = model.store.index_of(name);
      if (idx < 0) throw std::runtime_error("unknown parameter " + name);
      Tensor& t = model.store.value_at(idx);
      const auto shape = entry.at("shape").get<std::vector<int>>();
      if (shape != t.shape) throw std::runtime_error("shape mismatch for " + name);
      auto data = entry.at("data").get<std::vector<double>>();
      if (data.size() != t.numel()) throw std::runtime_error("data length mismatch for " + name);
      *t.data = std::move(data);
    }
    if (j.contains("checksum") && j.at("checksum").get<std::string>() != to_hex(params_checksum(model.store)))
      throw std::runtime_error("checksum mismatch");

    const auto& jopt = j.at("optimizer");
    lc.opt.lr = jopt.at("lr").get<double>();
    lc.opt.beta1 = jopt.at("beta1").get<double>();
    lc.opt.beta2 = jopt.at("beta2").get<double>();
    lc.opt.eps = jopt.at("eps").get<double>();
    lc.opt.step = jopt.at("step").get<long>();
    lc.opt.m = jopt.at("m").get<std::vector<std::vector<double>>>();
    lc.opt.v = jopt.at("v").get<std::vector<std::vector<double>>>();

    lc.meta.epoch = j.at("epoch").get<int>();
    lc.meta.best_dev_loss = j.at("best_dev_loss").get<double>();
    lc.meta.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [key, ref] : j.at("files").items())
      lc.meta.files[key] = {ref.at("path").get<std::string>(), ref.at("hash").get<std::string>()};

    if (extra) *extra = std::move(lc);
    return model;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: corrupt file " + path + ": " + e.what());
  }
}

LoadedCheckpoint load_checkpoint(const std::string& path, Model** /*model_out*/) {
  LoadedCheckpoint lc;
  load_model(path, &lc);
  return lc;
}

namespace {

double corpus_loss_impl(const Model& model, const std::vector<Batch>& batches) {
  const ParamView pv = ParamView::values(model.store);
  double loss_sum = 0.0;
  long tokens = 0;
  for (const auto& b : batches) {
    BatchForward bf = batch_loss(pv, model, b, nullptr);
    loss_sum += bf.loss.item() * static_cast<double>(bf.tokens);
    tokens += bf.tokens;
  }
  return tokens ? loss_sum / static_cast<double>(tokens) : 0.0;
}

}  // namespace

double train_model(const RunConfig& cfg, const std::string& log_path, bool echo) {
  const Mode md = cfg.mode_enum();
  const Vocabulary vsrc = Vocabulary::load(cfg.vocab_src);
  const Vocabulary vtgt = Vocabulary::load(cfg.vocab_tgt);
  Vocabulary vamr;
  if (mode_is_dual(md)) vamr = Vocabulary::load(cfg.vocab_amr);

  const auto train = load_corpus(cfg.train_src, cfg.train_tgt,
                                 mode_needs_amr_file(md) ? cfg.train_amr : std::string());
  const auto dev =
      load_corpus(cfg.dev_src, cfg.dev_tgt, mode_needs_amr_file(md) ? cfg.dev_amr : std::string());

  ModelConfig mc;
  mc.mode = md;
  mc.embed_dim = cfg.embed_dim;
  mc.hidden_dim = cfg.hidden_dim;
  mc.graph_dim = cfg.graph_dim;
  mc.transition_steps = cfg.transition_steps;
  mc.grn_candidate = cfg.candidate_enum();
  mc.feed_graph_context = cfg.feed_graph_context;
  mc.src_vocab = vsrc.size();
  mc.tgt_vocab = vtgt.size();
  mc.graph_vocab = mode_is_dual(md) ? vamr.size() : 0;

  Model model(mc);
  AdamState opt;
  int start_epoch = 1;
  double best = std::numeric_limits<double>::infinity();

  if (!cfg.resume.empty()) {
    LoadedCheckpoint lc;
    model = load_model(cfg.resume, &lc);
    if (model.cfg.mode != md)
      throw std::runtime_error("train: mode mismatch: checkpoint is " +
                               mode_to_string(model.cfg.mode) + ", config requests " +
                               mode_to_string(md));
    if (model.cfg.embed_dim != mc.embed_dim || model.cfg.hidden_dim != mc.hidden_dim ||
        model.cfg.graph_dim != mc.graph_dim || model.cfg.src_vocab != mc.src_vocab ||
        model.cfg.tgt_vocab != mc.tgt_vocab || model.cfg.graph_vocab != mc.graph_vocab)
      throw std::runtime_error("train: checkpoint dimensions disagree with the configuration");
    opt = lc.opt;
    start_epoch = lc.meta.epoch + 1;
    best = lc.meta.best_dev_loss;
  } else {
    model.init_params(cfg.seed);
    adam_init(opt, model.store);
    opt.lr = cfg.lr;
  }

  CheckpointMeta meta;
  meta.seed = cfg.seed;
  auto add_file = [&](const char* key, const std::string& p) {
    if (!p.empty()) meta.files[key] = {p, file_hash_hex(p)};
  };
  add_file("vocab-src", cfg.vocab_src);
  add_file("vocab-tgt", cfg.vocab_tgt);
  add_file("vocab-amr", cfg.vocab_amr);
  add_file("merges", cfg.merges);

  std::ofstream log(log_path, std::ios::app);
  if (!log) throw std::runtime_error("train: cannot write log " + log_path);

  BatchOptions train_opt;
  train_opt.mode = md;
  train_opt.batch_size = cfg.batch_size;
  train_opt.max_len = cfg.max_len;
  train_opt.max_neighbors = cfg.max_neighbors;
  train_opt.seed = cfg.seed;
  train_opt.bucketing = cfg.bucketing;
  BatchOptions dev_opt = train_opt;
  dev_opt.epoch = 0;

  const auto dev_batches = make_batches(dev, vsrc, vtgt, vamr, dev_opt);

  for (int epoch = start_epoch; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    train_opt.epoch = epoch;
    int dropped_long = 0, dropped_neighbors = 0;
    const auto batches = make_batches(train, vsrc, vtgt, vamr, train_opt, &dropped_long,
                                      &dropped_neighbors);
    if (batches.empty() && echo) std::cerr << "train: warning: no training batches survive filtering\n";
    if (epoch == start_epoch && echo && (dropped_long > 0 || dropped_neighbors > 0))
      std::cerr << "train: filtered " << dropped_long << " over-length pairs; neighbor cap "
                << cfg.max_neighbors << " dropped " << dropped_neighbors
                << " edge incidences\n";

    double loss_sum = 0.0;
    long tokens = 0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      Tape tape;
      const ParamView pv = ParamView::watch(tape, model.store);
      DropoutCtx drop{cfg.dropout,
                      make_rng(derive_seed(cfg.seed, 0xd409u + 1000003ull * static_cast<std::uint64_t>(epoch) + bi))};
      BatchForward bf = batch_loss(pv, model, batches[bi], cfg.dropout > 0.0 ? &drop : nullptr);
      tape.backward(bf.loss);
      std::vector<Tensor> grads;
      grads.reserve(static_cast<std::size_t>(model.store.count()));
      for (int i = 0; i < model.store.count(); ++i) grads.push_back(tape.grad(pv.at(i)));
      clip_gradients(grads, cfg.grad_clip);
      adam_step(model.store, grads, opt);
      loss_sum += bf.loss.item() * static_cast<double>(bf.tokens);
      tokens += bf.tokens;
    }
    const double train_loss = tokens ? loss_sum / static_cast<double>(tokens) : 0.0;
    const double dev_loss = corpus_loss_impl(model, dev_batches);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ostringstream line;
    line << epoch << '\t' << train_loss << '\t' << dev_loss << '\t' << secs << '\n';
    log << line.str();
    log.flush();
    if (echo) std::cout << line.str();

    meta.epoch = epoch;
    if (dev_loss < best) {
      best = dev_loss;
      meta.best_dev_loss = best;
      save_checkpoint(cfg.model, model, opt, meta);
    }
    meta.best_dev_loss = best;
    save_checkpoint(cfg.model + ".last", model, opt, meta);
  }
  return best;
}

}  // namespace amrnmt
