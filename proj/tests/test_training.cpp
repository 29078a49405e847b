#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "amrnmt/rng.hpp"
#include "amrnmt/training.hpp"

using namespace amrnmt;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny_cfg(Mode mode, int vt = 20) {
  ModelConfig c;
  c.mode = mode;
  c.embed_dim = 3;
  c.hidden_dim = 3;
  c.graph_dim = 4;
  c.transition_steps = 2;
  c.src_vocab = 9;
  c.tgt_vocab = vt;
  c.graph_vocab = 16;
  return c;
}

Batch tiny_batch(std::mt19937_64& rng, Mode mode, int bsz, int src_len, int tgt_words,
                 int tgt_vocab = 12) {
  Batch b;
  b.size = bsz;
  b.src_len = src_len;
  b.tgt_len = tgt_words + 2;
  std::uniform_int_distribution<int> stok(4, 8), ttok(4, tgt_vocab - 1);
  std::vector<AmrGraph> storage;
  storage.reserve(static_cast<std::size_t>(bsz));
  for (int r = 0; r < bsz; ++r) {
    std::vector<std::string> words;
    for (int t = 0; t < src_len; ++t) {
      b.src_ids.push_back(stok(rng));
      b.src_mask.push_back(1);
      words.push_back("w" + std::to_string(t));
    }
    b.tgt_ids.push_back(Vocabulary::kBos);
    b.tgt_mask.push_back(1);
    for (int t = 0; t < tgt_words; ++t) {
      b.tgt_ids.push_back(ttok(rng));
      b.tgt_mask.push_back(1);
    }
    b.tgt_ids.push_back(Vocabulary::kEos);
    b.tgt_mask.push_back(1);
    storage.push_back(chain_graph(words));
  }
  if (mode_uses_graph(mode)) {
    std::vector<std::string> labels = {":next"};
    for (const auto& g : storage)
      for (const auto& n : g.nodes) labels.push_back(n.label);
    const Vocabulary vocab = Vocabulary::build(labels, 14);
    std::vector<const AmrGraph*> graphs;
    for (const auto& g : storage) graphs.push_back(&g);
    b.graph = build_graph_batch(graphs, vocab, 6);
  }
  return b;
}

}  // namespace

TEST_CASE("uniform output distribution costs ln V per token") {
  Model m(tiny_cfg(Mode::Dual2seq, 20));
  m.init_params(7);
  for (auto& v : *m.store.value(m.out_W).data) v = 0.0;
  for (auto& v : *m.store.value(m.out_b).data) v = 0.0;
  auto rng = make_rng(8);
  const Batch b = tiny_batch(rng, Mode::Dual2seq, 3, 4, 3, 20);
  const BatchForward bf = batch_loss(ParamView::values(m.store), m, b, nullptr);
  CHECK(bf.tokens == 3 * 4);
  CHECK(bf.loss.item() == doctest::Approx(std::log(20.0)).epsilon(1e-12));
  CHECK(std::log(20.0) == doctest::Approx(2.995732273553991).epsilon(1e-12));
}

TEST_CASE("a randomly initialized model starts near the uniform loss") {
  Model m(tiny_cfg(Mode::Dual2seq, 20));
  m.init_params(12);
  auto rng = make_rng(13);
  const Batch b = tiny_batch(rng, Mode::Dual2seq, 3, 4, 3, 20);
  const double loss = batch_loss(ParamView::values(m.store), m, b, nullptr).loss.item();
  CHECK(loss == doctest::Approx(std::log(20.0)).epsilon(0.10));
}

TEST_CASE("bilstm rejects an empty sequence") {
  Model m(tiny_cfg(Mode::Seq2seq, 12));
  const ParamView pv = ParamView::values(m.store);
  CHECK_THROWS_AS(bilstm_encode(pv, m.src_embed, m.enc_fwd, m.enc_bwd, {}, {}, 1, 0),
                  std::runtime_error);
}

TEST_CASE("masking trailing targets equals truncating them") {
  Model m(tiny_cfg(Mode::Dual2seq, 12));
  m.init_params(9);
  auto rng = make_rng(10);
  Batch full = tiny_batch(rng, Mode::Dual2seq, 2, 4, 5);
  Batch masked = full;
  // knock out the last two real target positions of every row (keep >= 1)
  masked.tgt_mask = full.tgt_mask;
  for (int r = 0; r < masked.size; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * masked.tgt_len;
    masked.tgt_mask[base + masked.tgt_len - 1] = 0;
    masked.tgt_mask[base + masked.tgt_len - 2] = 0;
  }
  Batch truncated = full;
  truncated.tgt_len = full.tgt_len - 2;
  truncated.tgt_ids.clear();
  truncated.tgt_mask.clear();
  for (int r = 0; r < full.size; ++r)
    for (int t = 0; t < truncated.tgt_len; ++t) {
      truncated.tgt_ids.push_back(full.tgt_ids[static_cast<std::size_t>(r) * full.tgt_len + t]);
      truncated.tgt_mask.push_back(full.tgt_mask[static_cast<std::size_t>(r) * full.tgt_len + t]);
    }
  const ParamView pv = ParamView::values(m.store);
  const BatchForward a = batch_loss(pv, m, masked, nullptr);
  const BatchForward b = batch_loss(pv, m, truncated, nullptr);
  CHECK(a.tokens == b.tokens);
  CHECK(a.loss.item() == doctest::Approx(b.loss.item()).epsilon(1e-12));
}

TEST_CASE("all-pad target batch is an error") {
  Model m(tiny_cfg(Mode::Dual2seq, 12));
  auto rng = make_rng(11);
  Batch b = tiny_batch(rng, Mode::Dual2seq, 1, 3, 2);
  std::fill(b.tgt_mask.begin(), b.tgt_mask.end(), 0);
  CHECK_THROWS_AS(batch_loss(ParamView::values(m.store), m, b, nullptr), std::runtime_error);
}

TEST_CASE("adam single step on a unit gradient") {
  ParamStore store;
  const ParamRef p = store.add("w", {1});
  (*store.value(p).data)[0] = 1.0;
  AdamState st;
  st.lr = 0.0005;
  adam_init(st, store);
  adam_step(store, {Tensor({1}, {1.0})}, st);
  CHECK(store.value(p)[0] == doctest::Approx(1.0 - 0.0005).epsilon(1e-7));
  CHECK(std::abs(store.value(p)[0] - (1.0 - 0.0005)) < 1e-9);

  SUBCASE("zero gradient afterwards leaves the parameter unchanged") {
    const double before = store.value(p)[0];
    ParamStore fresh;
    const ParamRef q = fresh.add("w", {1});
    (*fresh.value(q).data)[0] = before;
    AdamState st2;
    adam_init(st2, fresh);
    adam_step(fresh, {Tensor({1}, {0.0})}, st2);
    CHECK(fresh.value(q)[0] == before);
  }
}

TEST_CASE("adam shape mismatch is an error") {
  ParamStore store;
  store.add("w", {2});
  AdamState st;
  adam_init(st, store);
  CHECK_THROWS_AS(adam_step(store, {Tensor({3})}, st), std::runtime_error);
}

TEST_CASE("gradient clipping scales to the requested global norm") {
  std::vector<Tensor> grads = {Tensor({2}, {3.0, 4.0}), Tensor({1}, {12.0})};
  const double norm = clip_gradients(grads, 5.0);
  CHECK(norm == doctest::Approx(13.0));
  double after = 0;
  for (const auto& g : grads)
    for (double v : *g.data) after += v * v;
  CHECK(std::sqrt(after) == doctest::Approx(5.0));

  std::vector<Tensor> small = {Tensor({1}, {1.0})};
  clip_gradients(small, 5.0);
  CHECK((*small[0].data)[0] == 1.0);
  std::vector<Tensor> off = {Tensor({1}, {100.0})};
  clip_gradients(off, 0.0);  // disabled
  CHECK((*off[0].data)[0] == 100.0);
}

TEST_CASE("identical seeds give bitwise-identical training trajectories") {
  auto run = [&](std::uint64_t seed) {
    Model m(tiny_cfg(Mode::Dual2seq, 12));
    m.init_params(seed);
    AdamState opt;
    opt.lr = 0.01;
    adam_init(opt, m.store);
    std::vector<double> losses;
    for (int step = 0; step < 3; ++step) {
      auto rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(step)));
      const Batch b = tiny_batch(rng, Mode::Dual2seq, 2, 3, 3);
      Tape tape;
      const ParamView pv = ParamView::watch(tape, m.store);
      DropoutCtx drop{0.2, make_rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(step)))};
      const BatchForward bf = batch_loss(pv, m, b, &drop);
      tape.backward(bf.loss);
      std::vector<Tensor> grads;
      for (int i = 0; i < m.store.count(); ++i) grads.push_back(tape.grad(pv.at(i)));
      clip_gradients(grads, 5.0);
      adam_step(m.store, grads, opt);
      losses.push_back(bf.loss.item());
    }
    std::vector<double> flat;
    for (int i = 0; i < m.store.count(); ++i)
      flat.insert(flat.end(), m.store.value_at(i).data->begin(), m.store.value_at(i).data->end());
    return std::make_pair(losses, flat);
  };
  const auto a = run(1234), b = run(1234);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("evaluation loss is bitwise repeatable") {
  Model m(tiny_cfg(Mode::Dual2seq, 12));
  m.init_params(300);
  auto rng = make_rng(301);
  const Batch b = tiny_batch(rng, Mode::Dual2seq, 2, 4, 3);
  const double l1 = batch_loss(ParamView::values(m.store), m, b, nullptr).loss.item();
  const double l2 = batch_loss(ParamView::values(m.store), m, b, nullptr).loss.item();
  CHECK(std::memcmp(&l1, &l2, sizeof(double)) == 0);
}

TEST_CASE("loss is invariant to extra padding") {
  Model m(tiny_cfg(Mode::Dual2seq, 12));
  m.init_params(310);
  auto rng = make_rng(311);
  const Batch b = tiny_batch(rng, Mode::Dual2seq, 2, 4, 3);

  Batch padded = b;
  padded.src_len = b.src_len + 2;
  padded.src_ids.clear();
  padded.src_mask.clear();
  for (int r = 0; r < b.size; ++r) {
    for (int t = 0; t < b.src_len; ++t) {
      padded.src_ids.push_back(b.src_ids[static_cast<std::size_t>(r) * b.src_len + t]);
      padded.src_mask.push_back(b.src_mask[static_cast<std::size_t>(r) * b.src_len + t]);
    }
    padded.src_ids.insert(padded.src_ids.end(), {0, 0});
    padded.src_mask.insert(padded.src_mask.end(), {0, 0});
  }
  padded.tgt_len = b.tgt_len + 2;
  padded.tgt_ids.clear();
  padded.tgt_mask.clear();
  for (int r = 0; r < b.size; ++r) {
    for (int t = 0; t < b.tgt_len; ++t) {
      padded.tgt_ids.push_back(b.tgt_ids[static_cast<std::size_t>(r) * b.tgt_len + t]);
      padded.tgt_mask.push_back(b.tgt_mask[static_cast<std::size_t>(r) * b.tgt_len + t]);
    }
    padded.tgt_ids.insert(padded.tgt_ids.end(), {0, 0});
    padded.tgt_mask.insert(padded.tgt_mask.end(), {0, 0});
  }

  const ParamView pv = ParamView::values(m.store);
  const double l0 = batch_loss(pv, m, b, nullptr).loss.item();
  const double l1 = batch_loss(pv, m, padded, nullptr).loss.item();
  CHECK(std::abs(l0 - l1) <= 1e-10);
}

TEST_CASE("dual2seq and dual2seq-self have equal parameter counts") {
  ModelConfig a = tiny_cfg(Mode::Dual2seq);
  ModelConfig b = tiny_cfg(Mode::Dual2seqSelf);
  REQUIRE(a.graph_vocab == b.graph_vocab);
  CHECK(Model(a).parameter_count() == Model(b).parameter_count());

  a.embed_dim = b.embed_dim = 16;
  a.hidden_dim = b.hidden_dim = 12;
  a.graph_dim = b.graph_dim = 10;
  a.graph_vocab = b.graph_vocab = 33;
  CHECK(Model(a).parameter_count() == Model(b).parameter_count());
}

TEST_CASE("checkpoint round-trip and corruption handling") {
  const auto dir = fs::temp_directory_path() / "amrnmt_ckpt_test";
  fs::create_directories(dir);
  const std::string path = (dir / "model.json").string();

  Model m(tiny_cfg(Mode::Dual2seq, 12));
  m.init_params(99);
  AdamState opt;
  adam_init(opt, m.store);
  opt.step = 17;
  opt.m[0][0] = 0.5;
  CheckpointMeta meta;
  meta.epoch = 4;
  meta.best_dev_loss = 1.25;
  meta.seed = 99;
  save_checkpoint(path, m, opt, meta);

  LoadedCheckpoint lc;
  const Model m2 = load_model(path, &lc);
  CHECK(m2.cfg.mode == Mode::Dual2seq);
  REQUIRE(m2.store.count() == m.store.count());
  for (int i = 0; i < m.store.count(); ++i) {
    CHECK(m.store.name_at(i) == m2.store.name_at(i));
    CHECK(m.store.value_at(i).shape == m2.store.value_at(i).shape);
    CHECK(*m.store.value_at(i).data == *m2.store.value_at(i).data);  // bitwise
  }
  CHECK(lc.opt.step == 17);
  CHECK(lc.opt.m[0][0] == 0.5);
  CHECK(lc.meta.epoch == 4);
  CHECK(lc.meta.best_dev_loss == 1.25);

  SUBCASE("truncated file reports corruption") {
    const auto size = fs::file_size(path);
    fs::resize_file(path, size / 2);
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("corrupt"), std::runtime_error);
  }
  SUBCASE("schema version is checked") {
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto pos = text.find("\"schema_version\":1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 18, "\"schema_version\":9");
    std::ofstream(path) << text;
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("schema version"), std::runtime_error);
  }
  fs::remove_all(dir);
}

namespace {

struct TinyCorpus {
  fs::path dir;
  RunConfig cfg;
};

TinyCorpus write_tiny_corpus(const std::string& tag) {
  TinyCorpus tc;
  tc.dir = fs::temp_directory_path() / ("amrnmt_train_test_" + tag);
  fs::create_directories(tc.dir);
  const std::vector<std::string> src = {"a b c", "b c", "c a", "a a b", "b b", "c c a b",
                                        "a c", "b a"};
  const std::vector<std::string> tgt = {"x y", "y z", "z x", "x x y", "y y", "z z x",
                                        "x z", "y x"};
  std::ofstream fs_src(tc.dir / "train.src"), fs_tgt(tc.dir / "train.tgt"),
      fs_amr(tc.dir / "train.amr");
  std::vector<std::string> amr_tokens;
  for (std::size_t i = 0; i < src.size(); ++i) {
    fs_src << src[i] << "\n";
    fs_tgt << tgt[i] << "\n";
    const AmrGraph g = chain_graph(split_tokens(src[i]));
    fs_amr << serialize_penman(g) << "\n\n";
    const auto lin = linearize(g);
    amr_tokens.insert(amr_tokens.end(), lin.begin(), lin.end());
  }
  fs_src.close();
  fs_tgt.close();
  fs_amr.close();

  std::vector<std::string> src_toks, tgt_toks;
  for (const auto& l : src)
    for (const auto& t : split_tokens(l)) src_toks.push_back(t);
  for (const auto& l : tgt)
    for (const auto& t : split_tokens(l)) tgt_toks.push_back(t);
  Vocabulary::build(src_toks, 100).save((tc.dir / "vocab.src").string());
  Vocabulary::build(tgt_toks, 100).save((tc.dir / "vocab.tgt").string());
  Vocabulary::build(amr_tokens, 100).save((tc.dir / "vocab.amr").string());

  RunConfig& c = tc.cfg;
  c.mode = "dual2seq";
  c.embed_dim = 4;
  c.hidden_dim = 4;
  c.graph_dim = 4;
  c.transition_steps = 2;
  c.lr = 0.01;
  c.batch_size = 4;
  c.dropout = 0.2;
  c.seed = 555;
  c.train_src = (tc.dir / "train.src").string();
  c.train_tgt = (tc.dir / "train.tgt").string();
  c.train_amr = (tc.dir / "train.amr").string();
  c.dev_src = c.train_src;
  c.dev_tgt = c.train_tgt;
  c.dev_amr = c.train_amr;
  c.vocab_src = (tc.dir / "vocab.src").string();
  c.vocab_tgt = (tc.dir / "vocab.tgt").string();
  c.vocab_amr = (tc.dir / "vocab.amr").string();
  c.model = (tc.dir / "model.json").string();
  return tc;
}

std::vector<double> checkpoint_params(const std::string& path) {
  const Model m = load_model(path);
  std::vector<double> flat;
  for (int i = 0; i < m.store.count(); ++i)
    flat.insert(flat.end(), m.store.value_at(i).data->begin(), m.store.value_at(i).data->end());
  return flat;
}

}  // namespace

TEST_CASE("resuming reproduces an uninterrupted run exactly") {
  TinyCorpus straight = write_tiny_corpus("straight");
  straight.cfg.epochs = 3;
  train_model(straight.cfg, (straight.dir / "log.tsv").string(), /*echo=*/false);

  TinyCorpus resumed = write_tiny_corpus("resumed");
  resumed.cfg.epochs = 2;
  train_model(resumed.cfg, (resumed.dir / "log.tsv").string(), false);
  resumed.cfg.resume = resumed.cfg.model + ".last";
  resumed.cfg.epochs = 3;
  train_model(resumed.cfg, (resumed.dir / "log.tsv").string(), false);

  CHECK(checkpoint_params(straight.cfg.model + ".last") ==
        checkpoint_params(resumed.cfg.model + ".last"));

  SUBCASE("resuming under a different mode is a mode-mismatch error") {
    resumed.cfg.mode = "dual2seq-self";
    resumed.cfg.epochs = 4;
    CHECK_THROWS_WITH_AS(train_model(resumed.cfg, (resumed.dir / "log.tsv").string(), false),
                         doctest::Contains("mode mismatch"), std::runtime_error);
  }
  fs::remove_all(straight.dir);
  fs::remove_all(resumed.dir);
}

TEST_CASE("config validation catches mode and file inconsistencies") {
  RunConfig c;
  c.mode = "dual2seq";
  c.train_src = "a";
  c.train_tgt = "b";
  c.dev_src = "c";
  c.dev_tgt = "d";
  c.vocab_src = "e";
  c.vocab_tgt = "f";
  c.vocab_amr = "g";
  c.model = "m";
  CHECK_THROWS_WITH_AS(c.validate("train"), doctest::Contains("--train-amr"), std::runtime_error);
  c.train_amr = "h";
  c.dev_amr = "i";
  CHECK_NOTHROW(c.validate("train"));
  c.mode = "dual2seq-self";
  c.train_amr.clear();
  c.dev_amr.clear();
  CHECK_NOTHROW(c.validate("train"));  // self mode consumes no AMR file
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate("train"), std::runtime_error);
}
