#include <cstdio>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "amrnmt/bpe.hpp"
#include "amrnmt/corpus.hpp"
#include "amrnmt/rng.hpp"
#include "amrnmt/vocab.hpp"

using namespace amrnmt;

TEST_CASE("learn_bpe on low low lower") {
  const std::vector<std::string> corpus = {"low", "low", "lower"};
  const auto one = learn_bpe(corpus, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == BpeMerge{"l", "o"});

  CHECK(learn_bpe(corpus, 0).empty());

  // prefix stability
  const auto k3 = learn_bpe(corpus, 3);
  const auto k5 = learn_bpe(corpus, 5);
  for (std::size_t i = 0; i < k3.size(); ++i) CHECK(k3[i] == k5[i]);
}

TEST_CASE("apply_bpe replays merges with continuation markers") {
  const std::vector<BpeMerge> merges = {{"l", "o"}, {"lo", "w"}};
  CHECK(apply_bpe(merges, "lower") == std::vector<std::string>{"low@@", "e@@", "r"});
  CHECK(apply_bpe(merges, "low") == std::vector<std::string>{"low"});  // fully merged

  // join-and-strip recovers the word; reapplication is stable
  auto rng = make_rng(5);
  std::uniform_int_distribution<int> len(1, 8), ch(0, 3);
  const char alphabet[] = {'l', 'o', 'w', 'e'};
  std::vector<std::string> words;
  for (int i = 0; i < 200; ++i) {
    std::string w;
    const int n = len(rng);
    for (int j = 0; j < n; ++j) w += alphabet[ch(rng)];
    words.push_back(w);
  }
  const auto learned = learn_bpe(words, 10);
  for (const auto& w : words) {
    const auto units = apply_bpe(learned, w);
    CHECK(strip_bpe(units) == w);
    CHECK(apply_bpe(learned, strip_bpe(units)) == units);
  }
}

TEST_CASE("merge file round-trip") {
  const auto path = std::filesystem::temp_directory_path() / "amrnmt_test_merges.txt";
  const std::vector<BpeMerge> merges = {{"a", "b"}, {"ab", "c"}};
  save_merges(path.string(), merges);
  CHECK(load_merges(path.string()) == merges);
  std::filesystem::remove(path);
}

TEST_CASE("vocabulary build, truncation and coverage") {
  const Vocabulary v = Vocabulary::build({"a", "a", "b"}, 5);
  CHECK(v.size() == 5);
  CHECK(v.id_of("a") == 4);
  CHECK(v.id_of("b") == Vocabulary::kUnk);
  CHECK(v.coverage() == doctest::Approx(2.0 / 3.0));

  const Vocabulary full = Vocabulary::build({"a", "a", "b"}, 100);
  CHECK(full.id_of("b") != Vocabulary::kUnk);
  CHECK(full.coverage() == 1.0);

  CHECK_THROWS_AS(Vocabulary::build({"a"}, 4), std::runtime_error);

  // frequency ranking with lexicographic ties
  const Vocabulary ranked = Vocabulary::build({"z", "z", "m", "k"}, 7);
  CHECK(ranked.id_of("z") == 4);
  CHECK(ranked.id_of("k") == 5);
  CHECK(ranked.id_of("m") == 6);
}

TEST_CASE("vocabulary file round-trip") {
  const auto path = std::filesystem::temp_directory_path() / "amrnmt_test_vocab.txt";
  const Vocabulary v = Vocabulary::build({"tok1", "tok2", "tok2"}, 10);
  v.save(path.string());
  const Vocabulary w = Vocabulary::load(path.string());
  CHECK(w.size() == v.size());
  for (int id = 0; id < v.size(); ++id) CHECK(w.token_of(id) == v.token_of(id));
  CHECK(w.id_of("tok2") == v.id_of("tok2"));
  std::filesystem::remove(path);
}

namespace {

ParallelExample make_ex(int src_len, int tgt_len) {
  ParallelExample ex;
  for (int i = 0; i < src_len; ++i) ex.src.push_back("s" + std::to_string(i % 7));
  for (int i = 0; i < tgt_len; ++i) ex.tgt.push_back("t" + std::to_string(i % 7));
  return ex;
}

}  // namespace

TEST_CASE("length filter drops either side over max_len") {
  std::vector<ParallelExample> exs = {make_ex(51, 5), make_ex(5, 51), make_ex(3, 5)};
  const Vocabulary v = Vocabulary::build({"s0", "t0"}, 100);
  BatchOptions opt;
  opt.mode = Mode::Seq2seq;
  opt.batch_size = 8;
  opt.max_len = 50;
  int dropped = 0;
  const auto batches = make_batches(exs, v, v, v, opt, &dropped);
  CHECK(dropped == 2);
  REQUIRE(batches.size() == 1);
  CHECK(batches[0].size == 1);
}

TEST_CASE("padding, masks and special tokens") {
  std::vector<ParallelExample> exs = {make_ex(3, 2), make_ex(5, 4)};
  std::vector<std::string> stream;
  for (const auto& e : exs) {
    stream.insert(stream.end(), e.src.begin(), e.src.end());
    stream.insert(stream.end(), e.tgt.begin(), e.tgt.end());
  }
  const Vocabulary v = Vocabulary::build(stream, 100);
  BatchOptions opt;
  opt.mode = Mode::Seq2seq;
  opt.batch_size = 2;
  const auto batches = make_batches(exs, v, v, v, opt);
  REQUIRE(batches.size() == 1);
  const Batch& b = batches[0];
  CHECK(b.src_len == 5);
  CHECK(b.tgt_len == 6);  // <s> + 4 + </s>
  int pads = 0;
  for (int r = 0; r < b.size; ++r) {
    int real = 0;
    for (int t = 0; t < b.src_len; ++t) {
      if (b.src_mask[static_cast<std::size_t>(r) * b.src_len + t])
        ++real;
      else {
        CHECK(b.src_ids[static_cast<std::size_t>(r) * b.src_len + t] == Vocabulary::kPad);
        ++pads;
      }
    }
    CHECK((real == 3 || real == 5));
    const std::size_t tbase = static_cast<std::size_t>(r) * b.tgt_len;
    CHECK(b.tgt_ids[tbase] == Vocabulary::kBos);
    int last_real = -1;
    for (int t = 0; t < b.tgt_len; ++t)
      if (b.tgt_mask[tbase + t]) last_real = t;
    CHECK(b.tgt_ids[tbase + last_real] == Vocabulary::kEos);
  }
  CHECK(pads == 2);
  for (int id : b.src_ids) CHECK(id < v.size());
  for (int id : b.tgt_ids) CHECK(id < v.size());
}

TEST_CASE("seeded shuffle is reproducible and epoch-dependent") {
  std::vector<ParallelExample> exs;
  for (int i = 0; i < 40; ++i) exs.push_back(make_ex(2 + i % 9, 3));
  const Vocabulary v = Vocabulary::build({"s0", "t0"}, 100);
  BatchOptions opt;
  opt.mode = Mode::Seq2seq;
  opt.batch_size = 4;
  opt.seed = 77;
  opt.epoch = 3;
  const auto a = make_batches(exs, v, v, v, opt);
  const auto b = make_batches(exs, v, v, v, opt);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].src_ids == b[i].src_ids);

  opt.epoch = 4;
  const auto c = make_batches(exs, v, v, v, opt);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size() && !any_diff; ++i)
    any_diff = a[i].src_ids != c[i].src_ids || a[i].src_len != c[i].src_len;
  CHECK(any_diff);
}

TEST_CASE("bucketing groups similar source lengths") {
  std::vector<ParallelExample> exs;
  for (int i = 0; i < 32; ++i) exs.push_back(make_ex(1 + (i % 16), 2));
  const Vocabulary v = Vocabulary::build({"s0", "t0"}, 100);
  BatchOptions opt;
  opt.mode = Mode::Seq2seq;
  opt.batch_size = 8;
  opt.bucketing = true;
  long padded = 0;
  for (const auto& b : make_batches(exs, v, v, v, opt))
    for (std::uint8_t m : b.src_mask) padded += m ? 0 : 1;
  opt.bucketing = false;
  long padded_plain = 0;
  for (const auto& b : make_batches(exs, v, v, v, opt))
    for (std::uint8_t m : b.src_mask) padded_plain += m ? 0 : 1;
  CHECK(padded <= padded_plain);
}

TEST_CASE("graph batches flatten nodes with per-example offsets") {
  const AmrGraph g1 = parse_penman("(a / alpha :op1 (b / beta))");
  const AmrGraph g2 = parse_penman("(c / gamma :op1 (d / delta) :op2 (e / eps))");
  std::vector<std::string> labels = {"alpha", "beta", "gamma", "delta", "eps", ":op1", ":op2"};
  const Vocabulary v = Vocabulary::build(labels, 100);
  const GraphBatch gb = build_graph_batch({&g1, &g2}, v, 6);
  CHECK(gb.num_nodes() == 5);
  CHECK(gb.offsets == std::vector<int>{0, 2});
  CHECK(gb.counts == std::vector<int>{2, 3});
  CHECK(gb.max_count == 3);
  CHECK(gb.edge_src == std::vector<int>{0, 2, 2});
  // node 3 (delta) has one incoming edge from global node 2
  CHECK(gb.in_neighbors[3] == std::vector<int>{2});
  CHECK(gb.out_neighbors[2] == std::vector<int>{3, 4});
  for (int id : gb.node_label_ids) CHECK(id != Vocabulary::kUnk);
}

TEST_CASE("corpus loader aligns sentence pairs with AMR blocks") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "amrnmt_corpus_test";
  fs::create_directories(dir);
  std::ofstream((dir / "s.txt").string()) << "a b\nc d\n";
  std::ofstream((dir / "t.txt").string()) << "x\ny z\n";
  std::ofstream((dir / "g.amr").string()) << "(a / alpha)\n\n(b / beta :op1 (c / gamma))\n";
  const auto exs = load_corpus((dir / "s.txt").string(), (dir / "t.txt").string(),
                               (dir / "g.amr").string());
  REQUIRE(exs.size() == 2);
  CHECK(exs[0].src == std::vector<std::string>{"a", "b"});
  CHECK(exs[1].amr->nodes.size() == 2);

  std::ofstream((dir / "bad.txt").string()) << "only one line\n";
  CHECK_THROWS_AS(load_corpus((dir / "s.txt").string(), (dir / "bad.txt").string()),
                  std::runtime_error);
  fs::remove_all(dir);
}
