#include <cmath>

#include <doctest.h>

#include "amrnmt/model.hpp"
#include "amrnmt/rng.hpp"
#include "fd_check.hpp"

using namespace amrnmt;
using testutil::max_grad_rel_err;

namespace {

ModelConfig tiny_cfg(Mode mode, int e = 3, int h = 3, int g = 4) {
  ModelConfig c;
  c.mode = mode;
  c.embed_dim = e;
  c.hidden_dim = h;
  c.graph_dim = g;
  c.src_vocab = 9;
  c.tgt_vocab = 9;
  c.graph_vocab = 16;
  return c;
}

// Chain over n nodes with distinct concept ids (4..4+n-1); forward ":next"
// edges, plus reverse ":prev" edges when bidirectional.
GraphBatch chain_batch(int n, bool bidirectional, int max_neighbors = 6) {
  AmrGraph g;
  for (int i = 0; i < n; ++i) g.nodes.push_back({"c" + std::to_string(i), NodeKind::Concept});
  for (int i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1, ":next"});
  if (bidirectional)
    for (int i = 0; i + 1 < n; ++i) g.edges.push_back({i + 1, i, ":prev"});
  std::vector<std::string> labels;
  for (const auto& node : g.nodes) labels.push_back(node.label);
  labels.push_back(":next");
  labels.push_back(":prev");
  Vocabulary vocab = Vocabulary::build(labels, 100);
  GraphBatch gb = build_graph_batch({&g}, vocab, max_neighbors);
  // distinct ids per node so embedding-table rows map 1:1 to nodes
  for (int i = 0; i < n; ++i) REQUIRE(gb.node_label_ids[static_cast<std::size_t>(i)] >= 4);
  return gb;
}

std::vector<Tensor> store_values(const Model& m) {
  std::vector<Tensor> out;
  for (int i = 0; i < m.store.count(); ++i) out.push_back(m.store.value_at(i));
  return out;
}

}  // namespace

TEST_CASE("bilstm with all-zero parameters yields exactly zero states") {
  Model m(tiny_cfg(Mode::Seq2seq));  // parameters default to zero
  const ParamView pv = ParamView::values(m.store);
  const std::vector<int> ids = {4, 5, 6, 4};
  const std::vector<std::uint8_t> mask = {1, 1, 1, 1};
  const SeqEncoding enc = bilstm_encode(pv, m.src_embed, m.enc_fwd, m.enc_bwd, ids, mask, 1, 4);
  for (double v : *enc.H.data) CHECK(v == 0.0);
  for (double v : *enc.bound_fwd.data) CHECK(v == 0.0);
  for (double v : *enc.bound_bwd.data) CHECK(v == 0.0);
}

TEST_CASE("single-token input produces a 1x2h memory") {
  Model m(tiny_cfg(Mode::Seq2seq));
  m.init_params(11);
  const ParamView pv = ParamView::values(m.store);
  const SeqEncoding enc = bilstm_encode(pv, m.src_embed, m.enc_fwd, m.enc_bwd, {5}, {1}, 1, 1);
  CHECK(enc.H.shape == std::vector<int>{1, 2 * m.cfg.hidden_dim});
}

TEST_CASE("bilstm boundary states respect padding") {
  Model m(tiny_cfg(Mode::Seq2seq));
  m.init_params(17);
  const ParamView pv = ParamView::values(m.store);

  // standalone length-3 example
  const SeqEncoding alone =
      bilstm_encode(pv, m.src_embed, m.enc_fwd, m.enc_bwd, {4, 5, 6}, {1, 1, 1}, 1, 3);
  // batched with a length-5 partner, padded to 5
  const std::vector<int> ids = {4, 5, 6, 0, 0, 7, 8, 4, 5, 6};
  const std::vector<std::uint8_t> mask = {1, 1, 1, 0, 0, 1, 1, 1, 1, 1};
  const SeqEncoding batched = bilstm_encode(pv, m.src_embed, m.enc_fwd, m.enc_bwd, ids, mask, 2, 5);

  const int h = m.cfg.hidden_dim;
  for (int j = 0; j < h; ++j) {
    CHECK(batched.bound_fwd.at(0, j) == alone.bound_fwd.at(0, j));
    CHECK(batched.bound_bwd.at(0, j) == alone.bound_bwd.at(0, j));
  }
  for (int t = 0; t < 3; ++t)
    for (int j = 0; j < 2 * h; ++j)
      CHECK(batched.H.at(0 * 5 + t, j) == alone.H.at(t, j));
}

TEST_CASE("bilstm gradients match finite differences") {
  Model m(tiny_cfg(Mode::Seq2seq));
  m.init_params(23);
  auto rng = make_rng(24);
  Tensor coeff({4, 2 * m.cfg.hidden_dim});
  fill_uniform(coeff, rng, -1, 1);
  const std::vector<int> ids = {4, 5, 6, 8};
  const std::vector<std::uint8_t> mask = {1, 1, 1, 0};

  auto f = [&](const std::vector<Tensor>& ps) {
    const ParamView pv = ParamView::of(ps);
    const SeqEncoding enc = bilstm_encode(pv, m.src_embed, m.enc_fwd, m.enc_bwd, ids, mask, 1, 4);
    return sum_all(mul(enc.H, coeff));
  };
  CHECK(max_grad_rel_err(store_values(m), f) <= 1e-4);
}

TEST_CASE("edge representation") {
  SUBCASE("identity projection passes [e_l ; e_v] through") {
    ModelConfig cfg = tiny_cfg(Mode::Dual2seq, 3, 3, 6);  // g == 2e
    Model m(cfg);
    Tensor& w4 = m.store.value(m.edge_proj_W);
    for (int i = 0; i < 6; ++i) w4.at(i, i) = 1.0;
    auto rng = make_rng(3);
    fill_uniform(m.store.value(m.node_embed), rng, -1, 1);
    fill_uniform(m.store.value(m.edge_embed), rng, -1, 1);
    const ParamView pv = ParamView::values(m.store);
    const Tensor x = edge_repr(pv, m, {7}, {5});
    for (int j = 0; j < 3; ++j) {
      CHECK(x.at(0, j) == m.store.value(m.edge_embed).at(7, j));
      CHECK(x.at(0, 3 + j) == m.store.value(m.node_embed).at(5, j));
    }
  }
  SUBCASE("depends only on label and source concept, never the target") {
    Model m(tiny_cfg(Mode::Dual2seq));
    m.init_params(5);
    const ParamView pv = ParamView::values(m.store);
    const Tensor a = edge_repr(pv, m, {7, 7}, {5, 5});
    for (int j = 0; j < m.cfg.graph_dim; ++j) CHECK(a.at(0, j) == a.at(1, j));
  }
  SUBCASE("gradient flows to e_l, e_v, W4, b4 and nothing else") {
    Model m(tiny_cfg(Mode::Dual2seq));
    m.init_params(6);
    Tape tape;
    const ParamView pv = ParamView::watch(tape, m.store);
    tape.backward(sum_all(edge_repr(pv, m, {7}, {5})));
    for (int i = 0; i < m.store.count(); ++i) {
      const Tensor g = tape.grad(pv.at(i));
      double norm = 0;
      for (double v : *g.data) norm += v * v;
      const std::string& name = m.store.name_at(i);
      const bool expected = name == "grn.node_embed" || name == "grn.edge_embed" ||
                            name == "grn.edge_proj.W" || name == "grn.edge_proj.b";
      CAPTURE(name);
      CHECK((norm > 0) == expected);
    }
  }
}

TEST_CASE("zero-parameter transition step fixed point") {
  Model m(tiny_cfg(Mode::Dual2seq));  // all parameters zero
  const ParamView pv = ParamView::values(m.store);
  const GraphBatch gb = chain_batch(3, false);
  const Tensor a1 = grn_encode(pv, m, gb, 1);
  const double expected = 0.5 * std::tanh(0.25);
  for (double v : *a1.data) CHECK(std::abs(v - expected) <= 1e-12);
}

TEST_CASE("grn candidate switch changes the fixed point") {
  ModelConfig cfg = tiny_cfg(Mode::Dual2seq);
  cfg.grn_candidate = GrnCandidate::Tanh;
  Model m(cfg);
  const ParamView pv = ParamView::values(m.store);
  const Tensor a1 = grn_encode(pv, m, chain_batch(3, false), 1);
  // tanh candidate at zero input: u = 0, so c = 0 and a = 0
  for (double v : *a1.data) CHECK(v == 0.0);
}

TEST_CASE("transition step count below one is rejected") {
  Model m(tiny_cfg(Mode::Dual2seq));
  const ParamView pv = ParamView::values(m.store);
  const GraphBatch gb = chain_batch(3, false);
  CHECK_THROWS_AS(grn_encode(pv, m, gb, 0), std::runtime_error);
}

TEST_CASE("single-node graph follows the isolated recurrence") {
  Model m(tiny_cfg(Mode::Dual2seq));
  m.init_params(31);
  const ParamView pv = ParamView::values(m.store);
  const GraphBatch gb = chain_batch(1, false);
  // no edges: phi terms vanish, the state evolves through biases only
  const Tensor a3 = grn_encode(pv, m, gb, 3);
  CHECK(a3.shape == std::vector<int>{1, m.cfg.graph_dim});
  // reproduce by hand over the same gate equations
  const int g = m.cfg.graph_dim;
  std::vector<double> a(static_cast<std::size_t>(g), 0.0), c(a);
  auto bias = [&](const GrnGateParams& gp, int j) { return m.store.value(gp.b)[static_cast<std::size_t>(j)]; };
  for (int step = 0; step < 3; ++step) {
    std::vector<double> an(static_cast<std::size_t>(g)), cn(static_cast<std::size_t>(g));
    for (int j = 0; j < g; ++j) {
      // no neighbors: every phi/psi input is zero, gates reduce to biases
      auto gate = [&](const GrnGateParams& gp) { return 1.0 / (1.0 + std::exp(-bias(gp, j))); };
      const double gi = gate(m.gate_i), go = gate(m.gate_o), gf = gate(m.gate_f), gu = gate(m.gate_u);
      cn[static_cast<std::size_t>(j)] = gf * c[static_cast<std::size_t>(j)] + gi * gu;
      an[static_cast<std::size_t>(j)] = go * std::tanh(cn[static_cast<std::size_t>(j)]);
    }
    a = an;
    c = cn;
  }
  for (int j = 0; j < g; ++j) CHECK(a3.at(0, j) == doctest::Approx(a[static_cast<std::size_t>(j)]).epsilon(1e-12));
}

namespace {

// Jacobian block structure: is d a_T^u / d e_v nonzero?
std::vector<std::vector<bool>> embedding_reach(const Model& m, const GraphBatch& gb, int steps) {
  const int n = gb.num_nodes();
  const int g = m.cfg.graph_dim;
  std::vector<std::vector<bool>> reach(static_cast<std::size_t>(n),
                                       std::vector<bool>(static_cast<std::size_t>(n), false));
  for (int u = 0; u < n; ++u) {
    for (int unit = 0; unit < g; ++unit) {
      Tape tape;
      const ParamView pv = ParamView::watch(tape, m.store);
      const Tensor a = grn_encode(pv, m, gb, steps);
      Tensor pick({n, g});
      pick.at(u, unit) = 1.0;
      tape.backward(sum_all(mul(a, pick)));
      const Tensor ge = tape.grad(pv[m.node_embed]);
      for (int v = 0; v < n; ++v) {
        const int row = gb.node_label_ids[static_cast<std::size_t>(v)];
        for (int j = 0; j < m.cfg.embed_dim; ++j) {
          const double val = ge.at(row, j);
          if (val != 0.0) reach[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] = true;
        }
      }
    }
  }
  return reach;
}

}  // namespace

TEST_CASE("locality on the directed chain: influence is exact and asymmetric") {
  // e_v enters only through the representations of v's outgoing edges, so on
  // a forward chain it reaches [v-T+1, v+T] and the last node's embedding is
  // inert. Equivalently d a_T^u / d e_v != 0 iff u-T <= v <= u+T-1 and v < n-1.
  Model m(tiny_cfg(Mode::Dual2seq));
  m.init_params(41);
  const int n = 7;
  const GraphBatch gb = chain_batch(n, false);
  for (int steps : {1, 2, 3}) {
    const auto reach = embedding_reach(m, gb, steps);
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v) {
        const bool expected = v >= u - steps && v <= u + steps - 1 && v < n - 1;
        CAPTURE(steps);
        CAPTURE(u);
        CAPTURE(v);
        CHECK(reach[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] == expected);
      }
  }
}

TEST_CASE("locality on a chain with antiparallel edges matches undirected distance") {
  Model m(tiny_cfg(Mode::Dual2seq));
  m.init_params(43);
  const int n = 7;
  const GraphBatch gb = chain_batch(n, true);
  for (int steps : {1, 2, 3}) {
    const auto reach = embedding_reach(m, gb, steps);
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v) {
        const bool expected = std::abs(u - v) <= steps;
        CAPTURE(steps);
        CAPTURE(u);
        CAPTURE(v);
        CHECK(reach[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] == expected);
      }
  }
}

TEST_CASE("grn step is permutation equivariant") {
  Model m(tiny_cfg(Mode::Dual2seq));
  m.init_params(47);
  const ParamView pv = ParamView::values(m.store);

  const AmrGraph g = parse_penman("(a / c0 :x (b / c1) :y (c / c2 :z (d / c3)) :w b)");
  const std::vector<int> perm = {2, 0, 3, 1};  // new index of old node i
  AmrGraph pg;
  pg.nodes.assign(4, {});
  for (int i = 0; i < 4; ++i) pg.nodes[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = g.nodes[static_cast<std::size_t>(i)];
  for (const auto& e : g.edges)
    pg.edges.push_back({perm[static_cast<std::size_t>(e.src)], perm[static_cast<std::size_t>(e.tgt)], e.label});
  pg.root = perm[static_cast<std::size_t>(g.root)];

  std::vector<std::string> labels = {"c0", "c1", "c2", "c3", ":x", ":y", ":z", ":w"};
  const Vocabulary vocab = Vocabulary::build(labels, 100);
  const GraphBatch gb = build_graph_batch({&g}, vocab, 6);
  const GraphBatch pgb = build_graph_batch({&pg}, vocab, 6);

  const Tensor a = grn_encode(pv, m, gb, 3);
  const Tensor pa = grn_encode(pv, m, pgb, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < m.cfg.graph_dim; ++j)
      CHECK(a.at(i, j) == pa.at(perm[static_cast<std::size_t>(i)], j));
}

TEST_CASE("grn gradients match finite differences on a 5-node graph") {
  ModelConfig cfg = tiny_cfg(Mode::Dual2seq, 3, 3, 4);
  Model m(cfg);
  m.init_params(53);
  const AmrGraph g = parse_penman("(a / c0 :x (b / c1 :y (c / c2)) :z (d / c3 :w (e / c4)) :u c)");
  std::vector<std::string> labels = {"c0", "c1", "c2", "c3", "c4", ":x", ":y", ":z", ":w", ":u"};
  const Vocabulary vocab = Vocabulary::build(labels, 100);
  const GraphBatch gb = build_graph_batch({&g}, vocab, 6);

  auto rng = make_rng(54);
  Tensor coeff({5, 4});
  fill_uniform(coeff, rng, -1, 1);
  auto f = [&](const std::vector<Tensor>& ps) {
    return sum_all(mul(grn_encode(ParamView::of(ps), m, gb, 3), coeff));
  };
  CHECK(max_grad_rel_err(store_values(m), f) <= 1e-4);
}
