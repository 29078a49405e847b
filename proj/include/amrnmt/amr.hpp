#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace amrnmt {

enum class NodeKind { Concept, StringConstant, NumericConstant };

struct AmrNode {
  std::string label;
  NodeKind kind = NodeKind::Concept;
};

/// Directed labeled edge; `label` keeps the leading ':' (e.g. ":ARG0").
struct AmrEdge {
  int src = 0;
  int tgt = 0;
  std::string label;
};

/// Rooted directed labeled graph. Nodes are stored in first-mention order of
/// the source text; a re-referenced variable adds an edge to the existing
/// node, never a duplicate node. Edges are stored in source-text order.
struct AmrGraph {
  std::vector<AmrNode> nodes;
  std::vector<AmrEdge> edges;
  int root = 0;
};

struct PenmanError : std::runtime_error {
  std::size_t offset;
  PenmanError(const std::string& msg, std::size_t off)
      : std::runtime_error("penman: offset " + std::to_string(off) + ": " + msg), offset(off) {}
};

/// Parses one PENMAN expression: `(var / concept :rel target ...)` with
/// nesting, quoted string constants, bare numeric constants, and variable
/// re-references (reentrancies). Bare symbols that do not name a defined
/// variable become anonymous concept leaves; in strict mode a bare symbol
/// shaped like a variable (one letter plus optional digits) is an error.
AmrGraph parse_penman(const std::string& text, bool strict = false);

/// Canonical PENMAN writer (depth-first from the root, edges in stored
/// order, invented variable names). parse(serialize(g)) reproduces g's
/// node and edge sets for any parser-produced graph.
std::string serialize_penman(const AmrGraph& g);

/// Depth-first token stream from the root: "(", labels and edge labels, ")";
/// variables dropped, leaves unparenthesized, reentrant revisits emit the
/// node label only.
std::vector<std::string> linearize(const AmrGraph& g);

/// One node per token, edges (i, i+1, ":next"), root 0.
AmrGraph chain_graph(const std::vector<std::string>& tokens);

struct AdjacencyEntry {
  int neighbor;  // node index
  int edge;      // index into AmrGraph::edges (labels resolved from there)
};

/// Per-node incoming/outgoing incidence lists, capped at max_neighbors total
/// per node: earliest edges win, incoming before outgoing.
struct Adjacency {
  std::vector<std::vector<AdjacencyEntry>> in;
  std::vector<std::vector<AdjacencyEntry>> out;
  int dropped = 0;  // (node, edge) incidences discarded by the cap
};

Adjacency build_adjacency(const AmrGraph& g, int max_neighbors);

/// Reads PENMAN blocks from a stream: '#'-prefixed lines are comments, blank
/// lines separate blocks, and a block is also complete as soon as its
/// parentheses balance (so both multi-line and one-per-line files work).
std::vector<std::string> read_amr_blocks(std::istream& in);

}  // namespace amrnmt
