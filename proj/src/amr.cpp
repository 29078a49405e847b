#include "amrnmt/amr.hpp"

#include <cctype>
#include <istream>
#include <map>
#include <sstream>

namespace amrnmt {

namespace {

struct Token {
  enum Kind { LParen, RParen, Slash, Atom, Quoted, End } kind;
  std::string text;  // for Quoted: the content without quotes
  std::size_t offset;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) {}

  Token next() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ >= s_.size()) return {Token::End, "", pos_};
    const std::size_t start = pos_;
    const char c = s_[pos_];
    if (c == '(') return ++pos_, Token{Token::LParen, "(", start};
    if (c == ')') return ++pos_, Token{Token::RParen, ")", start};
    if (c == '/') return ++pos_, Token{Token::Slash, "/", start};
    if (c == '"') {
      ++pos_;
      std::string out;
      while (pos_ < s_.size() && s_[pos_] != '"') out += s_[pos_++];
      if (pos_ >= s_.size()) throw PenmanError("unterminated string constant", start);
      ++pos_;
      return {Token::Quoted, out, start};
    }
    std::string out;
    while (pos_ < s_.size()) {
      const char d = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == '/' ||
          d == '"')
        break;
      out += d;
      ++pos_;
    }
    return {Token::Atom, out, start};
  }

  Token peek() {
    const std::size_t save = pos_;
    Token t = next();
    pos_ = save;
    return t;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

bool is_numeric_literal(const std::string& s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  bool digits = false;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, digits = true;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, digits = true;
  }
  return digits && i == s.size();
}

// The dominant AMR variable shape: one lowercase letter plus optional digits.
bool looks_like_variable(const std::string& s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return false;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

class Parser {
 public:
  Parser(const std::string& text, bool strict) : lex_(text), strict_(strict) {}

  AmrGraph run() {
    Token t = lex_.next();
    if (t.kind != Token::LParen) throw PenmanError("expected '('", t.offset);
    g_.root = parse_node(t.offset);
    Token rest = lex_.next();
    if (rest.kind != Token::End)
      throw PenmanError("trailing content after expression (unbalanced parentheses?)",
                        rest.offset);
    return std::move(g_);
  }

 private:
  // Called with the '(' already consumed.
  int parse_node(std::size_t open_off) {
    Token var = lex_.next();
    if (var.kind != Token::Atom) throw PenmanError("expected a variable after '('", var.offset);
    if (vars_.count(var.text))
      throw PenmanError("variable '" + var.text + "' redefined", var.offset);
    const int idx = static_cast<int>(g_.nodes.size());
    g_.nodes.push_back({"", NodeKind::Concept});
    vars_[var.text] = idx;

    Token slash = lex_.next();
    if (slash.kind != Token::Slash)
      throw PenmanError("missing '/' after variable '" + var.text + "'", slash.offset);
    Token label = lex_.next();
    if (label.kind != Token::Atom && label.kind != Token::Quoted)
      throw PenmanError("expected a concept after '/'", label.offset);
    g_.nodes[static_cast<std::size_t>(idx)].label = label.text;

    for (;;) {
      Token t = lex_.next();
      if (t.kind == Token::RParen) return idx;
      if (t.kind == Token::End)
        throw PenmanError("unexpected end of input: unbalanced parentheses", open_off);
      if (t.kind != Token::Atom || t.text.empty() || t.text[0] != ':')
        throw PenmanError("expected a ':role' or ')'", t.offset);
      const std::string role = t.text;
      Token tgt = lex_.next();
      int child;
      if (tgt.kind == Token::LParen) {
        child = parse_node(tgt.offset);
      } else if (tgt.kind == Token::Quoted) {
        child = static_cast<int>(g_.nodes.size());
        g_.nodes.push_back({tgt.text, NodeKind::StringConstant});
      } else if (tgt.kind == Token::Atom) {
        auto it = vars_.find(tgt.text);
        if (it != vars_.end()) {
          child = it->second;  // reentrancy
        } else if (is_numeric_literal(tgt.text)) {
          child = static_cast<int>(g_.nodes.size());
          g_.nodes.push_back({tgt.text, NodeKind::NumericConstant});
        } else if (strict_ && looks_like_variable(tgt.text)) {
          throw PenmanError("reference to undefined variable '" + tgt.text + "'", tgt.offset);
        } else {
          child = static_cast<int>(g_.nodes.size());
          g_.nodes.push_back({tgt.text, NodeKind::Concept});
        }
      } else {
        throw PenmanError("expected a target after '" + role + "'", tgt.offset);
      }
      g_.edges.push_back({idx, child, role});
    }
  }

  Lexer lex_;
  bool strict_;
  AmrGraph g_;
  std::map<std::string, int> vars_;
};

}  // namespace

AmrGraph parse_penman(const std::string& text, bool strict) { return Parser(text, strict).run(); }

namespace {

class Writer {
 public:
  explicit Writer(const AmrGraph& g) : g_(g), var_of_(g.nodes.size()), out_edges_(g.nodes.size()) {
    for (std::size_t e = 0; e < g.edges.size(); ++e)
      out_edges_[static_cast<std::size_t>(g.edges[e].src)].push_back(static_cast<int>(e));
  }

  std::string run() {
    if (g_.nodes.empty()) throw std::runtime_error("serialize: empty graph");
    if (g_.nodes[static_cast<std::size_t>(g_.root)].kind != NodeKind::Concept)
      throw std::runtime_error("serialize: root must be a concept node");
    std::ostringstream os;
    write_concept(g_.root, os);
    return os.str();
  }

 private:
  std::string fresh_var(const std::string& label) {
    char base = 'v';
    for (char c : label)
      if (std::isalpha(static_cast<unsigned char>(c))) {
        base = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        break;
      }
    int& n = var_counts_[base];
    ++n;
    return n == 1 ? std::string(1, base) : std::string(1, base) + std::to_string(n);
  }

  void write_concept(int idx, std::ostringstream& os) {
    const AmrNode& node = g_.nodes[static_cast<std::size_t>(idx)];
    if (!var_of_[static_cast<std::size_t>(idx)].empty()) {  // reentrant revisit
      os << var_of_[static_cast<std::size_t>(idx)];
      return;
    }
    const std::string var = fresh_var(node.label);
    var_of_[static_cast<std::size_t>(idx)] = var;
    os << '(' << var << " / " << node.label;
    for (int e : out_edges_[static_cast<std::size_t>(idx)]) {
      const AmrEdge& edge = g_.edges[static_cast<std::size_t>(e)];
      os << ' ' << edge.label << ' ';
      const AmrNode& tgt = g_.nodes[static_cast<std::size_t>(edge.tgt)];
      switch (tgt.kind) {
        case NodeKind::Concept:
          write_concept(edge.tgt, os);
          break;
        case NodeKind::StringConstant:
          os << '"' << tgt.label << '"';
          break;
        case NodeKind::NumericConstant:
          os << tgt.label;
          break;
      }
    }
    os << ')';
  }

  const AmrGraph& g_;
  std::vector<std::string> var_of_;
  std::vector<std::vector<int>> out_edges_;
  std::map<char, int> var_counts_;
};

}  // namespace

std::string serialize_penman(const AmrGraph& g) { return Writer(g).run(); }

std::vector<std::string> linearize(const AmrGraph& g) {
  if (g.nodes.empty()) throw std::runtime_error("linearize: empty graph");
  std::vector<std::vector<int>> out_edges(g.nodes.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    out_edges[static_cast<std::size_t>(g.edges[e].src)].push_back(static_cast<int>(e));
  std::vector<std::string> toks;
  std::vector<char> visited(g.nodes.size(), 0);

  auto walk = [&](auto&& self, int idx) -> void {
    const AmrNode& node = g.nodes[static_cast<std::size_t>(idx)];
    if (visited[static_cast<std::size_t>(idx)] || out_edges[static_cast<std::size_t>(idx)].empty()) {
      toks.push_back(node.label);
      return;
    }
    visited[static_cast<std::size_t>(idx)] = 1;
    toks.push_back("(");
    toks.push_back(node.label);
    for (int e : out_edges[static_cast<std::size_t>(idx)]) {
      toks.push_back(g.edges[static_cast<std::size_t>(e)].label);
      self(self, g.edges[static_cast<std::size_t>(e)].tgt);
    }
    toks.push_back(")");
  };
  walk(walk, g.root);
  return toks;
}

AmrGraph chain_graph(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw std::runtime_error("chain_graph: empty token list");
  AmrGraph g;
  g.root = 0;
  for (const auto& t : tokens) g.nodes.push_back({t, NodeKind::Concept});
  for (int i = 0; i + 1 < static_cast<int>(tokens.size()); ++i) g.edges.push_back({i, i + 1, ":next"});
  return g;
}

Adjacency build_adjacency(const AmrGraph& g, int max_neighbors) {
  if (max_neighbors < 1) throw std::runtime_error("adjacency: max_neighbors must be >= 1");
  const std::size_t n = g.nodes.size();
  std::vector<std::vector<AdjacencyEntry>> in_all(n), out_all(n);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const AmrEdge& edge = g.edges[e];
    in_all[static_cast<std::size_t>(edge.tgt)].push_back({edge.src, static_cast<int>(e)});
    out_all[static_cast<std::size_t>(edge.src)].push_back({edge.tgt, static_cast<int>(e)});
  }
  Adjacency adj;
  adj.in.resize(n);
  adj.out.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    int budget = max_neighbors;
    for (const auto& entry : in_all[j]) {
      if (budget == 0) break;
      adj.in[j].push_back(entry);
      --budget;
    }
    for (const auto& entry : out_all[j]) {
      if (budget == 0) break;
      adj.out[j].push_back(entry);
      --budget;
    }
    adj.dropped += static_cast<int>(in_all[j].size() + out_all[j].size()) -
                   static_cast<int>(adj.in[j].size() + adj.out[j].size());
  }
  return adj;
}

std::vector<std::string> read_amr_blocks(std::istream& in) {
  std::vector<std::string> blocks;
  std::string line, current;
  int depth = 0;
  bool in_quote = false, seen_open = false;

  auto flush = [&]() {
    if (!current.empty() && current.find_first_not_of(" \t\r\n") != std::string::npos)
      blocks.push_back(current);
    current.clear();
    depth = 0;
    in_quote = false;
    seen_open = false;
  };

  while (std::getline(in, line)) {
    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) {  // blank: block separator
      flush();
      continue;
    }
    if (line[first] == '#') continue;  // comment
    current += line;
    current += '\n';
    for (char c : line) {
      if (c == '"') in_quote = !in_quote;
      if (in_quote) continue;
      if (c == '(') ++depth, seen_open = true;
      if (c == ')') --depth;
    }
    if (seen_open && depth <= 0) flush();
  }
  flush();
  return blocks;
}

}  // namespace amrnmt
