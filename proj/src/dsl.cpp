#include "seedbank/dsl.hpp"

#include <cctype>
#include <utility>
#include <vector>

namespace seedbank {

enum class NodeKind { Literal, N0, M0, K0, Add, Sub, Mul, Div };

struct DensitySpec::Node {
  NodeKind kind;
  Rat value;          // Literal only
  std::string token;  // Literal only: source text, kept for printing
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using NodePtr = std::shared_ptr<const DensitySpec::Node>;

NodePtr leaf(NodeKind k, Rat v = Rat(0), std::string token = {}) {
  return std::make_shared<DensitySpec::Node>(
      DensitySpec::Node{k, v, std::move(token), nullptr, nullptr});
}

NodePtr binop(NodeKind k, NodePtr l, NodePtr r) {
  return std::make_shared<DensitySpec::Node>(
      DensitySpec::Node{k, Rat(0), {}, std::move(l), std::move(r)});
}

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != text_.size()) throw DensityParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      skip_ws();
      if (accept('+'))
        lhs = binop(NodeKind::Add, lhs, term());
      else if (accept('-'))
        lhs = binop(NodeKind::Sub, lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      skip_ws();
      if (accept('*'))
        lhs = binop(NodeKind::Mul, lhs, factor());
      else if (accept('/'))
        lhs = binop(NodeKind::Div, lhs, factor());
      else
        return lhs;
    }
  }

  NodePtr factor() {
    skip_ws();
    if (pos_ >= text_.size()) throw DensityParseError("unexpected end of expression", pos_);
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      skip_ws();
      if (!accept(')')) throw DensityParseError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return literal();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw DensityParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  NodePtr literal() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    std::string tok = text_.substr(start, pos_ - start);
    if (tok == "." || tok.empty()) throw DensityParseError("malformed number", start);
    return leaf(NodeKind::Literal, Rat::parse(tok), tok);
  }

  NodePtr identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           std::isalnum(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    std::string name = text_.substr(start, pos_ - start);
    if (name == "N0") return leaf(NodeKind::N0);
    if (name == "M0") return leaf(NodeKind::M0);
    if (name == "K0") return leaf(NodeKind::K0);
    throw DensityParseError("unknown identifier '" + name + "'", start);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) { ++pos_; return true; }
    return false;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

Rat eval_node(const DensitySpec::Node& n, int N, int M) {
  switch (n.kind) {
    case NodeKind::Literal: return n.value;
    case NodeKind::N0: return Rat(N);
    case NodeKind::M0: return Rat(M);
    case NodeKind::K0: return Rat(N, M);
    case NodeKind::Add: return eval_node(*n.lhs, N, M) + eval_node(*n.rhs, N, M);
    case NodeKind::Sub: return eval_node(*n.lhs, N, M) - eval_node(*n.rhs, N, M);
    case NodeKind::Mul: return eval_node(*n.lhs, N, M) * eval_node(*n.rhs, N, M);
    case NodeKind::Div: {
      Rat d = eval_node(*n.rhs, N, M);
      if (d == Rat(0)) throw DensityEvalError("division by zero in density expression");
      return eval_node(*n.lhs, N, M) / d;
    }
  }
  throw std::logic_error("unreachable");
}

void print_node(const DensitySpec::Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Literal: out += n.token; return;
    case NodeKind::N0: out += "N0"; return;
    case NodeKind::M0: out += "M0"; return;
    case NodeKind::K0: out += "K0"; return;
    default: break;
  }
  const char* op = n.kind == NodeKind::Add   ? "+"
                   : n.kind == NodeKind::Sub ? "-"
                   : n.kind == NodeKind::Mul ? "*"
                                             : "/";
  out += '(';
  print_node(*n.lhs, out);
  out += op;
  print_node(*n.rhs, out);
  out += ')';
}

bool constant_node(const DensitySpec::Node& n) {
  switch (n.kind) {
    case NodeKind::Literal: return true;
    case NodeKind::N0:
    case NodeKind::M0:
    case NodeKind::K0: return false;
    default: return constant_node(*n.lhs) && constant_node(*n.rhs);
  }
}

}  // namespace

Rat DensitySpec::eval_raw(int N, int M) const { return eval_node(*root_, N, M); }

Rat DensitySpec::eval(int N, int M) const {
  Rat v = eval_raw(N, M);
  if (v < Rat(0) || v > Rat(1))
    throw DensityEvalError("density '" + source_ + "' evaluates to " + v.str() +
                           " outside [0,1] at (N,M)=(" + std::to_string(N) + "," +
                           std::to_string(M) + ")");
  return v;
}

std::string DensitySpec::print() const {
  std::string out;
  print_node(*root_, out);
  return out;
}

bool DensitySpec::is_constant() const { return constant_node(*root_); }

DensitySpec parse_density(const std::string& text) {
  DensitySpec s;
  s.root_ = Parser(text).parse();
  s.source_ = text;
  return s;
}

}  // namespace seedbank
