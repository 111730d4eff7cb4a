#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace levykm {

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::size_t off)
      : std::runtime_error(msg + " (at byte " + std::to_string(off) + ")"), offset(off) {}
  std::size_t offset;
};

struct EvalError : std::runtime_error {
  EvalError(const std::string& msg, std::string subexpr)
      : std::runtime_error(msg + " in '" + subexpr + "'"), subexpression(std::move(subexpr)) {}
  std::string subexpression;
};

// Arithmetic expression over variables x1..xn with + - * / ^, unary minus and
// the functions sin, cos, sqrt, exp, abs. Immutable once parsed; evaluation is
// pure, so a single Expr may be evaluated from many threads at once.
class Expr {
 public:
  enum class Op : std::uint8_t {
    kLiteral, kVariable, kAdd, kSub, kMul, kDiv, kPow, kNeg, kSin, kCos, kSqrt, kExp, kAbs
  };

  struct Node {
    Op op;
    int var = 0;          // 1-based variable index (kVariable)
    double value = 0.0;   // literal value (kLiteral)
    std::uint32_t lhs = 0, rhs = 0;  // child node indices
  };

  Expr() = default;

  static Expr parse(std::string_view text) {
    Parser p{text};
    Expr e;
    e.nodes_.reserve(16);
    e.root_ = p.parse_expression(e);
    p.skip_space();
    if (p.pos != text.size()) throw ParseError("unexpected trailing input", p.pos);
    e.finish();
    return e;
  }

  static Expr literal(double v) {
    Expr e;
    e.nodes_.push_back(Node{Op::kLiteral, 0, v, 0, 0});
    e.root_ = 0;
    e.finish();
    return e;
  }

  static Expr variable(int index) {
    if (index < 1) throw ParseError("variable index must be >= 1", 0);
    Expr e;
    e.nodes_.push_back(Node{Op::kVariable, index, 0.0, 0, 0});
    e.root_ = 0;
    e.finish();
    return e;
  }

  bool empty() const { return nodes_.empty(); }

  // IEEE double evaluation, operands left-to-right. Domain violations
  // (division by zero, sqrt of a negative, non-integer power of a negative
  // base, overflow to non-finite) raise EvalError naming the subexpression.
  double evaluate(std::span<const double> point) const {
    double stack[kMaxDepth];
    int top = -1;
    for (std::uint32_t idx = 0; idx < nodes_.size(); ++idx) {
      const Node& nd = nodes_[idx];
      switch (nd.op) {
        case Op::kLiteral:
          stack[++top] = nd.value;
          break;
        case Op::kVariable:
          if (static_cast<std::size_t>(nd.var) > point.size())
            throw EvalError("point has no coordinate for variable", print_node(idx));
          stack[++top] = point[nd.var - 1];
          break;
        case Op::kNeg:
          stack[top] = -stack[top];
          break;
        case Op::kSin:
          stack[top] = std::sin(stack[top]);
          break;
        case Op::kCos:
          stack[top] = std::cos(stack[top]);
          break;
        case Op::kSqrt:
          if (stack[top] < 0.0) throw EvalError("sqrt of negative value", print_node(idx));
          stack[top] = std::sqrt(stack[top]);
          break;
        case Op::kExp:
          stack[top] = std::exp(stack[top]);
          if (!std::isfinite(stack[top])) throw EvalError("overflow", print_node(idx));
          break;
        case Op::kAbs:
          stack[top] = std::fabs(stack[top]);
          break;
        case Op::kAdd: {
          const double b = stack[top--];
          stack[top] += b;
          check_finite(stack[top], idx);
          break;
        }
        case Op::kSub: {
          const double b = stack[top--];
          stack[top] -= b;
          check_finite(stack[top], idx);
          break;
        }
        case Op::kMul: {
          const double b = stack[top--];
          stack[top] *= b;
          check_finite(stack[top], idx);
          break;
        }
        case Op::kDiv: {
          const double b = stack[top--];
          if (b == 0.0) throw EvalError("division by zero", print_node(idx));
          stack[top] /= b;
          check_finite(stack[top], idx);
          break;
        }
        case Op::kPow: {
          const double b = stack[top--];
          const double a = stack[top];
          if (a < 0.0 && std::nearbyint(b) != b)
            throw EvalError("non-integer power of negative base", print_node(idx));
          if (a == 0.0 && b < 0.0) throw EvalError("division by zero", print_node(idx));
          stack[top] = std::pow(a, b);
          check_finite(stack[top], idx);
          break;
        }
      }
    }
    return stack[0];
  }

  // Canonical rendering; parse(str()) rebuilds the identical tree.
  std::string str() const { return print_node(root_); }

  std::set<int> free_variables() const {
    std::set<int> vars;
    for (const Node& nd : nodes_)
      if (nd.op == Op::kVariable) vars.insert(nd.var);
    return vars;
  }

  int max_variable() const { return max_var_; }

  bool is_literal_zero() const {
    return nodes_.size() == 1 && nodes_[0].op == Op::kLiteral && nodes_[0].value == 0.0;
  }

  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  static constexpr int kMaxDepth = 64;

  void check_finite(double v, std::uint32_t idx) const {
    if (!std::isfinite(v)) throw EvalError("overflow", print_node(idx));
  }

  void finish() {
    max_var_ = 0;
    int depth = 0, max_depth = 0;
    for (const Node& nd : nodes_) {
      if (nd.op == Op::kVariable && nd.var > max_var_) max_var_ = nd.var;
      switch (nd.op) {
        case Op::kLiteral:
        case Op::kVariable:
          ++depth;
          break;
        case Op::kAdd:
        case Op::kSub:
        case Op::kMul:
        case Op::kDiv:
        case Op::kPow:
          --depth;
          break;
        default:
          break;  // unary: depth unchanged
      }
      if (depth > max_depth) max_depth = depth;
    }
    if (max_depth > kMaxDepth) throw ParseError("expression too deep", 0);
  }

  // Precedence levels used by both the parser and the printer.
  static int precedence(Op op) {
    switch (op) {
      case Op::kAdd:
      case Op::kSub:
        return 1;
      case Op::kMul:
      case Op::kDiv:
        return 2;
      case Op::kNeg:
        return 3;
      case Op::kPow:
        return 4;
      default:
        return 5;
    }
  }

  static std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  }

  std::string print_node(std::uint32_t idx) const {
    const Node& nd = nodes_[idx];
    const int prec = precedence(nd.op);
    switch (nd.op) {
      case Op::kLiteral:
        return nd.value < 0.0 ? "(" + format_double(nd.value) + ")" : format_double(nd.value);
      case Op::kVariable:
        return "x" + std::to_string(nd.var);
      case Op::kNeg:
        return "-" + child(nd.lhs, prec, true);
      case Op::kSin:
        return "sin(" + print_node(nd.lhs) + ")";
      case Op::kCos:
        return "cos(" + print_node(nd.lhs) + ")";
      case Op::kSqrt:
        return "sqrt(" + print_node(nd.lhs) + ")";
      case Op::kExp:
        return "exp(" + print_node(nd.lhs) + ")";
      case Op::kAbs:
        return "abs(" + print_node(nd.lhs) + ")";
      case Op::kAdd:
        return child(nd.lhs, prec, false) + " + " + child(nd.rhs, prec, true);
      case Op::kSub:
        return child(nd.lhs, prec, false) + " - " + child(nd.rhs, prec, true);
      case Op::kMul:
        return child(nd.lhs, prec, false) + "*" + child(nd.rhs, prec, true);
      case Op::kDiv:
        return child(nd.lhs, prec, false) + "/" + child(nd.rhs, prec, true);
      case Op::kPow:
        return child(nd.lhs, prec, true) + "^" + child(nd.rhs, prec - 1, true);
    }
    return {};
  }

  // strict: parenthesize the child when its precedence ties with the parent
  // (right operand of - / and both operands of ^ need this).
  std::string child(std::uint32_t idx, int parent_prec, bool strict) const {
    const int p = precedence(nodes_[idx].op);
    const bool parens = strict ? p <= parent_prec : p < parent_prec;
    std::string s = print_node(idx);
    return parens ? "(" + s + ")" : s;
  }

  struct Parser {
    std::string_view text;
    std::size_t pos = 0;

    void skip_space() {
      while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' ||
                                   text[pos] == '\r'))
        ++pos;
    }

    bool eat(char c) {
      skip_space();
      if (pos < text.size() && text[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    char peek() {
      skip_space();
      return pos < text.size() ? text[pos] : '\0';
    }

    std::uint32_t parse_expression(Expr& e) {
      std::uint32_t lhs = parse_term(e);
      for (;;) {
        if (eat('+'))
          lhs = push_binary(e, Op::kAdd, lhs, parse_term(e));
        else if (eat('-'))
          lhs = push_binary(e, Op::kSub, lhs, parse_term(e));
        else
          return lhs;
      }
    }

    std::uint32_t parse_term(Expr& e) {
      std::uint32_t lhs = parse_unary(e);
      for (;;) {
        if (eat('*'))
          lhs = push_binary(e, Op::kMul, lhs, parse_unary(e));
        else if (eat('/'))
          lhs = push_binary(e, Op::kDiv, lhs, parse_unary(e));
        else
          return lhs;
      }
    }

    std::uint32_t parse_unary(Expr& e) {
      if (eat('-')) {
        std::uint32_t c = parse_unary(e);
        return push_unary(e, Op::kNeg, c);
      }
      return parse_power(e);
    }

    // ^ binds tighter than unary minus and associates to the right; a signed
    // exponent like 2^-3 is accepted.
    std::uint32_t parse_power(Expr& e) {
      std::uint32_t base = parse_atom(e);
      if (eat('^')) {
        std::uint32_t exponent = parse_unary(e);
        return push_binary(e, Op::kPow, base, exponent);
      }
      return base;
    }

    std::uint32_t parse_atom(Expr& e) {
      skip_space();
      if (pos >= text.size()) throw ParseError("unexpected end of input", pos);
      const char c = text[pos];
      if (c == '(') {
        ++pos;
        std::uint32_t inner = parse_expression(e);
        if (!eat(')')) throw ParseError("expected ')'", pos);
        return inner;
      }
      if ((c >= '0' && c <= '9') || c == '.') return parse_number(e);
      if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') return parse_identifier(e);
      throw ParseError(std::string("unexpected character '") + c + "'", pos);
    }

    std::uint32_t parse_number(Expr& e) {
      double value = 0.0;
      auto res = std::from_chars(text.data() + pos, text.data() + text.size(), value);
      if (res.ec != std::errc{} || res.ptr == text.data() + pos)
        throw ParseError("malformed number", pos);
      pos = static_cast<std::size_t>(res.ptr - text.data());
      e.nodes_.push_back(Node{Op::kLiteral, 0, value, 0, 0});
      return static_cast<std::uint32_t>(e.nodes_.size() - 1);
    }

    std::uint32_t parse_identifier(Expr& e) {
      const std::size_t start = pos;
      while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
        ++pos;
      std::string_view name = text.substr(start, pos - start);
      if (peek() == '(') {
        Op op;
        if (name == "sin")
          op = Op::kSin;
        else if (name == "cos")
          op = Op::kCos;
        else if (name == "sqrt")
          op = Op::kSqrt;
        else if (name == "exp")
          op = Op::kExp;
        else if (name == "abs")
          op = Op::kAbs;
        else
          throw ParseError("unknown function '" + std::string(name) + "'", start);
        ++pos;  // '('
        std::uint32_t arg = parse_expression(e);
        if (!eat(')')) throw ParseError("expected ')'", pos);
        return push_unary(e, op, arg);
      }
      if (name.size() >= 2 && name[0] == 'x') {
        int index = 0;
        auto res = std::from_chars(name.data() + 1, name.data() + name.size(), index);
        if (res.ec == std::errc{} && res.ptr == name.data() + name.size()) {
          if (index < 1) throw ParseError("variable index must be >= 1", start);
          e.nodes_.push_back(Node{Op::kVariable, index, 0.0, 0, 0});
          return static_cast<std::uint32_t>(e.nodes_.size() - 1);
        }
      }
      throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }

    static std::uint32_t push_binary(Expr& e, Op op, std::uint32_t lhs, std::uint32_t rhs) {
      e.nodes_.push_back(Node{op, 0, 0.0, lhs, rhs});
      return static_cast<std::uint32_t>(e.nodes_.size() - 1);
    }

    static std::uint32_t push_unary(Expr& e, Op op, std::uint32_t operand) {
      e.nodes_.push_back(Node{op, 0, 0.0, operand, 0});
      return static_cast<std::uint32_t>(e.nodes_.size() - 1);
    }
  };

  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
  int max_var_ = 0;
};

}  // namespace levykm
