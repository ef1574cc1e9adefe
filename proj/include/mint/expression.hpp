#pragma once

// Scalar expressions over a fixed ordered variable list: immutable shared AST,
// recursive-descent parser, numeric evaluation, symbolic differentiation.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mint {

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " (byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

class EvalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using VariableList = std::vector<std::string>;
using VariableListPtr = std::shared_ptr<const VariableList>;

inline VariableListPtr make_variables(std::vector<std::string> names) {
  return std::make_shared<const VariableList>(std::move(names));
}

/// Chart coordinates x1..xd.
inline VariableListPtr chart_variables(int d) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(d));
  for (int i = 1; i <= d; ++i) names.push_back("x" + std::to_string(i));
  return make_variables(std::move(names));
}

/// Cube coordinates t1..tn, optionally followed by a family parameter u.
inline VariableListPtr cube_variables(int n, bool with_parameter = false) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n) + (with_parameter ? 1u : 0u));
  for (int i = 1; i <= n; ++i) names.push_back("t" + std::to_string(i));
  if (with_parameter) names.push_back("u");
  return make_variables(std::move(names));
}

namespace detail {

enum class ExprOp {
  constant,
  variable,
  add,
  sub,
  mul,
  div,
  pow,  // integer exponent
  neg,
  sin_fn,
  cos_fn,
  exp_fn,
  log_fn
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprOp op;
  double value = 0.0;  // constant
  int var = -1;        // variable index
  int exponent = 0;    // pow
  ExprPtr a, b;
};

inline ExprPtr make_node(ExprNode n) {
  return std::make_shared<const ExprNode>(std::move(n));
}

inline ExprPtr make_constant(double v) {
  ExprNode n;
  n.op = ExprOp::constant;
  n.value = v;
  return make_node(std::move(n));
}

inline bool is_const(const ExprPtr& e, double v) {
  return e->op == ExprOp::constant && e->value == v;
}

inline ExprPtr make_neg(const ExprPtr& a);

inline ExprPtr make_add(const ExprPtr& a, const ExprPtr& b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  if (a->op == ExprOp::constant && b->op == ExprOp::constant)
    return make_constant(a->value + b->value);
  ExprNode n;
  n.op = ExprOp::add;
  n.a = a;
  n.b = b;
  return make_node(std::move(n));
}

inline ExprPtr make_sub(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return make_constant(0.0);  // same node, difference vanishes
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return make_neg(b);
  if (a->op == ExprOp::constant && b->op == ExprOp::constant)
    return make_constant(a->value - b->value);
  ExprNode n;
  n.op = ExprOp::sub;
  n.a = a;
  n.b = b;
  return make_node(std::move(n));
}

inline ExprPtr make_mul(const ExprPtr& a, const ExprPtr& b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (a->op == ExprOp::constant && b->op == ExprOp::constant)
    return make_constant(a->value * b->value);
  ExprNode n;
  n.op = ExprOp::mul;
  n.a = a;
  n.b = b;
  return make_node(std::move(n));
}

inline ExprPtr make_div(const ExprPtr& a, const ExprPtr& b) {
  if (is_const(a, 0.0)) return make_constant(0.0);
  if (is_const(b, 1.0)) return a;
  if (a->op == ExprOp::constant && b->op == ExprOp::constant && b->value != 0.0)
    return make_constant(a->value / b->value);
  ExprNode n;
  n.op = ExprOp::div;
  n.a = a;
  n.b = b;
  return make_node(std::move(n));
}

inline ExprPtr make_neg(const ExprPtr& a) {
  if (a->op == ExprOp::constant) return make_constant(-a->value);
  if (a->op == ExprOp::neg) return a->a;
  ExprNode n;
  n.op = ExprOp::neg;
  n.a = a;
  return make_node(std::move(n));
}

inline double int_pow(double base, int e) {
  if (e < 0) {
    if (base == 0.0) throw EvalError("zero raised to a negative power");
    return 1.0 / int_pow(base, -e);
  }
  double r = 1.0, b = base;
  for (int k = e; k > 0; k >>= 1) {
    if (k & 1) r *= b;
    b *= b;
  }
  return r;
}

inline ExprPtr make_pow(const ExprPtr& a, int e) {
  if (e == 0) return make_constant(1.0);
  if (e == 1) return a;
  if (a->op == ExprOp::constant && (a->value != 0.0 || e > 0))
    return make_constant(int_pow(a->value, e));
  ExprNode n;
  n.op = ExprOp::pow;
  n.a = a;
  n.exponent = e;
  return make_node(std::move(n));
}

inline ExprPtr make_fn(ExprOp op, const ExprPtr& a) {
  if (a->op == ExprOp::constant) {
    switch (op) {
      case ExprOp::sin_fn:
        return make_constant(std::sin(a->value));
      case ExprOp::cos_fn:
        return make_constant(std::cos(a->value));
      case ExprOp::exp_fn:
        return make_constant(std::exp(a->value));
      case ExprOp::log_fn:
        if (a->value > 0.0) return make_constant(std::log(a->value));
        break;
      default:
        break;
    }
  }
  ExprNode n;
  n.op = op;
  n.a = a;
  return make_node(std::move(n));
}

}  // namespace detail

class Expression;
Expression parse_expression(std::string_view source, VariableListPtr vars);

class Expression {
public:
  /// Default: the constant 0 (attachable to any variable list).
  Expression() : node_(detail::make_constant(0.0)) {}

  static Expression constant(double v, VariableListPtr vars = nullptr) {
    return Expression(detail::make_constant(v), std::move(vars));
  }

  static Expression variable(int index, VariableListPtr vars) {
    if (!vars || index < 0 || index >= static_cast<int>(vars->size()))
      throw std::invalid_argument("variable index out of range");
    detail::ExprNode n;
    n.op = detail::ExprOp::variable;
    n.var = index;
    return Expression(detail::make_node(std::move(n)), std::move(vars));
  }

  static Expression variable(const std::string& name, VariableListPtr vars) {
    if (!vars) throw std::invalid_argument("variable requires a variable list");
    for (std::size_t i = 0; i < vars->size(); ++i)
      if ((*vars)[i] == name)
        return variable(static_cast<int>(i), std::move(vars));
    throw std::invalid_argument("unknown variable '" + name + "'");
  }

  const VariableListPtr& variables() const { return vars_; }

  bool is_constant() const {
    return node_->op == detail::ExprOp::constant;
  }
  double constant_value() const {
    if (!is_constant()) throw std::logic_error("not a constant expression");
    return node_->value;
  }
  bool is_zero() const { return is_constant() && node_->value == 0.0; }
  bool is_one() const { return is_constant() && node_->value == 1.0; }

  double evaluate(std::span<const double> point) const {
    if (vars_ && point.size() < vars_->size())
      throw std::invalid_argument("evaluation point has too few coordinates");
    return eval_node(*node_, point);
  }

  Expression differentiate(int var) const {
    return Expression(diff_node(node_, var), vars_);
  }

  Expression differentiate(const std::string& name) const {
    if (!vars_) throw std::invalid_argument("expression has no variable list");
    for (std::size_t i = 0; i < vars_->size(); ++i)
      if ((*vars_)[i] == name) return differentiate(static_cast<int>(i));
    throw std::invalid_argument("unknown variable '" + name + "'");
  }

  /// Replace every variable i by replacements[i] (all over new_vars).
  Expression substitute(const std::vector<Expression>& replacements,
                        VariableListPtr new_vars) const {
    if (vars_ && replacements.size() < vars_->size())
      throw std::invalid_argument("substitute: too few replacement expressions");
    return Expression(subst_node(node_, replacements), std::move(new_vars));
  }

  std::string to_string() const {
    std::string out;
    print_node(*node_, 0, out);
    return resolve_names(out);
  }

  friend Expression operator+(const Expression& a, const Expression& b) {
    return Expression(detail::make_add(a.node_, b.node_), merged(a, b));
  }
  friend Expression operator-(const Expression& a, const Expression& b) {
    return Expression(detail::make_sub(a.node_, b.node_), merged(a, b));
  }
  friend Expression operator*(const Expression& a, const Expression& b) {
    return Expression(detail::make_mul(a.node_, b.node_), merged(a, b));
  }
  friend Expression operator/(const Expression& a, const Expression& b) {
    return Expression(detail::make_div(a.node_, b.node_), merged(a, b));
  }
  friend Expression operator-(const Expression& a) {
    return Expression(detail::make_neg(a.node_), a.vars_);
  }
  friend Expression pow(const Expression& a, int e) {
    return Expression(detail::make_pow(a.node_, e), a.vars_);
  }
  friend Expression sin(const Expression& a) {
    return Expression(detail::make_fn(detail::ExprOp::sin_fn, a.node_), a.vars_);
  }
  friend Expression cos(const Expression& a) {
    return Expression(detail::make_fn(detail::ExprOp::cos_fn, a.node_), a.vars_);
  }
  friend Expression exp(const Expression& a) {
    return Expression(detail::make_fn(detail::ExprOp::exp_fn, a.node_), a.vars_);
  }
  friend Expression log(const Expression& a) {
    return Expression(detail::make_fn(detail::ExprOp::log_fn, a.node_), a.vars_);
  }

  friend Expression parse_expression(std::string_view, VariableListPtr);

private:
  Expression(detail::ExprPtr node, VariableListPtr vars)
      : node_(std::move(node)), vars_(std::move(vars)) {}

  static VariableListPtr merged(const Expression& a, const Expression& b) {
    if (!a.vars_) return b.vars_;
    if (!b.vars_ || a.vars_ == b.vars_) return a.vars_;
    if (*a.vars_ != *b.vars_)
      throw std::invalid_argument("expressions over different variable lists");
    return a.vars_;
  }

  static double eval_node(const detail::ExprNode& n, std::span<const double> p) {
    using detail::ExprOp;
    switch (n.op) {
      case ExprOp::constant:
        return n.value;
      case ExprOp::variable:
        return p[static_cast<std::size_t>(n.var)];
      case ExprOp::add:
        return eval_node(*n.a, p) + eval_node(*n.b, p);
      case ExprOp::sub:
        return eval_node(*n.a, p) - eval_node(*n.b, p);
      case ExprOp::mul:
        return eval_node(*n.a, p) * eval_node(*n.b, p);
      case ExprOp::div: {
        double d = eval_node(*n.b, p);
        if (d == 0.0) throw EvalError("division by zero");
        return eval_node(*n.a, p) / d;
      }
      case ExprOp::pow:
        return detail::int_pow(eval_node(*n.a, p), n.exponent);
      case ExprOp::neg:
        return -eval_node(*n.a, p);
      case ExprOp::sin_fn:
        return std::sin(eval_node(*n.a, p));
      case ExprOp::cos_fn:
        return std::cos(eval_node(*n.a, p));
      case ExprOp::exp_fn:
        return std::exp(eval_node(*n.a, p));
      case ExprOp::log_fn: {
        double v = eval_node(*n.a, p);
        if (v <= 0.0) throw EvalError("log of a non-positive value");
        return std::log(v);
      }
    }
    throw std::logic_error("unreachable expression op");
  }

  static detail::ExprPtr diff_node(const detail::ExprPtr& e, int var) {
    using namespace detail;
    switch (e->op) {
      case ExprOp::constant:
        return make_constant(0.0);
      case ExprOp::variable:
        return make_constant(e->var == var ? 1.0 : 0.0);
      case ExprOp::add:
        return make_add(diff_node(e->a, var), diff_node(e->b, var));
      case ExprOp::sub:
        return make_sub(diff_node(e->a, var), diff_node(e->b, var));
      case ExprOp::mul:
        return make_add(make_mul(diff_node(e->a, var), e->b),
                        make_mul(e->a, diff_node(e->b, var)));
      case ExprOp::div:
        return make_div(make_sub(make_mul(diff_node(e->a, var), e->b),
                                 make_mul(e->a, diff_node(e->b, var))),
                        make_pow(e->b, 2));
      case ExprOp::pow:
        return make_mul(
            make_mul(make_constant(static_cast<double>(e->exponent)),
                     make_pow(e->a, e->exponent - 1)),
            diff_node(e->a, var));
      case ExprOp::neg:
        return make_neg(diff_node(e->a, var));
      case ExprOp::sin_fn:
        return make_mul(make_fn(ExprOp::cos_fn, e->a), diff_node(e->a, var));
      case ExprOp::cos_fn:
        return make_neg(
            make_mul(make_fn(ExprOp::sin_fn, e->a), diff_node(e->a, var)));
      case ExprOp::exp_fn:
        return make_mul(make_fn(ExprOp::exp_fn, e->a), diff_node(e->a, var));
      case ExprOp::log_fn:
        return make_div(diff_node(e->a, var), e->a);
    }
    throw std::logic_error("unreachable expression op");
  }

  static detail::ExprPtr subst_node(const detail::ExprPtr& e,
                                    const std::vector<Expression>& repl) {
    using namespace detail;
    switch (e->op) {
      case ExprOp::constant:
        return e;
      case ExprOp::variable:
        return repl[static_cast<std::size_t>(e->var)].node_;
      case ExprOp::add:
        return make_add(subst_node(e->a, repl), subst_node(e->b, repl));
      case ExprOp::sub:
        return make_sub(subst_node(e->a, repl), subst_node(e->b, repl));
      case ExprOp::mul:
        return make_mul(subst_node(e->a, repl), subst_node(e->b, repl));
      case ExprOp::div:
        return make_div(subst_node(e->a, repl), subst_node(e->b, repl));
      case ExprOp::pow:
        return make_pow(subst_node(e->a, repl), e->exponent);
      case ExprOp::neg:
        return make_neg(subst_node(e->a, repl));
      default:
        return make_fn(e->op, subst_node(e->a, repl));
    }
  }

  // Precedence for printing: add/sub 1, mul/div 2, neg 3, pow 4, atoms 5.
  static int node_prec(const detail::ExprNode& n) {
    using detail::ExprOp;
    switch (n.op) {
      case ExprOp::add:
      case ExprOp::sub:
        return 1;
      case ExprOp::mul:
      case ExprOp::div:
        return 2;
      case ExprOp::neg:
        return 3;
      case ExprOp::pow:
        return 4;
      case ExprOp::constant:
        return n.value < 0.0 ? 3 : 5;  // negative literals print with a sign
      default:
        return 5;
    }
  }

  static void print_number(double v, std::string& out) {
    if (v == static_cast<long long>(v) && std::abs(v) < 1e15) {
      out += std::to_string(static_cast<long long>(v));
      return;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
  }

  static void print_child(const detail::ExprNode& c, int min_prec,
                          std::string& out) {
    bool parens = node_prec(c) < min_prec;
    if (parens) out += '(';
    print_node(c, 0, out);
    if (parens) out += ')';
  }

  static void print_node(const detail::ExprNode& n, int, std::string& out) {
    using detail::ExprOp;
    switch (n.op) {
      case ExprOp::constant:
        print_number(n.value, out);
        return;
      case ExprOp::variable:
        out += "v" + std::to_string(n.var);  // resolve_names maps to the list
        return;
      default:
        break;
    }
    switch (n.op) {
      case ExprOp::add:
        print_child(*n.a, 1, out);
        out += '+';
        print_child(*n.b, 2, out);
        return;
      case ExprOp::sub:
        print_child(*n.a, 1, out);
        out += '-';
        print_child(*n.b, 2, out);
        return;
      case ExprOp::mul:
        print_child(*n.a, 2, out);
        out += '*';
        print_child(*n.b, 3, out);
        return;
      case ExprOp::div:
        print_child(*n.a, 2, out);
        out += '/';
        print_child(*n.b, 3, out);
        return;
      case ExprOp::neg:
        out += '-';
        print_child(*n.a, 4, out);
        return;
      case ExprOp::pow:
        print_child(*n.a, 5, out);
        out += '^';
        if (n.exponent < 0) out += '-';
        out += std::to_string(n.exponent < 0 ? -n.exponent : n.exponent);
        return;
      case ExprOp::sin_fn:
      case ExprOp::cos_fn:
      case ExprOp::exp_fn:
      case ExprOp::log_fn: {
        const char* name = n.op == ExprOp::sin_fn   ? "sin"
                           : n.op == ExprOp::cos_fn ? "cos"
                           : n.op == ExprOp::exp_fn ? "exp"
                                                    : "log";
        out += name;
        out += '(';
        print_node(*n.a, 0, out);
        out += ')';
        return;
      }
      default:
        throw std::logic_error("unreachable expression op");
    }
  }

  // replace v<k> tokens by names (tokens never collide: the parser only
  // produces names from the list, and boundaries are re-tokenized here)
  std::string resolve_names(const std::string& raw) const {
    if (!vars_) return raw;
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size();) {
      if (raw[i] == 'v' && i + 1 < raw.size() &&
          std::isdigit(static_cast<unsigned char>(raw[i + 1])) &&
          (i == 0 || !std::isalnum(static_cast<unsigned char>(raw[i - 1])))) {
        std::size_t j = i + 1;
        while (j < raw.size() &&
               std::isdigit(static_cast<unsigned char>(raw[j])))
          ++j;
        int idx = std::stoi(raw.substr(i + 1, j - i - 1));
        out += (*vars_)[static_cast<std::size_t>(idx)];
        i = j;
      } else {
        out += raw[i++];
      }
    }
    return out;
  }

  detail::ExprPtr node_;
  VariableListPtr vars_;

  friend struct ExpressionPrinter;
};

struct ExpressionPrinter {
  static std::string print(const Expression& e) { return e.to_string(); }
};

inline std::string to_string(const Expression& e) {
  return ExpressionPrinter::print(e);
}

namespace detail {

struct Token {
  enum Kind { number, ident, plus, minus, star, slash, caret, lparen, rparen, end };
  Kind kind;
  std::size_t offset;
  double num = 0.0;
  bool integral = false;
  std::string text;
};

class Tokenizer {
public:
  explicit Tokenizer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

private:
  void advance() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    tok_ = Token{};
    tok_.offset = pos_;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::end;
      return;
    }
    char c = src_[pos_];
    switch (c) {
      case '+': tok_.kind = Token::plus; ++pos_; return;
      case '-': tok_.kind = Token::minus; ++pos_; return;
      case '*': tok_.kind = Token::star; ++pos_; return;
      case '/': tok_.kind = Token::slash; ++pos_; return;
      case '^': tok_.kind = Token::caret; ++pos_; return;
      case '(': tok_.kind = Token::lparen; ++pos_; return;
      case ')': tok_.kind = Token::rparen; ++pos_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      bool integral = true;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        ++pos_;
      if (pos_ < src_.size() && src_[pos_] == '.') {
        integral = false;
        ++pos_;
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        std::size_t mark = pos_;
        ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
          ++pos_;
        if (pos_ < src_.size() &&
            std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          integral = false;
          while (pos_ < src_.size() &&
                 std::isdigit(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        } else {
          pos_ = mark;  // 'e' belongs to an identifier-like tail; stop number
        }
      }
      tok_.kind = Token::number;
      tok_.text = std::string(src_.substr(start, pos_ - start));
      if (tok_.text == ".")
        throw ParseError("malformed number", start);
      tok_.num = std::stod(tok_.text);
      tok_.integral = integral;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::ident;
      tok_.text = std::string(src_.substr(start, pos_ - start));
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_;
};

}  // namespace detail

/// Grammar: sum := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
/// unary := '-' unary | power; power := atom ('^' ['-'] integer)*;
/// atom := number | name | fn '(' sum ')' | '(' sum ')'.
/// Exponents must be integer literals.
inline Expression parse_expression(std::string_view source,
                                   VariableListPtr vars) {
  using detail::Token;
  detail::Tokenizer tz(source);

  struct Parser {
    detail::Tokenizer& tz;
    const VariableList* vars;

    int find_var(const std::string& name, std::size_t off) const {
      if (vars)
        for (std::size_t i = 0; i < vars->size(); ++i)
          if ((*vars)[i] == name) return static_cast<int>(i);
      throw ParseError("undeclared variable '" + name + "'", off);
    }

    detail::ExprPtr sum() {
      detail::ExprPtr e = term();
      while (tz.peek().kind == Token::plus || tz.peek().kind == Token::minus) {
        bool plus = tz.next().kind == Token::plus;
        detail::ExprPtr r = term();
        e = plus ? detail::make_add(e, r) : detail::make_sub(e, r);
      }
      return e;
    }

    detail::ExprPtr term() {
      detail::ExprPtr e = unary();
      while (tz.peek().kind == Token::star || tz.peek().kind == Token::slash) {
        bool mul = tz.next().kind == Token::star;
        detail::ExprPtr r = unary();
        e = mul ? detail::make_mul(e, r) : detail::make_div(e, r);
      }
      return e;
    }

    detail::ExprPtr unary() {
      if (tz.peek().kind == Token::minus) {
        tz.next();
        return detail::make_neg(unary());
      }
      return power();
    }

    detail::ExprPtr power() {
      detail::ExprPtr e = atom();
      while (tz.peek().kind == Token::caret) {
        tz.next();
        bool negative = false;
        if (tz.peek().kind == Token::minus) {
          negative = true;
          tz.next();
        }
        Token t = tz.next();
        if (t.kind != Token::number || !t.integral)
          throw ParseError("exponent must be an integer literal", t.offset);
        int e_int = static_cast<int>(t.num);
        e = detail::make_pow(e, negative ? -e_int : e_int);
      }
      return e;
    }

    detail::ExprPtr atom() {
      Token t = tz.next();
      switch (t.kind) {
        case Token::number:
          return detail::make_constant(t.num);
        case Token::lparen: {
          detail::ExprPtr e = sum();
          Token close = tz.next();
          if (close.kind != Token::rparen)
            throw ParseError("expected ')'", close.offset);
          return e;
        }
        case Token::ident: {
          if (t.text == "sin" || t.text == "cos" || t.text == "exp" ||
              t.text == "log") {
            Token open = tz.next();
            if (open.kind != Token::lparen)
              throw ParseError("expected '(' after function name", open.offset);
            detail::ExprPtr arg = sum();
            Token close = tz.next();
            if (close.kind != Token::rparen)
              throw ParseError("expected ')'", close.offset);
            using detail::ExprOp;
            ExprOp op = t.text == "sin"   ? ExprOp::sin_fn
                        : t.text == "cos" ? ExprOp::cos_fn
                        : t.text == "exp" ? ExprOp::exp_fn
                                          : ExprOp::log_fn;
            return detail::make_fn(op, arg);
          }
          int idx = find_var(t.text, t.offset);
          detail::ExprNode n;
          n.op = detail::ExprOp::variable;
          n.var = idx;
          return detail::make_node(std::move(n));
        }
        case Token::end:
          throw ParseError("unexpected end of expression", t.offset);
        default:
          throw ParseError("unexpected token", t.offset);
      }
    }
  };

  Parser p{tz, vars ? vars.get() : nullptr};
  detail::ExprPtr e = p.sum();
  if (tz.peek().kind != Token::end)
    throw ParseError("unexpected trailing input", tz.peek().offset);
  return Expression(std::move(e), std::move(vars));
}

}  // namespace mint
