#pragma once
// Recursive-descent parser and evaluator for problem-file expressions.
//
// Grammar (EBNF, also documented in the README):
//   expr   := term { ('+' | '-') term }
//   term   := unary { ('*' | '/') unary }
//   unary  := '-' unary | power
//   power  := atom [ '^' unary ]            (right-associative)
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//   ident  := 't' | 'r' | 'x'<digits> | function name
// Functions: sin cos tan exp log sqrt abs tanh atan.
// 'r' evaluates to |x| (Euclidean norm). Precedence: ^ > unary- > */ > +-.

#include <indef/error.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace indef {

enum class ExprFun { sin, cos, tan, exp, log, sqrt, abs, tanh, atan };

inline const char* fun_name(ExprFun f) {
  switch (f) {
    case ExprFun::sin: return "sin";
    case ExprFun::cos: return "cos";
    case ExprFun::tan: return "tan";
    case ExprFun::exp: return "exp";
    case ExprFun::log: return "log";
    case ExprFun::sqrt: return "sqrt";
    case ExprFun::abs: return "abs";
    case ExprFun::tanh: return "tanh";
    case ExprFun::atan: return "atan";
  }
  return "?";
}

struct EvalEnv {
  double t = 0;
  const double* x = nullptr;
  int n = 0;
};

struct Expr {
  enum class Kind { num, var_t, var_r, var_x, add, sub, mul, div, neg, pow, fun };
  Kind kind = Kind::num;
  double value = 0;   // num
  int index = 0;      // var_x: 1-based
  ExprFun f = ExprFun::sin;
  std::vector<Expr> kids;

  bool operator==(const Expr& o) const {
    return kind == o.kind && value == o.value && index == o.index &&
           (kind != Kind::fun || f == o.f) && kids == o.kids;
  }

  int max_x_index() const {
    int m = kind == Kind::var_x ? index : 0;
    for (const auto& k : kids) m = std::max(m, k.max_x_index());
    return m;
  }

  bool depends_on_x() const {
    if (kind == Kind::var_x || kind == Kind::var_r) return true;
    for (const auto& k : kids)
      if (k.depends_on_x()) return true;
    return false;
  }
  bool depends_on_t() const {
    if (kind == Kind::var_t) return true;
    for (const auto& k : kids)
      if (k.depends_on_t()) return true;
    return false;
  }
  bool is_constant() const { return !depends_on_x() && !depends_on_t(); }

  std::string to_infix() const {
    std::ostringstream os;
    print_infix(os);
    return os.str();
  }
  std::string to_sexpr() const {
    std::ostringstream os;
    print_sexpr(os);
    return os.str();
  }

  double eval(const EvalEnv& env) const {
    double v = eval_raw(env);
    if (!std::isfinite(v))
      throw Error(errc::domain_error, "expression evaluated to a non-finite value")
          .with("subexpression", to_infix());
    return v;
  }

 private:
  double eval_raw(const EvalEnv& env) const {
    switch (kind) {
      case Kind::num: return value;
      case Kind::var_t: return env.t;
      case Kind::var_r: {
        double s = 0;
        for (int i = 0; i < env.n; ++i) s += env.x[i] * env.x[i];
        return std::sqrt(s);
      }
      case Kind::var_x:
        if (index < 1 || index > env.n)
          throw Error(errc::unknown_identifier, "variable index out of range")
              .with("identifier", "x" + std::to_string(index));
        return env.x[index - 1];
      case Kind::add: return kids[0].eval_raw(env) + kids[1].eval_raw(env);
      case Kind::sub: return kids[0].eval_raw(env) - kids[1].eval_raw(env);
      case Kind::mul: return kids[0].eval_raw(env) * kids[1].eval_raw(env);
      case Kind::div: {
        double den = kids[1].eval_raw(env);
        if (den == 0)
          throw Error(errc::domain_error, "division by zero")
              .with("subexpression", to_infix());
        return kids[0].eval_raw(env) / den;
      }
      case Kind::neg: return -kids[0].eval_raw(env);
      case Kind::pow: {
        double b = kids[0].eval_raw(env), e = kids[1].eval_raw(env);
        double v = std::pow(b, e);
        if (!std::isfinite(v))
          throw Error(errc::domain_error, "power out of domain")
              .with("subexpression", to_infix());
        return v;
      }
      case Kind::fun: {
        double a = kids[0].eval_raw(env);
        switch (f) {
          case ExprFun::sin: return std::sin(a);
          case ExprFun::cos: return std::cos(a);
          case ExprFun::tan: return std::tan(a);
          case ExprFun::exp: return std::exp(a);
          case ExprFun::log:
            if (a <= 0)
              throw Error(errc::domain_error, "log of non-positive value")
                  .with("subexpression", to_infix());
            return std::log(a);
          case ExprFun::sqrt:
            if (a < 0)
              throw Error(errc::domain_error, "sqrt of negative value")
                  .with("subexpression", to_infix());
            return std::sqrt(a);
          case ExprFun::abs: return std::abs(a);
          case ExprFun::tanh: return std::tanh(a);
          case ExprFun::atan: return std::atan(a);
        }
        return 0;
      }
    }
    return 0;
  }

  void print_infix(std::ostringstream& os) const {
    switch (kind) {
      case Kind::num: {
        std::ostringstream tmp;
        tmp.precision(17);
        tmp << value;
        os << tmp.str();
        break;
      }
      case Kind::var_t: os << "t"; break;
      case Kind::var_r: os << "r"; break;
      case Kind::var_x: os << "x" << index; break;
      case Kind::add: os << "("; kids[0].print_infix(os); os << " + "; kids[1].print_infix(os); os << ")"; break;
      case Kind::sub: os << "("; kids[0].print_infix(os); os << " - "; kids[1].print_infix(os); os << ")"; break;
      case Kind::mul: os << "("; kids[0].print_infix(os); os << " * "; kids[1].print_infix(os); os << ")"; break;
      case Kind::div: os << "("; kids[0].print_infix(os); os << " / "; kids[1].print_infix(os); os << ")"; break;
      case Kind::neg: os << "(-"; kids[0].print_infix(os); os << ")"; break;
      case Kind::pow: os << "("; kids[0].print_infix(os); os << " ^ "; kids[1].print_infix(os); os << ")"; break;
      case Kind::fun: os << fun_name(f) << "("; kids[0].print_infix(os); os << ")"; break;
    }
  }

  void print_sexpr(std::ostringstream& os) const {
    switch (kind) {
      case Kind::num: {
        std::ostringstream tmp;
        tmp.precision(17);
        tmp << value;
        os << tmp.str();
        break;
      }
      case Kind::var_t: os << "t"; break;
      case Kind::var_r: os << "r"; break;
      case Kind::var_x: os << "x" << index; break;
      case Kind::add: os << "(+ "; kids[0].print_sexpr(os); os << " "; kids[1].print_sexpr(os); os << ")"; break;
      case Kind::sub: os << "(- "; kids[0].print_sexpr(os); os << " "; kids[1].print_sexpr(os); os << ")"; break;
      case Kind::mul: os << "(* "; kids[0].print_sexpr(os); os << " "; kids[1].print_sexpr(os); os << ")"; break;
      case Kind::div: os << "(/ "; kids[0].print_sexpr(os); os << " "; kids[1].print_sexpr(os); os << ")"; break;
      case Kind::neg: os << "(- "; kids[0].print_sexpr(os); os << ")"; break;
      case Kind::pow: os << "(^ "; kids[0].print_sexpr(os); os << " "; kids[1].print_sexpr(os); os << ")"; break;
      case Kind::fun: os << "(" << fun_name(f) << " "; kids[0].print_sexpr(os); os << ")"; break;
    }
  }
};

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(const std::string& src) : src_(src) {}

  Expr run() {
    skip_ws();
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size())
      syntax_error("end of input", pos_);
    return e;
  }

 private:
  const std::string& src_;
  size_t pos_ = 0;

  [[noreturn]] void syntax_error(const std::string& expected, size_t at) {
    throw Error(errc::syntax_error,
                "syntax error at offset " + std::to_string(at) + ": expected " + expected)
        .with("offset", (long long)at)
        .with("expected", expected);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace((unsigned char)src_[pos_])) ++pos_;
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }
  bool accept(char c) {
    if (peek(c)) { ++pos_; return true; }
    return false;
  }

  Expr parse_expr() {
    Expr e = parse_term();
    for (;;) {
      if (accept('+')) {
        Expr rhs = parse_term();
        Expr out; out.kind = Expr::Kind::add; out.kids = {std::move(e), std::move(rhs)};
        e = std::move(out);
      } else if (accept('-')) {
        Expr rhs = parse_term();
        Expr out; out.kind = Expr::Kind::sub; out.kids = {std::move(e), std::move(rhs)};
        e = std::move(out);
      } else {
        return e;
      }
    }
  }

  Expr parse_term() {
    Expr e = parse_unary();
    for (;;) {
      if (accept('*')) {
        Expr rhs = parse_unary();
        Expr out; out.kind = Expr::Kind::mul; out.kids = {std::move(e), std::move(rhs)};
        e = std::move(out);
      } else if (accept('/')) {
        Expr rhs = parse_unary();
        Expr out; out.kind = Expr::Kind::div; out.kids = {std::move(e), std::move(rhs)};
        e = std::move(out);
      } else {
        return e;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) {
      Expr inner = parse_unary();
      Expr out; out.kind = Expr::Kind::neg; out.kids = {std::move(inner)};
      return out;
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (accept('^')) {
      Expr exp = parse_unary();
      Expr out; out.kind = Expr::Kind::pow; out.kids = {std::move(base), std::move(exp)};
      return out;
    }
    return base;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) syntax_error("expression", pos_);
    char c = src_[pos_];
    if (std::isdigit((unsigned char)c) || c == '.') return parse_number();
    if (std::isalpha((unsigned char)c) || c == '_') return parse_ident();
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      skip_ws();
      if (!accept(')')) syntax_error("')'", pos_);
      return e;
    }
    syntax_error("expression", pos_);
  }

  Expr parse_number() {
    const char* begin = src_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) syntax_error("number", pos_);
    pos_ += size_t(end - begin);
    Expr e; e.kind = Expr::Kind::num; e.value = v;
    return e;
  }

  Expr parse_ident() {
    size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_'))
      ++pos_;
    std::string name = src_.substr(start, pos_ - start);

    if (name == "t") { Expr e; e.kind = Expr::Kind::var_t; return e; }
    if (name == "r") { Expr e; e.kind = Expr::Kind::var_r; return e; }
    if (name.size() >= 2 && name[0] == 'x') {
      bool digits = true;
      for (size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit((unsigned char)name[i])) { digits = false; break; }
      if (digits && name[1] != '0') {
        Expr e; e.kind = Expr::Kind::var_x; e.index = std::atoi(name.c_str() + 1);
        return e;
      }
    }

    static const std::pair<const char*, ExprFun> funs[] = {
        {"sin", ExprFun::sin}, {"cos", ExprFun::cos},   {"tan", ExprFun::tan},
        {"exp", ExprFun::exp}, {"log", ExprFun::log},   {"sqrt", ExprFun::sqrt},
        {"abs", ExprFun::abs}, {"tanh", ExprFun::tanh}, {"atan", ExprFun::atan}};
    for (auto& [fname, fid] : funs) {
      if (name == fname) {
        skip_ws();
        if (!accept('(')) syntax_error("'(' after function name", pos_);
        Expr arg = parse_expr();
        skip_ws();
        if (!accept(')')) syntax_error("')'", pos_);
        Expr e; e.kind = Expr::Kind::fun; e.f = fid; e.kids = {std::move(arg)};
        return e;
      }
    }
    throw Error(errc::unknown_identifier, "unknown identifier '" + name + "'")
        .with("identifier", name)
        .with("offset", (long long)start);
  }
};

}  // namespace detail

inline Expr parse_expr(const std::string& src) {
  return detail::ExprParser(src).run();
}

}  // namespace indef
