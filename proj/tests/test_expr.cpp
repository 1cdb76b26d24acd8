#include <catch2/catch_amalgamated.hpp>

#include <indef/expr.hpp>

#include <cmath>
#include <random>

using namespace indef;

static double eval_at(const Expr& e, double t, std::vector<double> x) {
  EvalEnv env{t, x.data(), int(x.size())};
  return e.eval(env);
}

TEST_CASE("parse: literals and structure", "[expr]") {
  Expr zero = parse_expr("0");
  REQUIRE(zero.kind == Expr::Kind::num);
  REQUIRE(zero.value == 0.0);

  Expr e = parse_expr("5 + 40*tanh(x1^2)");
  REQUIRE(e.to_sexpr() == "(+ 5 (* 40 (tanh (^ x1 2))))");
}

TEST_CASE("parse: errors carry offsets", "[expr]") {
  try {
    parse_expr("sin(");
    FAIL("expected SyntaxError");
  } catch (const Error& err) {
    REQUIRE(err.code == errc::syntax_error);
    REQUIRE(err.detail.at("offset") == "4");
  }
  try {
    parse_expr("2 + foo(3)");
    FAIL("expected UnknownIdentifier");
  } catch (const Error& err) {
    REQUIRE(err.code == errc::unknown_identifier);
    REQUIRE(err.detail.at("identifier") == "foo");
  }
  REQUIRE_THROWS_AS(parse_expr(""), Error);
  REQUIRE_THROWS_AS(parse_expr("1 + * 2"), Error);
  REQUIRE_THROWS_AS(parse_expr("(1 + 2"), Error);
}

TEST_CASE("eval: variables and r", "[expr]") {
  REQUIRE(eval_at(parse_expr("t"), 0.25, {0.0}) == 0.25);
  REQUIRE(eval_at(parse_expr("r"), 0.0, {3.0, 4.0}) == 5.0);
  REQUIRE(eval_at(parse_expr("5 + 40*tanh(x1^2)"), 0.0, {0.0}) == 5.0);
  REQUIRE(eval_at(parse_expr("x2"), 0.0, {1.0, 7.0}) == 7.0);
}

TEST_CASE("eval: precedence", "[expr]") {
  // ^ binds tighter than unary minus: -x^2 = -(x^2)
  REQUIRE(eval_at(parse_expr("-2^2"), 0, {}) == -4.0);
  REQUIRE(eval_at(parse_expr("2^-1"), 0, {}) == 0.5);
  REQUIRE(eval_at(parse_expr("2^3^2"), 0, {}) == 512.0);  // right-assoc
  REQUIRE(eval_at(parse_expr("1 + 2 * 3"), 0, {}) == 7.0);
  REQUIRE(eval_at(parse_expr("6 / 2 / 3"), 0, {}) == 1.0);
  REQUIRE(eval_at(parse_expr("1 - 2 - 3"), 0, {}) == -4.0);
  REQUIRE(eval_at(parse_expr("1.5e2"), 0, {}) == 150.0);
}

TEST_CASE("eval: domain errors name the subexpression", "[expr]") {
  try {
    eval_at(parse_expr("1 + log(t)"), 0.0, {});
    FAIL("expected DomainError");
  } catch (const Error& err) {
    REQUIRE(err.code == errc::domain_error);
    REQUIRE(err.detail.at("subexpression") == "log(t)");
  }
  try {
    eval_at(parse_expr("1/(t - t)"), 0.5, {});
    FAIL("expected DomainError");
  } catch (const Error& err) {
    REQUIRE(err.code == errc::domain_error);
  }
  REQUIRE_THROWS_AS(eval_at(parse_expr("sqrt(-1)"), 0, {}), Error);
  REQUIRE_THROWS_AS(eval_at(parse_expr("(-1)^0.5"), 0, {}), Error);
}

TEST_CASE("round trip: parse . print . parse = parse", "[expr]") {
  std::vector<std::string> corpus = {
      "0",
      "5 + 40*tanh(x1^2)",
      "-50 + tanh(r^2) * (42 - 35*exp(-(x2/0.25)^2))",
      "sin(cos(t)) / (1 + x1^2)",
      "2^-3 + atan(x2) - abs(-t)",
      "sqrt(r) * exp(t) + 1e-3",
  };
  for (const auto& src : corpus) {
    Expr a = parse_expr(src);
    Expr b = parse_expr(a.to_infix());
    REQUIRE(a == b);
  }
}

TEST_CASE("round trip: generated corpus", "[expr]") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_real_distribution<double> num(-5, 5);
  // random tree builder, depth-limited
  std::function<Expr(int)> gen = [&](int depth) -> Expr {
    Expr e;
    if (depth <= 0 || pick(rng) < 3) {
      switch (pick(rng) % 4) {
        case 0: e.kind = Expr::Kind::num; e.value = std::abs(std::round(num(rng) * 8)) / 8; break;
        case 1: e.kind = Expr::Kind::var_t; break;
        case 2: e.kind = Expr::Kind::var_r; break;
        default: e.kind = Expr::Kind::var_x; e.index = 1 + pick(rng) % 3; break;
      }
      return e;
    }
    switch (pick(rng)) {
      case 0: e.kind = Expr::Kind::add; break;
      case 1: e.kind = Expr::Kind::sub; break;
      case 2: e.kind = Expr::Kind::mul; break;
      case 3: e.kind = Expr::Kind::div; break;
      case 4: e.kind = Expr::Kind::pow; break;
      case 5: e.kind = Expr::Kind::neg; e.kids = {gen(depth - 1)}; return e;
      default:
        e.kind = Expr::Kind::fun;
        e.f = ExprFun(pick(rng) % 9);
        e.kids = {gen(depth - 1)};
        return e;
    }
    e.kids = {gen(depth - 1), gen(depth - 1)};
    return e;
  };
  for (int rep = 0; rep < 200; ++rep) {
    Expr a = gen(4);
    Expr b = parse_expr(a.to_infix());
    REQUIRE(a == b);
  }
}

TEST_CASE("eval: deterministic on repeated calls", "[expr]") {
  Expr e = parse_expr("sin(12*t) + tanh(x1*x2) - r^3");
  double v1 = eval_at(e, 0.77, {1.1, -0.3});
  double v2 = eval_at(e, 0.77, {1.1, -0.3});
  REQUIRE(v1 == v2);
}

TEST_CASE("structure helpers", "[expr]") {
  REQUIRE(parse_expr("5").is_constant());
  REQUIRE(parse_expr("sin(3)^2").is_constant());
  REQUIRE(!parse_expr("t").is_constant());
  REQUIRE(parse_expr("x3 + x1").max_x_index() == 3);
  REQUIRE(parse_expr("r").depends_on_x());
  REQUIRE(parse_expr("2*t").depends_on_t());
}
