#include "glue/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include <unsupported/Eigen/AutoDiff>

#include "glue/error.hpp"

namespace glue {

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };

struct Expression::Node {
  Op op = Op::Const;
  double value = 0.0;
  int var = 0;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
public:
  Parser(const std::string& s, const std::vector<std::string>& vars) : s_(s), vars_(vars) {}

  NodePtr parse() {
    NodePtr n = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return n;
  }

private:
  [[noreturn]] void fail(const std::string& what) const {
    throw InputError("expression \"" + s_ + "\": " + what + " at position " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr sum() {
    NodePtr n = product();
    for (;;) {
      if (eat('+')) n = make(Op::Add, n, product());
      else if (eat('-')) n = make(Op::Sub, n, product());
      else return n;
    }
  }

  NodePtr product() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*')) n = make(Op::Mul, n, unary());
      else if (eat('/')) n = make(Op::Div, n, unary());
      else return n;
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Op::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }

  // right associative, binds tighter than unary minus on its left: -x^2 = -(x^2)
  NodePtr power() {
    NodePtr n = atom();
    if (eat('^')) return make(Op::Pow, n, unary());
    return n;
  }

  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = sum();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Expression::Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string name = s_.substr(start, pos_ - start);
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == name) {
          auto n = std::make_shared<Expression::Node>();
          n->op = Op::Var;
          n->var = static_cast<int>(i);
          return n;
        }
      }
      if (name == "pi" || name == "e") {
        auto n = std::make_shared<Expression::Node>();
        n->value = name == "pi" ? std::numbers::pi : std::numbers::e;
        return n;
      }
      Op op;
      if (name == "sin") op = Op::Sin;
      else if (name == "cos") op = Op::Cos;
      else if (name == "exp") op = Op::Exp;
      else if (name == "pow") op = Op::Pow;
      else {
        pos_ = start;
        fail("unknown identifier '" + name + "'");
      }
      if (!eat('(')) fail("expected '(' after " + name);
      NodePtr a = sum();
      NodePtr b;
      if (op == Op::Pow) {
        if (!eat(',')) fail("pow takes two arguments");
        b = sum();
      }
      if (!eat(')')) fail("expected ')'");
      return make(op, a, b);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

double real_pow(double a, double b) { return std::pow(a, b); }

template <class D>
Eigen::AutoDiffScalar<D> real_pow(const Eigen::AutoDiffScalar<D>& a, const Eigen::AutoDiffScalar<D>& b) {
  using std::exp;
  using std::log;
  return exp(b * log(a));
}

template <class T>
T eval(const Expression::Node& n, const std::vector<T>& x) {
  using std::cos;
  using std::exp;
  using std::sin;
  switch (n.op) {
  case Op::Const: return T(n.value);
  case Op::Var: return x[n.var];
  case Op::Add: return eval(*n.a, x) + eval(*n.b, x);
  case Op::Sub: return eval(*n.a, x) - eval(*n.b, x);
  case Op::Mul: return eval(*n.a, x) * eval(*n.b, x);
  case Op::Div: return eval(*n.a, x) / eval(*n.b, x);
  case Op::Neg: return -eval(*n.a, x);
  case Op::Sin: return sin(eval(*n.a, x));
  case Op::Cos: return cos(eval(*n.a, x));
  case Op::Exp: return exp(eval(*n.a, x));
  case Op::Pow: {
    T base = eval(*n.a, x);
    // constant integer exponents keep negative bases differentiable
    if (n.b->op == Op::Const && n.b->value == std::round(n.b->value) && std::abs(n.b->value) <= 64) {
      int k = static_cast<int>(n.b->value);
      T r(1.0);
      for (int i = 0; i < std::abs(k); ++i) r = r * base;
      return k < 0 ? T(1.0) / r : r;
    }
    return real_pow(base, eval(*n.b, x));
  }
  }
  return T(0.0);
}

} // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables) {
  Expression e;
  e.text_ = text;
  e.variables_ = variables;
  e.root_ = Parser(text, variables).parse();
  return e;
}

double Expression::value(const Eigen::VectorXd& x) const {
  if (x.size() != static_cast<Eigen::Index>(variables_.size())) throw InputError("expression: wrong argument count");
  std::vector<double> v(x.data(), x.data() + x.size());
  return eval(*root_, v);
}

Eigen::VectorXd Expression::gradient(const Eigen::VectorXd& x) const {
  using AD = Eigen::AutoDiffScalar<Eigen::VectorXd>;
  const auto n = x.size();
  if (n != static_cast<Eigen::Index>(variables_.size())) throw InputError("expression: wrong argument count");
  std::vector<AD> v;
  for (Eigen::Index i = 0; i < n; ++i) v.emplace_back(x[i], n, i);
  AD r = eval(*root_, v);
  if (r.derivatives().size() == 0) return Eigen::VectorXd::Zero(n);
  return r.derivatives();
}

} // namespace glue
