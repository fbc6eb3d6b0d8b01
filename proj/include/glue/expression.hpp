#pragma once

// Arithmetic expressions in named variables, for custom Morse functions.
// Grammar: + - * / ^, unary minus, parentheses, numbers, the constants pi
// and e, and the functions sin, cos, exp, pow(a, b).

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace glue {

class Expression {
public:
  /// Throws InputError with the offending position on a syntax error or an
  /// unknown identifier.
  static Expression parse(const std::string& text, const std::vector<std::string>& variables);

  double value(const Eigen::VectorXd& x) const;
  /// Exact partial derivatives by forward-mode differentiation.
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

  const std::string& text() const { return text_; }
  const std::vector<std::string>& variables() const { return variables_; }

  struct Node;

private:
  std::string text_;
  std::vector<std::string> variables_;
  std::shared_ptr<const Node> root_;
};

} // namespace glue
