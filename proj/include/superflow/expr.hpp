#pragma once

#include <memory>
#include <stdexcept>
#include <string>

namespace superflow::expr {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Node of a small arithmetic expression tree over the variables x and t.
// Supported: + - * / ^, unary minus, exp, sin, cos, sqrt, numeric literals.
struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    enum class Kind { Number, VarX, VarT, Add, Sub, Mul, Div, Pow, Neg, Exp, Sin, Cos, Sqrt };
    Kind kind;
    double value = 0.0;  // Number
    NodePtr a, b;
};

NodePtr parse(const std::string& text);
double eval(const NodePtr& n, double x, double t);
// exact symbolic derivative; wrt is 'x' or 't'
NodePtr differentiate(const NodePtr& n, char wrt);
bool depends_on_t(const NodePtr& n);
std::string to_string(const NodePtr& n);

class Expression {
public:
    Expression() = default;
    explicit Expression(const std::string& text) : root_(parse(text)), text_(text) {}
    explicit Expression(NodePtr root) : root_(std::move(root)) { text_ = to_string(root_); }

    double operator()(double x, double t = 0.0) const { return eval(root_, x, t); }
    Expression deriv_x() const { return Expression(differentiate(root_, 'x')); }
    Expression deriv_t() const { return Expression(differentiate(root_, 't')); }
    bool time_dependent() const { return root_ && depends_on_t(root_); }
    bool valid() const { return root_ != nullptr; }
    const std::string& text() const { return text_; }

private:
    NodePtr root_;
    std::string text_;
};

}  // namespace superflow::expr
