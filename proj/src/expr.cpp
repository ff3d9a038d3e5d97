#include "superflow/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace superflow::expr {

namespace {

NodePtr make(Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr number(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Number;
    n->value = v;
    return n;
}

bool is_const(const NodePtr& n, double v) {
    return n->kind == Node::Kind::Number && n->value == v;
}

// light simplification so derivatives stay readable and cheap
NodePtr add(NodePtr a, NodePtr b) {
    if (is_const(a, 0)) return b;
    if (is_const(b, 0)) return a;
    if (a->kind == Node::Kind::Number && b->kind == Node::Kind::Number)
        return number(a->value + b->value);
    return make(Node::Kind::Add, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
    if (is_const(b, 0)) return a;
    if (a->kind == Node::Kind::Number && b->kind == Node::Kind::Number)
        return number(a->value - b->value);
    if (is_const(a, 0)) return make(Node::Kind::Neg, std::move(b));
    return make(Node::Kind::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
    if (is_const(a, 0) || is_const(b, 0)) return number(0);
    if (is_const(a, 1)) return b;
    if (is_const(b, 1)) return a;
    if (a->kind == Node::Kind::Number && b->kind == Node::Kind::Number)
        return number(a->value * b->value);
    return make(Node::Kind::Mul, std::move(a), std::move(b));
}

NodePtr div(NodePtr a, NodePtr b) {
    if (is_const(a, 0)) return number(0);
    if (is_const(b, 1)) return a;
    return make(Node::Kind::Div, std::move(a), std::move(b));
}

NodePtr pow_node(NodePtr a, NodePtr b) {
    if (is_const(b, 1)) return a;
    if (is_const(b, 0)) return number(1);
    return make(Node::Kind::Pow, std::move(a), std::move(b));
}

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr run() {
        auto n = expression();
        skip_ws();
        if (pos_ != s_.size())
            throw ParseError("trailing input at position " + std::to_string(pos_) + " in '" + s_ + "'");
        return n;
    }

private:
    // expression := term (('+'|'-') term)*
    NodePtr expression() {
        auto n = term();
        for (;;) {
            skip_ws();
            if (consume('+')) n = add(n, term());
            else if (consume('-')) n = sub(n, term());
            else return n;
        }
    }

    // term := factor (('*'|'/') factor)*
    NodePtr term() {
        auto n = factor();
        for (;;) {
            skip_ws();
            if (consume('*')) n = mul(n, factor());
            else if (consume('/')) n = div(n, factor());
            else return n;
        }
    }

    // factor := ('-')* power
    NodePtr factor() {
        skip_ws();
        if (consume('-')) return make(Node::Kind::Neg, factor());
        if (consume('+')) return factor();
        return power();
    }

    // power := atom ('^' factor)?   (right associative)
    NodePtr power() {
        auto base = atom();
        skip_ws();
        if (consume('^')) return pow_node(base, factor());
        return base;
    }

    NodePtr atom() {
        skip_ws();
        if (pos_ >= s_.size()) throw ParseError("unexpected end of expression '" + s_ + "'");
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number_literal();
        if (c == '(') {
            ++pos_;
            auto n = expression();
            skip_ws();
            if (!consume(')')) throw ParseError("missing ')' in '" + s_ + "'");
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        throw ParseError(std::string("unexpected character '") + c + "' in '" + s_ + "'");
    }

    NodePtr number_literal() {
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) throw ParseError("bad number in '" + s_ + "'");
        pos_ += static_cast<size_t>(end - begin);
        return number(v);
    }

    NodePtr identifier() {
        size_t start = pos_;
        while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        std::string name = s_.substr(start, pos_ - start);
        if (name == "x") return make(Node::Kind::VarX);
        if (name == "t") return make(Node::Kind::VarT);
        if (name == "pi") return number(3.14159265358979323846);
        Node::Kind k;
        if (name == "exp") k = Node::Kind::Exp;
        else if (name == "sin") k = Node::Kind::Sin;
        else if (name == "cos") k = Node::Kind::Cos;
        else if (name == "sqrt") k = Node::Kind::Sqrt;
        else throw ParseError("unknown identifier '" + name + "'");
        skip_ws();
        if (!consume('(')) throw ParseError("expected '(' after '" + name + "'");
        auto arg = expression();
        skip_ws();
        if (!consume(')')) throw ParseError("missing ')' after argument of '" + name + "'");
        return make(k, std::move(arg));
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool consume(char c) {
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    const std::string& s_;
    size_t pos_ = 0;
};

}  // namespace

NodePtr parse(const std::string& text) { return Parser(text).run(); }

double eval(const NodePtr& n, double x, double t) {
    using K = Node::Kind;
    switch (n->kind) {
        case K::Number: return n->value;
        case K::VarX: return x;
        case K::VarT: return t;
        case K::Add: return eval(n->a, x, t) + eval(n->b, x, t);
        case K::Sub: return eval(n->a, x, t) - eval(n->b, x, t);
        case K::Mul: return eval(n->a, x, t) * eval(n->b, x, t);
        case K::Div: return eval(n->a, x, t) / eval(n->b, x, t);
        case K::Pow: return std::pow(eval(n->a, x, t), eval(n->b, x, t));
        case K::Neg: return -eval(n->a, x, t);
        case K::Exp: return std::exp(eval(n->a, x, t));
        case K::Sin: return std::sin(eval(n->a, x, t));
        case K::Cos: return std::cos(eval(n->a, x, t));
        case K::Sqrt: return std::sqrt(eval(n->a, x, t));
    }
    return 0.0;
}

NodePtr differentiate(const NodePtr& n, char wrt) {
    using K = Node::Kind;
    switch (n->kind) {
        case K::Number: return number(0);
        case K::VarX: return number(wrt == 'x' ? 1 : 0);
        case K::VarT: return number(wrt == 't' ? 1 : 0);
        case K::Add: return add(differentiate(n->a, wrt), differentiate(n->b, wrt));
        case K::Sub: return sub(differentiate(n->a, wrt), differentiate(n->b, wrt));
        case K::Mul:
            return add(mul(differentiate(n->a, wrt), n->b), mul(n->a, differentiate(n->b, wrt)));
        case K::Div:
            return div(sub(mul(differentiate(n->a, wrt), n->b), mul(n->a, differentiate(n->b, wrt))),
                       mul(n->b, n->b));
        case K::Pow: {
            if (n->b->kind == K::Number) {
                // d(u^c) = c u^(c-1) u'
                double c = n->b->value;
                return mul(mul(number(c), pow_node(n->a, number(c - 1))), differentiate(n->a, wrt));
            }
            // general u^v = exp(v log u); log is not in the grammar, so reject
            throw ParseError("d/d" + std::string(1, wrt) + " of a non-constant exponent is unsupported");
        }
        case K::Neg: return make(K::Neg, differentiate(n->a, wrt));
        case K::Exp: return mul(make(K::Exp, n->a), differentiate(n->a, wrt));
        case K::Sin: return mul(make(K::Cos, n->a), differentiate(n->a, wrt));
        case K::Cos: return make(K::Neg, mul(make(K::Sin, n->a), differentiate(n->a, wrt)));
        case K::Sqrt:
            return div(differentiate(n->a, wrt), mul(number(2), make(K::Sqrt, n->a)));
    }
    return number(0);
}

bool depends_on_t(const NodePtr& n) {
    if (!n) return false;
    if (n->kind == Node::Kind::VarT) return true;
    return depends_on_t(n->a) || depends_on_t(n->b);
}

std::string to_string(const NodePtr& n) {
    using K = Node::Kind;
    if (!n) return "";
    switch (n->kind) {
        case K::Number: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n->value);
            return buf;
        }
        case K::VarX: return "x";
        case K::VarT: return "t";
        case K::Add: return "(" + to_string(n->a) + "+" + to_string(n->b) + ")";
        case K::Sub: return "(" + to_string(n->a) + "-" + to_string(n->b) + ")";
        case K::Mul: return "(" + to_string(n->a) + "*" + to_string(n->b) + ")";
        case K::Div: return "(" + to_string(n->a) + "/" + to_string(n->b) + ")";
        case K::Pow: return "(" + to_string(n->a) + "^" + to_string(n->b) + ")";
        case K::Neg: return "(-" + to_string(n->a) + ")";
        case K::Exp: return "exp(" + to_string(n->a) + ")";
        case K::Sin: return "sin(" + to_string(n->a) + ")";
        case K::Cos: return "cos(" + to_string(n->a) + ")";
        case K::Sqrt: return "sqrt(" + to_string(n->a) + ")";
    }
    return "";
}

}  // namespace superflow::expr
