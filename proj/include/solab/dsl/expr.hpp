#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace solab::dsl {

enum class NodeKind { Constant, Parameter, NamedConstant, Neg, Add, Sub, Mul, Div, Pow, Call };

enum class Func { Sin, Cos, Tan, Sinh, Cosh, Tanh, Exp, Log, Sqrt, Abs };

inline constexpr Func kAllFuncs[] = {Func::Sin,  Func::Cos, Func::Tan, Func::Sinh, Func::Cosh,
                                     Func::Tanh, Func::Exp, Func::Log, Func::Sqrt, Func::Abs};

inline const char* func_name(Func f) {
    switch (f) {
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Tan: return "tan";
        case Func::Sinh: return "sinh";
        case Func::Cosh: return "cosh";
        case Func::Tanh: return "tanh";
        case Func::Exp: return "exp";
        case Func::Log: return "log";
        case Func::Sqrt: return "sqrt";
        case Func::Abs: return "abs";
    }
    return "?";
}

inline std::optional<Func> lookup_func(const std::string& name) {
    for (Func f : kAllFuncs)
        if (name == func_name(f)) return f;
    return std::nullopt;
}

inline bool is_reserved_name(const std::string& name) {
    return lookup_func(name).has_value() || name == "pi" || name == "e";
}

struct Node;
using Expr = std::shared_ptr<const Node>;

// Immutable expression node. Constants are finite and non-negative; a negative
// literal is always neg(constant) so printing and reparsing is lossless.
struct Node {
    NodeKind kind;
    double value = 0.0;   // Constant
    int index = 0;        // Parameter (0-based)
    char name = 0;        // NamedConstant: 'p' (pi) or 'e'
    Func func = Func::Sin;
    Expr lhs, rhs;        // unary operand in lhs

    bool is_binary() const {
        return kind == NodeKind::Add || kind == NodeKind::Sub || kind == NodeKind::Mul ||
               kind == NodeKind::Div || kind == NodeKind::Pow;
    }
};

inline Expr constant(double v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Constant;
    n->value = v;
    return n;
}
inline Expr parameter(int idx) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Parameter;
    n->index = idx;
    return n;
}
inline Expr named_constant(char which) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::NamedConstant;
    n->name = which;
    return n;
}
inline Expr unary(NodeKind k, Expr a) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->lhs = std::move(a);
    return n;
}
inline Expr binary(NodeKind k, Expr a, Expr b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}
inline Expr call(Func f, Expr a) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Call;
    n->func = f;
    n->lhs = std::move(a);
    return n;
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
        case NodeKind::Constant: return a->value == b->value;
        case NodeKind::Parameter: return a->index == b->index;
        case NodeKind::NamedConstant: return a->name == b->name;
        case NodeKind::Neg: return structurally_equal(a->lhs, b->lhs);
        case NodeKind::Call: return a->func == b->func && structurally_equal(a->lhs, b->lhs);
        default: return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
    }
}

// Largest parameter index referenced, or -1.
inline int max_parameter(const Expr& e) {
    if (!e) return -1;
    if (e->kind == NodeKind::Parameter) return e->index;
    int m = max_parameter(e->lhs);
    if (e->rhs) m = std::max(m, max_parameter(e->rhs));
    return m;
}

inline bool depends_on_parameters(const Expr& e) { return max_parameter(e) >= 0; }

inline std::size_t node_count(const Expr& e) {
    if (!e) return 0;
    return 1 + node_count(e->lhs) + node_count(e->rhs);
}

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

// Binding strength used by the printer: + - (1), * / (2), unary minus (3),
// ^ (4), atoms (5).
inline int precedence(const Expr& e) {
    switch (e->kind) {
        case NodeKind::Add:
        case NodeKind::Sub: return 1;
        case NodeKind::Mul:
        case NodeKind::Div: return 2;
        case NodeKind::Neg: return 3;
        case NodeKind::Pow: return 4;
        default: return 5;
    }
}

inline void print_into(const Expr& e, const std::vector<std::string>& names, std::string& out);

inline void print_child(const Expr& child, int min_prec, const std::vector<std::string>& names, std::string& out) {
    if (precedence(child) < min_prec) {
        out += '(';
        print_into(child, names, out);
        out += ')';
    } else {
        print_into(child, names, out);
    }
}

inline void print_into(const Expr& e, const std::vector<std::string>& names, std::string& out) {
    switch (e->kind) {
        case NodeKind::Constant: out += format_number(e->value); return;
        case NodeKind::Parameter:
            out += (e->index < static_cast<int>(names.size())) ? names[e->index] : "u" + std::to_string(e->index + 1);
            return;
        case NodeKind::NamedConstant: out += (e->name == 'p') ? "pi" : "e"; return;
        case NodeKind::Neg:
            out += '-';
            // "--x" would lex fine but "-(-x)" reads better; ^ binds tighter so
            // neg(pow) needs no parentheses.
            print_child(e->lhs, 4, names, out);
            return;
        case NodeKind::Call:
            out += func_name(e->func);
            out += '(';
            print_into(e->lhs, names, out);
            out += ')';
            return;
        case NodeKind::Add:
        case NodeKind::Sub:
        case NodeKind::Mul:
        case NodeKind::Div: {
            const int p = precedence(e);
            print_child(e->lhs, p, names, out);
            out += e->kind == NodeKind::Add ? " + " : e->kind == NodeKind::Sub ? " - "
                 : e->kind == NodeKind::Mul ? "*" : "/";
            // Left-associative: a right child at the same level needs parentheses.
            print_child(e->rhs, p + 1, names, out);
            return;
        }
        case NodeKind::Pow:
            // Right-associative; the base must be an atom, the exponent may be
            // another power or a negation.
            print_child(e->lhs, 5, names, out);
            out += '^';
            print_child(e->rhs, 3, names, out);
            return;
    }
}

}  // namespace detail

inline std::string print(const Expr& e, const std::vector<std::string>& names = {}) {
    std::string out;
    detail::print_into(e, names, out);
    return out;
}

}  // namespace solab::dsl
