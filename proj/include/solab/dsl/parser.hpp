#pragma once

#include <cerrno>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "solab/dsl/expr.hpp"
#include "solab/dsl/lexer.hpp"
#include "solab/error.hpp"

namespace solab::dsl {

// Default parameter names u1..un.
inline std::vector<std::string> default_names(int n) {
    std::vector<std::string> v;
    for (int i = 1; i <= n; ++i) v.push_back("u" + std::to_string(i));
    return v;
}

// Recursive descent over
//   expr  := term (('+'|'-') term)*
//   term  := unary (('*'|'/') unary)*
//   unary := '-' unary | power
//   power := primary ('^' unary)?
//   primary := number | name | func '(' expr ')' | '(' expr ')'
class Parser {
public:
    Parser(const std::vector<Token>& tokens, const std::vector<std::string>& names, long source_length)
        : toks_(tokens), names_(names), end_pos_(source_length) {}

    Expr parse_all() {
        Expr e = parse_expr();
        if (pos_ < toks_.size()) unexpected("trailing input");
        return e;
    }

private:
    static constexpr int kMaxDepth = 400;

    const Token* peek() const { return pos_ < toks_.size() ? &toks_[pos_] : nullptr; }

    bool at(TokenKind k, const char* lex) const {
        const Token* t = peek();
        return t && t->kind == k && t->lexeme == lex;
    }

    [[noreturn]] void unexpected(const std::string& why) const {
        const Token* t = peek();
        if (t) throw input_error("UnexpectedToken", "'" + t->lexeme + "': " + why, t->position);
        throw input_error("UnexpectedToken", "end of input: " + why, end_pos_);
    }

    struct DepthGuard {
        int& d;
        explicit DepthGuard(int& depth, const Parser& p) : d(depth) {
            if (++d > kMaxDepth) p.unexpected("nesting too deep");
        }
        ~DepthGuard() { --d; }
    };

    Expr parse_expr() {
        DepthGuard g(depth_, *this);
        Expr lhs = parse_term();
        while (at(TokenKind::Operator, "+") || at(TokenKind::Operator, "-")) {
            NodeKind k = toks_[pos_].lexeme == "+" ? NodeKind::Add : NodeKind::Sub;
            ++pos_;
            lhs = binary(k, lhs, parse_term());
        }
        return lhs;
    }

    Expr parse_term() {
        Expr lhs = parse_unary();
        while (at(TokenKind::Operator, "*") || at(TokenKind::Operator, "/")) {
            NodeKind k = toks_[pos_].lexeme == "*" ? NodeKind::Mul : NodeKind::Div;
            ++pos_;
            lhs = binary(k, lhs, parse_unary());
        }
        return lhs;
    }

    Expr parse_unary() {
        DepthGuard g(depth_, *this);
        if (at(TokenKind::Operator, "-")) {
            ++pos_;
            return unary(NodeKind::Neg, parse_unary());
        }
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (at(TokenKind::Operator, "^")) {
            ++pos_;
            return binary(NodeKind::Pow, base, parse_unary());
        }
        return base;
    }

    Expr parse_primary() {
        const Token* t = peek();
        if (!t) unexpected("expected an operand");
        if (t->kind == TokenKind::Number) {
            errno = 0;
            double v = std::strtod(t->lexeme.c_str(), nullptr);
            if (!std::isfinite(v)) unexpected("numeric literal out of range");
            ++pos_;
            return constant(v);
        }
        if (t->kind == TokenKind::Identifier) {
            const Token name = *t;
            ++pos_;
            if (at(TokenKind::Paren, "(")) return parse_call(name);
            for (std::size_t i = 0; i < names_.size(); ++i)
                if (names_[i] == name.lexeme) return parameter(static_cast<int>(i));
            if (name.lexeme == "pi") return named_constant('p');
            if (name.lexeme == "e") return named_constant('e');
            --pos_;
            unexpected(lookup_func(name.lexeme) ? "function name used without arguments" : "unknown identifier");
        }
        if (at(TokenKind::Paren, "(")) {
            ++pos_;
            Expr inner = parse_expr();
            if (!at(TokenKind::Paren, ")")) unexpected("expected ')'");
            ++pos_;
            return inner;
        }
        unexpected("expected an operand");
    }

    Expr parse_call(const Token& name) {
        auto f = lookup_func(name.lexeme);
        if (!f) throw input_error("UnknownFunction", name.lexeme, name.position);
        ++pos_;  // '('
        std::vector<Expr> args;
        if (!at(TokenKind::Paren, ")")) {
            args.push_back(parse_expr());
            while (at(TokenKind::Comma, ",")) {
                ++pos_;
                args.push_back(parse_expr());
            }
        }
        if (!at(TokenKind::Paren, ")")) unexpected("expected ')' or ','");
        ++pos_;
        if (args.size() != 1)
            throw input_error("ArityMismatch",
                              name.lexeme + " takes 1 argument, got " + std::to_string(args.size()),
                              name.position);
        return call(*f, args[0]);
    }

    const std::vector<Token>& toks_;
    const std::vector<std::string>& names_;
    long end_pos_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

inline Expr parse(const std::vector<Token>& tokens, const std::vector<std::string>& names, long source_length = 0) {
    Parser p(tokens, names, source_length);
    return p.parse_all();
}

inline Expr parse(std::string_view source, const std::vector<std::string>& names) {
    auto toks = tokenize(source);
    return parse(toks, names, static_cast<long>(source.size()));
}

}  // namespace solab::dsl
