#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "solab/error.hpp"

namespace solab::dsl {

enum class TokenKind { Number, Identifier, Operator, Paren, Comma };

struct Token {
    TokenKind kind;
    std::string lexeme;
    long position;  // byte offset of the first character
};

inline const char* to_string(TokenKind k) {
    switch (k) {
        case TokenKind::Number: return "number";
        case TokenKind::Identifier: return "identifier";
        case TokenKind::Operator: return "operator";
        case TokenKind::Paren: return "paren";
        case TokenKind::Comma: return "comma";
    }
    return "?";
}

namespace detail {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Scans digits [. digits] [(e|E) [+-] digits]. A second '.' or a dangling
// exponent marker makes the literal unterminated.
inline std::size_t scan_number(std::string_view src, std::size_t start) {
    std::size_t i = start;
    bool digits = false;
    while (i < src.size() && is_digit(src[i])) { ++i; digits = true; }
    if (i < src.size() && src[i] == '.') {
        ++i;
        while (i < src.size() && is_digit(src[i])) { ++i; digits = true; }
        if (i < src.size() && src[i] == '.')
            throw input_error("UnterminatedNumber", "second decimal point in numeric literal", static_cast<long>(start));
    }
    if (!digits)
        throw input_error("UnterminatedNumber", "numeric literal without digits", static_cast<long>(start));
    if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j >= src.size() || !is_digit(src[j]))
            throw input_error("UnterminatedNumber", "exponent without digits", static_cast<long>(start));
        while (j < src.size() && is_digit(src[j])) ++j;
        i = j;
    }
    if (i < src.size() && (is_ident_start(src[i]) || src[i] == '.'))
        throw input_error("UnterminatedNumber", "numeric literal runs into '" + std::string(1, src[i]) + "'",
                          static_cast<long>(start));
    return i;
}

}  // namespace detail

inline std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < src.size()) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') { ++i; continue; }
        const long pos = static_cast<long>(i);
        if (detail::is_digit(c) || c == '.') {
            std::size_t end = detail::scan_number(src, i);
            out.push_back({TokenKind::Number, std::string(src.substr(i, end - i)), pos});
            i = end;
        } else if (detail::is_ident_start(c)) {
            std::size_t end = i + 1;
            while (end < src.size() && detail::is_ident_char(src[end])) ++end;
            out.push_back({TokenKind::Identifier, std::string(src.substr(i, end - i)), pos});
            i = end;
        } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
            out.push_back({TokenKind::Operator, std::string(1, c), pos});
            ++i;
        } else if (c == '(' || c == ')') {
            out.push_back({TokenKind::Paren, std::string(1, c), pos});
            ++i;
        } else if (c == ',') {
            out.push_back({TokenKind::Comma, ",", pos});
            ++i;
        } else {
            std::string shown = (static_cast<unsigned char>(c) < 0x80) ? std::string(1, c) : std::string("non-ASCII byte");
            throw input_error("UnknownCharacter", "unexpected '" + shown + "'", pos);
        }
    }
    return out;
}

}  // namespace solab::dsl
