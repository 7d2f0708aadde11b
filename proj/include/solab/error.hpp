#pragma once

#include <stdexcept>
#include <string>

namespace solab {

// Error category decides the CLI exit code.
enum class ErrorKind {
    Input,      // malformed user input or configuration (exit 2)
    Check,      // a mathematical check could not hold (exit 1)
    Numerical,  // solver or truncation failure (exit 3)
};

class Error : public std::runtime_error {
public:
    Error(std::string code, ErrorKind kind, const std::string& detail, long position = -1)
        : std::runtime_error(code + ": " + detail),
          code_(std::move(code)),
          kind_(kind),
          position_(position) {}

    const std::string& code() const noexcept { return code_; }
    ErrorKind kind() const noexcept { return kind_; }
    // Byte offset into the source text for lexer/parser errors, -1 otherwise.
    long position() const noexcept { return position_; }

private:
    std::string code_;
    ErrorKind kind_;
    long position_;
};

inline Error input_error(const std::string& code, const std::string& detail, long pos = -1) {
    return Error(code, ErrorKind::Input, detail, pos);
}
inline Error check_error(const std::string& code, const std::string& detail) {
    return Error(code, ErrorKind::Check, detail);
}
inline Error numerical_error(const std::string& code, const std::string& detail) {
    return Error(code, ErrorKind::Numerical, detail);
}

}  // namespace solab
