#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace covar {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A total derivative or EL operator would need jets beyond the supported order.
class OrderOverflow : public Error {
public:
    using Error::Error;
};

/// A denominator evaluated to zero.
class PoleHit : public Error {
public:
    using Error::Error;
};

/// Identity test or evaluation cannot be decided exactly.
class Inconclusive : public Error {
public:
    using Error::Error;
};

class SyntaxError : public Error {
public:
    SyntaxError(int line, int column, const std::string& message)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
          line_(line),
          column_(column) {}

    [[nodiscard]] int line() const noexcept { return line_; }
    [[nodiscard]] int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> diagnostics)
        : Error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

    [[nodiscard]] const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out = "invalid theory";
        for (const auto& d : items) out += "\n  " + d;
        return out;
    }

    std::vector<std::string> diagnostics_;
};

class UnsupportedIndex : public Error {
public:
    using Error::Error;
};

class AnsatzViolation : public Error {
public:
    using Error::Error;
};

class UnsupportedAction : public Error {
public:
    using Error::Error;
};

class SingularEta : public Error {
public:
    using Error::Error;
};

class GridTooCoarse : public Error {
public:
    using Error::Error;
};

class UnstableScheme : public Error {
public:
    using Error::Error;
};

}  // namespace covar
