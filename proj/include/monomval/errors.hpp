#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace monomval {

class LexVec;

// Vectors or tuples of incompatible length were combined.
class LengthMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A value is not an integer combination of the current subgroup basis.
class NotInSubgroup : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DivisionByZero : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A query could not be answered within the configured budgets.
class Inconclusive : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// subtract_segment_limit was handed a family that does not match the stream.
class NoLimit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A residue is neither in the current residue subfield nor a generator of a
// simple transcendental extension by one fresh symbol.
class PurityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The input does not present a valuation of maximal dimension n - m.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Internal invariant broken (e.g. restart progress failed to improve).
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace monomval
