#pragma once

// Arithmetic and lexicographic order on Z^m, L-degrees, and the pivot-driven
// echelon reduction that turns a set of positive value vectors into a basis of
// the subgroup they generate, together with a replayable row-operation log.

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "monomval/errors.hpp"

namespace monomval {

using Int = mpz_class;

class LexVec {
public:
    LexVec() = default;
    explicit LexVec(std::size_t m) : c_(m) {}
    explicit LexVec(std::vector<Int> coords) : c_(std::move(coords)) {}
    LexVec(std::initializer_list<long> coords);

    static LexVec unit(std::size_t m, std::size_t k);

    std::size_t size() const noexcept { return c_.size(); }
    const Int& operator[](std::size_t k) const { return c_[k]; }
    Int& operator[](std::size_t k) { return c_[k]; }
    const std::vector<Int>& coords() const noexcept { return c_; }

    bool is_zero() const;
    // -1, 0 or +1 according to the first nonzero coordinate.
    int sign() const;
    // Index of the first nonzero coordinate, or size() for the zero vector.
    std::size_t leading_index() const;

    LexVec& operator+=(const LexVec& o);
    LexVec& operator-=(const LexVec& o);
    friend LexVec operator+(LexVec a, const LexVec& b) { return a += b; }
    friend LexVec operator-(LexVec a, const LexVec& b) { return a -= b; }
    LexVec operator-() const;
    friend LexVec operator*(const Int& k, const LexVec& v);

    friend bool operator==(const LexVec& a, const LexVec& b) = default;
    // Lexicographic; throws LengthMismatch on vectors of different length.
    friend std::strong_ordering operator<=>(const LexVec& a, const LexVec& b);

    std::string str() const;

private:
    std::vector<Int> c_;
};

std::strong_ordering lex_cmp(const LexVec& a, const LexVec& b);

// sum_i a_i * L_i; exponents may be negative.
LexVec degree_L(std::span<const Int> exponents, std::span<const LexVec> L);

struct RowOp {
    enum class Kind { AddRow, Swap };
    Kind kind = Kind::AddRow;
    std::size_t l = 0; // row that changes (AddRow) / first row (Swap)
    std::size_t i = 0; // source row (AddRow) / second row (Swap)
    Int q;             // multiplier for AddRow: row_l += q * row_i

    static RowOp add(std::size_t l, std::size_t i, Int q) { return {Kind::AddRow, l, i, std::move(q)}; }
    static RowOp swap(std::size_t l, std::size_t i) { return {Kind::Swap, l, i, Int(0)}; }
    bool operator==(const RowOp&) const = default;
};

using RowOpLog = std::vector<RowOp>;

struct SubgroupBasis {
    std::size_t dim = 0;                 // m
    std::vector<LexVec> basis;           // echelon rows
    std::vector<Int> pivots;             // positive pivot entries
    std::vector<std::size_t> pivot_cols; // strictly increasing

    std::size_t rank() const noexcept { return basis.size(); }
};

struct EchelonResult {
    SubgroupBasis basis;
    RowOpLog log;
    // The matrix after replaying `log` on the input.
    std::vector<LexVec> rows;
    // Row position (in `rows`) carrying basis[k].
    std::vector<std::size_t> basis_rows;
};

// Rows must all be >_lex 0. Throws InvalidInput otherwise.
EchelonResult echelon_reduce(std::vector<LexVec> rows);

std::vector<LexVec> replay(std::vector<LexVec> rows, const RowOpLog& log);

// Coordinates r with sum_k r_k basis[k] == a, by back-substitution from the
// first pivot column. Throws NotInSubgroup.
std::vector<Int> solve_in_basis(const LexVec& a, const SubgroupBasis& b);
std::optional<std::vector<Int>> try_solve_in_basis(const LexVec& a, const SubgroupBasis& b);
bool in_subgroup(const LexVec& a, const SubgroupBasis& b);

} // namespace monomval
