#pragma once

// Exact coefficient fields: the ground field k (Q or F_p) and the residue
// tower k(w_1, ..., w_d), whose elements are kept as normalized quotients of
// multivariate polynomials.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "monomval/errors.hpp"

namespace monomval {

using Int = mpz_class;
using SymbolId = std::uint32_t;

class GroundField {
public:
    GroundField() = default; // Q
    static GroundField rationals() { return GroundField(); }
    // Throws InvalidInput unless p is prime (trial division).
    static GroundField prime(std::uint64_t p);

    bool is_rationals() const noexcept { return p_ == 0; }
    std::uint64_t characteristic() const noexcept { return p_; }
    std::string str() const;

    bool operator==(const GroundField&) const = default;

private:
    explicit GroundField(std::uint64_t p) : p_(p) {}
    std::uint64_t p_ = 0;
};

class Scalar {
public:
    Scalar() = default;
    Scalar(const GroundField& f, long v);
    Scalar(const GroundField& f, const Int& v);
    Scalar(const GroundField& f, const mpq_class& v);

    GroundField field() const;
    bool is_zero() const { return sgn(v_) == 0; }
    bool is_one() const { return v_ == 1; }
    const mpq_class& value() const noexcept { return v_; }

    Scalar operator-() const;
    Scalar& operator+=(const Scalar& o);
    Scalar& operator-=(const Scalar& o);
    Scalar& operator*=(const Scalar& o);
    Scalar& operator/=(const Scalar& o);
    friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
    friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
    friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
    friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }
    Scalar inv() const;

    bool operator==(const Scalar& o) const { return p_ == o.p_ && v_ == o.v_; }
    std::string str() const;

private:
    void reduce();
    void check(const Scalar& o) const;
    std::uint64_t p_ = 0;
    mpq_class v_;
};

// Exponent vector over symbol ids, with trailing zeros trimmed.
using Mono = std::vector<std::uint32_t>;

// Lex order with the highest symbol id most significant.
struct MonoLess {
    bool operator()(const Mono& a, const Mono& b) const;
};

class SymbolTable;

class Poly {
public:
    using Terms = std::map<Mono, Scalar, MonoLess>;

    Poly() = default;
    explicit Poly(const GroundField& f) : f_(f) {}
    Poly(const GroundField& f, const Scalar& c);
    static Poly symbol(const GroundField& f, SymbolId s, std::uint32_t power = 1);

    const GroundField& field() const noexcept { return f_; }
    const Terms& terms() const noexcept { return t_; }
    bool is_zero() const noexcept { return t_.empty(); }
    bool is_constant() const;
    Scalar constant() const; // requires is_constant()
    const Scalar& leading_coeff() const;
    const Mono& leading_mono() const;

    // Largest symbol id occurring, or nullopt for constants.
    std::optional<SymbolId> main_symbol() const;
    std::uint32_t degree_in(SymbolId s) const;
    std::set<SymbolId> symbols() const;

    // Coefficients with respect to s: result[d] multiplies s^d.
    std::vector<Poly> coeffs_in(SymbolId s) const;
    static Poly from_coeffs(const GroundField& f, SymbolId s, const std::vector<Poly>& cs);

    Poly operator-() const;
    Poly& operator+=(const Poly& o);
    Poly& operator-=(const Poly& o);
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator*(const Poly& a, const Poly& b);
    Poly scaled(const Scalar& c) const;
    Poly pow(std::uint32_t e) const;

    // Exact division; throws InvalidInput if b does not divide a.
    static Poly divide_exact(const Poly& a, const Poly& b);
    static std::optional<Poly> try_divide(const Poly& a, const Poly& b);
    // Monic gcd (zero only if both are zero).
    static Poly gcd(const Poly& a, const Poly& b);

    bool operator==(const Poly& o) const { return f_ == o.f_ && t_ == o.t_; }

    std::string str(const SymbolTable* names = nullptr) const;

private:
    void add_term(const Mono& m, const Scalar& c);
    GroundField f_;
    Terms t_;
};

class SymbolTable {
public:
    SymbolTable() = default;
    explicit SymbolTable(std::vector<std::string> names);

    // Throws InvalidInput on duplicates.
    SymbolId add(const std::string& name);
    std::optional<SymbolId> find(const std::string& name) const;
    const std::string& name(SymbolId s) const;
    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }

private:
    std::vector<std::string> names_;
};

// Element of k(w_1, ..., w_d): num/den with gcd removed and the leading
// coefficient of den (under MonoLess) equal to 1.
class TowerElem {
public:
    TowerElem() : TowerElem(GroundField::rationals()) {}
    explicit TowerElem(const GroundField& f);
    TowerElem(const GroundField& f, long c);
    TowerElem(const GroundField& f, const Int& c);
    TowerElem(const Scalar& c);
    explicit TowerElem(const Poly& p);
    TowerElem(const Poly& num, const Poly& den); // normalizes; throws DivisionByZero
    static TowerElem symbol(const GroundField& f, SymbolId s);

    const GroundField& field() const noexcept { return num_.field(); }
    const Poly& num() const noexcept { return num_; }
    const Poly& den() const noexcept { return den_; }

    bool is_zero() const noexcept { return num_.is_zero(); }
    bool is_one() const;
    bool is_constant() const { return num_.is_constant() && den_.is_constant(); }
    Scalar constant() const;
    std::set<SymbolId> symbols_used() const;

    TowerElem operator-() const;
    TowerElem& operator+=(const TowerElem& o);
    TowerElem& operator-=(const TowerElem& o);
    TowerElem& operator*=(const TowerElem& o);
    TowerElem& operator/=(const TowerElem& o);
    friend TowerElem operator+(TowerElem a, const TowerElem& b) { return a += b; }
    friend TowerElem operator-(TowerElem a, const TowerElem& b) { return a -= b; }
    friend TowerElem operator*(TowerElem a, const TowerElem& b) { return a *= b; }
    friend TowerElem operator/(TowerElem a, const TowerElem& b) { return a /= b; }
    TowerElem inv() const;
    TowerElem pow(long e) const;

    bool operator==(const TowerElem& o) const { return num_ == o.num_ && den_ == o.den_; }

    std::string str(const SymbolTable* names = nullptr) const;

    // Re-runs normalization; idempotent on canonical values.
    TowerElem normalized() const { return TowerElem(num_, den_); }

private:
    Poly num_;
    Poly den_;
};

TowerElem operator*(const TowerElem& a, const Scalar& c);

// Syntactic membership of x in k(allowed); exact under the standing
// assumption that declared symbols are algebraically independent.
bool is_in_subfield(const TowerElem& x, const std::set<SymbolId>& allowed);

// x = (a*w + b) / (c*w + d) with a, b, c, d in k(allowed), ad - bc != 0 and
// w a single symbol outside `allowed`: then k(allowed)(x) = k(allowed)(w).
struct SimpleGenerator {
    SymbolId symbol;
    TowerElem a, b, c, d;
    // w expressed through x: w = (d x - b) / (a - c x).
    TowerElem solve_for_symbol(const TowerElem& x) const;
};
std::optional<SimpleGenerator> as_simple_generator(const TowerElem& x, const std::set<SymbolId>& allowed);

// The residue subfield Delta_j = k(adjoined symbols).
class Subfield {
public:
    Subfield() = default;
    const std::set<SymbolId>& allowed() const noexcept { return adjoined_; }
    const std::vector<SymbolId>& order() const noexcept { return order_; }
    bool contains(const TowerElem& x) const { return is_in_subfield(x, adjoined_); }
    // Throws InvalidInput if s is already adjoined.
    Subfield adjoin(SymbolId s) const;

private:
    std::set<SymbolId> adjoined_;
    std::vector<SymbolId> order_;
};

} // namespace monomval
