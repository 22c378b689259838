#pragma once

// Truncated multivariate Laurent power series X^shift * body, where body has
// nonnegative exponents and is exact up to a total-degree witness D (terms
// of body degree > D are unknown). Exact series carry no witness.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "monomval/coeff.hpp"
#include "monomval/expr.hpp"
#include "monomval/lexgroup.hpp"

namespace monomval {

using Exponent = std::vector<Int>;

class TruncSeries {
public:
    using Terms = std::map<Exponent, TowerElem>;

    TruncSeries() = default;
    TruncSeries(std::size_t n, const GroundField& f) : n_(n), f_(f), shift_(n) {}

    static TruncSeries constant(std::size_t n, const TowerElem& c);
    static TruncSeries variable(std::size_t n, const GroundField& f, std::size_t k);
    static TruncSeries monomial(std::size_t n, const TowerElem& c, const Exponent& a);

    std::size_t nvars() const noexcept { return n_; }
    const GroundField& field() const noexcept { return f_; }
    const Exponent& shift() const noexcept { return shift_; }
    const Terms& body() const noexcept { return body_; }
    const std::optional<long>& witness() const noexcept { return witness_; }
    bool is_exact() const noexcept { return !witness_; }
    bool is_zero() const noexcept { return body_.empty() && !witness_; }

    // Full exponents (shift + body exponent).
    Terms terms() const;
    void add_term(const Exponent& a, const TowerElem& c);
    // Forget everything of body degree > d.
    void truncate(long d);
    // Re-express with a componentwise smaller shift.
    void lower_shift(const Exponent& s);
    // Exact series only: move the shift to the componentwise minimum of the
    // terms (may raise it).
    void tighten_shift();

    TruncSeries operator-() const;
    TruncSeries& operator+=(const TruncSeries& o);
    TruncSeries& operator-=(const TruncSeries& o);
    friend TruncSeries operator+(TruncSeries a, const TruncSeries& b) { return a += b; }
    friend TruncSeries operator-(TruncSeries a, const TruncSeries& b) { return a -= b; }
    friend TruncSeries operator*(const TruncSeries& a, const TruncSeries& b);
    TruncSeries scaled(const TowerElem& c) const;

    // Inverse: exact for monomials; otherwise the body must have a nonzero
    // constant term after removing the common monomial factor, and the
    // geometric expansion is cut at total degree `degree`.
    TruncSeries inv(long degree) const;
    TruncSeries pow(long e, long degree) const;

    bool uses_variable(std::size_t k) const;
    std::string str(const std::vector<std::string>& vars, const SymbolTable* names = nullptr) const;

    bool operator==(const TruncSeries& o) const;

private:
    void check(const TruncSeries& o) const;
    void rebase(const Exponent& s); // lower the shift to s (componentwise <=)
    void clean();

    std::size_t n_ = 0;
    GroundField f_;
    Exponent shift_;
    Terms body_;
    std::optional<long> witness_;

    friend TruncSeries monoidal_subst(const TruncSeries&, std::size_t, std::size_t, const Int&);
};

long total_degree(const Exponent& a);

// nullopt means infinity. Throws Inconclusive if the witness cannot certify
// the minimum; LengthMismatch if |L| != n.
std::optional<LexVec> monomial_value(const TruncSeries& f, const std::vector<LexVec>& L);

// X_l -> Y_l * Y_i^q (q >= 0; repeated q times conceptually).
TruncSeries monoidal_subst(const TruncSeries& f, std::size_t l, std::size_t i, const Int& q);

// X_j -> Z_j + correction. The correction must not involve variable j.
TruncSeries coordinate_change(const TruncSeries& f, std::size_t j, const TruncSeries& correction, long degree);

// Renames: result variable perm[k] carries source variable k.
TruncSeries permute(const TruncSeries& f, const std::vector<std::size_t>& perm);

// Evaluates an expression over variables `vars` (identifiers) and tower
// symbols; non-monomial divisors are expanded to total degree `degree`.
TruncSeries eval_series(const expr::Node& n, const std::vector<std::string>& vars, const GroundField& f,
                        const SymbolTable& symbols, long degree);
TruncSeries parse_series(std::string_view text, const std::vector<std::string>& vars, const GroundField& f,
                         const SymbolTable& symbols, long degree);

} // namespace monomval
