#pragma once

// Generalized power series sum a_i t^{alpha_i} with exponents in Z^m (lex) and
// coefficients in the residue tower. A stream is a finite term map plus a
// finite list of arithmetic-progression families, optionally cut off at a
// certification ceiling above which nothing is known.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "monomval/coeff.hpp"
#include "monomval/expr.hpp"
#include "monomval/lexgroup.hpp"

namespace monomval {

// Coefficient rule P(i) * r^i with P a polynomial in the index.
class CoeffRule {
public:
    CoeffRule() = default;
    // c * i^e * r^i
    CoeffRule(const TowerElem& c, unsigned e, const TowerElem& r);
    CoeffRule(std::vector<TowerElem> poly, const TowerElem& r);

    const std::vector<TowerElem>& poly() const noexcept { return poly_; }
    const TowerElem& ratio() const noexcept { return r_; }
    const GroundField& field() const noexcept { return r_.field(); }
    bool is_zero() const noexcept { return poly_.empty(); }
    std::size_t degree() const { return poly_.empty() ? 0 : poly_.size() - 1; }

    TowerElem at(const Int& i) const;
    CoeffRule scaled(const TowerElem& c) const;
    // Rule j -> this(j + k).
    CoeffRule shifted(const Int& k) const;
    CoeffRule operator*(const CoeffRule& o) const;
    CoeffRule operator+(const CoeffRule& o) const; // requires equal ratios

    std::set<SymbolId> symbols_used() const;
    // Text accepted back by the family parser, e.g. "i", "u3^(3*i)", "2*i*(u+1)^i".
    std::string str(const SymbolTable* names = nullptr) const;

    bool operator==(const CoeffRule& o) const { return poly_ == o.poly_ && r_ == o.r_; }

private:
    void trim();
    std::vector<TowerElem> poly_;
    TowerElem r_;
};

// Terms rule(i) t^{base + i*step} for lo <= i <= hi (hi absent: infinite).
struct Family {
    LexVec base;
    LexVec step; // >_lex 0
    Int lo = 1;
    std::optional<Int> hi;
    CoeffRule rule;

    LexVec exponent(const Int& i) const { return base + i * step; }
    LexVec start() const { return exponent(lo); }
    bool infinite() const { return !hi.has_value(); }
    bool operator==(const Family&) const = default;
};

struct Term {
    LexVec exp;
    TowerElem coeff;
    bool operator==(const Term&) const = default;
};

struct HahnBudget {
    std::size_t max_terms = 4096;       // candidate exponents scanned per query
    std::optional<LexVec> lex_ceiling;  // never enumerate at or past this exponent
    std::size_t box = 24;               // index box for family x family products
    std::size_t geometric = 12;         // terms kept in non-closed-form inverses
};

enum class EnumStatus { Complete, Exhausted, Unknown };

struct Prefix {
    std::vector<Term> terms;
    // Complete: asked-for count reached. Exhausted: the stream has no more
    // terms. Unknown: a budget or certification ceiling was hit.
    EnumStatus status = EnumStatus::Complete;
    std::string reason;
};

class HahnStream {
public:
    HahnStream() = default;
    HahnStream(std::size_t m, const GroundField& f, HahnBudget budget = {});

    static HahnStream monomial(std::size_t m, const TowerElem& c, const LexVec& a, HahnBudget budget = {});
    static HahnStream from_family(std::size_t m, const GroundField& f, Family fam, HahnBudget budget = {});

    std::size_t rank() const noexcept { return m_; }
    const GroundField& field() const noexcept { return f_; }
    const HahnBudget& budget() const noexcept { return budget_; }
    void set_budget(const HahnBudget& b);

    const std::map<LexVec, TowerElem>& finite() const noexcept { return finite_; }
    const std::vector<Family>& families() const noexcept { return families_; }
    const std::optional<LexVec>& ceiling() const noexcept { return ceiling_; }

    // Exactly zero: no terms, no families, nothing uncertified.
    bool is_exact_zero() const { return finite_.empty() && families_.empty() && !ceiling_; }
    bool is_exact() const { return !ceiling_; }
    // One exact term and nothing else.
    std::optional<Term> as_single_term() const;
    // Lower bound for every exponent that can occur (including the ceiling).
    std::optional<LexVec> support_floor() const;

    void add_term(const LexVec& a, const TowerElem& c);
    void add_family(Family fam);
    void cap(const LexVec& ceiling);

    Prefix enumerate(std::size_t n) const;
    // First nonzero term; nullopt if the stream is zero. Throws Inconclusive.
    std::optional<Term> leading() const;
    // First n terms (fewer if the stream ends). Throws Inconclusive.
    std::vector<Term> first_terms(std::size_t n) const;

    HahnStream operator-() const;
    HahnStream& operator+=(const HahnStream& o);
    HahnStream& operator-=(const HahnStream& o);
    friend HahnStream operator+(HahnStream a, const HahnStream& b) { return a += b; }
    friend HahnStream operator-(HahnStream a, const HahnStream& b) { return a -= b; }
    friend HahnStream operator*(const HahnStream& a, const HahnStream& b);

    HahnStream scaled(const TowerElem& c) const;
    HahnStream shifted(const LexVec& a) const;
    // Requires a certified leading term. Throws DivisionByZero / Inconclusive.
    HahnStream inv() const;
    HahnStream pow(long e) const;

    std::string str(const SymbolTable* names = nullptr) const;

private:
    void check(const HahnStream& o) const;
    void normalize_families();
    void drop_above_ceiling();
    void reset_memo() const;
    // Next nonzero term from the cursor; status Unknown/Exhausted encoded.
    bool advance(EnumStatus& st, std::string& why) const;

    std::size_t m_ = 0;
    GroundField f_;
    HahnBudget budget_;
    std::map<LexVec, TowerElem> finite_;
    std::vector<Family> families_;
    std::optional<LexVec> ceiling_;

    // memoized enumeration
    mutable std::vector<Term> memo_;
    mutable std::optional<LexVec> cursor_; // next exponent not yet examined
    mutable std::vector<Int> fam_next_;
    mutable bool memo_end_ = false;
    mutable bool memo_init_ = false;
    mutable std::size_t scanned_ = 0;
};

// Smallest index i >= fam.lo (and <= hi) with exponent(i) >= bound; nullopt
// if no index of the family reaches the bound.
std::optional<Int> first_index_at_or_above(const Family& fam, const LexVec& bound);
// Index i with exponent(i) == a, if a lies on the family's progression
// inside its index range.
std::optional<Int> index_of(const Family& fam, const LexVec& a);

// nullopt means infinity (zero stream). Throws Inconclusive.
std::optional<LexVec> nu_t(const HahnStream& s);

// prod images[k]^R[k]; negative exponents invert.
HahnStream monomial_image(const std::vector<Int>& R, const std::vector<HahnStream>& images);

// Removes a whole family from s after checking that it matches s term by term
// from the leading term on. Throws NoLimit on mismatch.
HahnStream subtract_segment_limit(const HahnStream& s, const Family& family, std::size_t check_terms = 4);

// Coefficient rules are parsed from expressions in the index variable `i`:
// products of constants, powers i^e and powers r^(a*i+b).
CoeffRule eval_rule(const expr::Node& n, const GroundField& f, const SymbolTable& symbols);
CoeffRule parse_rule(std::string_view text, const GroundField& f, const SymbolTable& symbols);

// Segment syntax: `terms[(0,1,0): 1, (0,0,2): u3]`,
// `family[start=(0,0,1), step=(0,0,1), coeff=i, i=1..inf]`, `O[(1,0,0)]`,
// joined by `+`; `0` is the zero stream.
HahnStream parse_stream(std::string_view text, std::size_t m, const GroundField& f, const SymbolTable& symbols,
                        HahnBudget budget = {});
std::string format_stream(const HahnStream& s, const SymbolTable* names = nullptr);
LexVec parse_lexvec(std::string_view text, std::size_t m);

} // namespace monomval
