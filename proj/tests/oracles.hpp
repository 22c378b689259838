#pragma once

// Independent reference computations and random generators shared by the
// unit tests and the acceptance runner.

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "monomval/engine.hpp"

namespace oracle {

using monomval::Int;
using monomval::LexVec;
using Matrix = std::vector<std::vector<Int>>;

// Row-style Hermite normal form of the lattice spanned by the rows (zero rows
// dropped). Canonical: equal lattices give equal results.
inline Matrix hnf(Matrix a) {
    Matrix out;
    if (a.empty()) return out;
    const std::size_t cols = a.front().size();
    std::size_t top = 0;
    for (std::size_t c = 0; c < cols && top < a.size(); ++c) {
        // Euclid down column c until one row keeps a nonzero entry
        for (;;) {
            std::size_t best = a.size();
            for (std::size_t r = top; r < a.size(); ++r)
                if (a[r][c] != 0 && (best == a.size() || abs(a[r][c]) < abs(a[best][c]))) best = r;
            if (best == a.size()) break;
            std::swap(a[top], a[best]);
            bool done = true;
            for (std::size_t r = top + 1; r < a.size(); ++r) {
                if (a[r][c] == 0) continue;
                Int q;
                mpz_fdiv_q(q.get_mpz_t(), a[r][c].get_mpz_t(), a[top][c].get_mpz_t());
                for (std::size_t k = 0; k < cols; ++k) a[r][k] -= q * a[top][k];
                if (a[r][c] != 0) done = false;
            }
            if (done) break;
        }
        if (top >= a.size() || a[top][c] == 0) continue;
        if (a[top][c] < 0)
            for (auto& x : a[top]) x = -x;
        for (std::size_t r = 0; r < top; ++r) {
            Int q;
            mpz_fdiv_q(q.get_mpz_t(), a[r][c].get_mpz_t(), a[top][c].get_mpz_t());
            for (std::size_t k = 0; k < cols; ++k) a[r][k] -= q * a[top][k];
        }
        ++top;
    }
    for (std::size_t r = 0; r < top; ++r) out.push_back(a[r]);
    return out;
}

inline Matrix to_matrix(const std::vector<LexVec>& rows) {
    Matrix m;
    for (const auto& r : rows) m.push_back(r.coords());
    return m;
}

inline std::vector<LexVec> random_rows(std::mt19937_64& rng, std::size_t n, std::size_t m, long lo = 1, long hi = 20) {
    std::uniform_int_distribution<long> d(lo, hi), zero(0, 3);
    std::vector<LexVec> rows;
    for (std::size_t r = 0; r < n; ++r) {
        LexVec v(m);
        std::size_t lead = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
        for (std::size_t c = lead; c < m; ++c) v[c] = (c == lead || zero(rng)) ? d(rng) : 0;
        rows.push_back(v);
    }
    return rows;
}

// --------------------------------------------------------------- hahn oracle

using TermMap = std::map<LexVec, monomval::TowerElem>;

inline TermMap to_map(const std::vector<monomval::Term>& ts) {
    TermMap m;
    for (const auto& t : ts) m.emplace(t.exp, t.coeff);
    return m;
}

inline TermMap poly_mul(const TermMap& a, const TermMap& b) {
    TermMap out;
    for (const auto& [ea, ca] : a)
        for (const auto& [eb, cb] : b) {
            auto [it, fresh] = out.emplace(ea + eb, ca * cb);
            if (!fresh) it->second += ca * cb;
        }
    std::erase_if(out, [](const auto& kv) { return kv.second.is_zero(); });
    return out;
}

inline TermMap poly_add(TermMap a, const TermMap& b) {
    for (const auto& [e, c] : b) {
        auto [it, fresh] = a.emplace(e, c);
        if (!fresh) it->second += c;
    }
    std::erase_if(a, [](const auto& kv) { return kv.second.is_zero(); });
    return a;
}

// Compares s+r or s*r with the product/sum of materialized prefixes. Only
// exponents the prefixes determine are compared: with prefixes ending at a_N
// and b_N, a product term at e is exact while e <= min(a_N + b_1, a_1 + b_N).
struct OracleCheck {
    bool ok = true;
    bool skipped = false;
    std::size_t compared = 0;
    std::string why;
};

inline OracleCheck check_against_oracle(const monomval::HahnStream& s, const monomval::HahnStream& r, bool mul, std::size_t N) {
    using monomval::EnumStatus;
    OracleCheck out;
    monomval::Prefix ps = s.enumerate(N), pr = r.enumerate(N);
    if (ps.status == EnumStatus::Unknown || pr.status == EnumStatus::Unknown || ps.terms.empty() || pr.terms.empty()) {
        out.skipped = true;
        return out;
    }
    std::optional<LexVec> bound;
    auto lower = [&](const LexVec& v) {
        if (!bound || v < *bound) bound = v;
    };
    if (mul) {
        if (ps.status == EnumStatus::Complete) lower(ps.terms.back().exp + pr.terms.front().exp);
        if (pr.status == EnumStatus::Complete) lower(ps.terms.front().exp + pr.terms.back().exp);
    } else {
        if (ps.status == EnumStatus::Complete) lower(ps.terms.back().exp);
        if (pr.status == EnumStatus::Complete) lower(pr.terms.back().exp);
    }
    TermMap o = mul ? poly_mul(to_map(ps.terms), to_map(pr.terms)) : poly_add(to_map(ps.terms), to_map(pr.terms));
    std::vector<monomval::Term> O;
    for (const auto& [e, c] : o)
        if (!bound || e <= *bound) O.push_back({e, c});

    monomval::HahnStream res = mul ? s * r : s + r;
    monomval::Prefix pa = res.enumerate(N / 2);
    std::vector<monomval::Term> A;
    for (const auto& t : pa.terms)
        if (!bound || t.exp <= *bound) A.push_back(t);
    bool crossed = pa.terms.size() > A.size() || pa.status == EnumStatus::Exhausted;
    std::size_t want = crossed ? O.size() : A.size();
    if (!crossed && pa.status == EnumStatus::Complete) want = N / 2;
    out.compared = A.size();
    if (A.size() != want || O.size() < want) {
        out.ok = false;
        out.why = "term count " + std::to_string(A.size()) + " vs oracle " + std::to_string(want);
        return out;
    }
    for (std::size_t k = 0; k < want; ++k)
        if (!(A[k] == O[k])) {
            out.ok = false;
            out.why = "term " + std::to_string(k) + ": " + A[k].exp.str() + " vs oracle " + O[k].exp.str();
            return out;
        }
    return out;
}

inline monomval::TowerElem random_unit(std::mt19937_64& rng, const monomval::GroundField& f) {
    if (f.is_rationals()) {
        long v = 0;
        while (v == 0) v = std::uniform_int_distribution<long>(-4, 4)(rng);
        return monomval::TowerElem(f, v);
    }
    long p = static_cast<long>(f.characteristic());
    return monomval::TowerElem(f, std::uniform_int_distribution<long>(1, p - 1)(rng));
}

inline LexVec random_positive(std::mt19937_64& rng, std::size_t m, long spread = 3) {
    std::uniform_int_distribution<long> d(-spread, spread);
    for (;;) {
        LexVec v(m);
        for (std::size_t k = 0; k < m; ++k) v[k] = d(rng);
        if (v.sign() > 0) return v;
    }
}

// Random streams over Z^2: a few finite terms and up to two families.
inline monomval::HahnStream random_stream(std::mt19937_64& rng, const monomval::GroundField& f, const monomval::SymbolTable& sym) {
    const std::size_t m = 2;
    monomval::HahnStream s(m, f);
    std::uniform_int_distribution<int> nt(0, 3), nf(0, 2), e(-2, 3), coin(0, 1);
    int terms = nt(rng), fams = nf(rng);
    if (terms + fams == 0) terms = 1;
    for (int k = 0; k < terms; ++k) s.add_term(LexVec{e(rng), e(rng)}, random_unit(rng, f));
    for (int k = 0; k < fams; ++k) {
        monomval::Family fam;
        fam.base = LexVec{e(rng), e(rng)};
        fam.step = random_positive(rng, m, 2);
        fam.lo = 1;
        if (coin(rng)) fam.hi = Int(std::uniform_int_distribution<long>(2, 6)(rng));
        monomval::TowerElem c = random_unit(rng, f), r = random_unit(rng, f);
        if (sym.size() > 0 && coin(rng)) r *= monomval::TowerElem::symbol(f, 0);
        fam.rule = monomval::CoeffRule(c, static_cast<unsigned>(coin(rng)), r);
        s.add_family(fam);
    }
    return s;
}

// Random nonzero polynomial in n variables: 1..4 terms of total degree <= deg.
inline monomval::TruncSeries random_series(std::mt19937_64& rng, const monomval::GroundField& f, std::size_t n, long deg = 3) {
    monomval::TruncSeries s(n, f);
    int terms = std::uniform_int_distribution<int>(1, 4)(rng);
    std::uniform_int_distribution<long> e(0, deg);
    for (int k = 0; k < terms; ++k) {
        monomval::Exponent a(n);
        long left = deg;
        for (std::size_t v = 0; v < n; ++v) {
            long x = std::uniform_int_distribution<long>(0, left)(rng);
            a[v] = x;
            left -= x;
        }
        std::shuffle(a.begin(), a.end(), rng);
        s.add_term(a, random_unit(rng, f));
    }
    return s.is_zero() ? random_series(rng, f, n, deg) : s;
}

inline std::vector<LexVec> random_values(std::mt19937_64& rng, std::size_t n, std::size_t m) {
    std::vector<LexVec> L;
    for (std::size_t k = 0; k < n; ++k) L.push_back(random_positive(rng, m));
    return L;
}

// ----------------------------------------------------------- synthetic specs

struct Synthetic {
    monomval::ValuationSpec spec;
    std::vector<LexVec> basis_values; // values of the basis Z variables
    std::string description;
};

// Picks psi on Z first (basis variables t^B, residue variables u t^B), then
// scrambles by monoidal maps with a basis multiplier and by polynomial
// coordinate changes, giving phi on X.
inline Synthetic synthetic_spec(std::mt19937_64& rng, const monomval::GroundField& f) {
    using namespace monomval;
    std::uniform_int_distribution<std::size_t> dn(2, 4);
    const std::size_t n = dn(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(3, n))(rng);
    Synthetic out;
    ValuationSpec& s = out.spec;
    s.field = f;
    s.m = m;
    for (std::size_t k = 0; k < n; ++k) s.vars.push_back("X" + std::to_string(k + 1));

    // which labels carry the basis
    std::vector<std::size_t> labels(n);
    for (std::size_t k = 0; k < n; ++k) labels[k] = k;
    std::shuffle(labels.begin(), labels.end(), rng);
    std::vector<std::size_t> basis(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(m));
    std::vector<std::size_t> res(labels.begin() + static_cast<std::ptrdiff_t>(m), labels.end());
    std::sort(res.begin(), res.end());
    std::vector<bool> is_basis(n, false);
    for (std::size_t b : basis) is_basis[b] = true;

    std::uniform_int_distribution<long> small(0, 2), lead(1, 2);
    std::vector<LexVec> B(n, LexVec(m));
    for (std::size_t k = 0; k < m; ++k) {
        LexVec v(m);
        v[k] = lead(rng);
        for (std::size_t c = k + 1; c < m; ++c) v[c] = small(rng) - 1;
        B[basis[k]] = v;
        out.basis_values.push_back(v);
    }
    std::vector<HahnStream> img(n);
    for (std::size_t k = 0; k < m; ++k) img[basis[k]] = HahnStream::monomial(m, TowerElem(f, 1L), B[basis[k]]);
    for (std::size_t r = 0; r < res.size(); ++r) {
        SymbolId u = s.symbols.add("u" + std::to_string(r + 1));
        LexVec v(m);
        long total = 0;
        for (std::size_t k = 0; k < m; ++k) {
            long c = small(rng);
            total += c;
            v += Int(c) * out.basis_values[k];
        }
        if (total == 0) v = out.basis_values[std::uniform_int_distribution<std::size_t>(0, m - 1)(rng)];
        B[res[r]] = v;
        img[res[r]] = HahnStream::monomial(m, TowerElem::symbol(f, u), v);
    }
    auto rank_of = [&](std::size_t label) {
        return std::find(res.begin(), res.end(), label) - res.begin();
    };

    std::string& d = out.description;
    int monoidals = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int k = 0; k < monoidals; ++k) {
        std::size_t i = basis[std::uniform_int_distribution<std::size_t>(0, m - 1)(rng)];
        std::size_t l = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        if (l == i) continue;
        long q = lead(rng);
        img[l] = img[l] * img[i].pow(q);
        d += " X" + std::to_string(l + 1) + "*=X" + std::to_string(i + 1) + "^" + std::to_string(q);
    }
    // triangular coordinate changes X_j = W_j + c W^R on the monomial level W:
    // basis variables use basis variables earlier in a random order, residue
    // variables use the basis and earlier residues
    const std::vector<HahnStream> w = img;
    std::vector<std::size_t> order = basis;
    std::shuffle(order.begin(), order.end(), rng);
    auto before = [&](std::size_t p, std::size_t j) {
        return std::find(order.begin(), order.end(), p) < std::find(order.begin(), order.end(), j);
    };
    for (std::size_t j = 0; j < n; ++j) {
        if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) continue;
        Exponent R(n);
        bool any = false;
        for (std::size_t p = 0; p < n; ++p) {
            if (p == j) continue;
            bool ok = is_basis[j] ? is_basis[p] && before(p, j) : is_basis[p] || rank_of(p) < rank_of(j);
            if (!ok) continue;
            R[p] = small(rng);
            any = any || R[p] != 0;
        }
        if (!any) continue;
        img[j] = img[j] + monomial_image(R, w).scaled(random_unit(rng, f));
        d += " X" + std::to_string(j + 1) + "+=c*W^R";
    }
    s.images = img;
    return out;
}

} // namespace oracle
