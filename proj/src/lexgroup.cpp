#include "monomval/lexgroup.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace monomval {

LexVec::LexVec(std::initializer_list<long> coords) {
    c_.reserve(coords.size());
    for (long x : coords) c_.emplace_back(x);
}

LexVec LexVec::unit(std::size_t m, std::size_t k) {
    LexVec v(m);
    v.c_.at(k) = 1;
    return v;
}

bool LexVec::is_zero() const {
    return std::all_of(c_.begin(), c_.end(), [](const Int& x) { return sgn(x) == 0; });
}

int LexVec::sign() const {
    for (const Int& x : c_)
        if (int s = sgn(x); s != 0) return s;
    return 0;
}

std::size_t LexVec::leading_index() const {
    for (std::size_t k = 0; k < c_.size(); ++k)
        if (sgn(c_[k]) != 0) return k;
    return c_.size();
}

LexVec& LexVec::operator+=(const LexVec& o) {
    if (o.size() != size()) throw LengthMismatch("LexVec addition: lengths " + std::to_string(size()) + " and " + std::to_string(o.size()));
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
}

LexVec& LexVec::operator-=(const LexVec& o) {
    if (o.size() != size()) throw LengthMismatch("LexVec subtraction: lengths " + std::to_string(size()) + " and " + std::to_string(o.size()));
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
}

LexVec LexVec::operator-() const {
    LexVec r(*this);
    for (Int& x : r.c_) x = -x;
    return r;
}

LexVec operator*(const Int& k, const LexVec& v) {
    LexVec r(v);
    for (Int& x : r.c_) x *= k;
    return r;
}

std::strong_ordering operator<=>(const LexVec& a, const LexVec& b) {
    if (a.size() != b.size()) throw LengthMismatch("lex comparison: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    for (std::size_t k = 0; k < a.size(); ++k) {
        int c = cmp(a.c_[k], b.c_[k]);
        if (c < 0) return std::strong_ordering::less;
        if (c > 0) return std::strong_ordering::greater;
    }
    return std::strong_ordering::equal;
}

std::string LexVec::str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t k = 0; k < c_.size(); ++k) os << (k ? "," : "") << c_[k].get_str();
    os << ')';
    return os.str();
}

std::strong_ordering lex_cmp(const LexVec& a, const LexVec& b) { return a <=> b; }

LexVec degree_L(std::span<const Int> exponents, std::span<const LexVec> L) {
    if (exponents.size() != L.size())
        throw LengthMismatch("degree_L: " + std::to_string(exponents.size()) + " exponents for " + std::to_string(L.size()) + " values");
    if (L.empty()) throw LengthMismatch("degree_L: empty value list");
    LexVec acc(L.front().size());
    for (std::size_t i = 0; i < L.size(); ++i)
        if (sgn(exponents[i]) != 0) acc += exponents[i] * L[i];
    return acc;
}

namespace {

void apply_op(std::vector<LexVec>& rows, const RowOp& op) {
    if (op.l >= rows.size() || op.i >= rows.size()) throw InvalidInput("row operation index out of range");
    if (op.kind == RowOp::Kind::Swap) {
        std::swap(rows[op.l], rows[op.i]);
    } else {
        rows[op.l] += op.q * rows[op.i];
    }
}

// Stable ascending sort realised as explicit swaps so the log stays replayable.
void reorder(std::vector<LexVec>& rows, RowOpLog& log) {
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rows[a] < rows[b]; });
    // where[x] = current position of original row x; at[p] = original row at p
    std::vector<std::size_t> where(rows.size()), at(rows.size());
    std::iota(where.begin(), where.end(), 0);
    std::iota(at.begin(), at.end(), 0);
    for (std::size_t p = 0; p < rows.size(); ++p) {
        std::size_t want = order[p];
        std::size_t cur = where[want];
        if (cur == p) continue;
        RowOp op = RowOp::swap(p, cur);
        apply_op(rows, op);
        log.push_back(op);
        std::size_t displaced = at[p];
        std::swap(at[p], at[cur]);
        where[want] = p;
        where[displaced] = cur;
    }
}

void record(std::vector<LexVec>& rows, RowOpLog& log, std::size_t l, std::size_t i, const Int& q) {
    if (sgn(q) == 0) return;
    RowOp op = RowOp::add(l, i, q);
    apply_op(rows, op);
    log.push_back(std::move(op));
}

} // namespace

EchelonResult echelon_reduce(std::vector<LexVec> rows) {
    if (rows.empty()) throw InvalidInput("echelon_reduce: empty matrix");
    const std::size_t m = rows.front().size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m) throw LengthMismatch("echelon_reduce: row " + std::to_string(r + 1) + " has length " + std::to_string(rows[r].size()));
        if (rows[r].sign() <= 0) throw InvalidInput("echelon_reduce: row " + std::to_string(r + 1) + " " + rows[r].str() + " is not >_lex 0");
    }

    EchelonResult res;
    res.basis.dim = m;

    // already in echelon shape with distinct pivot columns: nothing to do
    bool echelon = true;
    for (std::size_t r = 1; r < rows.size() && echelon; ++r) echelon = rows[r].leading_index() > rows[r - 1].leading_index();
    if (echelon) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
            res.basis.basis.push_back(rows[r]);
            res.basis.pivot_cols.push_back(rows[r].leading_index());
            res.basis.pivots.push_back(rows[r][rows[r].leading_index()]);
            res.basis_rows.push_back(r);
        }
        res.rows = std::move(rows);
        return res;
    }

    reorder(rows, res.log);

    std::size_t hi = rows.size();
    while (hi > 0) {
        std::size_t col = m;
        for (std::size_t r = 0; r < hi; ++r) col = std::min(col, rows[r].leading_index());
        std::size_t piv = 0;
        while (sgn(rows[piv][col]) == 0) ++piv;

        bool settled = true;
        for (std::size_t l = piv + 1; l < hi && settled; ++l) settled = rows[l] == rows[piv];
        if (settled) {
            res.basis.basis.push_back(rows[piv]);
            res.basis.pivots.push_back(rows[piv][col]);
            res.basis.pivot_cols.push_back(col);
            res.basis_rows.push_back(piv);
            hi = piv;
            continue;
        }

        for (std::size_t l = piv + 1; l < hi; ++l) {
            const Int& p = rows[piv][col];
            Int q, r;
            mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), rows[l][col].get_mpz_t(), p.get_mpz_t());
            if (sgn(r) != 0) {
                record(rows, res.log, l, piv, Int(-q));
            } else if ((rows[l] - q * rows[piv]).sign() > 0) {
                record(rows, res.log, l, piv, Int(-q));
            } else {
                // q == 1 leaves an identical row; nothing to record.
                record(rows, res.log, l, piv, Int(1 - q));
            }
        }
        reorder(rows, res.log);
    }
    res.rows = std::move(rows);
    return res;
}

std::vector<LexVec> replay(std::vector<LexVec> rows, const RowOpLog& log) {
    for (const RowOp& op : log) apply_op(rows, op);
    return rows;
}

std::optional<std::vector<Int>> try_solve_in_basis(const LexVec& a, const SubgroupBasis& b) {
    if (a.size() != b.dim) throw LengthMismatch("solve_in_basis: value " + a.str() + " not in Z^" + std::to_string(b.dim));
    LexVec rem = a;
    std::vector<Int> coords(b.rank());
    std::size_t next_col = 0;
    for (std::size_t k = 0; k < b.rank(); ++k) {
        const std::size_t pc = b.pivot_cols[k];
        for (std::size_t c = next_col; c < pc; ++c)
            if (sgn(rem[c]) != 0) return std::nullopt;
        if (!mpz_divisible_p(rem[pc].get_mpz_t(), b.pivots[k].get_mpz_t())) return std::nullopt;
        coords[k] = rem[pc] / b.pivots[k];
        rem -= coords[k] * b.basis[k];
        next_col = pc + 1;
    }
    if (!rem.is_zero()) return std::nullopt;
    return coords;
}

std::vector<Int> solve_in_basis(const LexVec& a, const SubgroupBasis& b) {
    auto r = try_solve_in_basis(a, b);
    if (!r) throw NotInSubgroup(a.str() + " is not in the subgroup generated by the current basis");
    return *r;
}

bool in_subgroup(const LexVec& a, const SubgroupBasis& b) { return try_solve_in_basis(a, b).has_value(); }

} // namespace monomval
