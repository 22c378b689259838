#include "monomval/series.hpp"

#include <algorithm>

namespace monomval {

long total_degree(const Exponent& a) {
    Int s = 0;
    for (const Int& x : a) s += x;
    if (!s.fits_slong_p()) throw InvalidInput("degree out of range");
    return s.get_si();
}

namespace {

Exponent add(const Exponent& a, const Exponent& b) {
    Exponent r(a);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] += b[k];
    return r;
}

Exponent sub(const Exponent& a, const Exponent& b) {
    Exponent r(a);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= b[k];
    return r;
}

std::optional<long> min_opt(std::optional<long> a, std::optional<long> b) {
    if (!a) return b;
    if (!b) return a;
    return std::min(*a, *b);
}

long min_body_degree(const TruncSeries::Terms& t) {
    long d = -1;
    for (const auto& [a, c] : t) {
        long x = total_degree(a);
        if (d < 0 || x < d) d = x;
    }
    return d;
}

} // namespace

TruncSeries TruncSeries::constant(std::size_t n, const TowerElem& c) {
    TruncSeries s(n, c.field());
    s.add_term(Exponent(n), c);
    return s;
}

TruncSeries TruncSeries::variable(std::size_t n, const GroundField& f, std::size_t k) {
    Exponent a(n);
    a.at(k) = 1;
    return monomial(n, TowerElem(f, 1L), a);
}

TruncSeries TruncSeries::monomial(std::size_t n, const TowerElem& c, const Exponent& a) {
    TruncSeries s(n, c.field());
    s.add_term(a, c);
    return s;
}

void TruncSeries::check(const TruncSeries& o) const {
    if (o.n_ != n_) throw LengthMismatch("series in " + std::to_string(n_) + " and " + std::to_string(o.n_) + " variables");
    if (!(o.f_ == f_)) throw InvalidInput("series over different ground fields");
}

void TruncSeries::rebase(const Exponent& s) {
    Exponent d = sub(shift_, s);
    for (const Int& x : d)
        if (sgn(x) < 0) throw ConsistencyError("rebase must lower the shift");
    if (std::all_of(d.begin(), d.end(), [](const Int& x) { return sgn(x) == 0; })) return;
    Terms nb;
    for (const auto& [a, c] : body_) nb.emplace(add(a, d), c);
    body_ = std::move(nb);
    if (witness_) *witness_ += total_degree(d);
    shift_ = s;
}

void TruncSeries::lower_shift(const Exponent& s) {
    Exponent t(shift_);
    for (std::size_t k = 0; k < n_; ++k) t[k] = std::min(t[k], s.at(k));
    rebase(t);
}

void TruncSeries::tighten_shift() {
    if (witness_) throw InvalidInput("tighten_shift needs an exact series");
    if (body_.empty()) {
        shift_.assign(n_, Int(0));
        return;
    }
    Terms all = terms();
    Exponent s = all.begin()->first;
    for (const auto& [a, c] : all)
        for (std::size_t k = 0; k < n_; ++k) s[k] = std::min(s[k], a[k]);
    body_.clear();
    shift_ = s;
    for (const auto& [a, c] : all) body_.emplace(sub(a, s), c);
}

void TruncSeries::clean() {
    std::erase_if(body_, [](const auto& kv) { return kv.second.is_zero(); });
    if (witness_) std::erase_if(body_, [&](const auto& kv) { return total_degree(kv.first) > *witness_; });
}

TruncSeries::Terms TruncSeries::terms() const {
    Terms t;
    for (const auto& [a, c] : body_) t.emplace(add(a, shift_), c);
    return t;
}

void TruncSeries::add_term(const Exponent& a, const TowerElem& c) {
    if (a.size() != n_) throw LengthMismatch("exponent of length " + std::to_string(a.size()) + " for " + std::to_string(n_) + " variables");
    if (c.is_zero()) return;
    Exponent s = shift_;
    bool lower = false;
    for (std::size_t k = 0; k < n_; ++k)
        if (a[k] < s[k]) {
            s[k] = a[k];
            lower = true;
        }
    if (lower) rebase(s);
    Exponent b = sub(a, shift_);
    if (witness_ && total_degree(b) > *witness_) return;
    auto it = body_.find(b);
    if (it == body_.end()) body_.emplace(std::move(b), c);
    else if ((it->second += c).is_zero()) body_.erase(it);
}

void TruncSeries::truncate(long d) {
    witness_ = min_opt(witness_, d);
    clean();
}

TruncSeries TruncSeries::operator-() const { return scaled(TowerElem(f_, -1L)); }

TruncSeries TruncSeries::scaled(const TowerElem& c) const {
    TruncSeries r(*this);
    if (c.is_zero()) return TruncSeries(n_, f_);
    for (auto& [a, x] : r.body_) x *= c;
    return r;
}

TruncSeries& TruncSeries::operator+=(const TruncSeries& o) {
    check(o);
    TruncSeries other(o);
    Exponent s(n_);
    for (std::size_t k = 0; k < n_; ++k) s[k] = std::min(shift_[k], other.shift_[k]);
    rebase(s);
    other.rebase(s);
    witness_ = min_opt(witness_, other.witness_);
    for (const auto& [a, c] : other.body_) {
        auto it = body_.find(a);
        if (it == body_.end()) body_.emplace(a, c);
        else it->second += c;
    }
    clean();
    return *this;
}

TruncSeries& TruncSeries::operator-=(const TruncSeries& o) { return *this += -o; }

TruncSeries operator*(const TruncSeries& a, const TruncSeries& b) {
    a.check(b);
    TruncSeries r(a.n_, a.f_);
    if (a.is_zero() || b.is_zero()) return r;
    r.shift_ = add(a.shift_, b.shift_);
    long ma = min_body_degree(a.body_), mb = min_body_degree(b.body_);
    std::optional<long> w;
    // unknown part of a (degree > Da) times b has degree > Da + mindeg(b)
    if (a.witness_) w = min_opt(w, *a.witness_ + (mb < 0 ? *b.witness_ + 1 : mb));
    if (b.witness_) w = min_opt(w, *b.witness_ + (ma < 0 ? *a.witness_ + 1 : ma));
    r.witness_ = w;
    for (const auto& [x, cx] : a.body_)
        for (const auto& [y, cy] : b.body_) {
            Exponent e = add(x, y);
            if (w && total_degree(e) > *w) continue;
            auto it = r.body_.find(e);
            TowerElem c = cx * cy;
            if (it == r.body_.end()) r.body_.emplace(std::move(e), std::move(c));
            else it->second += c;
        }
    r.clean();
    return r;
}

TruncSeries TruncSeries::inv(long degree) const {
    if (body_.empty()) {
        if (witness_) throw Inconclusive("inverse of a series with no certified terms");
        throw DivisionByZero("inverse of the zero series");
    }
    // common monomial factor
    Exponent g = body_.begin()->first;
    for (const auto& [a, c] : body_)
        for (std::size_t k = 0; k < n_; ++k) g[k] = std::min(g[k], a[k]);
    // unknown terms need not share the factor
    if (witness_) g = Exponent(n_);
    TruncSeries u(*this);
    Exponent s2 = add(shift_, g);
    u.body_.clear();
    for (const auto& [a, c] : body_) u.body_.emplace(sub(a, g), c);
    u.shift_ = Exponent(n_);
    Exponent neg(n_);
    for (std::size_t k = 0; k < n_; ++k) neg[k] = -s2[k];

    auto c0 = u.body_.find(Exponent(n_));
    if (c0 == u.body_.end())
        throw InvalidInput("series is not a unit times a monomial; cannot invert in the power series ring");
    TowerElem c = c0->second;
    if (u.body_.size() == 1 && !u.witness_) return monomial(n_, c.inv(), neg);

    // u = c (1 + h), h of min degree >= 1
    TruncSeries h = u.scaled(c.inv()) - constant(n_, TowerElem(f_, 1L));
    TruncSeries mh = -h;
    TruncSeries acc = constant(n_, TowerElem(f_, 1L));
    TruncSeries pw = acc;
    for (long k = 1; k <= degree; ++k) {
        pw = pw * mh;
        pw.truncate(degree);
        if (pw.is_zero()) break;
        acc += pw;
    }
    if (!h.is_zero()) acc.truncate(degree);
    TruncSeries out = acc.scaled(c.inv()) * monomial(n_, TowerElem(f_, 1L), neg);
    return out;
}

TruncSeries TruncSeries::pow(long e, long degree) const {
    if (e < 0) return inv(degree).pow(-e, degree);
    TruncSeries acc = constant(n_, TowerElem(f_, 1L));
    TruncSeries base = *this;
    while (e > 0) {
        if (e & 1) acc = acc * base;
        e >>= 1;
        if (e) base = base * base;
    }
    return acc;
}

bool TruncSeries::uses_variable(std::size_t k) const {
    if (sgn(shift_.at(k)) != 0) return true;
    return std::any_of(body_.begin(), body_.end(), [&](const auto& kv) { return sgn(kv.first[k]) != 0; });
}

bool TruncSeries::operator==(const TruncSeries& o) const {
    return n_ == o.n_ && f_ == o.f_ && witness_ == o.witness_ && terms() == o.terms();
}

std::string TruncSeries::str(const std::vector<std::string>& vars, const SymbolTable* names) const {
    std::string out;
    Terms t = terms();
    for (auto it = t.rbegin(); it != t.rend(); ++it) {
        const auto& [a, c] = *it;
        std::string mono;
        for (std::size_t k = 0; k < n_; ++k) {
            if (sgn(a[k]) == 0) continue;
            if (!mono.empty()) mono += "*";
            mono += vars.at(k);
            if (a[k] != 1) mono += "^" + (sgn(a[k]) < 0 ? "(" + a[k].get_str() + ")" : a[k].get_str());
        }
        std::string cs = c.str(names);
        std::string body = cs[0] == '-' ? cs.substr(1) : cs;
        bool wrap = body.find_first_of("+-/") != std::string::npos;
        std::string term;
        if (mono.empty()) term = wrap ? "(" + cs + ")" : cs;
        else if (cs == "1") term = mono;
        else if (cs == "-1") term = "-" + mono;
        else term = (wrap ? "(" + cs + ")" : cs) + "*" + mono;
        if (out.empty()) out = term;
        else if (term[0] == '-') out += " - " + term.substr(1);
        else out += " + " + term;
    }
    if (witness_) {
        std::string shiftm;
        for (std::size_t k = 0; k < n_; ++k)
            if (sgn(shift_[k]) != 0) shiftm += (shiftm.empty() ? "" : "*") + vars.at(k) + "^" + shift_[k].get_str();
        std::string o = "O(deg " + std::to_string(*witness_ + 1) + (shiftm.empty() ? "" : ", times " + shiftm) + ")";
        out = out.empty() ? o : out + " + " + o;
    }
    return out.empty() ? "0" : out;
}

std::optional<LexVec> monomial_value(const TruncSeries& f, const std::vector<LexVec>& L) {
    if (L.size() != f.nvars()) throw LengthMismatch("monomial_value: " + std::to_string(L.size()) + " values for " + std::to_string(f.nvars()) + " variables");
    std::optional<LexVec> best;
    for (const auto& [a, c] : f.terms()) {
        LexVec v = degree_L(a, L);
        if (!best || v < *best) best = v;
    }
    if (f.is_exact()) return best;
    if (L.empty()) throw Inconclusive("no values");
    LexVec lmin = L.front();
    for (const auto& l : L) {
        if (l.sign() <= 0) throw Inconclusive("cannot bound a truncated series when some value is not >_lex 0");
        if (l < lmin) lmin = l;
    }
    LexVec bound = degree_L(f.shift(), L) + Int(*f.witness() + 1) * lmin;
    if (best && *best < bound) return best;
    throw Inconclusive("truncation at degree " + std::to_string(*f.witness()) + " cannot certify the minimum");
}

TruncSeries monoidal_subst(const TruncSeries& f, std::size_t l, std::size_t i, const Int& q) {
    if (l == i) throw InvalidInput("monoidal_subst: l and i must differ");
    if (l >= f.n_ || i >= f.n_) throw InvalidInput("monoidal_subst: variable index out of range");
    if (sgn(q) < 0) throw InvalidInput("monoidal_subst: q must be nonnegative");
    TruncSeries r(f);
    auto map = [&](const Exponent& a) {
        Exponent b(a);
        b[i] += q * a[l];
        return b;
    };
    r.shift_ = map(f.shift_);
    r.body_.clear();
    for (const auto& [a, c] : f.body_) r.body_.emplace(map(a), c);
    // body degrees only grow, so the witness stays valid
    return r;
}

TruncSeries coordinate_change(const TruncSeries& f, std::size_t j, const TruncSeries& correction, long degree) {
    if (j >= f.nvars()) throw InvalidInput("coordinate_change: variable index out of range");
    if (correction.nvars() != f.nvars()) throw LengthMismatch("coordinate_change: correction has a different variable count");
    if (correction.uses_variable(j)) throw InvalidInput("coordinate_change: correction refers to the variable being changed");
    if (correction.is_zero()) return f;
    if (!f.is_exact()) {
        bool ok = true;
        for (const Int& x : correction.shift()) ok = ok && sgn(x) >= 0;
        for (const auto& [a, c] : correction.body()) ok = ok && total_degree(add(a, correction.shift())) >= 1;
        ok = ok && sgn(f.shift()[j]) >= 0;
        if (!ok) throw InvalidInput("coordinate_change: a truncated series needs a correction of order >= 1 without negative powers");
    }
    TruncSeries zj = TruncSeries::variable(f.nvars(), f.field(), j) + correction;
    TruncSeries out(f.nvars(), f.field());
    for (const auto& [a, c] : f.terms()) {
        if (sgn(a[j]) < 0) throw InvalidInput("coordinate_change: negative power of the changed variable");
        Exponent rest(a);
        rest[j] = 0;
        if (!a[j].fits_slong_p()) throw InvalidInput("coordinate_change: exponent out of range");
        out += TruncSeries::monomial(f.nvars(), c, rest) * zj.pow(a[j].get_si(), degree);
    }
    if (!f.is_exact()) {
        // unknown terms of f keep their total degree and stay above the
        // shift (with the changed variable's entry dropped to zero)
        Exponent floor = f.shift();
        floor[j] = 0;
        out.lower_shift(floor);
        long w = *f.witness() + total_degree(f.shift());
        out.truncate(w - total_degree(out.shift()));
    }
    return out;
}

TruncSeries permute(const TruncSeries& f, const std::vector<std::size_t>& perm) {
    if (perm.size() != f.nvars()) throw LengthMismatch("permute: wrong permutation length");
    TruncSeries r(f.nvars(), f.field());
    for (const auto& [a, c] : f.terms()) {
        Exponent b(f.nvars());
        for (std::size_t k = 0; k < a.size(); ++k) b.at(perm[k]) = a[k];
        r.add_term(b, c);
    }
    if (f.witness()) {
        Exponent floor(f.nvars());
        for (std::size_t k = 0; k < f.nvars(); ++k) floor.at(perm[k]) = f.shift()[k];
        r.lower_shift(floor);
        r.truncate(*f.witness() + total_degree(f.shift()) - total_degree(r.shift()));
    }
    return r;
}

TruncSeries eval_series(const expr::Node& n, const std::vector<std::string>& vars, const GroundField& f,
                        const SymbolTable& symbols, long degree) {
    using K = expr::Node::Kind;
    const std::size_t nv = vars.size();
    auto rec = [&](const expr::Node& x) { return eval_series(x, vars, f, symbols, degree); };
    switch (n.kind) {
    case K::Number: return TruncSeries::constant(nv, TowerElem(f, n.number));
    case K::Ident: {
        auto it = std::find(vars.begin(), vars.end(), n.ident);
        if (it != vars.end()) return TruncSeries::variable(nv, f, static_cast<std::size_t>(it - vars.begin()));
        auto s = symbols.find(n.ident);
        if (!s) throw ParseError("unknown name '" + n.ident + "'");
        return TruncSeries::constant(nv, TowerElem::symbol(f, *s));
    }
    case K::Add: return rec(*n.lhs) + rec(*n.rhs);
    case K::Sub: return rec(*n.lhs) - rec(*n.rhs);
    case K::Mul: return rec(*n.lhs) * rec(*n.rhs);
    case K::Neg: return -rec(*n.lhs);
    case K::Div: {
        TruncSeries d = rec(*n.rhs);
        if (d.is_zero()) throw ParseError("division by zero");
        return rec(*n.lhs) * d.inv(degree);
    }
    case K::Pow: {
        Int e = expr::eval_integer(*n.rhs);
        if (!e.fits_slong_p() || abs(e) > 4096) throw ParseError("exponent out of range");
        return rec(*n.lhs).pow(e.get_si(), degree);
    }
    }
    throw ParseError("bad series expression");
}

TruncSeries parse_series(std::string_view text, const std::vector<std::string>& vars, const GroundField& f,
                         const SymbolTable& symbols, long degree) {
    return eval_series(*expr::parse(text), vars, f, symbols, degree);
}

} // namespace monomval
