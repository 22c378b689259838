#include "monomval/coeff.hpp"

#include <algorithm>
#include <sstream>

namespace monomval {

// ---------------------------------------------------------------- fields

GroundField GroundField::prime(std::uint64_t p) {
    if (p < 2) throw InvalidInput("characteristic " + std::to_string(p) + " is not prime");
    for (std::uint64_t d = 2; d * d <= p; ++d)
        if (p % d == 0) throw InvalidInput("characteristic " + std::to_string(p) + " is not prime");
    return GroundField(p);
}

std::string GroundField::str() const { return p_ == 0 ? "rationals" : "prime " + std::to_string(p_); }

Scalar::Scalar(const GroundField& f, long v) : p_(f.characteristic()), v_(v) { reduce(); }
Scalar::Scalar(const GroundField& f, const Int& v) : p_(f.characteristic()), v_(v) { reduce(); }
Scalar::Scalar(const GroundField& f, const mpq_class& v) : p_(f.characteristic()), v_(v) { reduce(); }

GroundField Scalar::field() const { return p_ == 0 ? GroundField::rationals() : GroundField::prime(p_); }

void Scalar::reduce() {
    v_.canonicalize();
    if (p_ == 0) return;
    Int p(static_cast<unsigned long>(p_));
    Int num = v_.get_num() % p;
    Int den = v_.get_den() % p;
    if (sgn(den) == 0) throw DivisionByZero("denominator vanishes in characteristic " + std::to_string(p_));
    if (den != 1) {
        Int inv;
        mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), p.get_mpz_t());
        num *= inv;
    }
    num %= p;
    if (sgn(num) < 0) num += p;
    v_ = mpq_class(num);
}

void Scalar::check(const Scalar& o) const {
    if (p_ != o.p_) throw InvalidInput("arithmetic across different ground fields");
}

Scalar Scalar::operator-() const {
    Scalar r(*this);
    r.v_ = -r.v_;
    r.reduce();
    return r;
}

Scalar& Scalar::operator+=(const Scalar& o) {
    check(o);
    v_ += o.v_;
    reduce();
    return *this;
}

Scalar& Scalar::operator-=(const Scalar& o) {
    check(o);
    v_ -= o.v_;
    reduce();
    return *this;
}

Scalar& Scalar::operator*=(const Scalar& o) {
    check(o);
    v_ *= o.v_;
    reduce();
    return *this;
}

Scalar& Scalar::operator/=(const Scalar& o) { return *this *= o.inv(); }

Scalar Scalar::inv() const {
    if (is_zero()) throw DivisionByZero("inverse of zero");
    Scalar r(*this);
    r.v_ = 1 / r.v_;
    r.reduce();
    return r;
}

std::string Scalar::str() const { return v_.get_str(); }

// ---------------------------------------------------------------- monomials

namespace {

void trim(Mono& m) {
    while (!m.empty() && m.back() == 0) m.pop_back();
}

Mono mono_mul(const Mono& a, const Mono& b) {
    Mono r(std::max(a.size(), b.size()), 0);
    for (std::size_t k = 0; k < a.size(); ++k) r[k] += a[k];
    for (std::size_t k = 0; k < b.size(); ++k) r[k] += b[k];
    return r;
}

std::optional<Mono> mono_div(const Mono& a, const Mono& b) {
    if (b.size() > a.size()) {
        for (std::size_t k = a.size(); k < b.size(); ++k)
            if (b[k] != 0) return std::nullopt;
    }
    Mono r(a);
    for (std::size_t k = 0; k < b.size(); ++k) {
        if (b[k] > r[k]) return std::nullopt;
        r[k] -= b[k];
    }
    trim(r);
    return r;
}

std::uint32_t exp_at(const Mono& m, std::size_t k) { return k < m.size() ? m[k] : 0; }

} // namespace

bool MonoLess::operator()(const Mono& a, const Mono& b) const {
    std::size_t n = std::max(a.size(), b.size());
    for (std::size_t k = n; k-- > 0;) {
        std::uint32_t x = exp_at(a, k), y = exp_at(b, k);
        if (x != y) return x < y;
    }
    return false;
}

// ---------------------------------------------------------------- polynomials

Poly::Poly(const GroundField& f, const Scalar& c) : f_(f) {
    if (!c.is_zero()) t_.emplace(Mono{}, c);
}

Poly Poly::symbol(const GroundField& f, SymbolId s, std::uint32_t power) {
    Poly p(f);
    Mono m(s + 1, 0);
    m[s] = power;
    trim(m);
    p.t_.emplace(std::move(m), Scalar(f, 1L));
    return p;
}

bool Poly::is_constant() const { return t_.empty() || (t_.size() == 1 && t_.begin()->first.empty()); }

Scalar Poly::constant() const {
    if (!is_constant()) throw InvalidInput("polynomial is not constant");
    return t_.empty() ? Scalar(f_, 0L) : t_.begin()->second;
}

const Scalar& Poly::leading_coeff() const {
    if (t_.empty()) throw InvalidInput("leading coefficient of zero polynomial");
    return t_.rbegin()->second;
}

const Mono& Poly::leading_mono() const {
    if (t_.empty()) throw InvalidInput("leading monomial of zero polynomial");
    return t_.rbegin()->first;
}

std::optional<SymbolId> Poly::main_symbol() const {
    std::optional<SymbolId> best;
    for (const auto& [m, c] : t_)
        if (!m.empty() && (!best || m.size() - 1 > *best)) best = static_cast<SymbolId>(m.size() - 1);
    return best;
}

std::uint32_t Poly::degree_in(SymbolId s) const {
    std::uint32_t d = 0;
    for (const auto& [m, c] : t_) d = std::max(d, exp_at(m, s));
    return d;
}

std::set<SymbolId> Poly::symbols() const {
    std::set<SymbolId> out;
    for (const auto& [m, c] : t_)
        for (std::size_t k = 0; k < m.size(); ++k)
            if (m[k] != 0) out.insert(static_cast<SymbolId>(k));
    return out;
}

std::vector<Poly> Poly::coeffs_in(SymbolId s) const {
    std::vector<Poly> out(degree_in(s) + 1, Poly(f_));
    for (const auto& [m, c] : t_) {
        std::uint32_t d = exp_at(m, s);
        Mono rest(m);
        if (s < rest.size()) rest[s] = 0;
        trim(rest);
        out[d].add_term(rest, c);
    }
    return out;
}

Poly Poly::from_coeffs(const GroundField& f, SymbolId s, const std::vector<Poly>& cs) {
    Poly out(f);
    for (std::size_t d = 0; d < cs.size(); ++d) {
        if (cs[d].is_zero()) continue;
        out += cs[d] * Poly::symbol(f, s, static_cast<std::uint32_t>(d));
    }
    return out;
}

void Poly::add_term(const Mono& m, const Scalar& c) {
    if (c.is_zero()) return;
    auto it = t_.find(m);
    if (it == t_.end()) {
        t_.emplace(m, c);
        return;
    }
    it->second += c;
    if (it->second.is_zero()) t_.erase(it);
}

Poly Poly::operator-() const {
    Poly r(*this);
    for (auto& [m, c] : r.t_) c = -c;
    return r;
}

Poly& Poly::operator+=(const Poly& o) {
    if (!(f_ == o.f_)) throw InvalidInput("polynomials over different ground fields");
    for (const auto& [m, c] : o.t_) add_term(m, c);
    return *this;
}

Poly& Poly::operator-=(const Poly& o) {
    if (!(f_ == o.f_)) throw InvalidInput("polynomials over different ground fields");
    for (const auto& [m, c] : o.t_) add_term(m, -c);
    return *this;
}

Poly operator*(const Poly& a, const Poly& b) {
    if (!(a.f_ == b.f_)) throw InvalidInput("polynomials over different ground fields");
    Poly r(a.f_);
    for (const auto& [ma, ca] : a.t_)
        for (const auto& [mb, cb] : b.t_) r.add_term(mono_mul(ma, mb), ca * cb);
    return r;
}

Poly Poly::scaled(const Scalar& c) const {
    Poly r(f_);
    if (c.is_zero()) return r;
    for (const auto& [m, x] : t_) r.t_.emplace(m, x * c);
    return r;
}

Poly Poly::pow(std::uint32_t e) const {
    Poly result(f_, Scalar(f_, 1L));
    Poly base(*this);
    while (e) {
        if (e & 1u) result = result * base;
        e >>= 1u;
        if (e) base = base * base;
    }
    return result;
}

std::optional<Poly> Poly::try_divide(const Poly& a, const Poly& b) {
    if (b.is_zero()) throw DivisionByZero("polynomial division by zero");
    Poly q(a.f_), r(a);
    const Mono& lb = b.leading_mono();
    const Scalar lcb = b.leading_coeff();
    while (!r.is_zero()) {
        auto t = mono_div(r.leading_mono(), lb);
        if (!t) return std::nullopt;
        Poly step(a.f_);
        step.t_.emplace(*t, r.leading_coeff() / lcb);
        q += step;
        r -= step * b;
    }
    return q;
}

Poly Poly::divide_exact(const Poly& a, const Poly& b) {
    auto q = try_divide(a, b);
    if (!q) throw InvalidInput("inexact polynomial division");
    return *q;
}

namespace {

Poly monic(const Poly& p) {
    if (p.is_zero()) return p;
    return p.scaled(p.leading_coeff().inv());
}

void trim(std::vector<Poly>& u) {
    while (!u.empty() && u.back().is_zero()) u.pop_back();
}

// Pseudo-remainder of univariate polynomials with polynomial coefficients.
std::vector<Poly> prem(std::vector<Poly> r, const std::vector<Poly>& b) {
    const std::size_t db = b.size() - 1;
    const Poly& lcb = b.back();
    trim(r);
    while (!r.empty() && r.size() - 1 >= db) {
        const std::size_t dr = r.size() - 1;
        Poly lr = r.back();
        for (Poly& c : r) c = c * lcb;
        for (std::size_t k = 0; k <= db; ++k) r[k + dr - db] -= lr * b[k];
        trim(r);
    }
    return r;
}

Poly content(const std::vector<Poly>& u) {
    Poly g(u.front().field());
    for (const Poly& c : u) {
        g = Poly::gcd(g, c);
        if (g.is_constant() && !g.is_zero()) break;
    }
    return g;
}

std::vector<Poly> primitive_part(std::vector<Poly> u) {
    Poly c = content(u);
    for (Poly& x : u) x = Poly::divide_exact(x, c);
    return u;
}

} // namespace

Poly Poly::gcd(const Poly& a, const Poly& b) {
    if (a.is_zero()) return monic(b);
    if (b.is_zero()) return monic(a);
    const GroundField& f = a.field();
    if (a.is_constant() || b.is_constant()) return Poly(f, Scalar(f, 1L));

    SymbolId s = std::max(a.main_symbol().value_or(0), b.main_symbol().value_or(0));
    std::vector<Poly> ua = a.coeffs_in(s), ub = b.coeffs_in(s);
    Poly ca = content(ua), cb = content(ub);
    Poly c = gcd(ca, cb);
    if (ua.size() == 1 || ub.size() == 1) return monic(c);
    for (Poly& x : ua) x = divide_exact(x, ca);
    for (Poly& x : ub) x = divide_exact(x, cb);
    if (ua.size() < ub.size()) std::swap(ua, ub);
    while (!ub.empty()) {
        std::vector<Poly> r = prem(ua, ub);
        ua = std::move(ub);
        ub = r.empty() ? std::move(r) : primitive_part(std::move(r));
    }
    ua = primitive_part(std::move(ua));
    return monic(c * from_coeffs(f, s, ua));
}

std::string Poly::str(const SymbolTable* names) const {
    if (t_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto it = t_.rbegin(); it != t_.rend(); ++it) {
        const auto& [m, c] = *it;
        std::string cs = c.str();
        bool neg = !cs.empty() && cs[0] == '-';
        if (neg) cs = cs.substr(1);
        if (!first || neg) os << (neg ? "-" : "+");
        first = false;
        std::ostringstream ms;
        bool firstf = true;
        for (std::size_t k = 0; k < m.size(); ++k) {
            if (m[k] == 0) continue;
            if (!firstf) ms << '*';
            firstf = false;
            ms << (names ? names->name(static_cast<SymbolId>(k)) : "w" + std::to_string(k));
            if (m[k] != 1) ms << '^' << m[k];
        }
        if (m.empty()) {
            os << cs;
        } else if (cs == "1") {
            os << ms.str();
        } else {
            os << cs << '*' << ms.str();
        }
    }
    return os.str();
}

// ---------------------------------------------------------------- symbols

SymbolTable::SymbolTable(std::vector<std::string> names) {
    for (auto& n : names) add(n);
}

SymbolId SymbolTable::add(const std::string& name) {
    if (find(name)) throw InvalidInput("symbol '" + name + "' declared twice");
    names_.push_back(name);
    return static_cast<SymbolId>(names_.size() - 1);
}

std::optional<SymbolId> SymbolTable::find(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<SymbolId>(it - names_.begin());
}

const std::string& SymbolTable::name(SymbolId s) const {
    if (s >= names_.size()) throw InvalidInput("unknown symbol id " + std::to_string(s));
    return names_[s];
}

// ---------------------------------------------------------------- tower

TowerElem::TowerElem(const GroundField& f) : num_(f), den_(f, Scalar(f, 1L)) {}
TowerElem::TowerElem(const GroundField& f, long c) : num_(f, Scalar(f, c)), den_(f, Scalar(f, 1L)) {}
TowerElem::TowerElem(const GroundField& f, const Int& c) : num_(f, Scalar(f, c)), den_(f, Scalar(f, 1L)) {}
TowerElem::TowerElem(const Scalar& c) : num_(c.field(), c), den_(c.field(), Scalar(c.field(), 1L)) {}
TowerElem::TowerElem(const Poly& p) : num_(p), den_(p.field(), Scalar(p.field(), 1L)) {}

TowerElem::TowerElem(const Poly& num, const Poly& den) {
    if (den.is_zero()) throw DivisionByZero("rational function with zero denominator");
    const GroundField& f = num.field();
    if (num.is_zero()) {
        num_ = Poly(f);
        den_ = Poly(f, Scalar(f, 1L));
        return;
    }
    if (den.is_constant()) {
        num_ = num.scaled(den.constant().inv());
        den_ = Poly(f, Scalar(f, 1L));
        return;
    }
    Poly g = Poly::gcd(num, den);
    Poly n = Poly::divide_exact(num, g);
    Poly d = Poly::divide_exact(den, g);
    Scalar lc = d.leading_coeff().inv();
    num_ = n.scaled(lc);
    den_ = d.scaled(lc);
}

TowerElem TowerElem::symbol(const GroundField& f, SymbolId s) { return TowerElem(Poly::symbol(f, s)); }

bool TowerElem::is_one() const { return den_.is_constant() && num_.is_constant() && num_.constant().is_one(); }

Scalar TowerElem::constant() const {
    if (!is_constant()) throw InvalidInput("tower element is not constant");
    return num_.constant();
}

std::set<SymbolId> TowerElem::symbols_used() const {
    auto s = num_.symbols();
    auto d = den_.symbols();
    s.insert(d.begin(), d.end());
    return s;
}

TowerElem TowerElem::operator-() const {
    TowerElem r(*this);
    r.num_ = -r.num_;
    return r;
}

TowerElem& TowerElem::operator+=(const TowerElem& o) {
    if (den_ == o.den_) {
        *this = TowerElem(num_ + o.num_, den_);
    } else {
        *this = TowerElem(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
    }
    return *this;
}

TowerElem& TowerElem::operator-=(const TowerElem& o) { return *this += -o; }

TowerElem& TowerElem::operator*=(const TowerElem& o) {
    if (den_.is_constant() && o.den_.is_constant()) {
        num_ = num_ * o.num_;
        if (num_.is_zero()) den_ = Poly(num_.field(), Scalar(num_.field(), 1L));
        return *this;
    }
    *this = TowerElem(num_ * o.num_, den_ * o.den_);
    return *this;
}

TowerElem& TowerElem::operator/=(const TowerElem& o) { return *this *= o.inv(); }

TowerElem TowerElem::inv() const {
    if (is_zero()) throw DivisionByZero("inverse of zero in the residue tower");
    return TowerElem(den_, num_);
}

TowerElem TowerElem::pow(long e) const {
    if (e < 0) return inv().pow(-e);
    TowerElem r;
    r.num_ = num_.pow(static_cast<std::uint32_t>(e));
    r.den_ = den_.pow(static_cast<std::uint32_t>(e));
    return r;
}

TowerElem operator*(const TowerElem& a, const Scalar& c) { return a * TowerElem(c); }

std::string TowerElem::str(const SymbolTable* names) const {
    if (den_.is_constant()) return num_.str(names);
    std::string n = num_.str(names);
    if (num_.terms().size() > 1) n = "(" + n + ")";
    std::string d = den_.str(names);
    bool bare = den_.terms().size() == 1 && den_.leading_coeff().is_one() && den_.symbols().size() == 1 &&
                den_.leading_mono()[den_.leading_mono().size() - 1] == 1;
    if (!bare) d = "(" + d + ")";
    return n + "/" + d;
}

bool is_in_subfield(const TowerElem& x, const std::set<SymbolId>& allowed) {
    for (SymbolId s : x.symbols_used())
        if (!allowed.count(s)) return false;
    return true;
}

TowerElem SimpleGenerator::solve_for_symbol(const TowerElem& x) const { return (d * x - b) / (a - c * x); }

std::optional<SimpleGenerator> as_simple_generator(const TowerElem& x, const std::set<SymbolId>& allowed) {
    std::vector<SymbolId> fresh;
    for (SymbolId s : x.symbols_used())
        if (!allowed.count(s)) fresh.push_back(s);
    if (fresh.size() != 1) return std::nullopt;
    const SymbolId w = fresh.front();
    auto nc = x.num().coeffs_in(w);
    auto dc = x.den().coeffs_in(w);
    if (nc.size() > 2 || dc.size() > 2) return std::nullopt;
    const GroundField& f = x.field();
    auto at = [&](const std::vector<Poly>& v, std::size_t k) { return k < v.size() ? v[k] : Poly(f); };
    SimpleGenerator g{w, TowerElem(at(nc, 1)), TowerElem(at(nc, 0)), TowerElem(at(dc, 1)), TowerElem(at(dc, 0))};
    if ((g.a * g.d - g.b * g.c).is_zero()) return std::nullopt;
    return g;
}

Subfield Subfield::adjoin(SymbolId s) const {
    if (adjoined_.count(s)) throw InvalidInput("symbol " + std::to_string(s) + " already adjoined");
    Subfield r(*this);
    r.adjoined_.insert(s);
    r.order_.push_back(s);
    return r;
}

} // namespace monomval
