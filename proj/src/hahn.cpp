#include "monomval/hahn.hpp"

#include <algorithm>
#include <sstream>

namespace monomval {

// ---------------------------------------------------------------- CoeffRule

CoeffRule::CoeffRule(const TowerElem& c, unsigned e, const TowerElem& r) : r_(r) {
    if (r.is_zero()) throw InvalidInput("family ratio must be nonzero");
    poly_.assign(e + 1, TowerElem(c.field()));
    poly_[e] = c;
    trim();
}

CoeffRule::CoeffRule(std::vector<TowerElem> poly, const TowerElem& r) : poly_(std::move(poly)), r_(r) {
    if (r.is_zero()) throw InvalidInput("family ratio must be nonzero");
    trim();
}

void CoeffRule::trim() {
    while (!poly_.empty() && poly_.back().is_zero()) poly_.pop_back();
}

TowerElem CoeffRule::at(const Int& i) const {
    TowerElem acc(field());
    if (poly_.empty()) return acc;
    TowerElem ii(field(), i);
    for (std::size_t e = poly_.size(); e-- > 0;) acc = acc * ii + poly_[e];
    if (acc.is_zero() || r_.is_one()) return acc;
    if (!i.fits_slong_p()) throw Inconclusive("family index out of range");
    return acc * r_.pow(i.get_si());
}

CoeffRule CoeffRule::scaled(const TowerElem& c) const {
    std::vector<TowerElem> p;
    for (const auto& x : poly_) p.push_back(x * c);
    return CoeffRule(std::move(p), r_);
}

CoeffRule CoeffRule::shifted(const Int& k) const {
    // P(j+k) r^(j+k) = [P(j+k) r^k] r^j
    std::vector<TowerElem> out(poly_.size(), TowerElem(field()));
    TowerElem kk(field(), k);
    for (std::size_t e = 0; e < poly_.size(); ++e) {
        // (j+k)^e = sum_d C(e,d) j^d k^(e-d)
        Int binom = 1;
        for (std::size_t d = 0; d <= e; ++d) {
            if (d > 0) binom = binom * Int(static_cast<unsigned long>(e - d + 1)) / Int(static_cast<unsigned long>(d));
            out[d] += poly_[e] * TowerElem(field(), binom) * kk.pow(static_cast<long>(e - d));
        }
    }
    if (!k.fits_slong_p()) throw Inconclusive("family shift out of range");
    TowerElem rk = r_.pow(k.get_si());
    for (auto& x : out) x *= rk;
    return CoeffRule(std::move(out), r_);
}

CoeffRule CoeffRule::operator*(const CoeffRule& o) const {
    if (poly_.empty() || o.poly_.empty()) return CoeffRule(std::vector<TowerElem>{}, r_ * o.r_);
    std::vector<TowerElem> p(poly_.size() + o.poly_.size() - 1, TowerElem(field()));
    for (std::size_t a = 0; a < poly_.size(); ++a)
        for (std::size_t b = 0; b < o.poly_.size(); ++b) p[a + b] += poly_[a] * o.poly_[b];
    return CoeffRule(std::move(p), r_ * o.r_);
}

CoeffRule CoeffRule::operator+(const CoeffRule& o) const {
    if (o.poly_.empty()) return *this;
    if (poly_.empty()) return o;
    if (!(r_ == o.r_)) throw InvalidInput("cannot add coefficient rules with different ratios");
    std::vector<TowerElem> p(std::max(poly_.size(), o.poly_.size()), TowerElem(field()));
    for (std::size_t e = 0; e < poly_.size(); ++e) p[e] += poly_[e];
    for (std::size_t e = 0; e < o.poly_.size(); ++e) p[e] += o.poly_[e];
    return CoeffRule(std::move(p), r_);
}

std::set<SymbolId> CoeffRule::symbols_used() const {
    std::set<SymbolId> s = r_.symbols_used();
    for (const auto& x : poly_) {
        auto t = x.symbols_used();
        s.insert(t.begin(), t.end());
    }
    return s;
}

namespace {

// Factor text safe as the leading factor of a product.
std::string factor(const TowerElem& x, const SymbolTable* names) {
    std::string s = x.str(names);
    std::string body = s[0] == '-' ? s.substr(1) : s;
    return body.find_first_of("+-/(") == std::string::npos ? s : "(" + s + ")";
}

} // namespace

std::string CoeffRule::str(const SymbolTable* names) const {
    if (poly_.empty()) return "0";
    std::string p;
    std::size_t nterms = 0;
    for (std::size_t e = poly_.size(); e-- > 0;) {
        if (poly_[e].is_zero()) continue;
        std::string ipart = e == 0 ? "" : (e == 1 ? "i" : "i^" + std::to_string(e));
        std::string c = poly_[e].str(names);
        std::string t;
        if (ipart.empty()) t = factor(poly_[e], names);
        else if (c == "1") t = ipart;
        else if (c == "-1") t = "-" + ipart;
        else t = factor(poly_[e], names) + "*" + ipart;
        if (nterms == 0) p = t;
        else if (t[0] == '-') p += t;
        else p += "+" + t;
        ++nterms;
    }
    if (r_.is_one()) return p;

    std::string r;
    const Poly& num = r_.num();
    if (r_.den().is_constant() && num.terms().size() == 1 && num.leading_coeff().is_one() &&
        num.symbols().size() == 1) {
        SymbolId s = *num.symbols().begin();
        std::uint32_t k = num.degree_in(s);
        std::string nm = names ? names->name(s) : "w" + std::to_string(s);
        r = k == 1 ? nm + "^i" : nm + "^(" + std::to_string(k) + "*i)";
    } else {
        std::string rs = r_.str(names);
        r = (std::all_of(rs.begin(), rs.end(), ::isdigit) ? rs : "(" + rs + ")") + "^i";
    }
    if (p == "1") return r;
    if (nterms > 1) p = "(" + p + ")";
    else if (p == "-1") return "-" + r;
    return p + "*" + r;
}

namespace {

// a*i + b for an exponent expression.
std::pair<Int, Int> linear_in_i(const expr::Node& n) {
    using K = expr::Node::Kind;
    switch (n.kind) {
    case K::Number: return {Int(0), n.number};
    case K::Ident:
        if (n.ident == "i") return {Int(1), Int(0)};
        throw ParseError("exponent may only use the index i");
    case K::Add: {
        auto [a, b] = linear_in_i(*n.lhs);
        auto [c, d] = linear_in_i(*n.rhs);
        return {a + c, b + d};
    }
    case K::Sub: {
        auto [a, b] = linear_in_i(*n.lhs);
        auto [c, d] = linear_in_i(*n.rhs);
        return {a - c, b - d};
    }
    case K::Neg: {
        auto [a, b] = linear_in_i(*n.lhs);
        return {-a, -b};
    }
    case K::Mul: {
        auto [a, b] = linear_in_i(*n.lhs);
        auto [c, d] = linear_in_i(*n.rhs);
        if (sgn(a) != 0 && sgn(c) != 0) throw ParseError("exponent must be linear in i");
        return {a * d + c * b, b * d};
    }
    default: throw ParseError("exponent must be an integer expression in i");
    }
}

CoeffRule constant_rule(const TowerElem& c) { return CoeffRule(std::vector<TowerElem>{c}, TowerElem(c.field(), 1L)); }

} // namespace

CoeffRule eval_rule(const expr::Node& n, const GroundField& f, const SymbolTable& symbols) {
    using K = expr::Node::Kind;
    if (!expr::mentions(n, "i")) return constant_rule(expr::eval_tower(n, f, symbols));
    switch (n.kind) {
    case K::Ident: return CoeffRule(TowerElem(f, 1L), 1, TowerElem(f, 1L));
    case K::Add: return eval_rule(*n.lhs, f, symbols) + eval_rule(*n.rhs, f, symbols);
    case K::Sub: return eval_rule(*n.lhs, f, symbols) + eval_rule(*n.rhs, f, symbols).scaled(TowerElem(f, -1L));
    case K::Neg: return eval_rule(*n.lhs, f, symbols).scaled(TowerElem(f, -1L));
    case K::Mul: return eval_rule(*n.lhs, f, symbols) * eval_rule(*n.rhs, f, symbols);
    case K::Div: {
        CoeffRule d = eval_rule(*n.rhs, f, symbols);
        if (d.degree() != 0 || d.is_zero()) throw ParseError("coefficient rule may only divide by c*r^i");
        return eval_rule(*n.lhs, f, symbols) * CoeffRule(std::vector<TowerElem>{d.poly()[0].inv()}, d.ratio().inv());
    }
    case K::Pow: {
        if (expr::mentions(*n.rhs, "i")) {
            if (expr::mentions(*n.lhs, "i")) throw ParseError("base of an i-dependent power must not use i");
            TowerElem base = expr::eval_tower(*n.lhs, f, symbols);
            if (base.is_zero()) throw ParseError("zero ratio in coefficient rule");
            auto [a, b] = linear_in_i(*n.rhs);
            if (!a.fits_slong_p() || !b.fits_slong_p()) throw ParseError("exponent out of range");
            return CoeffRule(std::vector<TowerElem>{base.pow(b.get_si())}, base.pow(a.get_si()));
        }
        Int e = expr::eval_integer(*n.rhs);
        if (sgn(e) < 0 || !e.fits_ulong_p() || e > 64) throw ParseError("power of an i-dependent term must be a small nonnegative integer");
        CoeffRule base = eval_rule(*n.lhs, f, symbols);
        CoeffRule acc = constant_rule(TowerElem(f, 1L));
        for (unsigned long k = 0; k < e.get_ui(); ++k) acc = acc * base;
        return acc;
    }
    default: throw ParseError("bad coefficient rule");
    }
}

CoeffRule parse_rule(std::string_view text, const GroundField& f, const SymbolTable& symbols) {
    return eval_rule(*expr::parse(text), f, symbols);
}

// --------------------------------------------------------------- HahnStream

HahnStream::HahnStream(std::size_t m, const GroundField& f, HahnBudget budget) : m_(m), f_(f), budget_(std::move(budget)) {}

HahnStream HahnStream::monomial(std::size_t m, const TowerElem& c, const LexVec& a, HahnBudget budget) {
    HahnStream s(m, c.field(), std::move(budget));
    s.add_term(a, c);
    return s;
}

HahnStream HahnStream::from_family(std::size_t m, const GroundField& f, Family fam, HahnBudget budget) {
    HahnStream s(m, f, std::move(budget));
    s.add_family(std::move(fam));
    return s;
}

void HahnStream::set_budget(const HahnBudget& b) {
    budget_ = b;
    reset_memo();
}

void HahnStream::reset_memo() const {
    memo_.clear();
    cursor_.reset();
    fam_next_.clear();
    memo_end_ = false;
    memo_init_ = false;
    scanned_ = 0;
}

void HahnStream::check(const HahnStream& o) const {
    if (o.m_ != m_) throw LengthMismatch("streams over Z^" + std::to_string(m_) + " and Z^" + std::to_string(o.m_));
    if (!(o.f_ == f_)) throw InvalidInput("streams over different ground fields");
}

std::optional<Term> HahnStream::as_single_term() const {
    if (ceiling_ || !families_.empty() || finite_.size() != 1) return std::nullopt;
    return Term{finite_.begin()->first, finite_.begin()->second};
}

std::optional<LexVec> HahnStream::support_floor() const {
    std::optional<LexVec> lo = ceiling_;
    auto take = [&](const LexVec& a) {
        if (!lo || a < *lo) lo = a;
    };
    if (!finite_.empty()) take(finite_.begin()->first);
    for (const auto& fam : families_) take(fam.start());
    return lo;
}

void HahnStream::add_term(const LexVec& a, const TowerElem& c) {
    if (a.size() != m_) throw LengthMismatch("exponent " + a.str() + " not in Z^" + std::to_string(m_));
    if (c.is_zero()) return;
    if (ceiling_ && a >= *ceiling_) return;
    auto it = finite_.find(a);
    if (it == finite_.end()) {
        finite_.emplace(a, c);
    } else {
        it->second += c;
        if (it->second.is_zero()) finite_.erase(it);
    }
    reset_memo();
}

void HahnStream::add_family(Family fam) {
    if (fam.base.size() != m_ || fam.step.size() != m_) throw LengthMismatch("family exponents not in Z^" + std::to_string(m_));
    if (fam.step.sign() <= 0) throw InvalidInput("family step " + fam.step.str() + " is not >_lex 0");
    if (fam.rule.is_zero()) return;
    if (fam.hi && *fam.hi < fam.lo) return;
    if (fam.hi && *fam.hi == fam.lo) {
        add_term(fam.start(), fam.rule.at(fam.lo));
        return;
    }
    families_.push_back(std::move(fam));
    normalize_families();
    drop_above_ceiling();
    reset_memo();
}

void HahnStream::cap(const LexVec& c) {
    if (c.size() != m_) throw LengthMismatch("ceiling not in Z^" + std::to_string(m_));
    if (!ceiling_ || c < *ceiling_) ceiling_ = c;
    drop_above_ceiling();
    reset_memo();
}

void HahnStream::drop_above_ceiling() {
    if (!ceiling_) return;
    finite_.erase(finite_.lower_bound(*ceiling_), finite_.end());
    std::erase_if(families_, [&](const Family& f) { return f.start() >= *ceiling_; });
}

namespace {

// k with b2 - b1 == k * step, if any.
std::optional<Int> offset_on_line(const LexVec& b1, const LexVec& b2, const LexVec& step) {
    LexVec d = b2 - b1;
    std::size_t s = step.leading_index();
    if (!mpz_divisible_p(d[s].get_mpz_t(), step[s].get_mpz_t())) return std::nullopt;
    Int k = d[s] / step[s];
    if (d == k * step) return k;
    return std::nullopt;
}

struct Piece {
    Int lo;
    std::optional<Int> hi;
    CoeffRule rule;
};

// Piecewise sum of index ranges sharing one base, step and ratio.
std::vector<Piece> merge_pieces(const std::vector<Piece>& in) {
    std::vector<Int> cuts;
    bool any_infinite = false;
    for (const auto& p : in) {
        cuts.push_back(p.lo);
        if (p.hi) cuts.push_back(*p.hi + 1);
        else any_infinite = true;
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<Piece> out;
    for (std::size_t k = 0; k < cuts.size(); ++k) {
        Int lo = cuts[k];
        std::optional<Int> hi;
        if (k + 1 < cuts.size()) hi = cuts[k + 1] - 1;
        else if (!any_infinite) break;
        CoeffRule sum;
        bool first = true;
        for (const auto& p : in) {
            bool covers = p.lo <= lo && (!p.hi || (hi && *p.hi >= *hi));
            if (!covers) continue;
            sum = first ? p.rule : sum + p.rule;
            first = false;
        }
        if (first || sum.is_zero()) continue;
        if (!out.empty() && out.back().hi && *out.back().hi + 1 == lo && out.back().rule == sum) {
            out.back().hi = hi;
        } else {
            out.push_back({lo, hi, sum});
        }
    }
    return out;
}

} // namespace

void HahnStream::normalize_families() {
    std::vector<Family> out;
    std::vector<bool> used(families_.size(), false);
    for (std::size_t a = 0; a < families_.size(); ++a) {
        if (used[a]) continue;
        const Family& lead = families_[a];
        std::vector<Piece> pieces{{lead.lo, lead.hi, lead.rule}};
        bool merged = false;
        for (std::size_t b = a + 1; b < families_.size(); ++b) {
            if (used[b]) continue;
            const Family& g = families_[b];
            if (!(g.step == lead.step) || !(g.rule.ratio() == lead.rule.ratio())) continue;
            auto k = offset_on_line(lead.base, g.base, g.step);
            if (!k) continue;
            used[b] = true;
            merged = true;
            // g's index j sits at lead index i = j + k
            std::optional<Int> hi;
            if (g.hi) hi = *g.hi + *k;
            pieces.push_back({g.lo + *k, hi, g.rule.shifted(-*k)});
        }
        if (!merged) {
            out.push_back(lead);
            continue;
        }
        for (auto& p : merge_pieces(pieces)) {
            Family f{lead.base, lead.step, p.lo, p.hi, p.rule};
            if (f.hi && *f.hi == f.lo) {
                TowerElem c = f.rule.at(f.lo);
                if (!c.is_zero()) {
                    auto it = finite_.find(f.start());
                    if (it == finite_.end()) finite_.emplace(f.start(), c);
                    else if ((it->second += c).is_zero()) finite_.erase(it);
                }
                continue;
            }
            out.push_back(std::move(f));
        }
    }
    // Fold finite terms sitting on a family's first index into the finite
    // map, so cancellations at the start are visible to support_floor.
    for (auto& f : out) {
        for (int guard = 0; guard < 64 && (!f.hi || f.lo <= *f.hi); ++guard) {
            LexVec a = f.start();
            TowerElem c = f.rule.at(f.lo);
            auto it = finite_.find(a);
            if (it == finite_.end() && !c.is_zero()) break;
            if (it != finite_.end()) {
                if ((it->second += c).is_zero()) finite_.erase(it);
            }
            f.lo += 1;
        }
    }
    std::erase_if(out, [](const Family& f) { return f.hi && *f.hi < f.lo; });
    families_ = std::move(out);
}

// ---------------------------------------------------------------- enumerate

bool HahnStream::advance(EnumStatus& st, std::string& why) const {
    if (!memo_init_) {
        fam_next_.clear();
        for (const auto& f : families_) fam_next_.push_back(f.lo);
        memo_init_ = true;
    }
    for (;;) {
        if (memo_end_) {
            st = EnumStatus::Exhausted;
            return false;
        }
        std::optional<LexVec> cand;
        auto fit = cursor_ ? finite_.upper_bound(*cursor_) : finite_.begin();
        if (fit != finite_.end()) cand = fit->first;
        for (std::size_t k = 0; k < families_.size(); ++k) {
            const Family& f = families_[k];
            if (f.hi && fam_next_[k] > *f.hi) continue;
            LexVec e = f.exponent(fam_next_[k]);
            if (!cand || e < *cand) cand = std::move(e);
        }
        if (!cand && ceiling_) {
            st = EnumStatus::Unknown;
            why = "nothing certified at or above " + ceiling_->str();
            return false;
        }
        if (!cand) {
            memo_end_ = true;
            st = EnumStatus::Exhausted;
            return false;
        }
        if (ceiling_ && *cand >= *ceiling_) {
            st = EnumStatus::Unknown;
            why = "terms at or above " + ceiling_->str() + " are not certified";
            return false;
        }
        if (budget_.lex_ceiling && *cand >= *budget_.lex_ceiling) {
            st = EnumStatus::Unknown;
            why = "lex ceiling " + budget_.lex_ceiling->str() + " reached";
            return false;
        }
        if (scanned_ >= budget_.max_terms) {
            st = EnumStatus::Unknown;
            why = "max_terms=" + std::to_string(budget_.max_terms) + " exhausted";
            return false;
        }
        ++scanned_;
        TowerElem sum(f_);
        if (fit != finite_.end() && fit->first == *cand) sum += fit->second;
        for (std::size_t k = 0; k < families_.size(); ++k) {
            const Family& f = families_[k];
            if (f.hi && fam_next_[k] > *f.hi) continue;
            if (f.exponent(fam_next_[k]) == *cand) {
                sum += f.rule.at(fam_next_[k]);
                fam_next_[k] += 1;
            }
        }
        cursor_ = *cand;
        if (!sum.is_zero()) {
            memo_.push_back({*cand, sum});
            return true;
        }
    }
}

Prefix HahnStream::enumerate(std::size_t n) const {
    Prefix p;
    EnumStatus st = EnumStatus::Complete;
    while (memo_.size() < n) {
        if (!advance(st, p.reason)) break;
    }
    std::size_t k = std::min(n, memo_.size());
    p.terms.assign(memo_.begin(), memo_.begin() + static_cast<std::ptrdiff_t>(k));
    p.status = k == n ? EnumStatus::Complete : st;
    return p;
}

std::optional<Term> HahnStream::leading() const {
    Prefix p = enumerate(1);
    if (p.status == EnumStatus::Unknown) throw Inconclusive("leading term not certified: " + p.reason);
    if (p.terms.empty()) return std::nullopt;
    return p.terms.front();
}

std::vector<Term> HahnStream::first_terms(std::size_t n) const {
    Prefix p = enumerate(n);
    if (p.status == EnumStatus::Unknown)
        throw Inconclusive("only " + std::to_string(p.terms.size()) + " of " + std::to_string(n) + " terms certified: " + p.reason);
    return p.terms;
}

std::optional<Int> first_index_at_or_above(const Family& fam, const LexVec& bound) {
    LexVec d = bound - fam.base;
    std::size_t k = fam.step.leading_index();
    std::size_t dk = d.leading_index();
    Int i;
    if (dk < k) {
        if (d.sign() > 0) return std::nullopt;
        i = fam.lo;
    } else if (dk == d.size()) {
        i = 0;
    } else {
        mpz_fdiv_q(i.get_mpz_t(), d[k].get_mpz_t(), fam.step[k].get_mpz_t());
        if (i * fam.step < d) i += 1;
    }
    if (i < fam.lo) i = fam.lo;
    if (fam.hi && i > *fam.hi) return std::nullopt;
    return i;
}

std::optional<Int> index_of(const Family& fam, const LexVec& a) {
    LexVec d = a - fam.base;
    std::size_t k = fam.step.leading_index();
    if (!mpz_divisible_p(d[k].get_mpz_t(), fam.step[k].get_mpz_t())) return std::nullopt;
    Int i = d[k] / fam.step[k];
    if (!(i * fam.step == d) || i < fam.lo || (fam.hi && i > *fam.hi)) return std::nullopt;
    return i;
}

std::optional<LexVec> nu_t(const HahnStream& s) {
    auto t = s.leading();
    if (!t) return std::nullopt;
    return t->exp;
}

// --------------------------------------------------------------- arithmetic

HahnStream HahnStream::operator-() const { return scaled(TowerElem(f_, -1L)); }

HahnStream& HahnStream::operator+=(const HahnStream& o) {
    check(o);
    if (o.ceiling_ && (!ceiling_ || *o.ceiling_ < *ceiling_)) ceiling_ = o.ceiling_;
    for (const auto& [a, c] : o.finite_) {
        auto it = finite_.find(a);
        if (it == finite_.end()) finite_.emplace(a, c);
        else if ((it->second += c).is_zero()) finite_.erase(it);
    }
    for (const auto& f : o.families_) families_.push_back(f);
    normalize_families();
    drop_above_ceiling();
    reset_memo();
    return *this;
}

HahnStream& HahnStream::operator-=(const HahnStream& o) { return *this += -o; }

HahnStream HahnStream::scaled(const TowerElem& c) const {
    HahnStream r(m_, f_, budget_);
    if (c.is_zero()) return r;
    r.ceiling_ = ceiling_;
    for (const auto& [a, x] : finite_) r.finite_.emplace(a, x * c);
    for (const auto& f : families_) r.families_.push_back({f.base, f.step, f.lo, f.hi, f.rule.scaled(c)});
    return r;
}

HahnStream HahnStream::shifted(const LexVec& a) const {
    if (a.size() != m_) throw LengthMismatch("shift " + a.str() + " not in Z^" + std::to_string(m_));
    HahnStream r(m_, f_, budget_);
    if (ceiling_) r.ceiling_ = *ceiling_ + a;
    for (const auto& [e, x] : finite_) r.finite_.emplace(e + a, x);
    for (const auto& f : families_) r.families_.push_back({f.base + a, f.step, f.lo, f.hi, f.rule});
    return r;
}

namespace {

void lower_to(std::optional<LexVec>& c, const LexVec& v) {
    if (!c || v < *c) c = v;
}

// Truncates a family to its first `box` indices; returns the expanded terms
// and the first omitted exponent (if any).
std::pair<std::vector<Term>, std::optional<LexVec>> expand(const Family& f, std::size_t box) {
    std::vector<Term> out;
    Int last = f.lo + Int(static_cast<unsigned long>(box)) - 1;
    std::optional<LexVec> omitted;
    if (f.hi && *f.hi <= last) last = *f.hi;
    else omitted = f.exponent(last + 1);
    for (Int i = f.lo; i <= last; ++i) {
        TowerElem c = f.rule.at(i);
        if (!c.is_zero()) out.push_back({f.exponent(i), c});
    }
    return {out, omitted};
}

Int family_count(const Family& f) { return f.hi ? *f.hi - f.lo + 1 : Int(-1); }

} // namespace

HahnStream operator*(const HahnStream& a, const HahnStream& b) {
    a.check(b);
    HahnStream r(a.m_, a.f_, a.budget_);
    if (a.is_exact_zero() || b.is_exact_zero()) return r;

    std::optional<LexVec> ceil;
    auto fa = a.support_floor(), fb = b.support_floor();
    if (a.ceiling_) lower_to(ceil, *a.ceiling_ + *fb);
    if (b.ceiling_) lower_to(ceil, *b.ceiling_ + *fa);

    for (const auto& [x, cx] : a.finite_)
        for (const auto& [y, cy] : b.finite_) {
            LexVec e = x + y;
            if (ceil && e >= *ceil) continue;
            auto it = r.finite_.find(e);
            TowerElem c = cx * cy;
            if (it == r.finite_.end()) r.finite_.emplace(std::move(e), std::move(c));
            else if ((it->second += c).is_zero()) r.finite_.erase(it);
        }
    auto term_times_family = [&](const LexVec& x, const TowerElem& cx, const Family& f) {
        r.families_.push_back({f.base + x, f.step, f.lo, f.hi, f.rule.scaled(cx)});
    };
    for (const auto& [x, cx] : a.finite_)
        for (const auto& f : b.families_) term_times_family(x, cx, f);
    for (const auto& [y, cy] : b.finite_)
        for (const auto& f : a.families_) term_times_family(y, cy, f);

    for (const auto& f : a.families_)
        for (const auto& g : b.families_) {
            // Expand one side; choose the one whose omitted tail sits higher.
            auto [tf, of] = expand(f, a.budget_.box);
            auto [tg, og] = expand(g, a.budget_.box);
            bool use_f;
            if (!of) use_f = true;
            else if (!og) use_f = false;
            else if (family_count(f) >= 0 && family_count(g) >= 0) use_f = family_count(f) <= family_count(g);
            else use_f = (*of + g.start()) >= (*og + f.start());
            const auto& terms = use_f ? tf : tg;
            const Family& other = use_f ? g : f;
            for (const auto& t : terms) term_times_family(t.exp, t.coeff, other);
            const auto& omitted = use_f ? of : og;
            if (omitted) lower_to(ceil, *omitted + other.start());
        }

    r.ceiling_ = ceil;
    r.normalize_families();
    r.drop_above_ceiling();
    return r;
}

namespace {

// 1/(1 + rest) for rest with positive support. Peels single leading terms in
// closed form first so that the geometric tail is cut higher up.
HahnStream inv_one_plus(const HahnStream& rest, int depth) {
    const std::size_t m = rest.rank();
    const GroundField& f = rest.field();
    HahnStream one = HahnStream::monomial(m, TowerElem(f, 1L), LexVec(m), rest.budget());
    if (rest.is_exact_zero()) return one;
    auto closed = [&](const Term& t) {
        // 1/(1 + b t^D) = sum_{i>=0} (-b)^i t^{iD}
        Family g{LexVec(m), t.exp, Int(0), std::nullopt, CoeffRule(TowerElem(f, 1L), 0, -t.coeff)};
        return HahnStream::from_family(m, f, std::move(g), rest.budget());
    };
    if (auto single = rest.as_single_term()) return closed(*single);
    auto floor = rest.support_floor();
    if (!floor || floor->sign() <= 0) throw Inconclusive("cannot certify the inverse: cancelling segments below the leading term");
    if (depth > 0) {
        std::optional<Term> t1;
        try {
            t1 = rest.leading();
        } catch (const Inconclusive&) {
        }
        if (t1) {
            HahnStream g = closed(*t1);
            HahnStream rest2 = (rest - HahnStream::monomial(m, t1->coeff, t1->exp, rest.budget())) * g;
            return g * inv_one_plus(rest2, depth - 1);
        }
    }
    HahnStream neg = -rest;
    HahnStream power = one, out = one;
    for (std::size_t k = 1; k <= rest.budget().geometric; ++k) {
        power = power * neg;
        out += power;
    }
    out.cap(Int(static_cast<unsigned long>(rest.budget().geometric + 1)) * *floor);
    return out;
}

} // namespace

HahnStream HahnStream::inv() const {
    auto lead = leading();
    if (!lead) throw DivisionByZero("inverse of the zero stream");
    TowerElem cinv = lead->coeff.inv();
    // this = c t^a (1 + rest)
    HahnStream rest = (*this - monomial(m_, lead->coeff, lead->exp, budget_)).shifted(-lead->exp).scaled(cinv);
    return inv_one_plus(rest, 0).shifted(-lead->exp).scaled(cinv);
}

HahnStream HahnStream::pow(long e) const {
    if (e < 0) return inv().pow(-e);
    HahnStream acc = monomial(m_, TowerElem(f_, 1L), LexVec(m_), budget_);
    if (e == 0) return acc;
    if (auto t = as_single_term()) return monomial(m_, t->coeff.pow(e), Int(e) * t->exp, budget_);
    HahnStream base = *this;
    while (e > 0) {
        if (e & 1) acc = acc * base;
        e >>= 1;
        if (e) base = base * base;
    }
    return acc;
}

std::string HahnStream::str(const SymbolTable* names) const { return format_stream(*this, names); }

HahnStream monomial_image(const std::vector<Int>& R, const std::vector<HahnStream>& images) {
    if (images.empty()) throw InvalidInput("monomial_image: no images");
    if (R.size() != images.size())
        throw LengthMismatch("monomial_image: " + std::to_string(R.size()) + " exponents for " + std::to_string(images.size()) + " images");
    const HahnStream& first = images.front();
    HahnStream acc = HahnStream::monomial(first.rank(), TowerElem(first.field(), 1L), LexVec(first.rank()), first.budget());
    for (std::size_t k = 0; k < R.size(); ++k) {
        if (sgn(R[k]) == 0) continue;
        if (!R[k].fits_slong_p()) throw InvalidInput("monomial_image: exponent out of range");
        acc = acc * images[k].pow(R[k].get_si());
    }
    return acc;
}

HahnStream subtract_segment_limit(const HahnStream& s, const Family& family, std::size_t check_terms) {
    HahnStream fam = HahnStream::from_family(s.rank(), s.field(), family, s.budget());
    std::vector<Term> want = fam.first_terms(check_terms);
    std::vector<Term> have = s.first_terms(want.size());
    if (have.size() != want.size()) throw NoLimit("stream ends before the family does");
    for (std::size_t k = 0; k < want.size(); ++k) {
        if (!(have[k] == want[k]))
            throw NoLimit("family term " + std::to_string(k + 1) + " at " + want[k].exp.str() + " does not match the stream (" +
                          have[k].exp.str() + ")");
    }
    return s - fam;
}

// -------------------------------------------------------------------- text

LexVec parse_lexvec(std::string_view text, std::size_t m) {
    std::string t;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) t += c;
    if (t.size() < 2 || t.front() != '(' || t.back() != ')') throw ParseError("expected a vector like (0,0,1), got '" + std::string(text) + "'");
    std::vector<Int> c;
    std::stringstream ss(t.substr(1, t.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw ParseError("empty coordinate in '" + std::string(text) + "'");
        std::size_t p = (item[0] == '-' || item[0] == '+') ? 1 : 0;
        if (p == item.size() || !std::all_of(item.begin() + static_cast<std::ptrdiff_t>(p), item.end(), ::isdigit))
            throw ParseError("bad coordinate '" + item + "'");
        c.emplace_back(item[0] == '+' ? item.substr(1) : item);
    }
    if (c.size() != m) throw ParseError("vector " + t + " has " + std::to_string(c.size()) + " coordinates, expected " + std::to_string(m));
    return LexVec(std::move(c));
}

namespace {

std::string trim_ws(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Splits on `sep` outside parentheses and brackets.
std::vector<std::string> split_top(std::string_view s, char sep) {
    std::vector<std::string> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        char c = s[k];
        if (c == '(' || c == '[') ++depth;
        else if (c == ')' || c == ']') --depth;
        else if (c == sep && depth == 0) {
            out.push_back(trim_ws(s.substr(start, k - start)));
            start = k + 1;
        }
    }
    out.push_back(trim_ws(s.substr(start)));
    return out;
}

Int parse_int(const std::string& s) {
    std::string t = trim_ws(s);
    std::size_t p = (!t.empty() && t[0] == '-') ? 1 : 0;
    if (p == t.size() || !std::all_of(t.begin() + static_cast<std::ptrdiff_t>(p), t.end(), ::isdigit)) throw ParseError("bad integer '" + s + "'");
    return Int(t);
}

} // namespace

HahnStream parse_stream(std::string_view text, std::size_t m, const GroundField& f, const SymbolTable& symbols, HahnBudget budget) {
    HahnStream s(m, f, budget);
    std::string all = trim_ws(text);
    if (all == "0") return s;
    if (all.empty()) throw ParseError("empty series");
    std::optional<LexVec> ceiling;
    for (const std::string& seg : split_top(all, '+')) {
        auto open = seg.find('[');
        if (open == std::string::npos || seg.back() != ']') throw ParseError("expected terms[...], family[...] or O[...], got '" + seg + "'");
        std::string kind = trim_ws(seg.substr(0, open));
        std::string body = seg.substr(open + 1, seg.size() - open - 2);
        if (kind == "terms") {
            if (trim_ws(body).empty()) continue;
            for (const std::string& item : split_top(body, ',')) {
                auto colon = item.rfind(':');
                if (colon == std::string::npos) throw ParseError("term '" + item + "' needs the form (exponent): coefficient");
                LexVec a = parse_lexvec(item.substr(0, colon), m);
                s.add_term(a, expr::parse_tower(item.substr(colon + 1), f, symbols));
            }
        } else if (kind == "family") {
            std::optional<LexVec> start, step;
            std::optional<CoeffRule> rule;
            std::optional<Int> lo, hi;
            bool inf = false;
            for (const std::string& kv : split_top(body, ',')) {
                auto eq = kv.find('=');
                if (eq == std::string::npos) throw ParseError("family field '" + kv + "' needs key=value");
                std::string key = trim_ws(kv.substr(0, eq)), val = trim_ws(kv.substr(eq + 1));
                if (key == "start") start = parse_lexvec(val, m);
                else if (key == "step") step = parse_lexvec(val, m);
                else if (key == "coeff") rule = parse_rule(val, f, symbols);
                else if (key == "i") {
                    auto dots = val.find("..");
                    if (dots == std::string::npos) throw ParseError("index range must look like 1..inf or 1..N");
                    lo = parse_int(val.substr(0, dots));
                    std::string h = trim_ws(val.substr(dots + 2));
                    if (h == "inf") inf = true;
                    else hi = parse_int(h);
                } else {
                    throw ParseError("unknown family field '" + key + "'");
                }
            }
            if (!start || !step || !rule || !lo) throw ParseError("family needs start, step, coeff and i");
            if (step->sign() <= 0) throw ParseError("family step " + step->str() + " is not >_lex 0");
            (void)inf;
            s.add_family(Family{*start - *lo * *step, *step, *lo, hi, *rule});
        } else if (kind == "O") {
            LexVec c = parse_lexvec(body, m);
            if (!ceiling || c < *ceiling) ceiling = c;
        } else {
            throw ParseError("unknown segment kind '" + kind + "'");
        }
    }
    if (ceiling) s.cap(*ceiling);
    return s;
}

std::string format_stream(const HahnStream& s, const SymbolTable* names) {
    std::vector<std::string> parts;
    if (!s.finite().empty()) {
        std::string t = "terms[";
        bool first = true;
        for (const auto& [a, c] : s.finite()) {
            t += (first ? "" : ", ") + a.str() + ": " + c.str(names);
            first = false;
        }
        parts.push_back(t + "]");
    }
    for (const auto& f : s.families()) {
        std::string t = "family[start=" + f.start().str() + ", step=" + f.step.str() + ", coeff=" + f.rule.str(names) +
                        ", i=" + f.lo.get_str() + ".." + (f.hi ? f.hi->get_str() : "inf") + "]";
        parts.push_back(t);
    }
    if (s.ceiling()) parts.push_back("O[" + s.ceiling()->str() + "]");
    if (parts.empty()) return "0";
    std::string out = parts.front();
    for (std::size_t k = 1; k < parts.size(); ++k) out += " + " + parts[k];
    return out;
}

} // namespace monomval
