#include "monomval/engine.hpp"

#include <algorithm>
#include <map>
#include <random>

namespace monomval {

// ------------------------------------------------------------------ basics

void ValuationSpec::validate() const {
    if (m == 0) throw InvalidInput("rank must be positive");
    if (vars.empty()) throw InvalidInput("no variables declared");
    if (images.size() != vars.size())
        throw InvalidInput(std::to_string(vars.size()) + " variables but " + std::to_string(images.size()) + " images");
    if (m > vars.size()) throw DimensionError("rank " + std::to_string(m) + " exceeds the number of variables");
    for (std::size_t k = 0; k < images.size(); ++k) {
        if (images[k].rank() != m) throw LengthMismatch("image of " + vars[k] + " is not over Z^" + std::to_string(m));
        if (!(images[k].field() == field)) throw InvalidInput("image of " + vars[k] + " uses another ground field");
    }
}

Exponent CorrectionFamily::R_at(const Int& i) const {
    Exponent r(R_base);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] += i * R_step[k];
    return r;
}

TransformEntry TransformEntry::monoidal(std::size_t l, std::size_t i, Int q) {
    TransformEntry e;
    e.kind = Kind::Monoidal;
    e.l = l;
    e.i = i;
    e.q = std::move(q);
    return e;
}

TransformEntry TransformEntry::swap(std::size_t l, std::size_t i) {
    TransformEntry e;
    e.kind = Kind::SwapVars;
    e.l = l;
    e.i = i;
    return e;
}

TransformEntry TransformEntry::coord_change(std::size_t j, Correction c) {
    TransformEntry e;
    e.kind = Kind::CoordChange;
    e.l = j;
    e.corr = std::move(c);
    return e;
}

namespace {

HahnStream constant_stream(std::size_t m, const TowerElem& c, const HahnBudget& b) {
    HahnStream s(m, c.field(), b);
    s.add_term(LexVec(m), c);
    return s;
}

TowerElem substitute(const Poly& p, const std::map<SymbolId, TowerElem>& vals) {
    TowerElem acc(p.field());
    for (const auto& [mono, c] : p.terms()) {
        TowerElem t(c);
        for (std::size_t s = 0; s < mono.size(); ++s) {
            if (mono[s] == 0) continue;
            auto it = vals.find(static_cast<SymbolId>(s));
            TowerElem base = it == vals.end() ? TowerElem::symbol(p.field(), static_cast<SymbolId>(s)) : it->second;
            t *= base.pow(mono[s]);
        }
        acc += t;
    }
    return acc;
}

TowerElem substitute(const TowerElem& x, const std::map<SymbolId, TowerElem>& vals) {
    if (vals.empty() || x.is_constant()) return x;
    return substitute(x.num(), vals) / substitute(x.den(), vals);
}

HahnStream poly_stream(const Poly& p, const std::map<SymbolId, HahnStream>& vals, std::size_t m, const HahnBudget& b) {
    HahnStream acc(m, p.field(), b);
    for (const auto& [mono, c] : p.terms()) {
        HahnStream t = constant_stream(m, TowerElem(c), b);
        for (std::size_t s = 0; s < mono.size(); ++s) {
            if (mono[s] == 0) continue;
            auto it = vals.find(static_cast<SymbolId>(s));
            if (it == vals.end()) {
                t = t.scaled(TowerElem::symbol(p.field(), static_cast<SymbolId>(s)).pow(mono[s]));
            } else {
                t = t * it->second.pow(mono[s]);
            }
        }
        acc += t;
    }
    return acc;
}

// Symbol values as constants when every representative stream is one.
std::optional<std::map<SymbolId, TowerElem>> constant_values(const std::map<SymbolId, HahnStream>& vals) {
    std::map<SymbolId, TowerElem> out;
    for (const auto& [s, st] : vals) {
        auto t = st.as_single_term();
        if (!t || !t->exp.is_zero()) return std::nullopt;
        out.emplace(s, t->coeff);
    }
    return out;
}

HahnStream tower_stream(const TowerElem& x, const std::map<SymbolId, HahnStream>& vals, std::size_t m, const HahnBudget& b) {
    if (x.is_constant()) return constant_stream(m, x, b);
    std::map<SymbolId, HahnStream> used;
    for (SymbolId s : x.symbols_used()) {
        auto it = vals.find(s);
        if (it != vals.end()) used.emplace(s, it->second);
    }
    if (auto cv = constant_values(used)) return constant_stream(m, substitute(x, *cv), b);
    HahnStream num = poly_stream(x.num(), used, m, b);
    if (x.den().is_constant()) return num.scaled(TowerElem(x.den().constant()).inv());
    return num * poly_stream(x.den(), used, m, b).inv();
}

Exponent negate(const Exponent& a) {
    Exponent r(a);
    for (Int& x : r) x = -x;
    return r;
}

std::map<SymbolId, HahnStream> rep_streams(const std::vector<Representative>& reps, const std::vector<HahnStream>& level) {
    std::map<SymbolId, HahnStream> out;
    if (level.empty()) return out;
    const std::size_t m = level.front().rank();
    const HahnBudget& b = level.front().budget();
    for (const auto& r : reps) {
        HahnStream x = level.at(r.var) * monomial_image(negate(r.R), level);
        if (r.is_plain()) {
            out.emplace(r.symbol, x);
            continue;
        }
        HahnStream a = tower_stream(r.a, out, m, b), bb = tower_stream(r.b, out, m, b);
        HahnStream c = tower_stream(r.c, out, m, b), d = tower_stream(r.d, out, m, b);
        out.emplace(r.symbol, (d * x - bb) * (a - c * x).inv());
    }
    return out;
}

LexVec value_of_R(const Exponent& R, const std::vector<LexVec>& vals) { return degree_L(R, vals); }

} // namespace

HahnStream eval_correction(const Correction& c, const std::vector<HahnStream>& level) {
    if (level.empty()) throw InvalidInput("eval_correction: empty level");
    const std::size_t m = level.front().rank();
    const GroundField f = level.front().field();
    const HahnBudget& b = level.front().budget();
    auto reps = rep_streams(c.reps, level);
    HahnStream acc(m, f, b);
    for (const auto& t : c.terms) acc += tower_stream(t.alpha, reps, m, b) * monomial_image(t.R, level);

    for (const auto& fam : c.families) {
        // closed form when every involved variable is one exact term and the
        // symbols of the rule evaluate to constants
        bool single = true;
        LexVec ebase(m), estep(m);
        TowerElem c0(f, 1L), cs(f, 1L);
        for (std::size_t p = 0; p < level.size() && single; ++p) {
            if (sgn(fam.R_base[p]) == 0 && sgn(fam.R_step[p]) == 0) continue;
            auto t = level[p].as_single_term();
            if (!t) {
                single = false;
                break;
            }
            ebase += fam.R_base[p] * t->exp;
            estep += fam.R_step[p] * t->exp;
            if (!fam.R_base[p].fits_slong_p() || !fam.R_step[p].fits_slong_p()) throw InvalidInput("correction exponent out of range");
            c0 *= t->coeff.pow(fam.R_base[p].get_si());
            cs *= t->coeff.pow(fam.R_step[p].get_si());
        }
        std::map<SymbolId, HahnStream> used;
        for (SymbolId s : fam.rule.symbols_used())
            if (auto it = reps.find(s); it != reps.end()) used.emplace(s, it->second);
        auto cv = constant_values(used);
        if (single && cv && estep.sign() > 0) {
            std::vector<TowerElem> poly;
            for (const auto& x : fam.rule.poly()) poly.push_back(substitute(x, *cv) * c0);
            CoeffRule rule(std::move(poly), substitute(fam.rule.ratio(), *cv) * cs);
            acc += HahnStream::from_family(m, f, Family{ebase, estep, fam.lo, fam.hi, rule}, b);
            continue;
        }
        // expand a box of indices and certify below the first omitted term
        std::vector<LexVec> vals;
        for (const auto& s : level) vals.push_back(*nu_t(s));
        Int last = fam.lo + Int(static_cast<unsigned long>(b.box)) - 1;
        bool cut = true;
        if (fam.hi && *fam.hi <= last) {
            last = *fam.hi;
            cut = false;
        }
        for (Int i = fam.lo; i <= last; ++i)
            acc += tower_stream(fam.rule.at(i), reps, m, b) * monomial_image(fam.R_at(i), level);
        if (cut) acc.cap(value_of_R(fam.R_at(last + 1), vals));
    }
    return acc;
}

std::vector<HahnStream> replay_forward(const TransformLog& log, const std::vector<HahnStream>& images) {
    std::vector<HahnStream> level = images;
    for (const auto& e : log) {
        switch (e.kind) {
        case TransformEntry::Kind::Monoidal:
            if (!e.q.fits_slong_p()) throw InvalidInput("monoidal count out of range");
            level.at(e.l) = level.at(e.l) * level.at(e.i).pow(-e.q.get_si());
            break;
        case TransformEntry::Kind::SwapVars: std::swap(level.at(e.l), level.at(e.i)); break;
        case TransformEntry::Kind::CoordChange: {
            HahnStream c = eval_correction(e.corr, level);
            level.at(e.l) = level.at(e.l) - c;
            break;
        }
        }
    }
    return level;
}

HahnStream phi_of(const TruncSeries& f, const std::vector<HahnStream>& images) {
    if (images.size() != f.nvars()) throw LengthMismatch("phi_of: wrong number of images");
    if (images.empty()) throw InvalidInput("phi_of: no images");
    const std::size_t m = images.front().rank();
    const HahnBudget& b = images.front().budget();
    HahnStream acc(m, f.field(), b);
    for (const auto& [a, c] : f.terms()) acc += monomial_image(a, images).scaled(c);
    if (!f.is_exact()) {
        std::vector<LexVec> vals;
        for (const auto& s : images) {
            auto v = nu_t(s);
            if (!v) throw DimensionError("an image is zero");
            vals.push_back(*v);
        }
        LexVec lmin = *std::min_element(vals.begin(), vals.end());
        acc.cap(degree_L(f.shift(), vals) + Int(*f.witness() + 1) * lmin);
    }
    return acc;
}

std::optional<LexVec> value_of(const TruncSeries& f, const ValuationSpec& spec) { return nu_t(phi_of(f, spec.images)); }

// ------------------------------------------------------------------ engine

namespace {

enum class Outcome { Residue, NewValue, Deferred };

class Engine {
public:
    explicit Engine(const ValuationSpec& spec) : spec_(spec), m_(spec.m), n_(spec.n()), f_(spec.field) {
        spec.validate();
        for (const auto& s : spec.images) {
            HahnStream c = s;
            c.set_budget(spec.budget.hahn);
            images_.push_back(std::move(c));
        }
        W_.assign(n_, std::vector<Int>(n_));
        for (std::size_t a = 0; a < n_; ++a) W_[a][a] = 1;
        w_is_x_.assign(n_, true);
    }

    void prepare_step() {
        std::vector<LexVec> vals;
        for (std::size_t k = 0; k < n_; ++k) {
            auto v = images_[k].leading();
            if (!v) throw DimensionError("the image of " + name(k) + " is zero, so the presentation is not injective");
            if (v->exp.sign() <= 0) throw InvalidInput("value " + v->exp.str() + " of " + name(k) + " is not >_lex 0; the valuation is not centered");
            vals.push_back(v->exp);
        }
        EchelonResult er = echelon_reduce(vals);
        std::vector<std::size_t> at(n_); // position -> label
        for (std::size_t k = 0; k < n_; ++k) at[k] = k;
        for (const RowOp& op : er.log) {
            if (op.kind == RowOp::Kind::Swap) {
                std::swap(at[op.l], at[op.i]);
                continue;
            }
            if (sgn(op.q) >= 0) throw ConsistencyError("echelon step with a nonnegative multiplier");
            std::size_t l = at[op.l], i = at[op.i];
            Int q = -op.q;
            if (!q.fits_slong_p()) throw InvalidInput("monoidal count out of range");
            images_[l] = images_[l] * images_[i].pow(-q.get_si());
            for (std::size_t a = 0; a < n_; ++a) W_[a][i] += q * W_[a][l];
            log_.push_back(TransformEntry::monoidal(l, i, q));
        }
        basis_ = er.basis;
        basis_vars_.clear();
        for (std::size_t pos : er.basis_rows) basis_vars_.push_back(at[pos]);
        for (std::size_t pos = 0; pos < n_; ++pos) {
            auto v = images_[at[pos]].leading();
            if (!v || !(v->exp == er.rows[pos])) throw ConsistencyError("prepared value of " + name(at[pos]) + " disagrees with the echelon rows");
        }
        TraceEvent ev;
        ev.kind = TraceEvent::Kind::Prepared;
        ev.note = "rank " + std::to_string(basis_.rank());
        trace_.push_back(ev);
    }

    MonomializationResult run() {
        std::optional<std::pair<std::size_t, std::vector<Int>>> previous;
        std::vector<std::size_t> previous_cols;
        const std::size_t max_restarts = 8 * n_ * m_ + 16;
        for (;;) {
            prepare_step();
            if (previous) {
                check_progress(previous->first, previous->second, previous_cols);
            }
            sub_ = Subfield();
            residues_.clear();
            reps_.clear();
            rep_cache_.reset();
            bool restarted = false;
            std::vector<std::size_t> pending;
            for (std::size_t j = 0; j < n_; ++j)
                if (std::find(basis_vars_.begin(), basis_vars_.end(), j) == basis_vars_.end()) pending.push_back(j);
            // a residue that needs a generator found later waits for the next pass
            while (!pending.empty() && !restarted) {
                std::vector<std::size_t> later;
                deferred_.clear();
                for (std::size_t j : pending) {
                    Outcome o = discover(j);
                    if (o == Outcome::NewValue) {
                        restarted = true;
                        break;
                    }
                    if (o == Outcome::Deferred) later.push_back(j);
                }
                if (restarted) break;
                if (later.size() == pending.size()) throw PurityError(deferred_);
                pending = std::move(later);
            }
            if (!restarted) break;
            previous = {basis_.rank(), basis_.pivots};
            previous_cols = basis_.pivot_cols;
            if (++restarts_ > max_restarts) throw ConsistencyError("too many restarts");
            TraceEvent ev;
            ev.kind = TraceEvent::Kind::Restart;
            trace_.push_back(ev);
        }
        if (basis_.rank() != m_)
            throw DimensionError("the values generate a subgroup of rank " + std::to_string(basis_.rank()) + " < " + std::to_string(m_) +
                                 "; the valuation is not of maximal dimension");
        if (residues_.size() != n_ - m_) throw DimensionError("found " + std::to_string(residues_.size()) + " residues, expected " + std::to_string(n_ - m_));
        return assemble();
    }

private:
    std::string name(std::size_t k) const { return spec_.vars.at(k); }

    void check_progress(std::size_t old_rank, const std::vector<Int>& old_piv, const std::vector<std::size_t>& old_cols) {
        if (basis_.rank() > old_rank) return;
        bool ok = basis_.rank() == old_rank && basis_.pivot_cols == old_cols;
        bool strict = false;
        for (std::size_t k = 0; ok && k < old_piv.size(); ++k) {
            if (basis_.pivots[k] > old_piv[k]) ok = false;
            if (basis_.pivots[k] < old_piv[k]) strict = true;
        }
        if (!ok || !strict) throw ConsistencyError("restart did not improve the subgroup (rank and pivots unchanged)");
    }

    Exponent labels_exponent(const std::vector<Int>& coords) const {
        Exponent R(n_);
        for (std::size_t k = 0; k < coords.size(); ++k) R[basis_vars_[k]] = coords[k];
        return R;
    }

    // Every basis image is one exact term and every residue representative
    // evaluates to its symbol.
    bool pure() const {
        for (std::size_t p : basis_vars_)
            if (!images_[p].as_single_term()) return false;
        for (const auto& r : reps_)
            if (!images_[r.var].as_single_term()) return false;
        for (const auto& [s, st] : reps_now()) {
            auto t = st.as_single_term();
            if (!t || !t->exp.is_zero() || !(t->coeff == TowerElem::symbol(f_, s))) return false;
        }
        return true;
    }

    TowerElem lc_of(const Exponent& R) const {
        TowerElem c(f_, 1L);
        for (std::size_t p = 0; p < n_; ++p) {
            if (sgn(R[p]) == 0) continue;
            if (!R[p].fits_slong_p()) throw InvalidInput("exponent out of range");
            c *= images_[p].as_single_term()->coeff.pow(R[p].get_si());
        }
        return c;
    }

    void log_change(std::size_t j, Correction acc) {
        if (acc.empty()) return;
        acc.reps = reps_;
        for (std::size_t a = 0; a < n_; ++a)
            if (sgn(W_[a][j]) != 0) w_is_x_[a] = false;
        log_.push_back(TransformEntry::coord_change(j, std::move(acc)));
    }

    // Limit step: strips every qualifying term below the first
    // non-qualifying exponent N in one go. Returns false if nothing moves.
    bool limit_step(std::size_t j, const LexVec& B, Correction& acc) {
        const HahnStream& s = images_[j];
        bool on_family = false;
        for (const auto& fam : s.families())
            if (index_of(fam, B)) on_family = true;
        if (!on_family) return false;

        std::optional<LexVec> N = s.ceiling();
        auto lower = [&](const LexVec& v) {
            if (!N || v < *N) N = v;
        };
        struct Qual {
            Exponent R0, Rstep;
            CoeffRule alpha;
        };
        std::vector<std::optional<Qual>> qual;
        for (const auto& [e, c] : s.finite()) {
            auto co = try_solve_in_basis(e, basis_);
            if (!co || !sub_.contains(c / lc_of(labels_exponent(*co)))) lower(e);
        }
        for (const auto& fam : s.families()) {
            auto c0 = try_solve_in_basis(fam.start(), basis_);
            auto c1 = try_solve_in_basis(fam.exponent(fam.lo + 1), basis_);
            if (!c0 || !c1) {
                lower(fam.start());
                qual.push_back(std::nullopt);
                continue;
            }
            Exponent R0 = labels_exponent(*c0), R1 = labels_exponent(*c1), Rs(n_);
            for (std::size_t p = 0; p < n_; ++p) Rs[p] = R1[p] - R0[p];
            // alpha(i) = P(i) r^i / (C0 Cs^(i-lo))
            TowerElem C0 = lc_of(R0), Cs = lc_of(Rs);
            if (!fam.lo.fits_slong_p()) throw InvalidInput("family index out of range");
            CoeffRule alpha = fam.rule.scaled(Cs.pow(fam.lo.get_si()) / C0);
            alpha = CoeffRule(alpha.poly(), alpha.ratio() / Cs);
            bool ok = sub_.contains(alpha.ratio());
            for (const auto& x : alpha.poly()) ok = ok && sub_.contains(x);
            if (!ok) {
                lower(fam.start());
                qual.push_back(std::nullopt);
                continue;
            }
            qual.push_back(Qual{R0, Rs, alpha});
        }
        if (N && *N <= B) return false;

        HahnStream removed(m_, f_, s.budget());
        std::size_t pieces = 0;
        std::optional<Family> only;
        for (const auto& [e, c] : s.finite()) {
            if (N && e >= *N) continue;
            Exponent R = labels_exponent(*try_solve_in_basis(e, basis_));
            acc.terms.push_back({c / lc_of(R), R});
            removed.add_term(e, c);
            ++pieces;
        }
        for (std::size_t k = 0; k < s.families().size(); ++k) {
            if (!qual[k]) continue;
            const Family& fam = s.families()[k];
            if (N && fam.start() >= *N) continue;
            std::optional<Int> hi = fam.hi;
            if (N) {
                auto stop = first_index_at_or_above(fam, *N);
                if (stop) hi = *stop - 1;
            }
            if (hi && *hi < fam.lo) continue;
            Family piece{fam.base, fam.step, fam.lo, hi, fam.rule};
            Exponent Rb(n_);
            for (std::size_t p = 0; p < n_; ++p) Rb[p] = qual[k]->R0[p] - fam.lo * qual[k]->Rstep[p];
            acc.families.push_back(CorrectionFamily{Rb, qual[k]->Rstep, fam.lo, hi, qual[k]->alpha});
            removed += HahnStream::from_family(m_, f_, piece, s.budget());
            only = piece;
            ++pieces;
        }
        if (pieces == 1 && only) images_[j] = subtract_segment_limit(s, *only);
        else images_[j] = s - removed;
        return true;
    }

    Outcome discover(std::size_t j) {
        Correction acc;
        std::vector<std::pair<TowerElem, LexVec>> prefix;
        std::size_t steps = 0, limits = 0;
        std::optional<LexVec> prev;
        for (;;) {
            std::optional<Term> lead;
            try {
                lead = images_[j].leading();
            } catch (const Inconclusive& e) {
                throw EngineInconclusive(std::string("leading term of ") + name(j) + " not certified: " + e.what(), j, prefix, std::nullopt);
            }
            if (!lead) throw DimensionError("the current image of " + name(j) + " vanished; the valuation is not of maximal dimension");
            const LexVec B = lead->exp;
            if (prev && !(*prev < B)) throw ConsistencyError("values of " + name(j) + " failed to increase");
            prev = B;

            auto coords = try_solve_in_basis(B, basis_);
            if (!coords) {
                TraceEvent ev;
                ev.kind = TraceEvent::Kind::NewValue;
                ev.var = j;
                ev.after = B;
                trace_.push_back(ev);
                log_change(j, std::move(acc));
                return Outcome::NewValue;
            }
            Exponent R = labels_exponent(*coords);
            HahnStream mono = monomial_image(R, images_);
            TowerElem alpha = lead->coeff / mono.leading()->coeff;

            if (sub_.contains(alpha)) {
                if (pure() && limit_step(j, B, acc)) {
                    if (++limits > 4 * spec_.budget.max_steps + 64) throw EngineInconclusive("too many limit steps for " + name(j), j, prefix, B);
                    TraceEvent ev;
                    ev.kind = TraceEvent::Kind::LimitStep;
                    ev.var = j;
                    ev.before = B;
                    try {
                        if (auto t = images_[j].leading()) ev.after = t->exp;
                    } catch (const Inconclusive&) {
                    }
                    trace_.push_back(ev);
                    continue;
                }
                if (steps >= spec_.budget.max_steps)
                    throw EngineInconclusive("max_steps=" + std::to_string(spec_.budget.max_steps) + " finite subtractions on " + name(j) +
                                                 " without reaching a limit",
                                             j, prefix, B);
                ++steps;
                images_[j] -= tower_stream(alpha, reps_now(), m_, images_[j].budget()) * mono;
                acc.terms.push_back({alpha, R});
                prefix.emplace_back(alpha, B);
                TraceEvent ev;
                ev.kind = TraceEvent::Kind::FiniteStep;
                ev.var = j;
                ev.before = B;
                ev.alpha = alpha;
                try {
                    if (auto t = images_[j].leading()) ev.after = t->exp;
                } catch (const Inconclusive&) {
                }
                trace_.push_back(ev);
                continue;
            }

            auto gen = as_simple_generator(alpha, sub_.allowed());
            if (!gen) {
                if (deferred_.empty())
                    deferred_ = "residue " + alpha.str(&spec_.symbols) + " of " + name(j) +
                                " is neither in the current residue field nor a new transcendental generator";
                log_change(j, std::move(acc));
                return Outcome::Deferred;
            }
            sub_ = sub_.adjoin(gen->symbol);
            Representative rep{gen->symbol, j, R, gen->a, gen->b, gen->c, gen->d};
            reps_.push_back(rep);
            rep_cache_.reset();
            residues_.push_back({gen->symbol, j, B, rep});
            TraceEvent ev;
            ev.kind = TraceEvent::Kind::Residue;
            ev.var = j;
            ev.after = B;
            ev.alpha = alpha;
            ev.note = spec_.symbols.name(gen->symbol);
            trace_.push_back(ev);
            log_change(j, std::move(acc));
            return Outcome::Residue;
        }
    }

    MonomializationResult assemble() {
        MonomializationResult r;
        r.m = m_;
        r.n = n_;
        r.field = f_;
        r.vars = spec_.vars;
        r.symbols = spec_.symbols;
        r.log = log_;
        r.basis = basis_;
        r.basis_vars = basis_vars_;
        r.residues = residues_;
        r.W = W_;
        r.w_is_x = w_is_x_;
        r.trace = trace_;
        r.restarts = restarts_;
        r.phi_z = images_;
        for (std::size_t p = 0; p < n_; ++p) r.engine_L.push_back(images_[p].leading()->exp);
        for (std::size_t a = 0; a < n_; ++a) r.final_L.push_back(degree_L(W_[a], r.engine_L));

        const HahnBudget& b = spec_.budget.hahn;
        for (std::size_t p = 0; p < n_; ++p) r.psi_z.push_back(HahnStream::monomial(m_, TowerElem(f_, 1L), r.engine_L[p], b));
        for (const auto& res : residues_) r.psi_z[res.var] = HahnStream::monomial(m_, TowerElem::symbol(f_, res.symbol), res.value, b);

        std::vector<HahnStream> level = r.psi_z;
        std::optional<std::vector<HahnStream>> psi_y;
        for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
            const auto& e = *it;
            if (e.kind != TransformEntry::Kind::CoordChange && !psi_y) psi_y = level;
            switch (e.kind) {
            case TransformEntry::Kind::Monoidal: level[e.l] = level[e.l] * level[e.i].pow(e.q.get_si()); break;
            case TransformEntry::Kind::SwapVars: std::swap(level[e.l], level[e.i]); break;
            case TransformEntry::Kind::CoordChange: level[e.l] = level[e.l] + eval_correction(e.corr, level); break;
            }
        }
        r.psi_x = level;
        r.psi_y = psi_y ? *psi_y : level;
        return r;
    }

    const ValuationSpec& spec_;
    std::size_t m_, n_;
    GroundField f_;
    std::vector<HahnStream> images_;
    std::vector<std::vector<Int>> W_;
    std::vector<bool> w_is_x_;
    TransformLog log_;
    SubgroupBasis basis_;
    std::vector<std::size_t> basis_vars_;
    Subfield sub_;
    std::vector<Representative> reps_;
    // streams of the residue representatives, built when first needed
    const std::map<SymbolId, HahnStream>& reps_now() const {
        if (!rep_cache_) rep_cache_ = rep_streams(reps_, images_);
        return *rep_cache_;
    }
    mutable std::optional<std::map<SymbolId, HahnStream>> rep_cache_;
    std::vector<ResidueInfo> residues_;
    std::vector<TraceEvent> trace_;
    std::size_t restarts_ = 0;
    std::string deferred_;

    friend PrepareResult monomval::prepare(const ValuationSpec&);
};

} // namespace

PrepareResult prepare(const ValuationSpec& spec) {
    Engine e(spec);
    e.prepare_step();
    return {e.images_, e.basis_, e.basis_vars_, e.log_, e.W_};
}

MonomializationResult monomialize(const ValuationSpec& spec) { return Engine(spec).run(); }

// ------------------------------------------------------------------ verify

VerifyReport verify_monomial(const MonomializationResult& res, const ValuationSpec& spec, long degree, std::size_t samples,
                             std::uint64_t seed) {
    VerifyReport rep;
    std::vector<HahnStream> imgs;
    for (const auto& s : spec.images) {
        HahnStream c = s;
        c.set_budget(spec.budget.hahn);
        imgs.push_back(std::move(c));
    }
    std::vector<HahnStream> z = replay_forward(res.log, imgs);
    const std::size_t n = res.n;
    std::vector<HahnStream> w;
    for (std::size_t a = 0; a < n; ++a) w.push_back(monomial_image(res.W[a], z));

    std::mt19937_64 rng(seed);
    auto coeff = [&]() {
        if (res.field.is_rationals()) {
            long v = 0;
            while (v == 0) v = static_cast<long>(rng() % 11) - 5;
            return TowerElem(res.field, v);
        }
        std::uint64_t p = res.field.characteristic();
        return TowerElem(res.field, static_cast<long>(1 + rng() % (p - 1)));
    };
    for (std::size_t tries = 0; rep.checked < samples && tries < 4 * samples + 16; ++tries) {
        TruncSeries f(n, res.field);
        std::size_t nterms = 1 + rng() % 4;
        for (std::size_t t = 0; t < nterms; ++t) {
            Exponent a(n);
            long d = static_cast<long>(rng() % static_cast<std::uint64_t>(degree + 1));
            for (long u = 0; u < d; ++u) a[rng() % n] += 1;
            f.add_term(a, coeff());
        }
        if (f.is_zero()) continue;
        ++rep.checked;
        auto expect = monomial_value(f, res.final_L);
        try {
            auto got = nu_t(phi_of(f, w));
            if (got != expect) {
                ++rep.mismatches;
                if (rep.counterexamples.size() < 5) {
                    std::vector<std::string> wn;
                    for (std::size_t a = 0; a < n; ++a) wn.push_back("W" + std::to_string(a + 1));
                    rep.counterexamples.push_back("f = " + f.str(wn) + ": nu_t(phi(f)) = " + (got ? got->str() : "inf") +
                                                  ", monomial value = " + (expect ? expect->str() : "inf"));
                }
            }
        } catch (const Inconclusive&) {
            ++rep.inconclusive;
        }
    }
    return rep;
}

// --------------------------------------------------------- series replay

namespace {

TruncSeries tower_series(const TowerElem& x, const std::map<SymbolId, TruncSeries>& vals, std::size_t n, long degree) {
    auto poly = [&](const Poly& p) {
        TruncSeries acc(n, p.field());
        for (const auto& [mono, c] : p.terms()) {
            TruncSeries t = TruncSeries::constant(n, TowerElem(c));
            for (std::size_t s = 0; s < mono.size(); ++s) {
                if (mono[s] == 0) continue;
                auto it = vals.find(static_cast<SymbolId>(s));
                if (it == vals.end()) t = t.scaled(TowerElem::symbol(p.field(), static_cast<SymbolId>(s)).pow(mono[s]));
                else t = t * it->second.pow(mono[s], degree);
            }
            acc += t;
        }
        return acc;
    };
    TruncSeries num = poly(x.num());
    if (x.den().is_constant()) return num.scaled(TowerElem(x.den().constant()).inv());
    return num * poly(x.den()).inv(degree);
}

TruncSeries correction_series(const Correction& c, std::size_t n, const GroundField& f, long degree) {
    std::map<SymbolId, TruncSeries> vals;
    for (const auto& r : c.reps) {
        if (!r.is_plain()) throw InvalidInput("series replay supports plain residue representatives only");
        Exponent x = negate(r.R);
        x.at(r.var) += 1;
        vals.emplace(r.symbol, TruncSeries::monomial(n, TowerElem(f, 1L), x));
    }
    TruncSeries acc(n, f);
    for (const auto& t : c.terms) acc += tower_series(t.alpha, vals, n, degree) * TruncSeries::monomial(n, TowerElem(f, 1L), t.R);
    for (const auto& fam : c.families) {
        // exponent step of one index, including the ratio's monomial
        TruncSeries ratio = tower_series(fam.rule.ratio(), vals, n, degree);
        auto rt = ratio.terms();
        if (!ratio.is_exact() || rt.size() != 1) throw InvalidInput("series replay needs a monomial family ratio");
        Exponent step = fam.R_step;
        for (std::size_t k = 0; k < n; ++k) step[k] += rt.begin()->first[k];
        long sd = total_degree(step);
        bool nonneg = std::all_of(step.begin(), step.end(), [](const Int& x) { return sgn(x) >= 0; });
        Int last = fam.hi ? *fam.hi : fam.lo + Int(degree / std::max(1L, sd) + 1);
        if (!fam.hi && (!nonneg || sd <= 0)) throw InvalidInput("series replay cannot truncate a family whose exponents do not grow");
        TruncSeries part(n, f);
        for (Int i = fam.lo; i <= last; ++i)
            part += tower_series(fam.rule.at(i), vals, n, degree) * TruncSeries::monomial(n, TowerElem(f, 1L), fam.R_at(i));
        if (!fam.hi && !part.is_zero()) {
            part.tighten_shift();
            part.truncate(degree);
        }
        acc += part;
    }
    return acc;
}

} // namespace

TruncSeries replay_series(const TransformLog& log, const TruncSeries& f, const std::vector<Representative>&, long degree) {
    TruncSeries cur = f;
    for (const auto& e : log) {
        switch (e.kind) {
        case TransformEntry::Kind::Monoidal: cur = monoidal_subst(cur, e.l, e.i, e.q); break;
        case TransformEntry::Kind::SwapVars: {
            std::vector<std::size_t> perm(cur.nvars());
            for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
            std::swap(perm[e.l], perm[e.i]);
            cur = permute(cur, perm);
            break;
        }
        case TransformEntry::Kind::CoordChange:
            cur = coordinate_change(cur, e.l, correction_series(e.corr, cur.nvars(), cur.field(), degree), degree);
            break;
        }
    }
    return cur;
}

// -------------------------------------------------------------------- text

namespace {

std::string level_name(std::size_t k, char prefix) { return std::string(1, prefix) + std::to_string(k + 1); }

std::string power(const std::string& v, const Int& e) {
    if (e == 1) return v;
    return v + "^" + (sgn(e) < 0 ? "(" + e.get_str() + ")" : e.get_str());
}

std::string linear_exp(const Int& base, const Int& step) {
    if (sgn(step) == 0) return base.get_str();
    std::string s = step == 1 ? "i" : (step == -1 ? "-i" : step.get_str() + "*i");
    if (sgn(base) > 0) s += "+" + base.get_str();
    else if (sgn(base) < 0) s += base.get_str();
    return s == "i" ? s : "(" + s + ")";
}

std::string fraction_text(const Exponent& R, const std::vector<std::string>& names) {
    std::string num, den;
    for (std::size_t p = 0; p < R.size(); ++p) {
        if (sgn(R[p]) > 0) num += (num.empty() ? "" : "*") + power(names[p], R[p]);
        if (sgn(R[p]) < 0) den += (den.empty() ? "" : "*") + power(names[p], Int(-R[p]));
    }
    std::string text = num.empty() ? "1" : num;
    if (!den.empty()) text += "/" + (den.find('*') != std::string::npos ? "(" + den + ")" : den);
    return text;
}

std::string monomial_text(const Exponent& R, char prefix) {
    std::vector<std::string> names;
    for (std::size_t p = 0; p < R.size(); ++p) names.push_back(level_name(p, prefix));
    return fraction_text(R, names);
}

std::string coeff_times(const std::string& c, const std::string& mono) {
    if (mono == "1") return c;
    if (c == "1") return mono;
    std::string body = c[0] == '-' ? c.substr(1) : c;
    bool wrap = body.find_first_of("+-/") != std::string::npos;
    return (wrap ? "(" + c + ")" : c) + "*" + mono;
}

} // namespace

std::string entry_text(const TransformEntry& e, const std::vector<std::string>& vars, const SymbolTable& symbols) {
    switch (e.kind) {
    case TransformEntry::Kind::Monoidal:
        return vars.at(e.l) + " -> " + level_name(e.l, 'Y') + "*" + power(level_name(e.i, 'Y'), e.q);
    case TransformEntry::Kind::SwapVars: return "swap " + level_name(e.l, 'Y') + " <-> " + level_name(e.i, 'Y');
    case TransformEntry::Kind::CoordChange: {
        std::string out = level_name(e.l, 'Y') + " = " + level_name(e.l, 'Z');
        for (const auto& t : e.corr.terms) {
            std::string term = coeff_times(t.alpha.str(&symbols), monomial_text(t.R, 'Z'));
            out += term[0] == '-' ? " - " + term.substr(1) : " + " + term;
        }
        for (const auto& f : e.corr.families) {
            std::string mono;
            for (std::size_t p = 0; p < f.R_base.size(); ++p) {
                if (sgn(f.R_base[p]) == 0 && sgn(f.R_step[p]) == 0) continue;
                std::string ex = linear_exp(f.R_base[p], f.R_step[p]);
                mono += (mono.empty() ? "" : "*") + level_name(p, 'Z') + (ex == "1" ? "" : "^" + ex);
            }
            std::string range = "i=" + f.lo.get_str() + ".." + (f.hi ? f.hi->get_str() : "inf");
            out += " + sum[" + range + "] " + coeff_times(f.rule.str(&symbols), mono.empty() ? "1" : mono);
        }
        for (const auto& r : e.corr.reps) {
            Exponent x = negate(r.R);
            x.at(r.var) += 1;
            out += "; " + symbols.name(r.symbol) + " ~ " + monomial_text(x, 'Z');
        }
        return out;
    }
    }
    return "";
}

namespace {

// Exact inverse of a unimodular integer matrix.
std::vector<std::vector<Int>> inverse(const std::vector<std::vector<Int>>& A) {
    const std::size_t n = A.size();
    std::vector<std::vector<mpq_class>> M(n, std::vector<mpq_class>(2 * n));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) M[r][c] = A[r][c];
        M[r][n + r] = 1;
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && M[p][c] == 0) ++p;
        if (p == n) throw ConsistencyError("exponent matrix is singular");
        std::swap(M[p], M[c]);
        mpq_class inv = 1 / M[c][c];
        for (auto& x : M[c]) x *= inv;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || M[r][c] == 0) continue;
            mpq_class k = M[r][c];
            for (std::size_t q = 0; q < 2 * n; ++q) M[r][q] -= k * M[c][q];
        }
    }
    std::vector<std::vector<Int>> out(n, std::vector<Int>(n));
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            if (M[r][n + c].get_den() != 1) throw ConsistencyError("exponent matrix is not unimodular");
            out[r][c] = M[r][n + c].get_num();
        }
    return out;
}

} // namespace

std::string representative_text(const MonomializationResult& res, const Representative& rep) {
    const std::size_t n = res.n;
    Exponent x = negate(rep.R);
    x.at(rep.var) += 1;
    // Z = W^{W^{-1}}: exponent over W is x^T W^{-1}
    auto Winv = inverse(res.W);
    Exponent v(n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t p = 0; p < n; ++p) v[a] += x[p] * Winv[p][a];
    bool as_x = true;
    for (std::size_t a = 0; a < n; ++a)
        if (sgn(v[a]) != 0 && !res.w_is_x[a]) as_x = false;
    std::vector<std::string> names;
    for (std::size_t a = 0; a < n; ++a) names.push_back(as_x ? res.vars[a] : "W" + std::to_string(a + 1));
    std::string text = fraction_text(v, names);
    if (rep.is_plain()) return text;
    const SymbolTable* s = &res.symbols;
    std::string xs = "(" + text + ")";
    // k*x + c with the trivial pieces dropped
    auto linear = [&](const TowerElem& k, const TowerElem& c) {
        std::string out;
        TowerElem one(k.field(), 1L);
        if (k == one) out = xs;
        else if (k == -one) out = "-" + xs;
        else if (!k.is_zero()) out = "(" + k.str(s) + ")*" + xs;
        if (!c.is_zero()) out += (out.empty() ? "" : " + ") + std::string(c.is_constant() ? "" : "(") + c.str(s) + (c.is_constant() ? "" : ")");
        return out.empty() ? std::string("0") : out;
    };
    std::string num = linear(rep.d, -rep.b), den = linear(-rep.c, rep.a);
    if (rep.c.is_zero() && rep.a == TowerElem(rep.a.field(), 1L)) return num;
    auto wrap = [](const std::string& t) {
        bool atom = t.find(' ') == std::string::npos && t.find('*') == std::string::npos && t[0] != '-';
        return atom ? t : "(" + t + ")";
    };
    return wrap(num) + "/" + wrap(den);
}

} // namespace monomval
