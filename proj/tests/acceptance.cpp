// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "monomval/cli.hpp"
#include "oracles.hpp"

using namespace monomval;

namespace {

using Clock = std::chrono::steady_clock;

std::string path(const std::string& rel) { return std::string(MONOMVAL_SOURCE_DIR) + "/" + rel; }

std::string slurp(const std::string& rel) {
    std::ifstream in(path(rel));
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects the first failure; `detail` ends up on the report line.
struct Outcome {
    bool ok = true;
    std::string detail;
    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
    void expect(bool cond, const std::string& why) {
        if (!cond) fail(why);
    }
};

// ------------------------------------------------------------------ example

Outcome golden_example() {
    Outcome o;
    auto t0 = Clock::now();
    ValuationSpec spec = parse_spec(slurp("specs/example_f5.spec"));
    MonomializationResult r = monomialize(spec);
    const GroundField& f = spec.field;
    TowerElem u3 = TowerElem::symbol(f, 0);

    std::size_t monoidals = 0;
    std::string monoidal_text;
    for (const auto& e : r.log)
        if (e.kind == TransformEntry::Kind::Monoidal) {
            ++monoidals;
            monoidal_text = entry_text(e, r.vars, r.symbols);
        }
    o.expect(monoidals == 1 && monoidal_text == "X4 -> Y4*Y1^2", "monoidal log: " + std::to_string(monoidals) + " entries, " + monoidal_text);

    // the four series written out by hand, first 10 terms each
    std::vector<std::vector<Term>> want(4);
    want[0].push_back({LexVec{0, 0, 1}, TowerElem(f, 1L)});
    for (long i = 1; want[1].size() < 10; ++i)
        if (i % 5 != 0) want[1].push_back({LexVec{0, 0, i}, TowerElem(f, i)});
    want[2].push_back({LexVec{0, 0, 1}, u3});
    for (long i = 1; i <= 10; ++i) want[3].push_back({LexVec{0, 0, 3 * i}, u3.pow(3 * i)});
    for (std::size_t k = 0; k < 4; ++k) {
        auto got = r.psi_x[k].first_terms(10);
        o.expect(got == want[k], "psi(X" + std::to_string(k + 1) + ") differs: " + format_stream(r.psi_x[k], &r.symbols));
    }
    // beyond the families: psi(X2) reaches t^(0,1,0), psi(X4) reaches t^(1,0,0)
    o.expect(r.psi_x[1].finite().count(LexVec{0, 1, 0}) == 1 && r.psi_x[3].finite().count(LexVec{1, 0, 0}) == 1, "psi tails missing");

    nlohmann::json j = result_json(r);
    o.expect(j["residue_field"] == "k(u3)", "residue field " + j["residue_field"].dump());
    o.expect(r.residues.size() == 1 && representative_text(r, r.residues[0].rep) == "X3/X1", "representative of u3");
    std::vector<LexVec> L{LexVec{0, 0, 1}, LexVec{0, 1, 0}, LexVec{0, 0, 1}, LexVec{1, 0, 0}};
    o.expect(r.final_L == L, "final values " + j["final_L"].dump());
    double s = seconds_since(t0);
    o.expect(s < 5.0, "took " + std::to_string(s) + " s");
    if (o.ok) o.detail = "log X4 -> Y4*Y1^2, psi x4 ok, k(u3) with u3 = X3/X1, values ok, " + std::to_string(s).substr(0, 5) + " s";
    return o;
}

Outcome checkpoints() {
    Outcome o;
    ValuationSpec spec = parse_spec(slurp("specs/example_f5.spec"));
    auto value = [&](const std::string& text) {
        return value_of(parse_series(text, spec.vars, spec.field, spec.symbols, spec.budget.trunc_degree), spec);
    };
    auto v1 = value("X2 - X1");
    o.expect(v1 == LexVec{0, 0, 2}, "v(X2 - X1) = " + (v1 ? v1->str() : "infinity"));
    // Y4 = X4/X1^2 and Y1 = X1
    auto v2 = value("X4/X1^2 - u3^3*X1");
    o.expect(v2 == LexVec{0, 0, 4}, "v(Y4 - u3^3*Y1) = " + (v2 ? v2->str() : "infinity"));

    MonomializationResult r = monomialize(spec);
    std::vector<LexVec> limits;
    for (const auto& ev : r.trace)
        if (ev.kind == TraceEvent::Kind::LimitStep && ev.after) limits.push_back(*ev.after);
    o.expect(limits.size() == 2, std::to_string(limits.size()) + " limit steps");
    if (limits.size() == 2) {
        o.expect(limits[0] == LexVec{0, 1, 0}, "first limit value " + limits[0].str());
        o.expect(limits[1] == LexVec{1, 0, -2}, "second limit value " + limits[1].str());
    }
    if (o.ok) o.detail = "(0,0,2), (0,1,0), (0,0,4), (1,0,-2)";
    return o;
}

// ------------------------------------------------------------------ lattice

Outcome lattice_suite() {
    Outcome o;
    auto t0 = Clock::now();
    std::mt19937_64 rng(20240501);
    for (int k = 0; k < 500 && o.ok; ++k) {
        std::size_t n = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
        std::size_t m = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
        auto rows = oracle::random_rows(rng, n, m, 1, 20);
        std::string tag = "matrix " + std::to_string(k) + ": ";
        EchelonResult e = echelon_reduce(rows);
        o.expect(oracle::hnf(oracle::to_matrix(e.basis.basis)) == oracle::hnf(oracle::to_matrix(rows)), tag + "subgroup differs from the HNF oracle");
        for (std::size_t j = 0; j < e.basis.rank(); ++j) {
            const LexVec& b = e.basis.basis[j];
            o.expect(b.leading_index() == e.basis.pivot_cols[j] && b[e.basis.pivot_cols[j]] == e.basis.pivots[j] && e.basis.pivots[j] > 0,
                     tag + "pivot " + std::to_string(j));
            if (j > 0) o.expect(e.basis.pivot_cols[j] > e.basis.pivot_cols[j - 1], tag + "pivot columns not increasing");
        }
        auto replayed = replay(rows, e.log);
        std::sort(replayed.begin(), replayed.end());
        replayed.erase(std::unique(replayed.begin(), replayed.end()), replayed.end());
        auto basis = e.basis.basis;
        std::sort(basis.begin(), basis.end());
        o.expect(replayed == basis, tag + "replay does not give the basis");
    }
    double s = seconds_since(t0);
    o.expect(s < 10.0, "took " + std::to_string(s) + " s");
    if (o.ok) o.detail = "500 matrices, " + std::to_string(s).substr(0, 5) + " s";
    return o;
}

// --------------------------------------------------------------- valuations

Outcome valuation_axioms() {
    Outcome o;
    std::size_t pairs = 0, strict = 0;
    for (GroundField f : {GroundField::prime(5), GroundField::rationals()}) {
        std::mt19937_64 rng(77 + f.characteristic());
        for (int k = 0; k < 500 && o.ok; ++k, ++pairs) {
            std::size_t n = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
            std::size_t m = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
            auto L = oracle::random_values(rng, n, m);
            TruncSeries a = oracle::random_series(rng, f, n), b = oracle::random_series(rng, f, n);
            // some pairs carry a truncation witness; the values then get a
            // positive first coordinate so the witness can certify minima
            if (k % 3 == 0) {
                for (auto& v : L) v[0] = std::uniform_int_distribution<long>(1, 2)(rng);
                a.truncate(12);
                b.truncate(12);
            }
            std::string tag = f.str() + " pair " + std::to_string(k) + ": ";
            TruncSeries sum = a + b;
            auto va = monomial_value(a, L), vb = monomial_value(b, L), vab = monomial_value(a * b, L);
            // a truncated sum that cancels completely has no certifiable value
            std::optional<LexVec> vs;
            if (sum.is_exact() || !sum.body().empty()) vs = monomial_value(sum, L);
            if (!va || !vb) {
                o.expect(!vab, tag + "product of zero is nonzero");
                continue;
            }
            o.expect(vab && *vab == *va + *vb, tag + "not multiplicative");
            LexVec lo = std::min(*va, *vb);
            o.expect(!vs || *vs >= lo, tag + "ultrametric inequality");
            if (*va != *vb) {
                ++strict;
                o.expect(vs && *vs == lo, tag + "no equality with distinct minima");
            }
        }
    }
    if (o.ok) o.detail = std::to_string(pairs) + " pairs (" + std::to_string(strict) + " with distinct minima)";
    return o;
}

Outcome hahn_oracle() {
    Outcome o;
    std::size_t pairs = 0, compared = 0, skipped = 0;
    SymbolTable sym(std::vector<std::string>{"u"});
    for (GroundField f : {GroundField::prime(5), GroundField::rationals()}) {
        std::mt19937_64 rng(4242 + f.characteristic());
        for (int k = 0; k < 250 && o.ok; ++k, ++pairs) {
            HahnStream s = oracle::random_stream(rng, f, sym), r = oracle::random_stream(rng, f, sym);
            for (bool mul : {false, true}) {
                auto c = oracle::check_against_oracle(s, r, mul, 20);
                if (c.skipped) ++skipped;
                compared += c.compared;
                o.expect(c.ok, f.str() + " pair " + std::to_string(k) + (mul ? " product: " : " sum: ") + c.why);
            }
        }
    }
    if (o.ok) o.detail = std::to_string(pairs) + " pairs, " + std::to_string(compared) + " terms compared, " + std::to_string(skipped) + " skipped";
    return o;
}

// ---------------------------------------------------------------- synthetic

Outcome recomposition() {
    Outcome o;
    std::size_t residues = 0, restarts = 0;
    for (int k = 0; k < 20 && o.ok; ++k) {
        std::mt19937_64 rng(1000 + k);
        GroundField f = k % 2 ? GroundField::prime(5) : GroundField::rationals();
        oracle::Synthetic syn = oracle::synthetic_spec(rng, f);
        std::string tag = "spec " + std::to_string(k) + " (" + syn.description + "): ";
        try {
            MonomializationResult r = monomialize(syn.spec);
            o.expect(r.residues.size() == syn.spec.n() - syn.spec.m, tag + "residue count");
            // the values generate the group picked for psi
            o.expect(oracle::hnf(oracle::to_matrix(r.final_L)) == oracle::hnf(oracle::to_matrix(syn.basis_values)), tag + "value group differs");
            VerifyReport v = verify_monomial(r, syn.spec, 4, 200, static_cast<std::uint64_t>(k) + 1);
            o.expect(v.checked == 200 && v.passed(),
                     tag + std::to_string(v.mismatches) + " mismatches, " + std::to_string(v.inconclusive) + " inconclusive");
            residues += r.residues.size();
            restarts += r.restarts;
        } catch (const std::exception& e) {
            o.fail(tag + e.what());
        }
    }
    if (o.ok) o.detail = "20 specs x 200 polynomials, " + std::to_string(residues) + " residues, " + std::to_string(restarts) + " restarts";
    return o;
}

// ---------------------------------------------------------------- negatives

Outcome negatives() {
    Outcome o;
    std::ostringstream out, err;
    int code = run_cli({"monomialize", path("specs/purity_violation.spec")}, out, err);
    o.expect(code == exit_code::purity, "purity spec exited " + std::to_string(code));

    std::ostringstream out2, err2;
    int code2 = run_cli({"monomialize", "--json", path("specs/example_f5_truncated.spec")}, out2, err2);
    o.expect(code2 == exit_code::inconclusive, "starved spec exited " + std::to_string(code2));
    std::size_t max_steps = parse_spec(slurp("specs/example_f5_truncated.spec")).budget.max_steps;
    try {
        nlohmann::json j = nlohmann::json::parse(out2.str());
        o.expect(j["status"] == "inconclusive" && j["prefix"].size() == max_steps,
                 "prefix of length " + std::to_string(j["prefix"].size()) + ", max_steps " + std::to_string(max_steps));
    } catch (const std::exception& e) {
        o.fail(std::string("starved output: ") + e.what());
    }
    if (o.ok) o.detail = "purity exit 4, starved exit 3 with a prefix of " + std::to_string(max_steps) + " steps";
    return o;
}

} // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"golden example", golden_example},
        {"example checkpoints", checkpoints},
        {"lattice property suite", lattice_suite},
        {"valuation axioms", valuation_axioms},
        {"hahn arithmetic vs oracle", hahn_oracle},
        {"recomposition on synthetic specs", recomposition},
        {"negative tests", negatives},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        std::cout << (o.ok ? "PASS " : "FAIL ") << name << ": " << o.detail << "\n" << std::flush;
        if (!o.ok) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
