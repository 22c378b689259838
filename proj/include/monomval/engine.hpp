#pragma once

// The monomialization procedure: prepare the values into a subgroup basis by
// monoidal transformations, discover residues variable by variable (finite
// subtractions, family limits, restarts on values outside the current
// subgroup), and assemble the monomial valuation with its transform log.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "monomval/coeff.hpp"
#include "monomval/hahn.hpp"
#include "monomval/lexgroup.hpp"
#include "monomval/series.hpp"

namespace monomval {

struct Budget {
    std::size_t max_steps = 64; // finite subtractions per variable
    HahnBudget hahn;
    long trunc_degree = 8;
};

struct ValuationSpec {
    GroundField field;
    std::size_t m = 0;
    std::vector<std::string> vars;
    SymbolTable symbols;
    std::vector<HahnStream> images; // phi(X_k)
    Budget budget;

    std::size_t n() const noexcept { return vars.size(); }
    // Structural checks: sizes, fields, centered images. Throws.
    void validate() const;
};

// Residue generator w = (d x - b) / (a - c x) for x = Z_var / Z^R, where
// a, b, c, d lie in the field generated by earlier symbols.
struct Representative {
    SymbolId symbol = 0;
    std::size_t var = 0;
    Exponent R;
    TowerElem a, b, c, d;

    bool is_plain() const { return a.is_one() && b.is_zero() && c.is_zero() && d.is_one(); }
};

struct CorrectionTerm {
    TowerElem alpha;
    Exponent R;
};

// sum_{i=lo..hi} rule(i) * Z^{R_base + i*R_step}
struct CorrectionFamily {
    Exponent R_base, R_step;
    Int lo;
    std::optional<Int> hi;
    CoeffRule rule;

    Exponent R_at(const Int& i) const;
};

// Y_j = Z_j + sum alpha Z^R (+ families); residue symbols inside alpha stand
// for their representatives as recorded when the entry was made.
struct Correction {
    std::vector<CorrectionTerm> terms;
    std::vector<CorrectionFamily> families;
    std::vector<Representative> reps;

    bool empty() const { return terms.empty() && families.empty(); }
};

struct TransformEntry {
    enum class Kind { Monoidal, SwapVars, CoordChange };
    Kind kind = Kind::Monoidal;
    std::size_t l = 0; // Monoidal: changed variable; Swap: first; CoordChange: j
    std::size_t i = 0; // Monoidal: multiplier variable; Swap: second
    Int q;             // Monoidal: X_l = Y_l * Y_i^q
    Correction corr;

    static TransformEntry monoidal(std::size_t l, std::size_t i, Int q);
    static TransformEntry swap(std::size_t l, std::size_t i);
    static TransformEntry coord_change(std::size_t j, Correction c);
};

using TransformLog = std::vector<TransformEntry>;

struct TraceEvent {
    enum class Kind { Prepared, FiniteStep, LimitStep, NewValue, Residue, Restart };
    Kind kind = Kind::Prepared;
    std::size_t var = 0;
    std::optional<LexVec> before, after;
    std::optional<TowerElem> alpha;
    std::string note;
};

struct ResidueInfo {
    SymbolId symbol = 0;
    std::size_t var = 0; // variable whose residue it is
    LexVec value;        // B_j
    Representative rep;
};

struct MonomializationResult {
    std::size_t m = 0, n = 0;
    GroundField field;
    std::vector<std::string> vars;
    SymbolTable symbols;

    TransformLog log;
    SubgroupBasis basis;
    std::vector<std::size_t> basis_vars; // labels carrying the basis
    std::vector<ResidueInfo> residues;

    std::vector<LexVec> engine_L;            // values of the final Z variables
    std::vector<std::vector<Int>> W;         // W_a = prod_p Z_p^{W[a][p]}
    std::vector<LexVec> final_L;             // values of W_1..W_n
    std::vector<bool> w_is_x;                // W_a coincides with X_a

    std::vector<HahnStream> psi_z, psi_y, psi_x;
    std::vector<HahnStream> phi_z;           // engine images of the final variables
    std::vector<TraceEvent> trace;
    std::size_t restarts = 0;
};

// Budget-starved discovery loop: the pseudo-convergent prefix so far.
class EngineInconclusive : public Inconclusive {
public:
    EngineInconclusive(const std::string& what, std::size_t var, std::vector<std::pair<TowerElem, LexVec>> steps,
                       std::optional<LexVec> current)
        : Inconclusive(what), var_(var), steps_(std::move(steps)), current_(std::move(current)) {}
    std::size_t var() const noexcept { return var_; }
    const std::vector<std::pair<TowerElem, LexVec>>& steps() const noexcept { return steps_; }
    const std::optional<LexVec>& current() const noexcept { return current_; }

private:
    std::size_t var_;
    std::vector<std::pair<TowerElem, LexVec>> steps_;
    std::optional<LexVec> current_;
};

struct PrepareResult {
    std::vector<HahnStream> images;
    SubgroupBasis basis;
    std::vector<std::size_t> basis_vars;
    TransformLog log;
    std::vector<std::vector<Int>> W;
};

// Echelon-reduces the current values and realizes the row operations as
// monoidal transformations on the images.
PrepareResult prepare(const ValuationSpec& spec);

MonomializationResult monomialize(const ValuationSpec& spec);

struct VerifyReport {
    std::size_t checked = 0;
    std::size_t mismatches = 0;
    std::size_t inconclusive = 0;
    std::vector<std::string> counterexamples;
    bool passed() const { return mismatches == 0 && inconclusive == 0 && checked > 0; }
};

// Random polynomials f in W_1..W_n of total degree <= degree: compares
// nu_t(phi(f)) (phi replayed forward through the log) with
// monomial_value(f, final_L).
VerifyReport verify_monomial(const MonomializationResult& res, const ValuationSpec& spec, long degree,
                             std::size_t samples, std::uint64_t seed = 1);

// phi(Z) for every label, replaying the log forward from the spec images.
std::vector<HahnStream> replay_forward(const TransformLog& log, const std::vector<HahnStream>& images);

// nu_t(phi(f)) for a series in the spec variables; the truncation witness of
// f becomes a certification ceiling.
std::optional<LexVec> value_of(const TruncSeries& f, const ValuationSpec& spec);
HahnStream phi_of(const TruncSeries& f, const std::vector<HahnStream>& images);

// Evaluates a correction at a level (streams for every label).
HahnStream eval_correction(const Correction& c, const std::vector<HahnStream>& level);

// Replays the log on a series in the X variables, producing a series in the
// final Z variables (exact where the corrections allow).
TruncSeries replay_series(const TransformLog& log, const TruncSeries& f, const std::vector<Representative>& reps_hint, long degree);

std::string entry_text(const TransformEntry& e, const std::vector<std::string>& vars, const SymbolTable& symbols);
std::string representative_text(const MonomializationResult& res, const Representative& rep);

} // namespace monomval
