#include "monomval/cli.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

namespace monomval {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

std::vector<std::string> words(std::string_view s) {
    std::istringstream is{std::string(s)};
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

bool is_ident(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

long parse_count(const std::string& v, const std::string& key, int line) {
    if (v.empty() || !std::all_of(v.begin(), v.end(), ::isdigit) || v.size() > 9) throw ParseError(key + " needs a nonnegative integer, got '" + v + "'", line);
    return std::stol(v);
}

// lines with their numbers, comments and blanks removed
std::vector<std::pair<int, std::string>> content_lines(std::string_view text) {
    std::vector<std::pair<int, std::string>> out;
    std::istringstream is{std::string(text)};
    int no = 0;
    for (std::string line; std::getline(is, line);) {
        ++no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (!line.empty()) out.emplace_back(no, line);
    }
    return out;
}

json jint(const Int& x) {
    if (x.fits_slong_p()) return x.get_si();
    return x.get_str();
}

json jints(const std::vector<Int>& v) {
    json a = json::array();
    for (const Int& x : v) a.push_back(jint(x));
    return a;
}

std::string lin(const Int& base, const Int& step) {
    if (sgn(step) == 0) return base.get_str();
    std::string s = step == 1 ? "i" : (step == -1 ? "-i" : step.get_str() + "*i");
    if (sgn(base) > 0) s += "+" + base.get_str();
    else if (sgn(base) < 0) s += base.get_str();
    return s;
}

std::string times_t(const std::string& c, const std::string& t) {
    if (c == "1") return t;
    if (c == "-1") return "-" + t;
    std::string body = c[0] == '-' ? c.substr(1) : c;
    bool wrap = body.find_first_of("+-/") != std::string::npos;
    return (wrap ? "(" + c + ")" : c) + "*" + t;
}

void apply_budget(ValuationSpec& spec) {
    for (auto& s : spec.images) s.set_budget(spec.budget.hahn);
}

std::string field_text(const GroundField& f) {
    return f.is_rationals() ? "rationals" : "prime " + std::to_string(f.characteristic());
}

} // namespace

// --------------------------------------------------------------- spec files

ValuationSpec parse_spec(std::string_view text) {
    ValuationSpec spec;
    std::optional<GroundField> field;
    std::optional<std::size_t> rank;
    bool have_vars = false, have_symbols = false, have_budgets = false;
    std::map<std::string, std::pair<int, std::string>> image_text;
    std::optional<std::string> ceiling_text;
    int ceiling_line = 0;

    for (const auto& [no, line] : content_lines(text)) {
        std::vector<std::string> w = words(line);
        const std::string& key = w[0];
        auto need_header = [&, no = no] {
            if (!image_text.empty()) throw ParseError(key + " must come before the images", no);
        };
        if (key == "field") {
            need_header();
            if (field) throw ParseError("duplicate field", no);
            if (w.size() == 2 && w[1] == "rationals") field = GroundField::rationals();
            else if (w.size() == 3 && w[1] == "prime") {
                long p = parse_count(w[2], "prime", no);
                try {
                    field = GroundField::prime(static_cast<std::uint64_t>(p));
                } catch (const std::exception& e) {
                    throw ParseError(e.what(), no);
                }
            } else
                throw ParseError("expected 'field rationals' or 'field prime <p>'", no);
        } else if (key == "rank") {
            need_header();
            if (rank) throw ParseError("duplicate rank", no);
            if (w.size() != 2) throw ParseError("expected 'rank <m>'", no);
            long m = parse_count(w[1], "rank", no);
            if (m <= 0) throw ParseError("rank must be positive", no);
            rank = static_cast<std::size_t>(m);
        } else if (key == "vars") {
            need_header();
            if (have_vars) throw ParseError("duplicate vars", no);
            if (w.size() < 2) throw ParseError("vars needs at least one name", no);
            for (std::size_t k = 1; k < w.size(); ++k) {
                if (!is_ident(w[k]) || w[k] == "i") throw ParseError("bad variable name '" + w[k] + "'", no);
                if (std::find(spec.vars.begin(), spec.vars.end(), w[k]) != spec.vars.end()) throw ParseError("duplicate variable " + w[k], no);
                spec.vars.push_back(w[k]);
            }
            have_vars = true;
        } else if (key == "symbols") {
            need_header();
            if (have_symbols) throw ParseError("duplicate symbols", no);
            for (std::size_t k = 1; k < w.size(); ++k) {
                if (!is_ident(w[k]) || w[k] == "i") throw ParseError("bad symbol name '" + w[k] + "' ('i' is the family index)", no);
                if (std::find(spec.vars.begin(), spec.vars.end(), w[k]) != spec.vars.end()) throw ParseError("symbol " + w[k] + " clashes with a variable", no);
                if (spec.symbols.find(w[k])) throw ParseError("duplicate symbol " + w[k], no);
                spec.symbols.add(w[k]);
            }
            have_symbols = true;
        } else if (key == "image") {
            auto eq = line.find('=');
            if (w.size() < 2 || eq == std::string::npos) throw ParseError("expected 'image <var> = <segments>'", no);
            std::string var = trim(std::string_view(line).substr(5, eq - 5));
            if (!field || !rank || !have_vars) throw ParseError("field, rank and vars must precede the images", no);
            if (std::find(spec.vars.begin(), spec.vars.end(), var) == spec.vars.end()) throw ParseError("image of undeclared variable '" + var + "'", no);
            if (image_text.count(var)) throw ParseError("second image for " + var, no);
            image_text[var] = {no, trim(std::string_view(line).substr(eq + 1))};
        } else if (key == "budgets") {
            if (have_budgets) throw ParseError("duplicate budgets", no);
            have_budgets = true;
            for (std::size_t k = 1; k < w.size(); ++k) {
                auto eq = w[k].find('=');
                if (eq == std::string::npos) throw ParseError("budget '" + w[k] + "' needs key=value", no);
                std::string bk = w[k].substr(0, eq), bv = w[k].substr(eq + 1);
                if (bk == "max_steps") spec.budget.max_steps = static_cast<std::size_t>(parse_count(bv, bk, no));
                else if (bk == "max_terms") spec.budget.hahn.max_terms = static_cast<std::size_t>(parse_count(bv, bk, no));
                else if (bk == "trunc_degree") spec.budget.trunc_degree = parse_count(bv, bk, no);
                else if (bk == "box") spec.budget.hahn.box = static_cast<std::size_t>(parse_count(bv, bk, no));
                else if (bk == "geometric") spec.budget.hahn.geometric = static_cast<std::size_t>(parse_count(bv, bk, no));
                else if (bk == "lex_ceiling") {
                    ceiling_text = bv;
                    ceiling_line = no;
                } else
                    throw ParseError("unknown budget '" + bk + "'", no);
            }
        } else {
            throw ParseError("unknown directive '" + key + "'", no);
        }
    }
    if (!field) throw ParseError("missing field");
    if (!rank) throw ParseError("missing rank");
    if (!have_vars) throw ParseError("missing vars");
    spec.field = *field;
    spec.m = *rank;
    if (ceiling_text) {
        try {
            spec.budget.hahn.lex_ceiling = parse_lexvec(*ceiling_text, spec.m);
        } catch (const std::exception& e) {
            throw ParseError(e.what(), ceiling_line);
        }
    }
    for (const auto& v : spec.vars) {
        auto it = image_text.find(v);
        if (it == image_text.end()) throw ParseError("no image for " + v);
        try {
            spec.images.push_back(parse_stream(it->second.second, spec.m, spec.field, spec.symbols, spec.budget.hahn));
        } catch (const ParseError& e) {
            throw ParseError(e.what(), it->second.first);
        } catch (const std::exception& e) {
            throw ParseError(e.what(), it->second.first);
        }
    }
    try {
        spec.validate();
    } catch (const DimensionError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(e.what());
    }
    return spec;
}

std::string serialize_spec(const ValuationSpec& spec) {
    std::ostringstream os;
    os << "field " << field_text(spec.field) << "\n";
    os << "rank " << spec.m << "\n";
    os << "vars";
    for (const auto& v : spec.vars) os << " " << v;
    os << "\n";
    if (spec.symbols.size() > 0) {
        os << "symbols";
        for (const auto& s : spec.symbols.names()) os << " " << s;
        os << "\n";
    }
    for (std::size_t k = 0; k < spec.vars.size(); ++k) os << "image " << spec.vars[k] << " = " << format_stream(spec.images.at(k), &spec.symbols) << "\n";
    const Budget& b = spec.budget;
    os << "budgets max_steps=" << b.max_steps << " max_terms=" << b.hahn.max_terms << " trunc_degree=" << b.trunc_degree << " box=" << b.hahn.box
       << " geometric=" << b.hahn.geometric;
    if (b.hahn.lex_ceiling) os << " lex_ceiling=" << b.hahn.lex_ceiling->str();
    os << "\n";
    return os.str();
}

ValuationSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

bool looks_like_spec(std::string_view text) {
    for (const auto& [no, line] : content_lines(text)) {
        std::string k = words(line)[0];
        return k == "field" || k == "rank" || k == "vars" || k == "symbols" || k == "image" || k == "budgets";
    }
    return false;
}

std::vector<LexVec> parse_rows(std::string_view text) {
    std::vector<LexVec> rows;
    for (const auto& [no, line] : content_lines(text)) {
        std::string t;
        for (char c : line) t += (c == '(' || c == ')' || c == ',') ? ' ' : c;
        std::vector<Int> v;
        for (const std::string& w : words(t)) {
            std::size_t p = (w[0] == '-' || w[0] == '+') ? 1 : 0;
            if (p == w.size() || !std::all_of(w.begin() + static_cast<std::ptrdiff_t>(p), w.end(), ::isdigit))
                throw ParseError("bad matrix entry '" + w + "'", no);
            v.emplace_back(w[0] == '+' ? w.substr(1) : w);
        }
        if (!rows.empty() && v.size() != rows.front().size())
            throw ParseError("row has " + std::to_string(v.size()) + " entries, expected " + std::to_string(rows.front().size()), no);
        LexVec r(std::move(v));
        if (r.sign() <= 0) throw ParseError("row " + r.str() + " is not >_lex 0", no);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw ParseError("no rows");
    return rows;
}

// ------------------------------------------------------------------ reports

std::string closed_form(const HahnStream& s, const SymbolTable* names) {
    std::vector<std::string> parts;
    for (const auto& [a, c] : s.finite()) parts.push_back(times_t(c.str(names), "t^" + a.str()));
    for (const auto& f : s.families()) {
        std::string e = "(";
        for (std::size_t k = 0; k < f.base.size(); ++k) e += (k ? "," : "") + lin(f.base[k], f.step[k]);
        e += ")";
        std::string range = f.hi ? "_{i=" + f.lo.get_str() + ".." + f.hi->get_str() + "}" : "_{i>=" + f.lo.get_str() + "}";
        parts.push_back("sum" + range + " " + times_t(f.rule.str(names), "t^" + e));
    }
    if (s.ceiling()) parts.push_back("O(t^" + s.ceiling()->str() + ")");
    if (parts.empty()) return "0";
    std::string out = parts[0];
    for (std::size_t k = 1; k < parts.size(); ++k) out += parts[k][0] == '-' ? " - " + parts[k].substr(1) : " + " + parts[k];
    return out;
}

namespace {

json rep_json(const Representative& r, const SymbolTable& sym) {
    return json{{"symbol", sym.name(r.symbol)}, {"var", r.var}, {"R", jints(r.R)}, {"a", r.a.str(&sym)},
                {"b", r.b.str(&sym)},          {"c", r.c.str(&sym)}, {"d", r.d.str(&sym)}};
}

json streams_json(const std::vector<HahnStream>& v, const std::vector<std::string>& names, const SymbolTable& sym) {
    json a = json::array();
    for (std::size_t k = 0; k < v.size(); ++k)
        a.push_back(json{{"var", names[k]}, {"stream", format_stream(v[k], &sym)}, {"closed_form", closed_form(v[k], &sym)}});
    return a;
}

const char* trace_kind(TraceEvent::Kind k) {
    switch (k) {
    case TraceEvent::Kind::Prepared: return "prepared";
    case TraceEvent::Kind::FiniteStep: return "finite_step";
    case TraceEvent::Kind::LimitStep: return "limit_step";
    case TraceEvent::Kind::NewValue: return "new_value";
    case TraceEvent::Kind::Residue: return "residue";
    case TraceEvent::Kind::Restart: return "restart";
    }
    return "";
}

std::vector<std::string> level_names(std::size_t n, const std::string& p) {
    std::vector<std::string> v;
    for (std::size_t k = 0; k < n; ++k) v.push_back(p + std::to_string(k + 1));
    return v;
}

std::string w_definition(const MonomializationResult& r, std::size_t a) {
    if (r.w_is_x[a]) {
        // X_a itself unless a monoidal map mixed it
        bool unit = true;
        for (std::size_t p = 0; p < r.n; ++p)
            if (r.W[a][p] != (p == a ? 1 : 0)) unit = false;
        if (unit) return r.vars[a];
    }
    std::string out;
    for (std::size_t p = 0; p < r.n; ++p) {
        if (sgn(r.W[a][p]) == 0) continue;
        out += (out.empty() ? "" : "*") + ("Z" + std::to_string(p + 1)) + (r.W[a][p] == 1 ? "" : "^" + r.W[a][p].get_str());
    }
    return out.empty() ? "1" : out;
}

std::string residue_field(const MonomializationResult& r) {
    std::string s = "k(";
    for (std::size_t k = 0; k < r.residues.size(); ++k) s += (k ? "," : "") + r.symbols.name(r.residues[k].symbol);
    return s + ")";
}

} // namespace

json result_json(const MonomializationResult& r) {
    const SymbolTable& sym = r.symbols;
    json j;
    j["status"] = "ok";
    j["field"] = field_text(r.field);
    j["m"] = r.m;
    j["n"] = r.n;
    j["vars"] = r.vars;
    j["symbols"] = sym.names();

    json log = json::array();
    for (const auto& e : r.log) {
        json x{{"text", entry_text(e, r.vars, sym)}};
        switch (e.kind) {
        case TransformEntry::Kind::Monoidal:
            x["kind"] = "monoidal";
            x["l"] = e.l;
            x["i"] = e.i;
            x["q"] = jint(e.q);
            break;
        case TransformEntry::Kind::SwapVars:
            x["kind"] = "swap";
            x["l"] = e.l;
            x["i"] = e.i;
            break;
        case TransformEntry::Kind::CoordChange: {
            x["kind"] = "coord_change";
            x["var"] = e.l;
            json terms = json::array(), fams = json::array(), reps = json::array();
            for (const auto& t : e.corr.terms) terms.push_back(json{{"alpha", t.alpha.str(&sym)}, {"R", jints(t.R)}});
            for (const auto& f : e.corr.families)
                fams.push_back(json{{"R_base", jints(f.R_base)},
                                    {"R_step", jints(f.R_step)},
                                    {"lo", jint(f.lo)},
                                    {"hi", f.hi ? jint(*f.hi) : json(nullptr)},
                                    {"rule", f.rule.str(&sym)}});
            for (const auto& rp : e.corr.reps) reps.push_back(rep_json(rp, sym));
            x["terms"] = terms;
            x["families"] = fams;
            x["reps"] = reps;
            break;
        }
        }
        log.push_back(x);
    }
    j["log"] = log;

    json basis = json::array();
    for (const auto& b : r.basis.basis) basis.push_back(b.str());
    std::vector<std::string> bvars;
    for (std::size_t p : r.basis_vars) bvars.push_back("Z" + std::to_string(p + 1));
    j["basis"] = json{{"dim", r.basis.dim}, {"vectors", basis}, {"pivots", jints(r.basis.pivots)}, {"pivot_cols", r.basis.pivot_cols}};
    j["basis_vars"] = bvars;

    json res = json::array();
    for (const auto& x : r.residues) {
        json o = rep_json(x.rep, sym);
        o["var"] = "Z" + std::to_string(x.var + 1);
        o["value"] = x.value.str();
        o["representative"] = representative_text(r, x.rep);
        res.push_back(o);
    }
    j["residues"] = res;
    j["residue_field"] = residue_field(r);

    auto lexs = [](const std::vector<LexVec>& v) {
        json a = json::array();
        for (const auto& x : v) a.push_back(x.str());
        return a;
    };
    j["engine_L"] = lexs(r.engine_L);
    json W = json::array();
    for (const auto& row : r.W) W.push_back(jints(row));
    j["W"] = W;
    json wdef = json::array();
    for (std::size_t a = 0; a < r.n; ++a) wdef.push_back(w_definition(r, a));
    j["W_definition"] = wdef;
    j["final_L"] = lexs(r.final_L);
    j["w_is_x"] = r.w_is_x;

    auto zn = level_names(r.n, "Z"), yn = level_names(r.n, "Y");
    j["psi_x"] = streams_json(r.psi_x, r.vars, sym);
    j["psi_y"] = streams_json(r.psi_y, yn, sym);
    j["psi_z"] = streams_json(r.psi_z, zn, sym);
    j["phi_z"] = streams_json(r.phi_z, zn, sym);

    json trace = json::array();
    for (const auto& t : r.trace) {
        json x{{"kind", trace_kind(t.kind)}};
        if (t.kind != TraceEvent::Kind::Prepared && t.kind != TraceEvent::Kind::Restart) x["var"] = "Z" + std::to_string(t.var + 1);
        if (t.before) x["before"] = t.before->str();
        if (t.after) x["after"] = t.after->str();
        if (t.alpha) x["alpha"] = t.alpha->str(&sym);
        if (!t.note.empty()) x["note"] = t.note;
        trace.push_back(x);
    }
    j["trace"] = trace;
    j["restarts"] = r.restarts;
    return j;
}

std::string result_text(const MonomializationResult& r) {
    const SymbolTable& sym = r.symbols;
    std::ostringstream os;
    os << "field " << field_text(r.field) << ", rank " << r.m << ", " << r.n << " variables\n";
    os << "transform log:\n";
    if (r.log.empty()) os << "  (empty)\n";
    for (const auto& e : r.log) os << "  " << entry_text(e, r.vars, sym) << "\n";
    os << "psi:\n";
    for (std::size_t k = 0; k < r.n; ++k) os << "  " << r.vars[k] << " = " << closed_form(r.psi_x[k], &sym) << "\n";
    os << "residue field: " << residue_field(r) << "\n";
    for (const auto& x : r.residues)
        os << "  " << sym.name(x.symbol) << " = " << representative_text(r, x.rep) << "  value " << x.value.str() << "\n";
    os << "monomial valuation:\n";
    for (std::size_t a = 0; a < r.n; ++a) os << "  v(W" << a + 1 << ") = " << r.final_L[a].str() << "   W" << a + 1 << " = " << w_definition(r, a) << "\n";
    if (r.restarts) os << "restarts: " << r.restarts << "\n";
    return os.str();
}

namespace {

// independent rows, reordering at most
bool already_basis(const EchelonResult& e) {
    bool adds = std::any_of(e.log.begin(), e.log.end(), [](const RowOp& op) { return op.kind == RowOp::Kind::AddRow; });
    return !adds && e.basis.rank() == e.rows.size();
}

struct OpReading {
    RowOp op;
    std::string text;
};

std::vector<OpReading> read_ops(const EchelonResult& e, const std::vector<std::string>& names) {
    std::vector<std::size_t> at(names.size());
    for (std::size_t k = 0; k < at.size(); ++k) at[k] = k;
    auto y = [&](std::size_t label) {
        std::string n = names[label];
        if (!n.empty() && n[0] == 'X') return "Y" + n.substr(1);
        return n + "'";
    };
    std::vector<OpReading> out;
    for (const RowOp& op : e.log) {
        if (op.kind == RowOp::Kind::Swap) {
            out.push_back({op, "reorder rows " + std::to_string(op.l + 1) + " and " + std::to_string(op.i + 1)});
            std::swap(at[op.l], at[op.i]);
            continue;
        }
        std::size_t l = at[op.l], i = at[op.i];
        Int q = -op.q;
        std::string t = names[l] + " -> " + y(l) + (sgn(q) > 0 ? "*" : "/") + y(i);
        Int aq = abs(q);
        if (aq != 1) t += "^" + aq.get_str();
        out.push_back({op, t});
    }
    return out;
}

} // namespace

json echelon_json(const EchelonResult& e, const std::vector<std::string>& names) {
    json ops = json::array();
    for (const auto& r : read_ops(e, names)) {
        json x{{"kind", r.op.kind == RowOp::Kind::Swap ? "swap" : "add_row"}, {"l", r.op.l + 1}, {"i", r.op.i + 1}, {"text", r.text}};
        if (r.op.kind == RowOp::Kind::AddRow) x["q"] = jint(r.op.q);
        ops.push_back(x);
    }
    json basis = json::array(), rows = json::array();
    for (const auto& b : e.basis.basis) basis.push_back(b.str());
    for (const auto& b : e.rows) rows.push_back(b.str());
    return json{{"rank", e.basis.rank()},
                {"basis", basis},
                {"pivots", jints(e.basis.pivots)},
                {"pivot_cols", e.basis.pivot_cols},
                {"basis_rows", e.basis_rows},
                {"rows", rows},
                {"log", ops},
                {"already_basis", already_basis(e)}};
}

std::string echelon_text(const EchelonResult& e, const std::vector<std::string>& names) {
    std::ostringstream os;
    if (already_basis(e)) os << "already a basis\n";
    os << "basis (rank " << e.basis.rank() << "):\n";
    for (std::size_t k = 0; k < e.basis.rank(); ++k)
        os << "  " << e.basis.basis[k].str() << "  pivot " << e.basis.pivots[k].get_str() << " in column " << e.basis.pivot_cols[k] + 1 << "\n";
    os << "reduced rows:\n";
    for (const auto& r : e.rows) os << "  " << r.str() << "\n";
    if (!e.log.empty()) {
        os << "row operations:\n";
        for (const auto& r : read_ops(e, names)) {
            if (r.op.kind == RowOp::Kind::Swap) os << "  swap(" << r.op.l + 1 << "," << r.op.i + 1 << ")\n";
            else os << "  AddRow(" << r.op.l + 1 << "," << r.op.i + 1 << "," << r.op.q.get_str() << ")   " << r.text << "\n";
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------- cli

namespace {

struct Overrides {
    std::optional<std::size_t> max_steps, max_terms;
    std::optional<long> trunc_degree;
    std::optional<std::string> lex_ceiling;
};

void add_budget_flags(CLI::App* sub, Overrides& o) {
    sub->add_option("--max-steps", o.max_steps, "finite subtractions per variable");
    sub->add_option("--max-terms", o.max_terms, "candidate exponents scanned per stream query");
    sub->add_option("--trunc-degree", o.trunc_degree, "total degree kept in series expansions");
    sub->add_option("--lex-ceiling", o.lex_ceiling, "never enumerate exponents at or past this vector, e.g. (5,0,0)");
}

void apply(const Overrides& o, ValuationSpec& spec) {
    if (o.max_steps) spec.budget.max_steps = *o.max_steps;
    if (o.max_terms) spec.budget.hahn.max_terms = *o.max_terms;
    if (o.trunc_degree) spec.budget.trunc_degree = *o.trunc_degree;
    if (o.lex_ceiling) spec.budget.hahn.lex_ceiling = parse_lexvec(*o.lex_ceiling, spec.m);
    apply_budget(spec);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int report_inconclusive(const EngineInconclusive& e, const ValuationSpec& spec, bool as_json, std::ostream& out) {
    const SymbolTable& sym = spec.symbols;
    if (as_json) {
        json prefix = json::array();
        for (const auto& [a, v] : e.steps()) prefix.push_back(json{{"alpha", a.str(&sym)}, {"value", v.str()}});
        out << json{{"status", "inconclusive"},
                    {"reason", e.what()},
                    {"var", spec.vars.at(e.var())},
                    {"prefix", prefix},
                    {"current", e.current() ? json(e.current()->str()) : json(nullptr)}}
                   .dump(2)
            << "\n";
    } else {
        out << "inconclusive: " << e.what() << "\n";
        out << "pseudo-convergent prefix for " << spec.vars.at(e.var()) << " (" << e.steps().size() << " steps):\n";
        std::size_t k = 0;
        for (const auto& [a, v] : e.steps()) out << "  " << ++k << ": alpha = " << a.str(&sym) << " at " << v.str() << "\n";
        if (e.current()) out << "current value: " << e.current()->str() << "\n";
    }
    return exit_code::inconclusive;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"monomval: monomialization of discrete valuations of maximal dimension"};
    app.name("monomval");
    app.require_subcommand(1);

    bool as_json = false;
    Overrides o;
    std::string file, expression;
    long degree = 4;
    std::size_t samples = 200;
    std::uint64_t seed = 1;

    auto* basis = app.add_subcommand("basis", "echelon-reduce a matrix of rows or the values of a spec");
    basis->add_option("file", file, "rows file or spec file")->required();
    basis->add_flag("--json", as_json, "machine-readable output");
    add_budget_flags(basis, o);

    auto* value = app.add_subcommand("value", "value of a series in the spec variables");
    value->add_option("file", file, "spec file")->required();
    value->add_option("expression", expression, "e.g. 'X2 - X1'")->required();
    value->add_flag("--json", as_json, "machine-readable output");
    add_budget_flags(value, o);

    auto* mono = app.add_subcommand("monomialize", "compute the transform log, psi, residues and monomial values");
    mono->add_option("file", file, "spec file")->required();
    mono->add_flag("--json", as_json, "machine-readable output");
    add_budget_flags(mono, o);

    auto* verify = app.add_subcommand("verify", "monomialize, then check the monomial values on random polynomials");
    verify->add_option("file", file, "spec file")->required();
    verify->add_flag("--json", as_json, "machine-readable output");
    verify->add_option("--degree", degree, "total degree of the random polynomials");
    verify->add_option("--samples", samples, "number of random polynomials");
    verify->add_option("--seed", seed, "random seed");
    add_budget_flags(verify, o);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e, out, err);
        return rc == 0 ? exit_code::ok : exit_code::parse;
    }

    ValuationSpec spec;
    try {
        if (basis->parsed()) {
            std::string text = read_file(file);
            std::vector<LexVec> rows;
            std::vector<std::string> names;
            if (looks_like_spec(text)) {
                spec = parse_spec(text);
                apply(o, spec);
                for (const auto& s : spec.images) {
                    auto v = nu_t(s);
                    if (!v) throw DimensionError("an image is zero");
                    rows.push_back(*v);
                }
                names = spec.vars;
                for (const auto& r : rows)
                    if (r.sign() <= 0) throw InvalidInput("value " + r.str() + " is not >_lex 0");
            } else {
                rows = parse_rows(text);
                for (std::size_t k = 0; k < rows.size(); ++k) names.push_back("X" + std::to_string(k + 1));
            }
            EchelonResult e = echelon_reduce(rows);
            if (as_json) out << echelon_json(e, names).dump(2) << "\n";
            else out << echelon_text(e, names);
            return exit_code::ok;
        }

        spec = load_spec(file);
        apply(o, spec);

        if (value->parsed()) {
            TruncSeries f = parse_series(expression, spec.vars, spec.field, spec.symbols, spec.budget.trunc_degree);
            std::optional<LexVec> v;
            try {
                v = value_of(f, spec);
            } catch (const Inconclusive& e) {
                if (as_json) out << json{{"expression", expression}, {"status", "inconclusive"}, {"reason", e.what()}, {"value", nullptr}}.dump(2) << "\n";
                else out << "inconclusive: " << e.what() << "\n";
                return exit_code::inconclusive;
            }
            std::string text = v ? v->str() : "infinity";
            if (as_json) out << json{{"expression", expression}, {"status", "ok"}, {"value", text}}.dump(2) << "\n";
            else out << text << "\n";
            return exit_code::ok;
        }

        MonomializationResult r = monomialize(spec);
        if (mono->parsed()) {
            if (as_json) out << result_json(r).dump(2) << "\n";
            else out << result_text(r);
            return exit_code::ok;
        }

        VerifyReport rep = verify_monomial(r, spec, degree, samples, seed);
        if (as_json) {
            out << json{{"checked", rep.checked},
                        {"mismatches", rep.mismatches},
                        {"inconclusive", rep.inconclusive},
                        {"counterexamples", rep.counterexamples},
                        {"final_L", result_json(r)["final_L"]},
                        {"passed", rep.passed()}}
                       .dump(2)
                << "\n";
        } else {
            out << "checked " << rep.checked << " random polynomials of degree <= " << degree << ": " << rep.mismatches << " mismatches, "
                << rep.inconclusive << " inconclusive\n";
            for (const auto& c : rep.counterexamples) out << "  " << c << "\n";
            out << (rep.passed() ? "monomial: yes\n" : "monomial: NOT CONFIRMED\n");
        }
        if (rep.mismatches) return exit_code::other;
        if (!rep.passed()) return exit_code::inconclusive;
        return exit_code::ok;
    } catch (const EngineInconclusive& e) {
        return report_inconclusive(e, spec, as_json, out);
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return exit_code::parse;
    } catch (const Inconclusive& e) {
        err << "inconclusive: " << e.what() << "\n";
        return exit_code::inconclusive;
    } catch (const PurityError& e) {
        err << "purity error: " << e.what() << "\n";
        return exit_code::purity;
    } catch (const DimensionError& e) {
        err << "dimension error: " << e.what() << "\n";
        return exit_code::purity;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::other;
    }
}

} // namespace monomval
