#pragma once

// Spec files, reports and the command-line front end.
//
// Spec file format (one directive per line, '#' starts a comment):
//
//   field prime 5                 # or: field rationals
//   rank 3
//   vars X1 X2 X3 X4
//   symbols u3                    # optional
//   image X1 = terms[(0,0,1): 1]  # one per variable, hahn segment syntax
//   budgets max_steps=64 max_terms=4096 trunc_degree=8 box=24 geometric=12 lex_ceiling=(9,0,0)
//
// field, rank, vars and symbols must precede the images.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "monomval/engine.hpp"

namespace monomval {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int other = 1;
inline constexpr int parse = 2;
inline constexpr int inconclusive = 3;
inline constexpr int purity = 4;
} // namespace exit_code

ValuationSpec parse_spec(std::string_view text);
std::string serialize_spec(const ValuationSpec& spec);
ValuationSpec load_spec(const std::string& path);

// Matrix rows, one per line: "0 0 1", "0,0,1" or "(0,0,1)".
std::vector<LexVec> parse_rows(std::string_view text);
bool looks_like_spec(std::string_view text);

// Closed-form rendering, e.g. "t^(0,1,0) + sum_{i>=1} i*t^(0,0,i)".
std::string closed_form(const HahnStream& s, const SymbolTable* names);

nlohmann::json result_json(const MonomializationResult& r);
std::string result_text(const MonomializationResult& r);
nlohmann::json echelon_json(const EchelonResult& e, const std::vector<std::string>& names);
std::string echelon_text(const EchelonResult& e, const std::vector<std::string>& names);

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace monomval
