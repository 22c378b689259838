#pragma once

// Small arithmetic-expression front end shared by the coefficient, family-rule
// and series parsers: integers, identifiers, + - * / ^ and parentheses.

#include <memory>
#include <string>
#include <string_view>

#include "monomval/coeff.hpp"

namespace monomval::expr {

struct Node {
    enum class Kind { Number, Ident, Add, Sub, Mul, Div, Neg, Pow };
    Kind kind;
    Int number;
    std::string ident;
    std::shared_ptr<const Node> lhs, rhs;
};

using NodePtr = std::shared_ptr<const Node>;

// Throws ParseError (column-annotated) on malformed input.
NodePtr parse(std::string_view text);

bool mentions(const Node& n, std::string_view ident);
// Evaluates an integer-only expression (exponents).
Int eval_integer(const Node& n);

// Evaluates an expression over the residue tower; identifiers must be symbols.
TowerElem eval_tower(const Node& n, const GroundField& f, const SymbolTable& symbols);
TowerElem parse_tower(std::string_view text, const GroundField& f, const SymbolTable& symbols);

} // namespace monomval::expr
