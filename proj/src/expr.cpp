#include "monomval/expr.hpp"

#include <cctype>

namespace monomval::expr {

namespace {

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    NodePtr run() {
        NodePtr n = sum();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("expression '" + std::string(s_) + "' column " + std::to_string(pos_ + 1) + ": " + what);
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    static NodePtr make(Node::Kind k, NodePtr a, NodePtr b = nullptr) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->lhs = std::move(a);
        n->rhs = std::move(b);
        return n;
    }

    NodePtr sum() {
        NodePtr n = product();
        for (;;) {
            if (eat('+')) n = make(Node::Kind::Add, n, product());
            else if (eat('-')) n = make(Node::Kind::Sub, n, product());
            else return n;
        }
    }

    NodePtr product() {
        NodePtr n = unary();
        for (;;) {
            if (eat('*')) n = make(Node::Kind::Mul, n, unary());
            else if (eat('/')) n = make(Node::Kind::Div, n, unary());
            else return n;
        }
    }

    NodePtr unary() {
        if (eat('-')) return make(Node::Kind::Neg, unary());
        if (eat('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = atom();
        if (eat('^')) {
            // right associative; allows a^-2
            return make(Node::Kind::Pow, base, unary_power());
        }
        return base;
    }

    NodePtr unary_power() {
        if (eat('-')) return make(Node::Kind::Neg, unary_power());
        return power();
    }

    NodePtr atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr n = sum();
            if (!eat(')')) fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t b = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Number;
            n->number = Int(std::string(s_.substr(b, pos_ - b)));
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t b = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Ident;
            n->ident = std::string(s_.substr(b, pos_ - b));
            return n;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

} // namespace

NodePtr parse(std::string_view text) { return Parser(text).run(); }

bool mentions(const Node& n, std::string_view ident) {
    if (n.kind == Node::Kind::Ident) return n.ident == ident;
    return (n.lhs && mentions(*n.lhs, ident)) || (n.rhs && mentions(*n.rhs, ident));
}

Int eval_integer(const Node& n) {
    switch (n.kind) {
    case Node::Kind::Number: return n.number;
    case Node::Kind::Add: return eval_integer(*n.lhs) + eval_integer(*n.rhs);
    case Node::Kind::Sub: return eval_integer(*n.lhs) - eval_integer(*n.rhs);
    case Node::Kind::Mul: return eval_integer(*n.lhs) * eval_integer(*n.rhs);
    case Node::Kind::Neg: return -eval_integer(*n.lhs);
    default: throw ParseError("expected an integer expression");
    }
}

TowerElem eval_tower(const Node& n, const GroundField& f, const SymbolTable& symbols) {
    switch (n.kind) {
    case Node::Kind::Number: return TowerElem(f, n.number);
    case Node::Kind::Ident: {
        auto s = symbols.find(n.ident);
        if (!s) throw ParseError("unknown symbol '" + n.ident + "'");
        return TowerElem::symbol(f, *s);
    }
    case Node::Kind::Add: return eval_tower(*n.lhs, f, symbols) + eval_tower(*n.rhs, f, symbols);
    case Node::Kind::Sub: return eval_tower(*n.lhs, f, symbols) - eval_tower(*n.rhs, f, symbols);
    case Node::Kind::Mul: return eval_tower(*n.lhs, f, symbols) * eval_tower(*n.rhs, f, symbols);
    case Node::Kind::Div: {
        TowerElem d = eval_tower(*n.rhs, f, symbols);
        if (d.is_zero()) throw ParseError("division by zero in coefficient");
        return eval_tower(*n.lhs, f, symbols) / d;
    }
    case Node::Kind::Neg: return -eval_tower(*n.lhs, f, symbols);
    case Node::Kind::Pow: {
        Int e = eval_integer(*n.rhs);
        if (!e.fits_slong_p()) throw ParseError("exponent out of range");
        TowerElem b = eval_tower(*n.lhs, f, symbols);
        if (b.is_zero() && e.get_si() < 0) throw ParseError("negative power of zero");
        return b.pow(e.get_si());
    }
    }
    throw ParseError("bad expression");
}

TowerElem parse_tower(std::string_view text, const GroundField& f, const SymbolTable& symbols) {
    return eval_tower(*parse(text), f, symbols);
}

} // namespace monomval::expr
