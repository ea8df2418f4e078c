#pragma once

// One-variable arithmetic expressions used for rates and coefficients.
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := unary ('^' factor)?          right-associative
//   unary  := '-' unary | atom
//   atom   := number | var | func '(' args ')' | '(' expr ')'
// Functions: exp log sqrt abs (1 arg), pow (2), min max (>= 2), if (3).
// Comparisons (== != < <= > >=) are accepted only as the first argument of if.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ergokit/errors.hpp"
#include "ergokit/logmath.hpp"

namespace ergokit {

class RateExpression {
public:
    enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call, Compare };
    enum class Cmp { Eq, Ne, Lt, Le, Gt, Ge };

    struct Node {
        Kind kind;
        double number = 0.0;
        std::string name;  // function name for Call
        Cmp cmp = Cmp::Eq;
        std::vector<std::shared_ptr<const Node>> kids;
    };
    using NodePtr = std::shared_ptr<const Node>;

    RateExpression() = default;

    /// Parses `text` with free variable `var` (`n` for chains, `x` for diffusions).
    static RateExpression parse(std::string_view text, std::string var = "n") {
        Parser p{text, var};
        RateExpression e;
        e.root_ = p.parse_all();
        e.source_ = std::string(text);
        e.var_ = std::move(var);
        return e;
    }

    const std::string& source() const { return source_; }
    const std::string& variable() const { return var_; }
    bool empty() const { return root_ == nullptr; }
    const Node& root() const { return *root_; }

    /// Evaluates at `v`. Throws DomainError instead of returning a nonfinite value.
    double operator()(double v) const { return eval(*root_, v); }

    /// Evaluates the value as sign * exp(log_abs) so that huge or tiny rates
    /// like exp(n^2) stay representable.
    SignedLog signed_log(double v) const { return slog(*root_, v); }

    /// Fully parenthesised canonical form; parse(print()) reproduces the tree.
    std::string print() const { return print_node(*root_); }

    friend bool operator==(const RateExpression& a, const RateExpression& b) {
        if (!a.root_ || !b.root_) return a.root_ == b.root_;
        return a.var_ == b.var_ && same(*a.root_, *b.root_);
    }

    static bool same(const Node& a, const Node& b) {
        if (a.kind != b.kind || a.kids.size() != b.kids.size()) return false;
        if (a.kind == Kind::Number && a.number != b.number) return false;
        if (a.kind == Kind::Call && a.name != b.name) return false;
        if (a.kind == Kind::Compare && a.cmp != b.cmp) return false;
        for (std::size_t i = 0; i < a.kids.size(); ++i)
            if (!same(*a.kids[i], *b.kids[i])) return false;
        return true;
    }

private:
    NodePtr root_;
    std::string source_;
    std::string var_ = "n";

    static NodePtr make(Kind k, std::vector<NodePtr> kids = {}) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->kids = std::move(kids);
        return n;
    }

    struct Parser {
        std::string_view s;
        std::string var;
        std::size_t pos = 0;

        void skip() {
            while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
        }
        bool accept(char c) {
            skip();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }
        void expect(char c) {
            if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos);
        }

        NodePtr parse_all() {
            skip();
            if (pos >= s.size()) throw ParseError("empty expression", pos);
            auto e = expr();
            skip();
            if (pos != s.size()) throw ParseError("unexpected character '" + std::string(1, s[pos]) + "'", pos);
            return e;
        }

        NodePtr expr() {
            auto lhs = term();
            for (;;) {
                if (accept('+')) lhs = make(Kind::Add, {lhs, term()});
                else if (accept('-')) lhs = make(Kind::Sub, {lhs, term()});
                else return lhs;
            }
        }
        NodePtr term() {
            auto lhs = factor();
            for (;;) {
                if (accept('*')) lhs = make(Kind::Mul, {lhs, factor()});
                else if (accept('/')) lhs = make(Kind::Div, {lhs, factor()});
                else return lhs;
            }
        }
        NodePtr factor() {
            auto base = unary();
            if (accept('^')) return make(Kind::Pow, {base, factor()});
            return base;
        }
        NodePtr unary() {
            if (accept('-')) return make(Kind::Negate, {unary()});
            return atom();
        }

        bool at_compare() {
            skip();
            if (pos >= s.size()) return false;
            char c = s[pos];
            if (c == '<' || c == '>') return true;
            return (c == '=' || c == '!') && pos + 1 < s.size() && s[pos + 1] == '=';
        }
        Cmp read_compare() {
            skip();
            char c = s[pos];
            bool eq = pos + 1 < s.size() && s[pos + 1] == '=';
            pos += eq ? 2 : 1;
            switch (c) {
                case '<': return eq ? Cmp::Le : Cmp::Lt;
                case '>': return eq ? Cmp::Ge : Cmp::Gt;
                case '=': return Cmp::Eq;
                default: return Cmp::Ne;
            }
        }

        NodePtr atom() {
            skip();
            if (pos >= s.size()) throw ParseError("unexpected end of expression", pos);
            char c = s[pos];
            if (c == '(') {
                ++pos;
                auto e = expr();
                expect(')');
                return e;
            }
            if ((c >= '0' && c <= '9') || c == '.') return number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t start = pos;
                while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
                std::string id(s.substr(start, pos - start));
                skip();
                if (pos < s.size() && s[pos] == '(') return call(id, start);
                if (id == var) return make(Kind::Variable);
                throw ParseError("unknown identifier '" + id + "'", start);
            }
            throw ParseError("unexpected character '" + std::string(1, c) + "'", pos);
        }

        NodePtr number() {
            std::size_t start = pos;
            while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) ++pos;
            if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
                std::size_t save = pos++;
                if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) ++pos;
                if (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
                    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
                } else {
                    pos = save;
                }
            }
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(s.data() + start, s.data() + pos, v);
            if (ec != std::errc() || ptr != s.data() + pos) throw ParseError("malformed number", start);
            auto n = std::make_shared<Node>();
            n->kind = Kind::Number;
            n->number = v;
            return n;
        }

        NodePtr call(const std::string& name, std::size_t at) {
            expect('(');
            std::vector<NodePtr> args;
            if (name == "if") {
                auto lhs = expr();
                if (!at_compare()) throw ParseError("if() needs a comparison as its first argument", pos);
                Cmp op = read_compare();
                auto cond = make(Kind::Compare, {lhs, expr()});
                std::const_pointer_cast<Node>(cond)->cmp = op;
                args.push_back(cond);
                while (accept(',')) args.push_back(expr());
            } else {
                args.push_back(expr());
                while (accept(',')) args.push_back(expr());
            }
            if (at_compare()) throw ParseError("comparison outside if() condition", pos);
            expect(')');

            std::size_t lo = 0, hi = 0;
            if (name == "exp" || name == "log" || name == "sqrt" || name == "abs") lo = hi = 1;
            else if (name == "pow") lo = hi = 2;
            else if (name == "min" || name == "max") { lo = 2; hi = 1000; }
            else if (name == "if") lo = hi = 3;
            else throw ParseError("unknown function '" + name + "'", at);
            if (args.size() < lo || args.size() > hi)
                throw ParseError("wrong number of arguments to '" + name + "'", at);

            auto n = std::make_shared<Node>();
            n->kind = Kind::Call;
            n->name = name;
            n->kids = std::move(args);
            return n;
        }
    };

    static double checked(double r, const char* what) {
        if (!std::isfinite(r)) throw DomainError(std::string("nonfinite result in ") + what);
        return r;
    }

    static bool compare(Cmp op, double l, double r) {
        switch (op) {
            case Cmp::Eq: return l == r;
            case Cmp::Ne: return l != r;
            case Cmp::Lt: return l < r;
            case Cmp::Le: return l <= r;
            case Cmp::Gt: return l > r;
            case Cmp::Ge: return l >= r;
        }
        return false;
    }

    static double eval(const Node& n, double v) {
        switch (n.kind) {
            case Kind::Number: return n.number;
            case Kind::Variable: return v;
            case Kind::Negate: return -eval(*n.kids[0], v);
            case Kind::Add: return checked(eval(*n.kids[0], v) + eval(*n.kids[1], v), "+");
            case Kind::Sub: return checked(eval(*n.kids[0], v) - eval(*n.kids[1], v), "-");
            case Kind::Mul: return checked(eval(*n.kids[0], v) * eval(*n.kids[1], v), "*");
            case Kind::Div: {
                double d = eval(*n.kids[1], v);
                if (d == 0.0) throw DomainError("division by zero");
                return checked(eval(*n.kids[0], v) / d, "/");
            }
            case Kind::Pow: {
                double b = eval(*n.kids[0], v), e = eval(*n.kids[1], v);
                if (b < 0.0 && e != std::floor(e)) throw DomainError("negative base with fractional exponent");
                if (b == 0.0 && e < 0.0) throw DomainError("zero to a negative power");
                return checked(std::pow(b, e), "^");
            }
            case Kind::Compare:
                return compare(n.cmp, eval(*n.kids[0], v), eval(*n.kids[1], v)) ? 1.0 : 0.0;
            case Kind::Call: break;
        }
        const auto& k = n.kids;
        if (n.name == "if") return eval(*k[0], v) != 0.0 ? eval(*k[1], v) : eval(*k[2], v);
        if (n.name == "min" || n.name == "max") {
            double r = eval(*k[0], v);
            for (std::size_t i = 1; i < k.size(); ++i) {
                double a = eval(*k[i], v);
                r = n.name == "min" ? std::min(r, a) : std::max(r, a);
            }
            return r;
        }
        if (n.name == "pow") {
            Node p{Kind::Pow, 0.0, {}, Cmp::Eq, {k[0], k[1]}};
            return eval(p, v);
        }
        double a = eval(*k[0], v);
        if (n.name == "exp") return checked(std::exp(a), "exp");
        if (n.name == "log") {
            if (a <= 0.0) throw DomainError("log of nonpositive value");
            return std::log(a);
        }
        if (n.name == "sqrt") {
            if (a < 0.0) throw DomainError("sqrt of negative value");
            return std::sqrt(a);
        }
        return std::fabs(a);  // abs
    }

    static SignedLog slog_pow(SignedLog b, double e) {
        if (b.sign == 0) {
            if (e < 0.0) throw DomainError("zero to a negative power");
            return e == 0.0 ? SignedLog::from(1.0) : SignedLog{};
        }
        if (b.sign < 0 && e != std::floor(e)) throw DomainError("negative base with fractional exponent");
        int sign = (b.sign < 0 && std::fmod(std::fabs(e), 2.0) == 1.0) ? -1 : 1;
        return {sign, e * b.log_abs};
    }

    static SignedLog slog(const Node& n, double v) {
        switch (n.kind) {
            case Kind::Number: return SignedLog::from(n.number);
            case Kind::Variable: return SignedLog::from(v);
            case Kind::Negate: return -slog(*n.kids[0], v);
            case Kind::Add: return slog(*n.kids[0], v) + slog(*n.kids[1], v);
            case Kind::Sub: return slog(*n.kids[0], v) - slog(*n.kids[1], v);
            case Kind::Mul: return slog(*n.kids[0], v) * slog(*n.kids[1], v);
            case Kind::Div: {
                SignedLog d = slog(*n.kids[1], v);
                if (d.sign == 0) throw DomainError("division by zero");
                return slog(*n.kids[0], v) * SignedLog{d.sign, -d.log_abs};
            }
            case Kind::Pow: return slog_pow(slog(*n.kids[0], v), as_double(slog(*n.kids[1], v)));
            case Kind::Compare: {
                SignedLog l = slog(*n.kids[0], v), r = slog(*n.kids[1], v);
                bool res = false;
                switch (n.cmp) {
                    case Cmp::Eq: res = l == r; break;
                    case Cmp::Ne: res = !(l == r); break;
                    case Cmp::Lt: res = l < r; break;
                    case Cmp::Le: res = l < r || l == r; break;
                    case Cmp::Gt: res = r < l; break;
                    case Cmp::Ge: res = r < l || l == r; break;
                }
                return SignedLog::from(res ? 1.0 : 0.0);
            }
            case Kind::Call: break;
        }
        const auto& k = n.kids;
        if (n.name == "if") return slog(*k[0], v).sign != 0 ? slog(*k[1], v) : slog(*k[2], v);
        if (n.name == "min" || n.name == "max") {
            SignedLog r = slog(*k[0], v);
            for (std::size_t i = 1; i < k.size(); ++i) {
                SignedLog a = slog(*k[i], v);
                bool less = a < r;
                if ((n.name == "min") == less) r = a;
            }
            return r;
        }
        if (n.name == "pow") return slog_pow(slog(*k[0], v), as_double(slog(*k[1], v)));
        SignedLog a = slog(*k[0], v);
        if (n.name == "exp") return SignedLog::from_log(as_double(a));
        if (n.name == "log") {
            if (a.sign <= 0) throw DomainError("log of nonpositive value");
            return SignedLog::from(a.log_abs);
        }
        if (n.name == "sqrt") {
            if (a.sign < 0) throw DomainError("sqrt of negative value");
            return a.sign == 0 ? a : SignedLog{1, 0.5 * a.log_abs};
        }
        return a.sign == 0 ? a : SignedLog{1, a.log_abs};  // abs
    }

    static double as_double(SignedLog s) {
        double r = s.value();
        if (!std::isfinite(r)) throw DomainError("exponent or argument overflows");
        return r;
    }

    static std::string fmt_number(double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    std::string print_node(const Node& n) const {
        auto bin = [&](const char* op) {
            return "(" + print_node(*n.kids[0]) + " " + op + " " + print_node(*n.kids[1]) + ")";
        };
        switch (n.kind) {
            case Kind::Number: return fmt_number(n.number);
            case Kind::Variable: return var_;
            case Kind::Negate: return "(-" + print_node(*n.kids[0]) + ")";
            case Kind::Add: return bin("+");
            case Kind::Sub: return bin("-");
            case Kind::Mul: return bin("*");
            case Kind::Div: return bin("/");
            case Kind::Pow: return bin("^");
            case Kind::Compare: {
                static const char* ops[] = {"==", "!=", "<", "<=", ">", ">="};
                return print_node(*n.kids[0]) + " " + ops[static_cast<int>(n.cmp)] + " " + print_node(*n.kids[1]);
            }
            case Kind::Call: break;
        }
        std::string out = n.name + "(";
        for (std::size_t i = 0; i < n.kids.size(); ++i) {
            if (i) out += ", ";
            out += print_node(*n.kids[i]);
        }
        return out + ")";
    }
};

}  // namespace ergokit
