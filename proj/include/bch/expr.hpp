#pragma once
#include <cctype>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bch/errors.hpp"
#include "bch/jet.hpp"

namespace bch {

// Expression trees over {+,-,*,/,pow,exp,log,sin,cos,sqrt,cosh,sinh} with
// variables x1..xn. The jet engine differentiates the tree, so user-supplied
// height functions never need hand-written derivatives.
class Expr {
public:
    enum class Kind { Const, Var, Add, Sub, Mul, Div, Neg, Pow, PowConst, Call1 };
    enum class Fn { Exp, Log, Sin, Cos, Sqrt, Cosh, Sinh };

    static Expr constant(double v) {
        Expr e(Kind::Const);
        e.node_->value = v;
        return e;
    }
    static Expr var(int index) {
        Expr e(Kind::Var);
        e.node_->var_index = index;
        return e;
    }
    static Expr call(Fn f, Expr a) {
        Expr e(Kind::Call1);
        e.node_->fn = f;
        e.node_->a = a.node_;
        return e;
    }
    static Expr pow_const(Expr a, double r) {
        Expr e(Kind::PowConst);
        e.node_->a = a.node_;
        e.node_->value = r;
        return e;
    }

    friend Expr operator+(Expr a, Expr b) { return binary(Kind::Add, a, b); }
    friend Expr operator-(Expr a, Expr b) { return binary(Kind::Sub, a, b); }
    friend Expr operator*(Expr a, Expr b) { return binary(Kind::Mul, a, b); }
    friend Expr operator/(Expr a, Expr b) { return binary(Kind::Div, a, b); }
    friend Expr operator-(Expr a) {
        Expr e(Kind::Neg);
        e.node_->a = a.node_;
        return e;
    }
    friend Expr pow(Expr a, Expr b) { return binary(Kind::Pow, a, b); }

    Jet eval(std::span<const Jet> vars) const { return node_->eval(vars); }
    double eval(std::span<const double> x) const {
        JetVec v;
        v.reserve(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            v.push_back(Jet::constant(static_cast<int>(x.size()), 0, x[i]));
        return eval(v).value();
    }

    int max_var() const { return node_->max_var(); }

private:
    struct Node {
        Kind kind;
        double value = 0.0;
        int var_index = 0;
        Fn fn = Fn::Exp;
        std::shared_ptr<Node> a, b;

        Jet eval(std::span<const Jet> vars) const {
            switch (kind) {
                case Kind::Const:
                    if (vars.empty()) throw DomainError("expression evaluated with no variables");
                    return Jet::constant(vars[0].nvars(), vars[0].order(), value);
                case Kind::Var:
                    if (var_index >= static_cast<int>(vars.size()))
                        throw DomainError("expression uses variable x" + std::to_string(var_index + 1) +
                                          " beyond the declared dimension");
                    return vars[var_index];
                case Kind::Add: return a->eval(vars) + b->eval(vars);
                case Kind::Sub: return a->eval(vars) - b->eval(vars);
                case Kind::Mul: return a->eval(vars) * b->eval(vars);
                case Kind::Div: return a->eval(vars) / b->eval(vars);
                case Kind::Neg: return -a->eval(vars);
                case Kind::PowConst: return bch::pow(a->eval(vars), value);
                case Kind::Pow: {
                    Jet base = a->eval(vars);
                    Jet ex = b->eval(vars);
                    return bch::exp(ex * bch::log(base));
                }
                case Kind::Call1: {
                    Jet x = a->eval(vars);
                    switch (fn) {
                        case Fn::Exp: return bch::exp(x);
                        case Fn::Log: return bch::log(x);
                        case Fn::Sin: return bch::sin(x);
                        case Fn::Cos: return bch::cos(x);
                        case Fn::Sqrt: return bch::sqrt(x);
                        case Fn::Cosh: return bch::cosh(x);
                        case Fn::Sinh: return bch::sinh(x);
                    }
                }
            }
            throw DomainError("expression: unreachable node kind");
        }

        int max_var() const {
            int m = (kind == Kind::Var) ? var_index : -1;
            if (a) m = std::max(m, a->max_var());
            if (b) m = std::max(m, b->max_var());
            return m;
        }
    };

    explicit Expr(Kind k) : node_(std::make_shared<Node>()) { node_->kind = k; }
    static Expr binary(Kind k, Expr a, Expr b) {
        Expr e(k);
        e.node_->a = a.node_;
        e.node_->b = b.node_;
        return e;
    }

    std::shared_ptr<Node> node_;
};

// Recursive-descent parser for the expression-string syntax:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := unary ('^' factor)?
//   unary  := ('+'|'-') unary | primary
//   primary:= NUMBER | 'pi' | 'e' | 'x<k>' | FN '(' expr ')' | '(' expr ')'
// A '^' with a constant right side becomes a real power; otherwise exp(b*log a).
class ExprParser {
public:
    static Expr parse(const std::string& src) {
        ExprParser p(src);
        Expr e = p.parse_expr();
        p.skip_ws();
        if (p.pos_ != src.size()) throw ParseError("unexpected trailing input", p.pos_);
        return e;
    }

private:
    explicit ExprParser(const std::string& s) : src_(s) {}

    const std::string& src_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    Expr parse_expr() {
        Expr e = parse_term();
        for (;;) {
            if (eat('+')) e = e + parse_term();
            else if (eat('-')) e = e - parse_term();
            else return e;
        }
    }
    Expr parse_term() {
        Expr e = parse_factor();
        for (;;) {
            if (eat('*')) e = e * parse_factor();
            else if (eat('/')) e = e / parse_factor();
            else return e;
        }
    }
    Expr parse_factor() {
        Expr base = parse_unary();
        if (eat('^')) {
            std::size_t mark = pos_;
            Expr ex = parse_factor();
            if (auto c = constant_value(ex)) return Expr::pow_const(base, *c);
            (void)mark;
            return pow(base, ex);
        }
        return base;
    }
    Expr parse_unary() {
        if (eat('-')) return -parse_unary();
        if (eat('+')) return parse_unary();
        return parse_primary();
    }
    Expr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (c == '(') {
            ++pos_;
            Expr e = parse_expr();
            if (!eat(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }
    Expr parse_number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            } else {
                pos_ = mark; // 'e' was not an exponent
            }
        }
        try {
            return Expr::constant(std::stod(src_.substr(start, pos_ - start)));
        } catch (const std::exception&) {
            throw ParseError("malformed number", start);
        }
    }
    Expr parse_ident() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
        std::string name = src_.substr(start, pos_ - start);
        if (name == "pi") return Expr::constant(M_PI);
        if (name == "e") return Expr::constant(M_E);
        if (name.size() >= 2 && name[0] == 'x') {
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i)
                digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
            if (digits) {
                int k = std::stoi(name.substr(1));
                if (k < 1) throw ParseError("variable index starts at 1", start);
                return Expr::var(k - 1);
            }
        }
        static const std::pair<const char*, Expr::Fn> fns[] = {
            {"exp", Expr::Fn::Exp},   {"log", Expr::Fn::Log},  {"sin", Expr::Fn::Sin},
            {"cos", Expr::Fn::Cos},   {"sqrt", Expr::Fn::Sqrt}, {"cosh", Expr::Fn::Cosh},
            {"sinh", Expr::Fn::Sinh},
        };
        for (const auto& [fname, fk] : fns) {
            if (name == fname) {
                if (!eat('(')) throw ParseError("expected '(' after function name", pos_);
                Expr arg = parse_expr();
                if (!eat(')')) throw ParseError("expected ')'", pos_);
                return Expr::call(fk, arg);
            }
        }
        if (name == "pow") {
            if (!eat('(')) throw ParseError("expected '(' after function name", pos_);
            Expr a = parse_expr();
            if (!eat(',')) throw ParseError("expected ',' in pow(a,b)", pos_);
            Expr b = parse_expr();
            if (!eat(')')) throw ParseError("expected ')'", pos_);
            if (auto c = constant_value(b)) return Expr::pow_const(a, *c);
            return pow(a, b);
        }
        throw ParseError("unknown identifier '" + name + "'", start);
    }

    // Detects constant subtrees so x^2 becomes a real power, not exp(2 log x).
    static std::optional<double> constant_value(const Expr& e) {
        if (e.max_var() >= 0) return std::nullopt;
        JetVec dummy{Jet::constant(1, 0, 0.0)};
        return e.eval(dummy).value();
    }
};

inline Expr parse_expr(const std::string& src) { return ExprParser::parse(src); }

} // namespace bch
