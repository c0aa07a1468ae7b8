#include "covar/symexpr.hpp"

#include <cctype>
#include <sstream>

namespace covar::sym {

std::string Naming::base_name(int mu) const {
    if (mu >= 0 && static_cast<std::size_t>(mu) < base.size()) return base[static_cast<std::size_t>(mu)];
    return "x" + std::to_string(mu);
}

std::string render(const Coord& c, const Naming& naming) {
    auto indices = [&](const MultiIndex& m) {
        std::string out;
        for (int i = 0; i < m.size(); ++i) {
            if (i > 0) out += ",";
            out += naming.base_name(m[i]);
        }
        return out;
    };
    switch (c.kind()) {
        case CoordKind::Base: return naming.base_name(c.index());
        case CoordKind::Param: return c.name();
        case CoordKind::Fiber:
            if (c.index() == kVolumeSlot) return "vol[" + c.name() + "]";
            if (naming.indexed.contains(c.name())) return c.name() + "[" + std::to_string(c.index()) + "]";
            return c.name();
        case CoordKind::CovBase: return c.name() + naming.base_name(c.index());
        case CoordKind::Jet:
        case CoordKind::CovJet:
            return "D[" + render(c.value_coord(), naming) + ";" + indices(c.multi_index()) + "]";
    }
    return {};
}

namespace {

// Precedence of the context a node is printed in.
enum Prec { kSum = 1, kProduct = 2, kPower = 3 };

bool leading_negative(const Expr& e) {
    if (e.is_constant()) return sgn(e.value()) < 0;
    if (e.kind() == ExprKind::Product) {
        const auto kids = e.children();
        return !kids.empty() && kids.front().is_constant() && sgn(kids.front().value()) < 0;
    }
    return false;
}

Expr negate_leading(const Expr& e) {
    if (e.is_constant()) return Expr::constant(-e.value());
    std::vector<Expr> kids(e.children().begin(), e.children().end());
    Rational c = -kids.front().value();
    if (c == 1) {
        kids.erase(kids.begin());
    } else {
        kids.front() = Expr::constant(c);
    }
    return Expr::product(std::move(kids));
}

std::string render_constant(const Rational& q, Prec prec) {
    const Rational a = abs(q);
    std::string body = a.get_den() == 1 ? a.get_str() : "(" + a.get_str() + ")";
    if (sgn(q) >= 0) return body;
    return prec >= kProduct ? "(-" + body + ")" : "-" + body;
}

std::string render_expr(const Expr& e, const Naming& naming, Prec prec) {
    switch (e.kind()) {
        case ExprKind::Constant: return render_constant(e.value(), prec);
        case ExprKind::Symbol: return render(e.coord(), naming);
        case ExprKind::Function:
            return e.tag().display_name() + "(" + render_expr(e.argument(), naming, kSum) + ")";
        case ExprKind::Power: {
            const Expr& b = e.base();
            std::string base = b.kind() == ExprKind::Symbol || b.kind() == ExprKind::Function
                                   ? render_expr(b, naming, kPower)
                                   : "(" + render_expr(b, naming, kSum) + ")";
            return base + "^" + std::to_string(e.exponent());
        }
        case ExprKind::Sum: {
            std::string out;
            bool first = true;
            for (const auto& t : e.children()) {
                if (first) {
                    out = render_expr(t, naming, kSum);
                    first = false;
                } else if (leading_negative(t)) {
                    out += " - " + render_expr(negate_leading(t), naming, kProduct);
                } else {
                    out += " + " + render_expr(t, naming, kProduct);
                }
            }
            // A sum nested in a product or power needs parentheses.
            return prec >= kProduct ? "(" + out + ")" : out;
        }
        case ExprKind::Product: {
            const auto kids = e.children();
            std::string out;
            std::size_t start = 0;
            if (!kids.empty() && kids.front().is_constant() && kids.front().value() == -1 && kids.size() > 1) {
                out = "-";
                start = 1;
            }
            for (std::size_t i = start; i < kids.size(); ++i) {
                if (i > start) out += "*";
                const bool lead_const = i == 0 && kids[i].is_constant();
                out += lead_const ? render_constant(kids[i].value(), kSum) : render_expr(kids[i], naming, kProduct);
            }
            if (prec >= kPower || (prec >= kProduct && out.starts_with("-"))) return "(" + out + ")";
            return out;
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    Parser(std::string_view text, const SymbolResolver& resolver, int line, int column_offset)
        : text_(text), resolver_(resolver), line_(line), column_offset_(column_offset) {}

    Expr parse() {
        Expr e = expr();
        skip_ws();
        if (pos_ < text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& message, std::size_t at) const {
        throw SyntaxError(line_, column_offset_ + static_cast<int>(at) + 1, message);
    }
    [[noreturn]] void fail(const std::string& message) const { fail(message, pos_); }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    bool accept(char c) {
        if (!peek(c)) return false;
        ++pos_;
        return true;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' before end of expression");
            fail(std::string("expected '") + c + "'");
        }
    }

    std::string identifier() {
        skip_ws();
        const std::size_t start = pos_;
        if (pos_ >= text_.size() || !(std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            fail("expected identifier");
        }
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    long integer() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (start == pos_) fail("expected integer");
        return std::stol(std::string(text_.substr(start, pos_ - start)));
    }

    Expr number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        std::string digits(text_.substr(start, pos_ - start));
        std::string frac;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            const std::size_t fs = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            frac = std::string(text_.substr(fs, pos_ - fs));
        }
        if (digits.empty() && frac.empty()) fail("malformed number", start);
        mpz_class num(digits.empty() ? std::string("0") : digits);
        mpz_class den(1);
        for (char c : frac) {
            num = num * 10 + (c - '0');
            den *= 10;
        }
        Rational q(num, den);
        q.canonicalize();
        return Expr::constant(q);
    }

    Expr expr() {
        Expr e = term();
        while (true) {
            if (accept('+')) {
                e = Expr::sum({e, term()});
            } else if (accept('-')) {
                e = Expr::sum({e, -term()});
            } else {
                return e;
            }
        }
    }

    Expr term() {
        Expr e = unary();
        while (true) {
            if (accept('*')) {
                e = Expr::product({e, unary()});
            } else if (accept('/')) {
                const std::size_t at = pos_;
                Expr d = unary();
                if (d.is_zero()) fail("division by zero", at);
                e = Expr::product({e, Expr::power(d, -1)});
            } else {
                return e;
            }
        }
    }

    Expr unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }

    Expr power() {
        Expr b = primary();
        if (!accept('^')) return b;
        long sign = 1;
        bool paren = accept('(');
        if (accept('-')) sign = -1;
        const long k = integer();
        if (paren) expect(')');
        return Expr::power(b, sign * k);
    }

    Coord field_ref() {
        const std::size_t at = (skip_ws(), pos_);
        const std::string name = identifier();
        if (name == "vol") {
            expect('[');
            const std::size_t gat = (skip_ws(), pos_);
            const std::string g = identifier();
            expect(']');
            auto c = resolver_.resolve_volume(g);
            if (!c) fail("'" + g + "' has no volume form", gat);
            return *c;
        }
        if (accept('[')) {
            const long i = integer();
            expect(']');
            auto c = resolver_.resolve_component(name, static_cast<int>(i));
            if (!c) fail("unknown component " + name + "[" + std::to_string(i) + "]", at);
            return *c;
        }
        auto c = resolver_.resolve(name);
        if (!c) fail("unknown symbol '" + name + "'", at);
        return *c;
    }

    Expr primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char ch = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') return number();
        if (accept('(')) {
            Expr e = expr();
            expect(')');
            return e;
        }
        if (!(std::isalpha(static_cast<unsigned char>(ch)) || ch == '_')) fail("unexpected '" + std::string(1, ch) + "'");

        const std::size_t at = pos_;
        const std::size_t save = pos_;
        const std::string name = identifier();
        if (name == "D" && peek('[')) {
            expect('[');
            Coord c = field_ref();
            if (!c.is_field_coord()) fail("D[...] needs a field component", at);
            expect(';');
            do {
                const std::size_t iat = (skip_ws(), pos_);
                const std::string b = identifier();
                auto mu = resolver_.base_index(b);
                if (!mu) fail("unknown base coordinate '" + b + "'", iat);
                try {
                    c = c.raised(*mu);
                } catch (const OrderOverflow&) {
                    fail("jet order too high", iat);
                }
            } while (accept(','));
            expect(']');
            return Expr(c);
        }
        int primes = 0;
        while (pos_ < text_.size() && text_[pos_] == '\'') {
            ++primes;
            ++pos_;
        }
        if (peek('(')) {
            expect('(');
            Expr arg = expr();
            expect(')');
            if (name == "sin" || name == "cos" || name == "exp") {
                if (primes > 0) fail("primes are only allowed on user functions", at);
                const FnKind k = name == "sin" ? FnKind::Sin : (name == "cos" ? FnKind::Cos : FnKind::Exp);
                return Expr::function(FunctionTag::builtin(k), arg);
            }
            return apply(name, arg, primes);
        }
        if (primes > 0) fail("expected '(' after function name");
        pos_ = save;
        return Expr(field_ref());
    }

    std::string_view text_;
    const SymbolResolver& resolver_;
    int line_;
    int column_offset_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string render(const Expr& e, const Naming& naming) { return render_expr(e, naming, kSum); }

Expr parse_expr(std::string_view text, const SymbolResolver& resolver, int line, int column_offset) {
    Parser p(text, resolver, line, column_offset);
    return p.parse();
}

}  // namespace covar::sym
