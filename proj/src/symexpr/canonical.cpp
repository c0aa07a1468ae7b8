#include "covar/symexpr.hpp"

#include <algorithm>
#include <unordered_map>

namespace covar::sym {

namespace {

struct Factor {
    Expr atom;
    long exp;
};

using Monomial = std::vector<Factor>;  // sorted by atom, no zero exponents

std::strong_ordering cmp_mono(const Monomial& a, const Monomial& b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (auto c = a[i].atom <=> b[i].atom; c != 0) return c;
        if (auto c = a[i].exp <=> b[i].exp; c != 0) return c;
    }
    return a.size() <=> b.size();
}

struct MonoLess {
    bool operator()(const Monomial& a, const Monomial& b) const { return cmp_mono(a, b) < 0; }
};

using Poly = std::map<Monomial, Rational, MonoLess>;

std::strong_ordering cmp_poly(const Poly& a, const Poly& b) {
    auto ia = a.begin();
    auto ib = b.begin();
    for (; ia != a.end() && ib != b.end(); ++ia, ++ib) {
        if (auto c = cmp_mono(ia->first, ib->first); c != 0) return c;
        const int c = cmp(ia->second, ib->second);
        if (c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    return a.size() <=> b.size();
}

struct PolyLess {
    bool operator()(const Poly& a, const Poly& b) const { return cmp_poly(a, b) < 0; }
};

using Den = std::map<Poly, long, PolyLess>;

struct RF {
    Poly num;
    Den den;
};

Monomial mono_mul(const Monomial& a, const Monomial& b, long scale_b = 1) {
    Monomial out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].atom < b[j].atom)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || b[j].atom < a[i].atom) {
            out.push_back({b[j].atom, b[j].exp * scale_b});
            ++j;
        } else {
            const long e = a[i].exp + b[j].exp * scale_b;
            if (e != 0) out.push_back({a[i].atom, e});
            ++i;
            ++j;
        }
    }
    return out;
}

Monomial mono_pow(const Monomial& m, long k) {
    Monomial out = m;
    for (auto& f : out) f.exp *= k;
    return out;
}

void add_term(Poly& p, const Monomial& m, const Rational& c) {
    if (sgn(c) == 0) return;
    auto [it, inserted] = p.try_emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (sgn(it->second) == 0) p.erase(it);
    }
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ma, ca] : a) {
        for (const auto& [mb, cb] : b) add_term(out, mono_mul(ma, mb), ca * cb);
    }
    return out;
}

Poly poly_scale(const Poly& p, const Monomial& m, const Rational& c) {
    Poly out;
    if (sgn(c) == 0) return out;
    for (const auto& [mp, cp] : p) out.emplace(mono_mul(mp, m), cp * c);
    return out;
}

Poly poly_pow(const Poly& p, long k) {
    Poly result{{Monomial{}, Rational(1)}};
    if (p.size() == 1) {
        const auto& [m, c] = *p.begin();
        Rational ck(1);
        mpz_pow_ui(ck.get_num_mpz_t(), c.get_num_mpz_t(), static_cast<unsigned long>(k));
        mpz_pow_ui(ck.get_den_mpz_t(), c.get_den_mpz_t(), static_cast<unsigned long>(k));
        return Poly{{mono_pow(m, k), ck}};
    }
    Poly base = p;
    while (k > 0) {
        if (k & 1) result = poly_mul(result, base);
        k >>= 1;
        if (k > 0) base = poly_mul(base, base);
    }
    return result;
}

Poly expand_den(const Den& den) {
    Poly out{{Monomial{}, Rational(1)}};
    for (const auto& [key, e] : den) out = poly_mul(out, poly_pow(key, e));
    return out;
}

RF rf_constant(const Rational& c) {
    RF r;
    if (sgn(c) != 0) r.num.emplace(Monomial{}, c);
    return r;
}

RF rf_add(const RF& a, const RF& b) {
    if (a.num.empty()) return b;
    if (b.num.empty()) return a;
    if (a.den.empty() && b.den.empty()) {
        RF r = a;
        for (const auto& [m, c] : b.num) add_term(r.num, m, c);
        return r;
    }
    RF r;
    r.den = a.den;
    for (const auto& [k, e] : b.den) {
        auto& slot = r.den[k];
        slot = std::max(slot, e);
    }
    auto lift = [&](const RF& x) {
        Poly out = x.num;
        for (const auto& [k, e] : r.den) {
            auto it = x.den.find(k);
            const long have = it == x.den.end() ? 0 : it->second;
            if (e > have) out = poly_mul(out, poly_pow(k, e - have));
        }
        return out;
    };
    r.num = lift(a);
    for (const auto& [m, c] : lift(b)) add_term(r.num, m, c);
    if (r.num.empty()) r.den.clear();
    return r;
}

RF rf_mul(const RF& a, const RF& b) {
    RF r;
    if (a.num.empty() || b.num.empty()) return r;
    r.num = poly_mul(a.num, b.num);
    r.den = a.den;
    for (const auto& [k, e] : b.den) r.den[k] += e;
    return r;
}

RF rf_inverse(const RF& a) {
    if (a.num.empty()) throw PoleHit("division by zero");
    const Poly d = expand_den(a.den);
    RF r;
    if (a.num.size() == 1) {
        const auto& [m, c] = *a.num.begin();
        r.num = poly_scale(d, mono_pow(m, -1), 1 / Rational(c));
        return r;
    }
    // num = c * m * P with P primitive and free of monomial factors.
    std::map<Expr, long> low;
    bool first = true;
    for (const auto& [m, c] : a.num) {
        std::map<Expr, long> here;
        for (const auto& f : m) here[f.atom] = f.exp;
        if (first) {
            low = here;
            first = false;
            continue;
        }
        for (auto& [atom, e] : low) {
            auto it = here.find(atom);
            e = std::min(e, it == here.end() ? 0L : it->second);
        }
        for (const auto& [atom, e] : here) {
            if (!low.contains(atom)) low[atom] = std::min(e, 0L);
        }
    }
    Monomial shift;
    for (const auto& [atom, e] : low) {
        if (e != 0) shift.push_back({atom, -e});
    }
    Poly p = poly_scale(a.num, shift, 1);
    const Rational lead = p.begin()->second;
    for (auto& [m, c] : p) c /= lead;
    r.num = poly_scale(d, shift, 1 / lead);
    r.den.emplace(std::move(p), 1);
    return r;
}

RF rf_pow(const RF& a, long k) {
    if (k == 0) return rf_constant(1);
    if (k < 0) return rf_pow(rf_inverse(a), -k);
    if (a.num.empty()) return a;
    RF r;
    r.num = poly_pow(a.num, k);
    for (const auto& [key, e] : a.den) r.den.emplace(key, e * k);
    return r;
}

// Exact division in lex order; both operands have non-negative exponents.
struct LexLess {
    bool operator()(const Monomial& a, const Monomial& b) const {
        // Compare exponent vectors with atoms ordered ascending; the first
        // differing atom decides, an absent atom counts as exponent 0.
        std::size_t i = 0;
        std::size_t j = 0;
        while (i < a.size() || j < b.size()) {
            if (j == b.size() || (i < a.size() && a[i].atom < b[j].atom)) return false;
            if (i == a.size() || b[j].atom < a[i].atom) return true;
            if (a[i].exp != b[j].exp) return a[i].exp < b[j].exp;
            ++i;
            ++j;
        }
        return false;
    }
};

bool mono_divides(const Monomial& d, const Monomial& m) {
    std::size_t j = 0;
    for (const auto& f : d) {
        while (j < m.size() && m[j].atom < f.atom) ++j;
        if (j == m.size() || !(m[j].atom == f.atom) || m[j].exp < f.exp) return false;
    }
    return true;
}

std::optional<Poly> exact_divide(const Poly& f, const Poly& g) {
    std::map<Monomial, Rational, LexLess> rem;
    for (const auto& [m, c] : f) rem.emplace(m, c);
    std::map<Monomial, Rational, LexLess> gl;
    for (const auto& [m, c] : g) gl.emplace(m, c);
    const auto& [lg_m, lg_c] = *gl.rbegin();
    Poly q;
    while (!rem.empty()) {
        const auto lead = std::prev(rem.end());
        if (!mono_divides(lg_m, lead->first)) return std::nullopt;
        const Monomial tm = mono_mul(lead->first, lg_m, -1);
        const Rational tc = lead->second / lg_c;
        add_term(q, tm, tc);
        for (const auto& [mg, cg] : gl) {
            const Monomial pm = mono_mul(mg, tm);
            auto [it, inserted] = rem.try_emplace(pm, -tc * cg);
            if (!inserted) {
                it->second -= tc * cg;
                if (sgn(it->second) == 0) rem.erase(it);
            }
        }
    }
    return q;
}

void cancel(RF& r) {
    if (r.num.empty() || r.den.empty()) return;
    // Clear negative exponents of the numerator before dividing.
    std::map<Expr, long> neg;
    for (const auto& [m, c] : r.num) {
        for (const auto& f : m) {
            if (f.exp < 0) {
                auto& slot = neg[f.atom];
                slot = std::max(slot, -f.exp);
            }
        }
    }
    Monomial shift;
    for (const auto& [atom, e] : neg) shift.push_back({atom, e});
    Poly n = poly_scale(r.num, shift, 1);
    for (auto it = r.den.begin(); it != r.den.end();) {
        while (it->second > 0) {
            auto q = exact_divide(n, it->first);
            if (!q) break;
            n = std::move(*q);
            --it->second;
        }
        it = it->second == 0 ? r.den.erase(it) : std::next(it);
    }
    r.num = poly_scale(n, mono_pow(shift, -1), 1);
}

class Canonicalizer {
public:
    RF to_rf(const Expr& e) {
        switch (e.kind()) {
            case ExprKind::Constant: return rf_constant(e.value());
            case ExprKind::Symbol: return atom_rf(e);
            case ExprKind::Function: return function_rf(e);
            default: break;
        }
        if (auto it = memo_.find(e); it != memo_.end()) return it->second;
        RF r;
        switch (e.kind()) {
            case ExprKind::Sum:
                for (const auto& c : e.children()) r = rf_add(r, to_rf(c));
                break;
            case ExprKind::Product:
                r = rf_constant(1);
                for (const auto& c : e.children()) {
                    r = rf_mul(r, to_rf(c));
                    if (r.num.empty()) break;
                }
                break;
            case ExprKind::Power:
                r = rf_pow(to_rf(e.base()), e.exponent());
                break;
            default: break;
        }
        memo_.emplace(e, r);
        return r;
    }

    Expr canonical(const Expr& e) {
        RF r = to_rf(e);
        cancel(r);
        return from_rf(r);
    }

private:
    static RF atom_rf(const Expr& atom) {
        RF r;
        r.num.emplace(Monomial{{atom, 1}}, Rational(1));
        return r;
    }

    RF function_rf(const Expr& e) {
        const Expr arg = canonical(e.argument());
        const auto& tag = e.tag();
        if (arg.is_zero() && tag.kind != FnKind::User) {
            return rf_constant(tag.kind == FnKind::Sin ? 0 : 1);
        }
        return atom_rf(Expr::function(tag, arg));
    }

    static Expr term_expr(const Monomial& m, const Rational& c, std::vector<Expr>& factors) {
        if (c != 1 || m.empty()) factors.push_back(Expr::constant(c));
        for (const auto& f : m) factors.push_back(f.exp == 1 ? f.atom : Expr::power(f.atom, f.exp));
        return Expr();
    }

    static Expr poly_expr(const Poly& p) {
        std::vector<Expr> terms;
        terms.reserve(p.size());
        for (const auto& [m, c] : p) {
            std::vector<Expr> factors;
            term_expr(m, c, factors);
            std::sort(factors.begin(), factors.end());
            terms.push_back(Expr::product(std::move(factors)));
        }
        std::sort(terms.begin(), terms.end());
        return Expr::sum(std::move(terms));
    }

    static Expr from_rf(const RF& r) {
        if (r.num.empty()) return Expr();
        if (r.den.empty()) return poly_expr(r.num);
        std::vector<Expr> factors;
        if (r.num.size() == 1) {
            const auto& [m, c] = *r.num.begin();
            if (c != 1 || !m.empty()) term_expr(m, c, factors);
        } else {
            factors.push_back(poly_expr(r.num));
        }
        for (const auto& [key, e] : r.den) factors.push_back(Expr::power(poly_expr(key), -e));
        std::sort(factors.begin(), factors.end());
        return Expr::product(std::move(factors));
    }

    std::unordered_map<Expr, RF, ExprHash> memo_;
};

}  // namespace

Expr canonicalize(const Expr& e) {
    if (e.kind() == ExprKind::Constant || e.kind() == ExprKind::Symbol) return e;
    Canonicalizer c;
    return c.canonical(e);
}

bool is_canonical_zero(const Expr& e) { return canonicalize(e).is_zero(); }

}  // namespace covar::sym
