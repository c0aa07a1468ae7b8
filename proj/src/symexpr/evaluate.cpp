#include "covar/symexpr.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace covar::sym {

double Number::to_double() const {
    if (const auto* q = std::get_if<Rational>(&v_)) return q->get_d();
    return std::get<double>(v_);
}

bool operator==(const Number& a, const Number& b) {
    if (a.is_exact() && b.is_exact()) return a.exact() == b.exact();
    return a.to_double() == b.to_double();
}

double eval_builtin(const FunctionTag& tag, double x) {
    const double shift = tag.derivative * std::numbers::pi / 2;
    switch (tag.kind) {
        case FnKind::Sin: return std::sin(x + shift);
        case FnKind::Cos: return std::cos(x + shift);
        case FnKind::Exp: return std::exp(x);
        case FnKind::User: break;
    }
    throw Inconclusive("no builtin meaning for " + tag.display_name());
}

Interpretation default_interpretation() {
    return [](const FunctionTag& tag, double u) -> std::optional<double> {
        const double e = std::exp(u / 2);
        switch (tag.derivative) {
            case 0: return e + u * u / 2;
            case 1: return e / 2 + u;
            case 2: return e / 4 + 1;
            default: return std::ldexp(e, -tag.derivative);
        }
    };
}

namespace {

Rational rational_pow(const Rational& q, long k) {
    if (k < 0) {
        if (sgn(q) == 0) throw PoleHit("zero denominator");
        return rational_pow(1 / q, -k);
    }
    Rational out;
    mpz_pow_ui(out.get_num_mpz_t(), q.get_num_mpz_t(), static_cast<unsigned long>(k));
    mpz_pow_ui(out.get_den_mpz_t(), q.get_den_mpz_t(), static_cast<unsigned long>(k));
    out.canonicalize();
    return out;
}

double double_pow(double x, long k) {
    if (k < 0 && x == 0.0) throw PoleHit("zero denominator");
    double r = 1.0;
    double b = k < 0 ? 1.0 / x : x;
    unsigned long n = static_cast<unsigned long>(k < 0 ? -k : k);
    while (n > 0) {
        if (n & 1UL) r *= b;
        b *= b;
        n >>= 1;
    }
    return r;
}

std::string coord_label(const Coord& c) { return render(c, Naming{}); }

double eval_d(const Expr& e, const CoordMap<double>& point, const Interpretation& interp) {
    switch (e.kind()) {
        case ExprKind::Constant: return e.value().get_d();
        case ExprKind::Symbol: {
            auto it = point.find(e.coord());
            if (it == point.end()) throw Error("no value for coordinate " + coord_label(e.coord()));
            return it->second;
        }
        case ExprKind::Sum: {
            double s = 0;
            for (const auto& c : e.children()) s += eval_d(c, point, interp);
            return s;
        }
        case ExprKind::Product: {
            double p = 1;
            for (const auto& c : e.children()) p *= eval_d(c, point, interp);
            return p;
        }
        case ExprKind::Power: return double_pow(eval_d(e.base(), point, interp), e.exponent());
        case ExprKind::Function: {
            const double u = eval_d(e.argument(), point, interp);
            if (e.tag().kind != FnKind::User) return eval_builtin(e.tag(), u);
            auto v = interp ? interp(e.tag(), u) : default_interpretation()(e.tag(), u);
            if (!v) throw Inconclusive("no interpretation for function " + e.tag().display_name());
            return *v;
        }
    }
    return 0;
}

Rational eval_q(const Expr& e, const CoordMap<Rational>& point, const ExactInterpretation& user) {
    switch (e.kind()) {
        case ExprKind::Constant: return e.value();
        case ExprKind::Symbol: {
            auto it = point.find(e.coord());
            if (it == point.end()) throw Error("no value for coordinate " + coord_label(e.coord()));
            return it->second;
        }
        case ExprKind::Sum: {
            Rational s(0);
            for (const auto& c : e.children()) s += eval_q(c, point, user);
            return s;
        }
        case ExprKind::Product: {
            Rational p(1);
            for (const auto& c : e.children()) {
                p *= eval_q(c, point, user);
                if (sgn(p) == 0) {
                    // Remaining factors may still carry poles.
                    for (const auto& rest : e.children()) (void)eval_q(rest, point, user);
                    return p;
                }
            }
            return p;
        }
        case ExprKind::Power: return rational_pow(eval_q(e.base(), point, user), e.exponent());
        case ExprKind::Function: {
            if (e.tag().kind != FnKind::User || !user) {
                throw Inconclusive("function " + e.tag().display_name() + " has no exact value");
            }
            return user(e.tag(), eval_q(e.argument(), point, user));
        }
    }
    return Rational(0);
}

}  // namespace

double eval_double(const Expr& e, const CoordMap<double>& point, const Interpretation& interp) {
    return eval_d(e, point, interp);
}

Rational eval_exact(const Expr& e, const CoordMap<Rational>& point, const ExactInterpretation& user_value) {
    return eval_q(e, point, user_value);
}

Number eval_at(const Expr& e, const std::map<Coord, Number>& point, const Interpretation& interp) {
    bool exact = !contains_function(e, false);
    for (const auto& [c, v] : point) exact = exact && v.is_exact();
    if (exact) {
        CoordMap<Rational> q;
        for (const auto& [c, v] : point) q.emplace(c, v.exact());
        return eval_q(e, q, {});
    }
    CoordMap<double> d;
    for (const auto& [c, v] : point) d.emplace(c, v.to_double());
    return eval_d(e, d, interp);
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t hash_text(std::uint64_t h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

Rational draw(std::mt19937_64& rng, long height) {
    std::uniform_int_distribution<long> num(-height, height);
    std::uniform_int_distribution<long> den(1, height);
    Rational q(num(rng), den(rng));
    q.canonicalize();
    return q;
}

}  // namespace

bool equal_identically(const Expr& e1, const Expr& e2, int trials, std::uint64_t seed) {
    IdentityOptions o;
    o.trials = trials;
    o.seed = seed;
    return equal_identically(e1, e2, o);
}

bool equal_identically(const Expr& e1, const Expr& e2, const IdentityOptions& options) {
    const Expr d = canonicalize(e1 - e2);
    if (d.is_zero()) return true;
    if (contains_function(d, true)) throw Inconclusive("transcendental functions survive canonicalization");
    const auto coords = coords_of(d);
    constexpr int kRedraws = 16;
    for (int t = 0; t < options.trials; ++t) {
        const std::uint64_t stream = derive_stream_seed(options.seed, static_cast<std::uint64_t>(t));
        std::mt19937_64 rng(stream);
        // Free user functions: value depends only on (trial, tag, argument).
        ExactInterpretation free_fn = [&](const FunctionTag& tag, const Rational& arg) {
            std::uint64_t h = hash_text(stream ^ 1469598103934665603ULL, tag.display_name());
            h = hash_text(h, arg.get_str());
            std::mt19937_64 local(h);
            return draw(local, options.height);
        };
        bool decided = false;
        for (int attempt = 0; attempt < kRedraws && !decided; ++attempt) {
            CoordMap<Rational> point;
            for (const auto& c : coords) point.emplace(c, draw(rng, options.height));
            try {
                if (sgn(eval_q(d, point, free_fn)) != 0) return false;
                decided = true;
            } catch (const PoleHit&) {
            }
        }
        if (!decided) throw Inconclusive("every sample point hit a pole");
    }
    return true;
}

}  // namespace covar::sym
