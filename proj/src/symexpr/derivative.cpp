#include "covar/symexpr.hpp"

#include <unordered_map>

namespace covar::sym {

namespace {

class Deriver {
public:
    explicit Deriver(const std::function<Expr(const Coord&)>& fn) : fn_(fn) {}

    Expr d(const Expr& e) {
        switch (e.kind()) {
            case ExprKind::Constant: return Expr();
            case ExprKind::Symbol: return fn_(e.coord());
            default: break;
        }
        if (auto it = memo_.find(e); it != memo_.end()) return it->second;
        Expr out;
        switch (e.kind()) {
            case ExprKind::Sum: {
                std::vector<Expr> terms;
                for (const auto& c : e.children()) {
                    Expr dc = d(c);
                    if (!dc.is_zero()) terms.push_back(std::move(dc));
                }
                out = Expr::sum(std::move(terms));
                break;
            }
            case ExprKind::Product: {
                const auto kids = e.children();
                std::vector<Expr> terms;
                for (std::size_t i = 0; i < kids.size(); ++i) {
                    Expr di = d(kids[i]);
                    if (di.is_zero()) continue;
                    std::vector<Expr> factors(kids.begin(), kids.end());
                    factors[i] = std::move(di);
                    terms.push_back(Expr::product(std::move(factors)));
                }
                out = Expr::sum(std::move(terms));
                break;
            }
            case ExprKind::Power: {
                Expr db = d(e.base());
                if (!db.is_zero()) {
                    const long k = e.exponent();
                    out = Expr::product({Expr(k), Expr::power(e.base(), k - 1), db});
                }
                break;
            }
            case ExprKind::Function: {
                Expr du = d(e.argument());
                if (!du.is_zero()) out = outer_derivative(e) * du;
                break;
            }
            default: break;
        }
        memo_.emplace(e, out);
        return out;
    }

private:
    static Expr outer_derivative(const Expr& e) {
        const auto& tag = e.tag();
        const Expr& u = e.argument();
        switch (tag.kind) {
            case FnKind::Sin: return cos(u);
            case FnKind::Cos: return -sin(u);
            case FnKind::Exp: return e;
            case FnKind::User: return apply(tag.name, u, tag.derivative + 1);
        }
        return Expr();
    }

    const std::function<Expr(const Coord&)>& fn_;
    std::unordered_map<Expr, Expr, ExprHash> memo_;
};

Expr substitute_raw(const Expr& e, const Substitution& map, std::unordered_map<Expr, Expr, ExprHash>& memo) {
    switch (e.kind()) {
        case ExprKind::Constant: return e;
        case ExprKind::Symbol: {
            auto it = map.find(e.coord());
            return it == map.end() ? e : it->second;
        }
        default: break;
    }
    if (auto it = memo.find(e); it != memo.end()) return it->second;
    Expr out;
    switch (e.kind()) {
        case ExprKind::Sum:
        case ExprKind::Product: {
            std::vector<Expr> kids;
            for (const auto& c : e.children()) kids.push_back(substitute_raw(c, map, memo));
            out = e.kind() == ExprKind::Sum ? Expr::sum(std::move(kids)) : Expr::product(std::move(kids));
            break;
        }
        case ExprKind::Power:
            out = Expr::power(substitute_raw(e.base(), map, memo), e.exponent());
            break;
        case ExprKind::Function:
            out = Expr::function(e.tag(), substitute_raw(e.argument(), map, memo));
            break;
        default: break;
    }
    memo.emplace(e, out);
    return out;
}

}  // namespace

Expr derive(const Expr& e, const std::function<Expr(const Coord&)>& coord_derivative) {
    Deriver d(coord_derivative);
    return canonicalize(d.d(e));
}

Expr partial(const Expr& e, const Coord& c) {
    return derive(e, [&](const Coord& x) { return x == c ? Expr(1) : Expr(); });
}

Expr total_derivative(const Expr& e, int mu, int base_dim) {
    if (mu < 0 || mu >= base_dim) throw Error("base index out of range");
    return derive(e, [&](const Coord& c) -> Expr {
        switch (c.kind()) {
            case CoordKind::Base: return c.index() == mu ? Expr(1) : Expr();
            case CoordKind::Param: return Expr();
            default: return Expr(c.raised(mu));
        }
    });
}

Expr substitute(const Expr& e, const Substitution& map) {
    std::unordered_map<Expr, Expr, ExprHash> memo;
    return canonicalize(substitute_raw(e, map, memo));
}

}  // namespace covar::sym
