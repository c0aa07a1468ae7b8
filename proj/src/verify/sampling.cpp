#include "common.hpp"

#include <functional>

namespace covar {

using detail::draw;
using detail::Rng;

namespace {

// Fixed-denominator draw n/32 with |n| <= 4, times amp (0 or 1).
Rational small(Rng& rng, const Rational& amp) {
    std::uniform_int_distribution<long> n(-4, 4);
    return Rational(n(rng), 32) * amp;
}

Expr offset(const std::vector<Rational>& x0, int mu) {
    return Expr(Coord::base(mu)) - Expr(x0[static_cast<std::size_t>(mu)]);
}

// Polynomial in (x - x0) with every monomial of degree 1..deg.
Expr random_poly(Rng& rng, const std::vector<Rational>& x0, int deg, const Rational& amp) {
    const int d = static_cast<int>(x0.size());
    std::vector<Expr> terms;
    std::vector<int> idx;
    std::function<void(int)> rec = [&](int start) {
        if (!idx.empty()) {
            std::vector<Expr> f{Expr(small(rng, amp))};
            for (int mu : idx) f.push_back(offset(x0, mu));
            terms.push_back(Expr::product(std::move(f)));
        }
        if (static_cast<int>(idx.size()) == deg) return;
        for (int mu = start; mu < d; ++mu) {
            idx.push_back(mu);
            rec(mu);
            idx.pop_back();
        }
    };
    rec(0);
    return sym::canonicalize(Expr::sum(std::move(terms)));
}

using FieldExprs = std::map<Coord, Expr>;

struct Action {
    std::vector<Rational> x_old;
    std::vector<Rational> x_new;
    Rational density{1};  // L(g.gamma) = density * L(gamma)
    std::function<FieldExprs(const FieldExprs&)> apply;
};

using ActionDraw = std::function<Action(Rng&)>;

std::vector<Rational> random_point(Rng& rng, int d) {
    std::vector<Rational> x;
    for (int mu = 0; mu < d; ++mu) x.push_back(draw(rng, 4, 4));
    return x;
}

sym::CoordMap<Rational> base_point(const std::vector<Rational>& x) {
    sym::CoordMap<Rational> p;
    for (std::size_t mu = 0; mu < x.size(); ++mu) p[Coord::base(static_cast<int>(mu))] = x[mu];
    return p;
}

long factorial(int n) {
    long f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double magnitude(const sym::Number& n) { return std::abs(n.to_double()); }

Report sample_invariance(const TheorySpec& spec, const std::string& check, int samples, std::uint64_t seed, double tol,
                         const ActionDraw& draw_action) {
    Report rep;
    rep.check = check;
    rep.subject = spec.name;
    rep.tolerance = tol;
    rep.samples = samples;
    rep.seed = seed;
    const int k = lagrangian_order(spec);
    std::vector<Coord> coords;
    for (const auto& c : jet_coords(spec, k)) {
        if (c.is_field_coord()) coords.push_back(c);
    }
    const auto interp = sym::default_interpretation();
    for (int i = 0; i < samples; ++i) {
        Rng rng(sym::derive_stream_seed(seed, static_cast<std::uint64_t>(i)));
        const std::string id = "sample-" + std::to_string(i);
        int degenerate = 0;
        bool done = false;
        while (!done && degenerate < 20) {
            try {
                Action act = draw_action(rng);
                std::map<Coord, sym::Number> before;
                std::map<Coord, sym::Number> after;
                for (std::size_t mu = 0; mu < act.x_old.size(); ++mu) {
                    before[Coord::base(static_cast<int>(mu))] = act.x_old[mu];
                    after[Coord::base(static_cast<int>(mu))] = act.x_new[mu];
                }
                std::map<Coord, std::vector<Expr>> terms;
                std::map<Coord, Rational> jets;
                for (const auto& c : coords) {
                    const Rational v = draw(rng, 5, 4);
                    jets[c] = v;
                    before[c] = v;
                    const auto& mi = c.multi_index();
                    std::vector<Expr> f{Expr(Rational(v * mi.multiplicity() / factorial(mi.size())))};
                    for (int j = 0; j < mi.size(); ++j) f.push_back(offset(act.x_old, mi[j]));
                    terms[c.value_coord()].push_back(Expr::product(std::move(f)));
                }
                for (const auto& p : spec.params) {
                    const Rational v = detail::draw_nonzero(rng, 5, 4);
                    before[Coord::param(p)] = v;
                    after[Coord::param(p)] = v;
                }
                FieldExprs P;
                for (auto& [c, t] : terms) P[c] = sym::canonicalize(Expr::sum(std::move(t)));
                const FieldExprs moved = act.apply(P);
                const auto at_new = base_point(act.x_new);
                std::map<std::pair<Coord, std::vector<int>>, Expr> memo;
                for (const auto& c : coords) {
                    const Coord v = c.value_coord();
                    std::vector<int> prefix;
                    Expr e = moved.at(v);
                    for (int j = 0; j < c.order(); ++j) {
                        prefix.push_back(c.multi_index()[j]);
                        auto key = std::make_pair(v, prefix);
                        auto it = memo.find(key);
                        if (it == memo.end()) it = memo.emplace(key, sym::partial(e, Coord::base(prefix.back()))).first;
                        e = it->second;
                    }
                    after[c] = sym::eval_exact(e, at_new);
                }
                const sym::Number l0 = sym::eval_at(spec.lagrangian, before, interp);
                const sym::Number l1 = sym::eval_at(spec.lagrangian, after, interp);
                double residual;
                if (l0.is_exact() && l1.is_exact()) {
                    const Rational diff = l1.exact() / act.density - l0.exact();
                    const Rational rel = abs(diff) / (1 + abs(l0.exact()));
                    residual = rel.get_d();
                } else {
                    residual = std::abs(l1.to_double() / act.density.get_d() - l0.to_double()) / (1 + magnitude(l0));
                }
                rep.add(id, residual, degenerate ? "resampled " + std::to_string(degenerate) : "");
                done = true;
            } catch (const PoleHit&) {
                ++degenerate;
            }
        }
        if (!done) rep.add_inconclusive(id, "every draw hit a pole");
    }
    return rep;
}

// x = psi(x'), psi(x') = x' + c + a (x' - x1) + b (x' - x1)^2 around the new point x1.
Action diffeo_action(Rng& rng, const TheorySpec& spec, const Rational& amp) {
    const int d = spec.base_dim;
    Action act;
    act.x_new = random_point(rng, d);
    std::vector<Expr> psi;
    for (int mu = 0; mu < d; ++mu) {
        const Rational c = small(rng, amp);
        act.x_old.push_back(act.x_new[static_cast<std::size_t>(mu)] + c);
        psi.push_back(sym::canonicalize(Expr(Coord::base(mu)) + Expr(c) + random_poly(rng, act.x_new, 2, amp)));
    }
    Matrix S(static_cast<std::size_t>(d), std::vector<Expr>(static_cast<std::size_t>(d)));
    for (int a = 0; a < d; ++a) {
        for (int mu = 0; mu < d; ++mu) S[a][mu] = sym::partial(psi[a], Coord::base(mu));
    }
    const Expr detS = determinant(S);
    act.density = sym::eval_exact(detS, base_point(act.x_new));
    if (sgn(act.density) == 0) throw PoleHit("degenerate diffeomorphism");
    sym::Substitution sub;
    for (int mu = 0; mu < d; ++mu) sub[Coord::base(mu)] = psi[static_cast<std::size_t>(mu)];
    act.apply = [&spec, d, S, detS, sub](const FieldExprs& P) {
        FieldExprs out;
        auto pulled = [&](const Coord& c) { return sym::substitute(P.at(c), sub); };
        auto covector = [&](const FieldDecl& f, int offset_slot) {
            std::vector<Expr> comp;
            for (int nu = 0; nu < d; ++nu) comp.push_back(pulled(f.value(offset_slot + nu)));
            for (int mu = 0; mu < d; ++mu) {
                std::vector<Expr> t;
                for (int nu = 0; nu < d; ++nu) t.push_back(comp[static_cast<std::size_t>(nu)] * S[nu][mu]);
                out[f.value(offset_slot + mu)] = sym::canonicalize(Expr::sum(std::move(t)));
            }
        };
        for (const auto& f : spec.fields) {
            switch (f.geom) {
                case Geom::Scalar:
                case Geom::Diffeo:
                    for (int s : f.slots()) out[f.value(s)] = pulled(f.value(s));
                    break;
                case Geom::Covector: covector(f, 0); break;
                case Geom::LieOneForm:
                    for (int k = 0; k < f.components / d; ++k) covector(f, k * d);
                    break;
                case Geom::MetricInverse: {
                    const Matrix inv = matrix_inverse(S);
                    auto g = [&](int a, int b) { return pulled(f.value(metric_slot(std::min(a, b), std::max(a, b), d))); };
                    for (int mu = 0; mu < d; ++mu) {
                        for (int nu = mu; nu < d; ++nu) {
                            std::vector<Expr> t;
                            for (int a = 0; a < d; ++a) {
                                for (int b = 0; b < d; ++b) t.push_back(inv[mu][a] * inv[nu][b] * g(a, b));
                            }
                            out[f.value(metric_slot(mu, nu, d))] = sym::canonicalize(Expr::sum(std::move(t)));
                        }
                    }
                    out[f.value(sym::kVolumeSlot)] = sym::canonicalize(pulled(f.value(sym::kVolumeSlot)) * detS);
                    break;
                }
            }
        }
        return out;
    };
    return act;
}

Action shift_action(Rng& rng, const TheorySpec& spec, bool compensate, const Rational& amp) {
    const int d = spec.base_dim;
    Action act;
    act.x_new = random_point(rng, d);
    act.x_old = act.x_new;
    const auto pairs = detail::shift_pairs(spec);
    std::vector<Expr> fs;
    for (std::size_t i = 0; i < pairs.size(); ++i) fs.push_back(random_poly(rng, act.x_new, lagrangian_order(spec) + 2, amp));
    act.apply = [pairs, fs, d, compensate](const FieldExprs& P) {
        FieldExprs out = P;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const FieldDecl& a = *pairs[i].first;
            for (int mu = 0; mu < d; ++mu) {
                out[a.value(mu)] = sym::canonicalize(P.at(a.value(mu)) + sym::partial(fs[i], Coord::base(mu)));
            }
            if (compensate && pairs[i].second) {
                const Coord eta = pairs[i].second->value(0);
                out[eta] = sym::canonicalize(P.at(eta) - fs[i]);
            }
        }
        return out;
    };
    return act;
}

Action gauge_action(Rng& rng, const TheorySpec& spec, const FieldDecl& conn, const Rational& amp) {
    const int d = spec.base_dim;
    const LieRep rep = detail::rep_for(spec, conn);
    const auto n = static_cast<std::size_t>(rep.dim);
    Action act;
    act.x_new = random_point(rng, d);
    act.x_old = act.x_new;
    // Cayley transform g = (1 - K)^-1 (1 + K) of K = sum theta_k T_k / 2.
    Matrix K(n, std::vector<Expr>(n));
    std::vector<Expr> theta;
    for (std::size_t k = 0; k < rep.generators.size(); ++k) theta.push_back(random_poly(rng, act.x_new, 2, amp) + Expr(small(rng, amp)));
    Matrix minus(n, std::vector<Expr>(n));
    Matrix plus(n, std::vector<Expr>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<Expr> t;
            for (std::size_t k = 0; k < rep.generators.size(); ++k) {
                t.push_back(Expr(Rational(rep.generators[k][i][j] / 2)) * theta[k]);
            }
            K[i][j] = sym::canonicalize(Expr::sum(std::move(t)));
            minus[i][j] = sym::canonicalize(Expr(i == j ? 1 : 0) - K[i][j]);
            plus[i][j] = sym::canonicalize(Expr(i == j ? 1 : 0) + K[i][j]);
        }
    }
    const Matrix inv = matrix_inverse(minus);
    Matrix g(n, std::vector<Expr>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<Expr> t;
            for (std::size_t m = 0; m < n; ++m) t.push_back(inv[i][m] * plus[m][j]);
            g[i][j] = sym::canonicalize(Expr::sum(std::move(t)));
        }
    }
    std::vector<const FieldDecl*> multiplets;
    for (const auto& f : spec.fields) {
        if (f.kind == FieldKind::Variational && f.geom == Geom::Scalar && f.components == rep.dim) multiplets.push_back(&f);
    }
    const std::string conn_name = conn.name;
    act.apply = [&spec, d, n, g, rep, multiplets, conn_name](const FieldExprs& P) {
        FieldExprs out = P;
        for (const FieldDecl* f : multiplets) {
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<Expr> t;
                for (std::size_t j = 0; j < n; ++j) t.push_back(g[i][j] * P.at(f->value(static_cast<int>(j))));
                out[f->value(static_cast<int>(i))] = sym::canonicalize(Expr::sum(std::move(t)));
            }
        }
        const FieldDecl& a = *spec.find_field(conn_name);
        const std::size_t ngen = rep.generators.size();
        for (int mu = 0; mu < d; ++mu) {
            // A'_mu = g A_mu g^T - (d_mu g) g^T
            Matrix am(n, std::vector<Expr>(n));
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    std::vector<Expr> t;
                    for (std::size_t k = 0; k < ngen; ++k) {
                        const Rational& c = rep.generators[k][i][j];
                        if (sgn(c) != 0) t.push_back(Expr(c) * P.at(a.value(static_cast<int>(k) * d + mu)));
                    }
                    am[i][j] = Expr::sum(std::move(t));
                }
            }
            Matrix next(n, std::vector<Expr>(n));
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    std::vector<Expr> t;
                    for (std::size_t p = 0; p < n; ++p) {
                        for (std::size_t q = 0; q < n; ++q) t.push_back(g[i][p] * am[p][q] * g[j][q]);
                        t.push_back(-(sym::partial(g[i][p], Coord::base(mu)) * g[j][p]));
                    }
                    next[i][j] = Expr::sum(std::move(t));
                }
            }
            for (std::size_t k = 0; k < ngen; ++k) {
                std::vector<Expr> t;
                Rational norm(0);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        const Rational& c = rep.generators[k][i][j];
                        norm += c * c;
                        if (sgn(c) != 0) t.push_back(Expr(c) * next[i][j]);
                    }
                }
                out[a.value(static_cast<int>(k) * d + mu)] = sym::canonicalize(Expr::sum(std::move(t)) / Expr(norm));
            }
        }
        return out;
    };
    return act;
}

}  // namespace

Report check_covariance(const TheorySpec& spec, int samples, std::uint64_t seed, double tol, SymmetryDraw draw) {
    const Rational amp(draw == SymmetryDraw::Identity ? 0 : 1);
    const FieldDecl* conn = spec.covariance_field(Geom::LieOneForm);
    if (conn) {
        return sample_invariance(spec, "covariance", samples, seed, tol,
                                 [&](Rng& rng) { return gauge_action(rng, spec, *conn, amp); });
    }
    bool shift = false;
    for (const auto& p : detail::shift_pairs(spec)) shift = shift || p.second != nullptr;
    if (shift && !spec.covariance_field(Geom::Diffeo)) {
        return sample_invariance(spec, "covariance", samples, seed, tol,
                                 [&](Rng& rng) { return shift_action(rng, spec, true, amp); });
    }
    return sample_invariance(spec, "covariance", samples, seed, tol, [&](Rng& rng) { return diffeo_action(rng, spec, amp); });
}

Report check_gauge_shift(const TheorySpec& spec, int samples, std::uint64_t seed, double tol) {
    if (detail::shift_pairs(spec).empty()) throw UnsupportedAction("gauge shift needs a variational covector field");
    return sample_invariance(spec, "gauge-shift", samples, seed, tol, [&](Rng& rng) { return shift_action(rng, spec, false, Rational(1)); });
}

}  // namespace covar
