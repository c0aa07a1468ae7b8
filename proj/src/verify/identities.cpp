#include "common.hpp"

#include "covar/fixtures.hpp"

namespace covar {

using detail::draw;

namespace {

Report symbolic_report(const std::string& check, const std::string& subject, std::uint64_t seed) {
    Report r;
    r.check = check;
    r.subject = subject;
    r.seed = seed;
    r.tolerance = 0;
    return r;
}

// Exact zero test recorded as a case; residual 1 marks a nonzero identity.
void record_zero(Report& r, const std::string& id, const Expr& e, std::uint64_t seed) {
    ++r.samples;
    try {
        const bool zero = sym::is_canonical_zero(e) || sym::equal_identically(e, Expr(), 32, seed);
        r.add(id, zero ? 0.0 : 1.0, zero ? "" : "not identically zero");
    } catch (const Inconclusive& ex) {
        r.add_inconclusive(id, ex.what());
    }
}

Expr el_of(const TheorySpec& spec, const FieldDecl& f, int slot) { return euler_lagrange_residual(spec, f, slot); }

}  // namespace

Report check_vacuous_el(const TheorySpec& tilde, const TheorySpec* original, std::uint64_t seed) {
    Report r = symbolic_report("vacuous-el", tilde.name, seed);
    const int d = tilde.base_dim;
    if (const FieldDecl* x = tilde.covariance_field(Geom::Diffeo)) {
        const JacobianBundle jb = jacobian_bundle(d, x->name);
        sym::Substitution spatial;
        if (original) spatial = spatial_substitution(*original, jb, 2);
        for (int a = 0; a < d; ++a) {
            std::vector<Expr> terms{el_of(tilde, *x, a)};
            const TheorySpec& source = original ? *original : tilde;
            for (const auto& f : source.fields) {
                if (f.kind != FieldKind::Variational) continue;
                if (f.geom != Geom::Scalar) throw UnsupportedIndex("vacuous-el check handles scalar fields only");
                for (int slot : f.slots()) {
                    std::vector<Expr> ya;
                    for (int mu = 0; mu < d; ++mu) ya.push_back(Expr(f.jet(slot, {mu})) * jb.inverse[mu][a]);
                    const Expr y_a = Expr::sum(std::move(ya));
                    if (original) {
                        terms.push_back(sym::substitute(el_of(*original, f, slot), spatial) * y_a * jb.det);
                    } else {
                        terms.push_back(el_of(tilde, f, slot) * y_a);
                    }
                }
            }
            record_zero(r, x->name + "[" + std::to_string(a) + "]", Expr::sum(std::move(terms)), seed);
        }
        return r;
    }
    if (const FieldDecl* conn = tilde.covariance_field(Geom::LieOneForm)) {
        const LieRep rep = detail::rep_for(tilde, *conn);
        const auto c = detail::structure_constants(rep);
        const int ngen = static_cast<int>(rep.generators.size());
        std::vector<std::vector<Expr>> el_a(static_cast<std::size_t>(ngen), std::vector<Expr>(static_cast<std::size_t>(d)));
        for (int k = 0; k < ngen; ++k) {
            for (int mu = 0; mu < d; ++mu) el_a[k][mu] = el_of(tilde, *conn, k * d + mu);
        }
        for (int k = 0; k < ngen; ++k) {
            std::vector<Expr> terms;
            for (const auto& f : tilde.fields) {
                if (f.kind != FieldKind::Variational || f.geom != Geom::Scalar || f.components != rep.dim) continue;
                for (int b = 0; b < rep.dim; ++b) {
                    std::vector<Expr> tphi;
                    for (int e = 0; e < rep.dim; ++e) {
                        const Rational& t = rep.generators[k][b][e];
                        if (sgn(t) != 0) tphi.push_back(Expr(t) * Expr(f.value(e)));
                    }
                    terms.push_back(el_of(tilde, f, b) * Expr::sum(std::move(tphi)));
                }
            }
            for (int j = 0; j < ngen; ++j) {
                for (int l = 0; l < ngen; ++l) {
                    if (sgn(c[k][l][j]) == 0) continue;
                    for (int mu = 0; mu < d; ++mu) {
                        terms.push_back(Expr(c[k][l][j]) * el_a[j][mu] * Expr(conn->value(l * d + mu)));
                    }
                }
            }
            for (int mu = 0; mu < d; ++mu) terms.push_back(tilde.D(el_a[k][mu], mu));
            record_zero(r, conn->name + "-generator-" + std::to_string(k), Expr::sum(std::move(terms)), seed);
        }
        return r;
    }
    bool any = false;
    for (const auto& [a, eta] : detail::shift_pairs(tilde)) {
        if (!eta) continue;
        any = true;
        std::vector<Expr> terms{el_of(tilde, *eta, 0)};
        for (int mu = 0; mu < d; ++mu) terms.push_back(tilde.D(el_of(tilde, *a, mu), mu));
        record_zero(r, eta->name, Expr::sum(std::move(terms)), seed);
    }
    if (!any) throw UnsupportedAction("theory " + tilde.name + " has no covariance field");
    return r;
}

Report check_reduction_kg(ReductionVariant variant) {
    const TheorySpec kg1 = fixtures::load("kg1");
    const TheorySpec kg2 = fixtures::load("kg2");
    const TheorySpec a = covariantize_horizontal(kg1);
    const TheorySpec b = covariantize_background(kg2);
    const FieldDecl& g = *kg2.find_field("g");
    const bool euclid = variant == ReductionVariant::Euclidean;
    sym::Substitution bar{{Coord::param(bar_param(kg2, g, metric_slot(0, 0, 2))), Expr(euclid ? 1 : 0)},
                          {Coord::param(bar_param(kg2, g, metric_slot(0, 1, 2))), Expr(euclid ? 0 : 1)},
                          {Coord::param(bar_param(kg2, g, metric_slot(1, 1, 2))), Expr(euclid ? 1 : 0)},
                          {Coord::param(bar_param(kg2, g, sym::kVolumeSlot)), Expr(1)}};
    sym::Substitution massless;
    if (variant == ReductionVariant::Massless) {
        bar[Coord::param("m")] = Expr();
        massless[Coord::param("m")] = Expr();
    }
    const char* label = variant == ReductionVariant::Lightcone ? "lightcone" : euclid ? "euclidean" : "massless";
    Report r = symbolic_report("reduction", std::string(b.name) + " vs " + a.name + " (" + label + ")", 0);
    record_zero(r, label, sym::substitute(b.lagrangian, bar) - sym::substitute(a.lagrangian, massless), 0);
    return r;
}

Report check_piola_identity(int dim) {
    if (dim < 1 || dim > 3) throw Error("Piola identity check supports dimensions 1 to 3");
    Report r = symbolic_report("piola", "dim " + std::to_string(dim), 0);
    const JacobianBundle jb = jacobian_bundle(dim);
    for (int c = 0; c < dim; ++c) {
        std::vector<Expr> terms;
        for (int mu = 0; mu < dim; ++mu) terms.push_back(sym::total_derivative(jb.cofactor[c][mu], mu, dim));
        record_zero(r, "column-" + std::to_string(c), Expr::sum(std::move(terms)), 0);
    }
    return r;
}

Report check_sem_divergence(const TheorySpec& spec) {
    Report r = symbolic_report("sem-divergence", spec.name, 0);
    for (int a = 0; a < spec.base_dim; ++a) {
        const std::string id = "a-" + std::to_string(a);
        try {
            record_zero(r, id, sem_divergence_defect(spec, a), 0);
        } catch (const OrderOverflow& e) {
            r.add_inconclusive(id, e.what());
        }
    }
    return r;
}

Report check_energy_identity(const TheorySpec& spec) {
    Report r = symbolic_report("energy", spec.name, 0);
    record_zero(r, "energy", energy_defect(spec), 0);
    return r;
}

Report check_flatness(int samples, std::uint64_t seed, double tol) {
    Report r;
    r.check = "flatness";
    r.subject = "eta^-1 d eta";
    r.tolerance = tol;
    r.seed = seed;
    r.samples = samples;
    const Expr t = Coord::base(0);
    const Expr x = Coord::base(1);
    for (int i = 0; i < samples; ++i) {
        detail::Rng rng(sym::derive_stream_seed(seed, static_cast<std::uint64_t>(i)));
        auto poly = [&] {
            std::vector<Expr> terms;
            for (int p = 0; p <= 2; ++p) {
                for (int q = 0; p + q <= 2; ++q) terms.push_back(Expr(draw(rng, 3, 3)) * sym::pow(t, p) * sym::pow(x, q));
            }
            return sym::canonicalize(Expr::sum(std::move(terms)));
        };
        const Expr f = poly();
        const auto ab = curvature(flat_connection_from({{sym::exp(f)}}, 2), 2);
        r.add("abelian-" + std::to_string(i), ab[0][1][0][0].is_zero() ? 0.0 : 1.0);

        const Expr theta = poly();
        const Matrix rot{{sym::cos(theta), -sym::sin(theta)}, {sym::sin(theta), sym::cos(theta)}};
        const auto fr = curvature(flat_connection_from(rot, 2), 2);
        double worst = 0;
        for (int p = 0; p < 3; ++p) {
            const std::vector<double> pt{draw(rng, 8, 4).get_d(), draw(rng, 8, 4).get_d()};
            for (const auto& row : eval_matrix(fr[0][1], pt)) {
                for (double v : row) worst = std::max(worst, std::abs(v));
            }
        }
        r.add("rotation-" + std::to_string(i), worst);
    }
    return r;
}

}  // namespace covar
