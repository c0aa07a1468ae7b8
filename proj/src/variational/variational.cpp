#include "covar/variational.hpp"

namespace covar {

using sym::canonicalize;

Expr euler_lagrange_residual(const TheorySpec& spec, const FieldDecl& field, int slot) {
    const Coord value = field.value(slot);
    std::vector<Expr> terms{sym::partial(spec.lagrangian, value)};
    for (const auto& c : sym::coords_of(spec.lagrangian)) {
        if (!c.is_field_coord() || c.order() == 0 || !(c.value_coord() == value)) continue;
        if (c.order() > 2) throw OrderOverflow("Euler-Lagrange operator supports jets up to order 2");
        Expr p = sym::partial(spec.lagrangian, c);
        const auto& mi = c.multi_index();
        for (int i = mi.size() - 1; i >= 0; --i) p = spec.D(p, mi[i]);
        terms.push_back(c.order() == 1 ? -p : p);
    }
    return canonicalize(Expr::sum(std::move(terms)));
}

ELSystem euler_lagrange(const TheorySpec& spec, const FieldDecl& field) {
    if (field.kind == FieldKind::Background) throw Error("background field " + field.name + " has no field equation");
    ELSystem sys;
    for (int slot : field.slots()) {
        Expr r = euler_lagrange_residual(spec, field, slot);
        sys.order = std::max(sys.order, sym::max_order(r, [](const Coord& c) { return c.is_field_coord(); }));
        sys.residuals[{field.name, slot}] = std::move(r);
    }
    return sys;
}

ELSystem euler_lagrange(const TheorySpec& spec) {
    ELSystem sys;
    for (const auto& f : spec.fields) {
        if (f.kind == FieldKind::Background) continue;
        ELSystem one = euler_lagrange(spec, f);
        sys.order = std::max(sys.order, one.order);
        sys.residuals.insert(one.residuals.begin(), one.residuals.end());
    }
    return sys;
}

SEMTensor sem_tensor(const TheorySpec& spec) {
    if (lagrangian_order(spec) > 1) throw OrderOverflow("SEM tensor is defined for first-order Lagrangians only");
    const int d = spec.base_dim;
    SEMTensor s;
    s.dim = d;
    s.t.assign(static_cast<std::size_t>(d), std::vector<Expr>(static_cast<std::size_t>(d)));
    for (int c = 0; c < d; ++c) {
        for (int a = 0; a < d; ++a) {
            std::vector<Expr> terms;
            if (a == c) terms.push_back(spec.lagrangian);
            for (const auto& f : spec.fields) {
                if (f.kind == FieldKind::Background) continue;
                for (int slot : f.slots()) {
                    Expr p = sym::partial(spec.lagrangian, f.jet(slot, {c}));
                    if (!p.is_zero()) terms.push_back(-(p * Expr(f.jet(slot, {a}))));
                }
            }
            s.t[c][a] = canonicalize(Expr::sum(std::move(terms)));
        }
    }
    return s;
}

SEMTensor piola_transform(const SEMTensor& sem, const JacobianBundle& jac) {
    if (sem.variant != SEMTensor::Variant::Canonical) throw Error("piola_transform expects a canonical SEM tensor");
    if (sem.dim != jac.dim) throw Error("dimension mismatch between SEM tensor and Jacobian");
    SEMTensor p;
    p.variant = SEMTensor::Variant::PiolaKirchhoff;
    p.dim = sem.dim;
    p.t.assign(static_cast<std::size_t>(p.dim), std::vector<Expr>(static_cast<std::size_t>(p.dim)));
    for (int mu = 0; mu < p.dim; ++mu) {
        for (int a = 0; a < p.dim; ++a) {
            std::vector<Expr> terms;
            for (int c = 0; c < p.dim; ++c) terms.push_back(sem.t[c][a] * jac.inverse[mu][c]);
            p.t[mu][a] = canonicalize(Expr::sum(std::move(terms)) * jac.det);
        }
    }
    return p;
}

Expr energy(const TheorySpec& spec) { return canonicalize(-sem_tensor(spec).t[0][0]); }

Expr sem_divergence_defect(const TheorySpec& spec, int a) {
    const SEMTensor s = sem_tensor(spec);
    std::vector<Expr> terms{sym::partial(spec.lagrangian, Coord::base(a))};
    for (int b = 0; b < spec.base_dim; ++b) terms.push_back(-spec.D(s.t[b][a], b));
    for (const auto& f : spec.fields) {
        for (int slot : f.slots()) {
            Expr el = f.kind == FieldKind::Background ? sym::partial(spec.lagrangian, f.value(slot))
                                                      : euler_lagrange_residual(spec, f, slot);
            if (!el.is_zero()) terms.push_back(el * Expr(f.jet(slot, {a})));
        }
    }
    return canonicalize(Expr::sum(std::move(terms)));
}

Expr energy_defect(const TheorySpec& spec) {
    if (spec.base_dim != 1) throw Error("energy identity needs a one-dimensional base");
    std::vector<Expr> terms{spec.D(energy(spec), 0), sym::partial(spec.lagrangian, Coord::base(0))};
    for (const auto& f : spec.fields) {
        if (f.kind == FieldKind::Background) continue;
        for (int slot : f.slots()) terms.push_back(Expr(f.jet(slot, {0})) * euler_lagrange_residual(spec, f, slot));
    }
    return canonicalize(Expr::sum(std::move(terms)));
}

}  // namespace covar
