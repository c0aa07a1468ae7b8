#include "covar/covariantize.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace covar {

using sym::canonicalize;
using sym::CoordKind;

// ---------------------------------------------------------------------------
// Jacobians

Expr determinant(const Matrix& m) {
    const std::size_t n = m.size();
    if (n == 0) return Expr(1);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<Expr> terms;
    do {
        int inversions = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) inversions += perm[i] > perm[j] ? 1 : 0;
        }
        std::vector<Expr> factors;
        factors.emplace_back(inversions % 2 == 0 ? 1 : -1);
        for (std::size_t i = 0; i < n; ++i) factors.push_back(m[i][perm[i]]);
        terms.push_back(Expr::product(std::move(factors)));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return canonicalize(Expr::sum(std::move(terms)));
}

namespace {

Matrix minor_of(const Matrix& m, std::size_t row, std::size_t col) {
    Matrix out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i == row) continue;
        std::vector<Expr> r;
        for (std::size_t j = 0; j < m.size(); ++j) {
            if (j != col) r.push_back(m[i][j]);
        }
        out.push_back(std::move(r));
    }
    return out;
}

Matrix cofactors(const Matrix& m) {
    const std::size_t n = m.size();
    Matrix c(n, std::vector<Expr>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            Expr d = determinant(minor_of(m, i, j));
            c[i][j] = (i + j) % 2 == 0 ? d : canonicalize(-d);
        }
    }
    return c;
}

std::string fresh_name(const TheorySpec& spec, const std::string& wanted) {
    auto taken = [&](const std::string& n) {
        if (spec.find_field(n)) return true;
        if (std::find(spec.params.begin(), spec.params.end(), n) != spec.params.end()) return true;
        if (std::find(spec.coords.begin(), spec.coords.end(), n) != spec.coords.end()) return true;
        for (const auto& c : spec.coords) {
            const std::string alias = n + c;
            if (spec.find_field(alias) ||
                std::find(spec.params.begin(), spec.params.end(), alias) != spec.params.end()) {
                return true;
            }
        }
        return false;
    };
    if (!taken(wanted)) return wanted;
    for (int i = 1;; ++i) {
        const std::string n = wanted + std::to_string(i);
        if (!taken(n)) return n;
    }
}

FieldDecl diffeo_field(const std::string& name, int dim) {
    FieldDecl f;
    f.name = name;
    f.components = dim;
    f.kind = FieldKind::Covariance;
    f.geom = Geom::Diffeo;
    f.diff_index = 0;
    return f;
}

void finish(TheorySpec& out) {
    out.lagrangian = canonicalize(out.lagrangian);
    out.order = std::max(1, lagrangian_order(out));
}

}  // namespace

JacobianBundle jacobian_bundle(int dim, const std::string& field) {
    JacobianBundle jb;
    jb.dim = dim;
    jb.field = field;
    jb.J.assign(static_cast<std::size_t>(dim), std::vector<Expr>(static_cast<std::size_t>(dim)));
    for (int a = 0; a < dim; ++a) {
        for (int mu = 0; mu < dim; ++mu) jb.J[a][mu] = Expr(Coord::cov_jet(field, a, {mu}));
    }
    jb.det = determinant(jb.J);
    jb.cofactor = cofactors(jb.J);
    const Expr inv_det = canonicalize(sym::pow(jb.det, -1));
    jb.inverse.assign(static_cast<std::size_t>(dim), std::vector<Expr>(static_cast<std::size_t>(dim)));
    for (int mu = 0; mu < dim; ++mu) {
        for (int a = 0; a < dim; ++a) jb.inverse[mu][a] = canonicalize(jb.cofactor[a][mu] * inv_det);
    }
    return jb;
}

sym::Substitution chain_rule_jet(const TheorySpec& spec, const FieldDecl& field, const JacobianBundle& jac, int order) {
    const int d = spec.base_dim;
    if (field.diff_index > 1) throw UnsupportedIndex("field " + field.name + " has differential index above 1");
    sym::Substitution out;
    auto push = [&](const Expr& e, int b) {
        std::vector<Expr> terms;
        for (int nu = 0; nu < d; ++nu) terms.push_back(jac.inverse[nu][b] * spec.D(e, nu));
        return canonicalize(Expr::sum(std::move(terms)));
    };
    if (field.geom == Geom::Scalar) {
        if (order < 1 || order > 2) throw OrderOverflow("scalar chain rule supports orders 1 and 2");
        for (int slot : field.slots()) {
            std::vector<Expr> first(static_cast<std::size_t>(d));
            for (int a = 0; a < d; ++a) {
                std::vector<Expr> terms;
                for (int mu = 0; mu < d; ++mu) terms.push_back(Expr(field.jet(slot, {mu})) * jac.inverse[mu][a]);
                first[a] = canonicalize(Expr::sum(std::move(terms)));
                out[field.jet(slot, {a})] = first[a];
            }
            if (order < 2) continue;
            for (int a = 0; a < d; ++a) {
                for (int b = a; b < d; ++b) out[field.jet(slot, {a, b})] = push(first[b], a);
            }
        }
        return out;
    }
    if (field.geom == Geom::Covector) {
        if (order != 1) throw OrderOverflow("covector chain rule supports order 1");
        std::vector<Expr> values(static_cast<std::size_t>(d));
        for (int a = 0; a < d; ++a) {
            std::vector<Expr> terms;
            for (int mu = 0; mu < d; ++mu) terms.push_back(Expr(field.value(mu)) * jac.inverse[mu][a]);
            values[a] = canonicalize(Expr::sum(std::move(terms)));
        }
        for (int a = 0; a < d; ++a) {
            out[field.value(a)] = values[a];
            for (int b = 0; b < d; ++b) out[field.jet(a, {b})] = push(values[a], b);
        }
        return out;
    }
    throw UnsupportedIndex("no chain rule for " + to_string(field.geom) + " field " + field.name);
}

sym::Substitution spatial_substitution(const TheorySpec& spec, const JacobianBundle& jac, int order) {
    sym::Substitution out;
    for (int a = 0; a < spec.base_dim; ++a) out[Coord::base(a)] = Expr(Coord::cov_base(jac.field, a));
    for (const auto& f : spec.fields) {
        if (f.kind != FieldKind::Variational) continue;
        auto m = chain_rule_jet(spec, f, jac, order);
        out.insert(m.begin(), m.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Horizontal and background covariantization

TheorySpec covariantize_horizontal(const TheorySpec& spec) {
    for (const auto& f : spec.fields) {
        if (f.kind == FieldKind::Background) {
            throw AnsatzViolation("background field " + f.name + " present; use background covariantization");
        }
        if (f.kind == FieldKind::Covariance) throw UnsupportedAction("theory already has covariance field " + f.name);
        if (f.geom != Geom::Scalar) {
            throw UnsupportedIndex("horizontal covariantization needs scalar fields; " + f.name + " is " + to_string(f.geom));
        }
    }
    if (lagrangian_order(spec) > 1) throw OrderOverflow("horizontal covariantization supports first-order Lagrangians");
    TheorySpec out = spec;
    const std::string x = fresh_name(spec, "X");
    const JacobianBundle jac = jacobian_bundle(spec.base_dim, x);
    out.name = spec.name + "-horizontal";
    out.fields.push_back(diffeo_field(x, spec.base_dim));
    out.lagrangian = sym::substitute(spec.lagrangian, spatial_substitution(spec, jac)) * jac.det;
    finish(out);
    return out;
}

std::string bar_param(const TheorySpec& original, const FieldDecl& field, int slot) {
    const std::string stem = field.name + "bar";
    if (slot == sym::kVolumeSlot) return stem + "_vol";
    switch (field.geom) {
        case Geom::MetricInverse: {
            const int d = original.base_dim;
            for (int mu = 0; mu < d; ++mu) {
                for (int nu = mu; nu < d; ++nu) {
                    if (metric_slot(mu, nu, d) == slot) return stem + "_" + std::to_string(mu) + std::to_string(nu);
                }
            }
            break;
        }
        case Geom::Scalar:
            if (field.components == 1) return stem;
            break;
        default: break;
    }
    return stem + "_" + std::to_string(slot);
}

TheorySpec covariantize_background(const TheorySpec& spec) {
    if (!spec.has_kind(FieldKind::Background)) throw AnsatzViolation("theory has no background fields");
    for (const auto& c : sym::coords_of(spec.lagrangian)) {
        const FieldDecl* f = c.is_field_coord() ? spec.find_field(c.name()) : nullptr;
        if (f && f->kind == FieldKind::Background && c.order() > 0) {
            throw AnsatzViolation("background field " + f->name + " appears differentiated (A1)");
        }
    }
    const int d = spec.base_dim;
    TheorySpec out = spec;
    out.name = spec.name + "-background";
    out.fields.clear();
    const std::string x = fresh_name(spec, "X");
    const JacobianBundle jac = jacobian_bundle(d, x);
    sym::Substitution sub;
    for (const auto& f : spec.fields) {
        if (f.kind == FieldKind::Covariance) throw UnsupportedAction("theory already has covariance field " + f.name);
        if (f.kind != FieldKind::Background) {
            out.fields.push_back(f);
            continue;
        }
        if (f.diff_index > 1) throw AnsatzViolation("background field " + f.name + " has differential index above 1 (A2)");
        auto param = [&](int slot) {
            const std::string p = bar_param(spec, f, slot);
            if (std::find(out.params.begin(), out.params.end(), p) == out.params.end()) out.params.push_back(p);
            return Expr(Coord::param(p));
        };
        switch (f.geom) {
            case Geom::MetricInverse:
                for (int mu = 0; mu < d; ++mu) {
                    for (int nu = mu; nu < d; ++nu) {
                        std::vector<Expr> terms;
                        for (int a = 0; a < d; ++a) {
                            for (int b = 0; b < d; ++b) {
                                terms.push_back(jac.inverse[mu][a] * jac.inverse[nu][b] * param(metric_slot(a, b, d)));
                            }
                        }
                        sub[f.value(metric_slot(mu, nu, d))] = canonicalize(Expr::sum(std::move(terms)));
                    }
                }
                sub[f.value(sym::kVolumeSlot)] = param(sym::kVolumeSlot) * jac.det;
                break;
            case Geom::Covector:
                for (int mu = 0; mu < d; ++mu) {
                    std::vector<Expr> terms;
                    for (int a = 0; a < d; ++a) terms.push_back(jac.J[a][mu] * param(a));
                    sub[f.value(mu)] = Expr::sum(std::move(terms));
                }
                break;
            case Geom::Scalar:
                for (int slot : f.slots()) sub[f.value(slot)] = param(slot);
                break;
            default:
                throw AnsatzViolation("unsupported background geometry " + to_string(f.geom));
        }
    }
    out.fields.push_back(diffeo_field(x, d));
    out.lagrangian = sym::substitute(spec.lagrangian, sub);
    finish(out);
    return out;
}

// ---------------------------------------------------------------------------
// Vertical covariantization

LieRep lie_rep(const std::string& name) {
    LieRep r;
    r.name = name;
    if (name == "so2") {
        r.dim = 2;
        r.generators.push_back({{0, -1}, {1, 0}});
        return r;
    }
    if (name == "so3") {
        r.dim = 3;
        r.generators.push_back({{0, 0, 0}, {0, 0, -1}, {0, 1, 0}});
        r.generators.push_back({{0, 0, 1}, {0, 0, 0}, {-1, 0, 0}});
        r.generators.push_back({{0, -1, 0}, {1, 0, 0}, {0, 0, 0}});
        return r;
    }
    throw UnsupportedAction("unknown representation '" + name + "'");
}

TheorySpec covariantize_vertical(const TheorySpec& spec, const VerticalAction& action) {
    const int d = spec.base_dim;
    TheorySpec out = spec;
    sym::Substitution sub;
    if (action.kind == VerticalAction::Kind::AdditiveShift) {
        out.name = spec.name + "-shift";
        bool any = false;
        for (const auto& f : spec.fields) {
            if (f.kind != FieldKind::Variational || f.geom != Geom::Covector) continue;
            const std::string eta = fresh_name(out, any ? "eta_" + f.name : "eta");
            FieldDecl e;
            e.name = eta;
            e.components = 1;
            e.kind = FieldKind::Covariance;
            e.geom = Geom::Scalar;
            out.fields.push_back(e);
            for (int mu = 0; mu < d; ++mu) sub[f.value(mu)] = Expr(f.value(mu)) + Expr(Coord::jet(eta, 0, {mu}));
            any = true;
        }
        if (!any) throw UnsupportedAction("additive shift needs a variational covector field");
    } else {
        const LieRep& rep = action.rep;
        if (rep.dim < 1 || rep.generators.empty()) throw UnsupportedAction("empty representation");
        if (lagrangian_order(spec) > 1) throw OrderOverflow("minimal coupling supports first-order Lagrangians");
        out.name = spec.name + "-minimal";
        const std::string a = fresh_name(spec, "A");
        const int ngen = static_cast<int>(rep.generators.size());
        bool any = false;
        for (const auto& f : spec.fields) {
            if (f.kind != FieldKind::Variational || f.geom != Geom::Scalar || f.components != rep.dim) continue;
            any = true;
            for (int b = 0; b < rep.dim; ++b) {
                for (int mu = 0; mu < d; ++mu) {
                    std::vector<Expr> terms{Expr(f.jet(b, {mu}))};
                    for (int k = 0; k < ngen; ++k) {
                        for (int c = 0; c < rep.dim; ++c) {
                            const Rational& t = rep.generators[k][b][c];
                            if (sgn(t) == 0) continue;
                            terms.push_back(Expr(t) * Expr(Coord::fiber(a, k * d + mu)) * Expr(f.value(c)));
                        }
                    }
                    sub[f.jet(b, {mu})] = Expr::sum(std::move(terms));
                }
            }
        }
        if (!any) {
            throw UnsupportedAction("minimal coupling needs a variational multiplet of dimension " + std::to_string(rep.dim));
        }
        FieldDecl conn;
        conn.name = a;
        conn.components = ngen * d;
        conn.kind = FieldKind::Covariance;
        conn.geom = Geom::LieOneForm;
        conn.diff_index = 1;
        out.fields.push_back(conn);
    }
    out.lagrangian = sym::substitute(spec.lagrangian, sub);
    finish(out);
    return out;
}

sym::Substitution trivial_covariance(const TheorySpec& original, const TheorySpec& tilde) {
    sym::Substitution sub;
    for (const auto& f : tilde.fields) {
        if (f.kind != FieldKind::Covariance || original.find_field(f.name)) continue;
        for (const auto& c : jet_coords(tilde, sym::kMaxJetOrder)) {
            if (!c.is_field_coord() || c.name() != f.name) continue;
            if (f.geom == Geom::Diffeo && c.order() == 0) {
                sub[c] = Expr(Coord::base(c.index()));
            } else if (f.geom == Geom::Diffeo && c.order() == 1) {
                sub[c] = Expr(c.index() == c.multi_index()[0] ? 1 : 0);
            } else {
                sub[c] = Expr();
            }
        }
    }
    for (const auto& f : original.fields) {
        if (f.kind != FieldKind::Background) continue;
        for (int slot : f.slots()) sub[Coord::param(bar_param(original, f, slot))] = Expr(f.value(slot));
    }
    return sub;
}

Matrix matrix_inverse(const Matrix& m) {
    const std::size_t n = m.size();
    const Expr det = determinant(m);
    if (det.is_zero()) throw SingularEta("matrix is singular everywhere");
    const Matrix cof = cofactors(m);
    const Expr inv_det = canonicalize(sym::pow(det, -1));
    Matrix inv(n, std::vector<Expr>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) inv[i][j] = canonicalize(cof[j][i] * inv_det);
    }
    return inv;
}

Mode parse_mode(const std::string& name) {
    if (name == "horizontal") return Mode::Horizontal;
    if (name == "background") return Mode::Background;
    if (name == "vertical") return Mode::Vertical;
    throw Error("unknown mode " + name);
}

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::Horizontal: return "horizontal";
        case Mode::Background: return "background";
        case Mode::Vertical: return "vertical";
    }
    return "";
}

Mode default_mode(const TheorySpec& spec) {
    if (spec.has_kind(FieldKind::Background)) return Mode::Background;
    for (const auto& f : spec.fields) {
        if (f.kind == FieldKind::Variational && f.geom == Geom::Covector) return Mode::Vertical;
    }
    return Mode::Horizontal;
}

VerticalAction vertical_action(const TheorySpec& spec, const std::string& kind, const std::string& rep) {
    VerticalAction act;
    if (kind == "shift") return act;
    if (kind != "minimal") throw UnsupportedAction("unknown vertical action " + kind);
    act.kind = VerticalAction::Kind::MinimalCoupling;
    if (!rep.empty()) {
        act.rep = lie_rep(rep);
        return act;
    }
    for (const auto& f : spec.fields) {
        if (f.kind != FieldKind::Variational || f.geom != Geom::Scalar) continue;
        if (f.components == 2) {
            act.rep = lie_rep("so2");
            return act;
        }
        if (f.components == 3) {
            act.rep = lie_rep("so3");
            return act;
        }
    }
    throw UnsupportedAction("minimal coupling needs a doublet or triplet");
}

TheorySpec covariantize(const TheorySpec& spec, Mode mode, const VerticalAction& action) {
    switch (mode) {
        case Mode::Horizontal: return covariantize_horizontal(spec);
        case Mode::Background: return covariantize_background(spec);
        case Mode::Vertical: return covariantize_vertical(spec, action);
    }
    throw Error("unknown mode");
}

// ---------------------------------------------------------------------------
// Flat connections

std::vector<Matrix> flat_connection_from(const Matrix& eta, int base_dim) {
    const std::size_t n = eta.size();
    for (const auto& row : eta) {
        if (row.size() != n) throw Error("eta must be square");
    }
    const Matrix inv = matrix_inverse(eta);
    std::vector<Matrix> a;
    for (int mu = 0; mu < base_dim; ++mu) {
        Matrix am(n, std::vector<Expr>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                std::vector<Expr> terms;
                for (std::size_t k = 0; k < n; ++k) terms.push_back(inv[i][k] * sym::partial(eta[k][j], Coord::base(mu)));
                am[i][j] = canonicalize(Expr::sum(std::move(terms)));
            }
        }
        a.push_back(std::move(am));
    }
    return a;
}

std::vector<std::vector<Matrix>> curvature(const std::vector<Matrix>& a, int base_dim) {
    const std::size_t n = a.empty() ? 0 : a.front().size();
    std::vector<std::vector<Matrix>> f(static_cast<std::size_t>(base_dim), std::vector<Matrix>(static_cast<std::size_t>(base_dim)));
    for (int mu = 0; mu < base_dim; ++mu) {
        for (int nu = 0; nu < base_dim; ++nu) {
            Matrix m(n, std::vector<Expr>(n));
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    std::vector<Expr> terms{sym::partial(a[nu][i][j], Coord::base(mu)),
                                            -sym::partial(a[mu][i][j], Coord::base(nu))};
                    for (std::size_t k = 0; k < n; ++k) {
                        terms.push_back(a[mu][i][k] * a[nu][k][j]);
                        terms.push_back(-(a[nu][i][k] * a[mu][k][j]));
                    }
                    m[i][j] = canonicalize(Expr::sum(std::move(terms)));
                }
            }
            f[mu][nu] = std::move(m);
        }
    }
    return f;
}

std::vector<std::vector<double>> eval_matrix(const Matrix& m, const std::vector<double>& base_point) {
    sym::CoordMap<double> p;
    for (std::size_t mu = 0; mu < base_point.size(); ++mu) p[Coord::base(static_cast<int>(mu))] = base_point[mu];
    std::vector<std::vector<double>> out;
    try {
        for (const auto& row : m) {
            std::vector<double> r;
            for (const auto& e : row) r.push_back(sym::eval_double(e, p));
            out.push_back(std::move(r));
        }
    } catch (const PoleHit&) {
        throw SingularEta("eta is singular at the evaluation point");
    }
    return out;
}

}  // namespace covar
