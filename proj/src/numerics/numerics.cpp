#include "covar/numerics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

namespace covar {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const FieldDecl& field_of(const TheorySpec& spec, const std::string& name) {
    const FieldDecl* f = spec.find_field(name);
    if (!f) throw Error("unknown field " + name);
    return *f;
}

double param_value(const NumericOptions& options, const std::string& name) {
    auto it = options.params.find(name);
    return it == options.params.end() ? 1.0 : it->second;
}

std::string slot_label(const FieldSlot& s) { return s.first + "[" + std::to_string(s.second) + "]"; }

FieldSlot parse_slot_label(const std::string& label) {
    const auto open = label.find('[');
    if (open == std::string::npos || label.back() != ']') throw Error("bad section column " + label);
    return {label.substr(0, open), std::stoi(label.substr(open + 1, label.size() - open - 2))};
}

// Sampler reading the grid node nearest to a point.
SectionFn grid_sampler(const DiscreteSection& s, const std::vector<int>& slot_ids) {
    return [&s, slot_ids](const std::vector<double>& x) {
        std::vector<int> idx(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            idx[k] = static_cast<int>(std::lround((x[k] - s.grid.origin[k]) / s.grid.spacing[k]));
            if (idx[k] < 0 || idx[k] >= s.grid.extents[k]) throw Error("stencil leaves the section grid");
        }
        const std::size_t f = s.grid.flat(idx);
        std::vector<double> out;
        out.reserve(slot_ids.size());
        for (int id : slot_ids) out.push_back(s.values[static_cast<std::size_t>(id)][f]);
        return out;
    };
}

bool interior(const Grid& g, const std::vector<int>& idx) {
    for (int k = 0; k < g.dim(); ++k) {
        if (idx[static_cast<std::size_t>(k)] < 1 || idx[static_cast<std::size_t>(k)] > g.extents[static_cast<std::size_t>(k)] - 2) {
            return false;
        }
    }
    return true;
}

struct ResidualField {
    std::vector<FieldSlot> slots;
    std::vector<int> ids;
    std::vector<Expr> residuals;
    int order = 0;
};

ResidualField residual_field(const TheorySpec& spec, const DiscreteSection& section) {
    ResidualField r;
    for (std::size_t i = 0; i < section.slots.size(); ++i) {
        r.slots.push_back(section.slots[i]);
        r.ids.push_back(static_cast<int>(i));
        const FieldDecl& f = field_of(spec, section.slots[i].first);
        if (f.kind == FieldKind::Background) continue;
        Expr e = euler_lagrange_residual(spec, f, section.slots[i].second);
        r.order = std::max(r.order, sym::max_order(e, [](const Coord& c) { return c.is_field_coord(); }));
        r.residuals.push_back(std::move(e));
    }
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t Grid::size() const {
    std::size_t n = 1;
    for (int e : extents) n *= static_cast<std::size_t>(e);
    return n;
}

std::size_t Grid::flat(const std::vector<int>& index) const {
    std::size_t f = 0;
    for (std::size_t k = 0; k < extents.size(); ++k) f = f * static_cast<std::size_t>(extents[k]) + static_cast<std::size_t>(index[k]);
    return f;
}

std::vector<int> Grid::unflat(std::size_t f) const {
    std::vector<int> idx(extents.size());
    for (std::size_t k = extents.size(); k-- > 0;) {
        idx[k] = static_cast<int>(f % static_cast<std::size_t>(extents[k]));
        f /= static_cast<std::size_t>(extents[k]);
    }
    return idx;
}

std::vector<double> Grid::point(const std::vector<int>& index) const {
    std::vector<double> p(extents.size());
    for (std::size_t k = 0; k < extents.size(); ++k) p[k] = origin[k] + index[k] * spacing[k];
    return p;
}

int DiscreteSection::slot_index(const FieldSlot& slot) const {
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i] == slot) return static_cast<int>(i);
    }
    return -1;
}

void DiscreteSection::check() const {
    const auto d = static_cast<std::size_t>(grid.dim());
    if (grid.origin.size() != d || grid.spacing.size() != d) throw Error("grid arrays disagree in dimension");
    for (std::size_t k = 0; k < d; ++k) {
        if (!(grid.spacing[k] > 0)) throw Error("grid spacing must be positive");
        if (grid.extents[k] < 1) throw Error("grid extents must be positive");
    }
    if (values.size() != slots.size()) throw Error("one value array per slot expected");
    for (const auto& v : values) {
        if (v.size() != grid.size()) throw Error("value array does not match the grid");
    }
    if (fixed.size() != grid.size()) throw Error("boundary record does not match the grid");
}

// ---------------------------------------------------------------------------

std::string write_section(const DiscreteSection& s) {
    s.check();
    std::string out = "# section " + std::to_string(s.grid.dim()) + "\n# coords";
    std::vector<std::string> names = s.grid.coords;
    for (int k = static_cast<int>(names.size()); k < s.grid.dim(); ++k) names.push_back("x" + std::to_string(k));
    for (const auto& n : names) out += " " + n;
    out += "\n# origin";
    for (double v : s.grid.origin) out += " " + fmt(v);
    out += "\n# spacing";
    for (double v : s.grid.spacing) out += " " + fmt(v);
    out += "\n# extents";
    for (int e : s.grid.extents) out += " " + std::to_string(e);
    out += "\n# columns";
    for (const auto& n : names) out += " " + n;
    for (const auto& sl : s.slots) out += " " + slot_label(sl);
    out += " fixed\n";
    for (std::size_t f = 0; f < s.grid.size(); ++f) {
        const auto p = s.grid.point(s.grid.unflat(f));
        std::string line;
        for (double v : p) line += fmt(v) + " ";
        for (const auto& v : s.values) line += fmt(v[f]) + " ";
        line += s.fixed[f] ? "1" : "0";
        out += line + "\n";
    }
    return out;
}

DiscreteSection read_section(std::string_view text) {
    DiscreteSection s;
    std::istringstream in{std::string(text)};
    std::string line;
    int dim = -1;
    std::vector<std::string> columns;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '#') {
            std::string hash, key;
            ls >> hash >> key;
            if (key == "section") {
                ls >> dim;
            } else if (key == "coords") {
                for (std::string w; ls >> w;) s.grid.coords.push_back(w);
            } else if (key == "origin") {
                for (double v; ls >> v;) s.grid.origin.push_back(v);
            } else if (key == "spacing") {
                for (double v; ls >> v;) s.grid.spacing.push_back(v);
            } else if (key == "extents") {
                for (int v; ls >> v;) s.grid.extents.push_back(v);
            } else if (key == "columns") {
                for (std::string w; ls >> w;) columns.push_back(w);
                if (dim < 0 || columns.size() < static_cast<std::size_t>(dim) + 1 || columns.back() != "fixed") {
                    throw Error("malformed section header");
                }
                for (std::size_t c = static_cast<std::size_t>(dim); c + 1 < columns.size(); ++c) {
                    s.slots.push_back(parse_slot_label(columns[c]));
                }
                s.values.assign(s.slots.size(), std::vector<double>(s.grid.size()));
                s.fixed.assign(s.grid.size(), false);
            }
            continue;
        }
        if (columns.empty()) throw Error("section data before header");
        if (row >= s.grid.size()) throw Error("too many section rows");
        std::vector<double> cells;
        for (double v; ls >> v;) cells.push_back(v);
        if (cells.size() != columns.size()) throw Error("section row " + std::to_string(row + 1) + " has wrong width");
        const auto p = s.grid.point(s.grid.unflat(row));
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (std::abs(p[k] - cells[k]) > 1e-9 * (1 + std::abs(p[k]))) throw Error("section row off the grid");
        }
        for (std::size_t i = 0; i < s.slots.size(); ++i) s.values[i][row] = cells[static_cast<std::size_t>(dim) + i];
        s.fixed[row] = cells.back() != 0;
        ++row;
    }
    if (dim < 0 || columns.empty()) throw Error("missing section header");
    if (row != s.grid.size()) throw Error("section has " + std::to_string(row) + " rows, grid needs " + std::to_string(s.grid.size()));
    s.check();
    return s;
}

// ---------------------------------------------------------------------------

SectionFn interpolate(const DiscreteSection& section, const std::vector<FieldSlot>& slots) {
    std::vector<int> ids;
    for (const auto& sl : slots) {
        const int id = section.slot_index(sl);
        if (id < 0) throw Error("section lacks " + slot_label(sl));
        ids.push_back(id);
    }
    for (int e : section.grid.extents) {
        if (e < 4) throw Error("cubic interpolation needs four points per axis");
    }
    return [&section, ids](const std::vector<double>& x) {
        const Grid& g = section.grid;
        const int d = g.dim();
        std::vector<int> base(static_cast<std::size_t>(d));
        std::vector<std::array<double, 4>> w(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const double u = (x[kk] - g.origin[kk]) / g.spacing[kk];
            if (u < -1e-9 || u > g.extents[kk] - 1 + 1e-9) throw Error("point outside the section grid");
            const int i0 = std::clamp(static_cast<int>(std::floor(u)) - 1, 0, g.extents[kk] - 4);
            base[kk] = i0;
            for (int m = 0; m < 4; ++m) {
                double l = 1;
                for (int n = 0; n < 4; ++n) {
                    if (n != m) l *= (u - (i0 + n)) / static_cast<double>(m - n);
                }
                w[kk][static_cast<std::size_t>(m)] = l;
            }
        }
        std::vector<double> out(ids.size(), 0.0);
        int combos = 1;
        for (int k = 0; k < d; ++k) combos *= 4;
        std::vector<int> idx(static_cast<std::size_t>(d));
        for (int c = 0; c < combos; ++c) {
            double weight = 1;
            int rest = c;
            for (int k = d - 1; k >= 0; --k) {
                const int m = rest % 4;
                rest /= 4;
                idx[static_cast<std::size_t>(k)] = base[static_cast<std::size_t>(k)] + m;
                weight *= w[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)];
            }
            const std::size_t f = g.flat(idx);
            for (std::size_t i = 0; i < ids.size(); ++i) out[i] += weight * section.values[static_cast<std::size_t>(ids[i])][f];
        }
        return out;
    };
}

// ---------------------------------------------------------------------------

PointMap PointMap::identity(int dim) {
    PointMap m;
    m.dim = dim;
    m.forward = [](const std::vector<double>& x) { return x; };
    m.inverse = m.forward;
    return m;
}

PointMap PointMap::affine(const std::vector<std::vector<double>>& a, const std::vector<double>& b) {
    const int d = static_cast<int>(b.size());
    Eigen::MatrixXd A(d, d);
    Eigen::VectorXd B(d);
    for (int i = 0; i < d; ++i) {
        B(i) = b[static_cast<std::size_t>(i)];
        for (int j = 0; j < d; ++j) A(i, j) = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    if (std::abs(A.determinant()) < 1e-14) throw Error("affine map is singular");
    const Eigen::MatrixXd Ainv = A.inverse();
    PointMap m;
    m.dim = d;
    m.forward = [A, B](const std::vector<double>& x) {
        Eigen::VectorXd v = A * Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) + B;
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    m.inverse = [Ainv, B](const std::vector<double>& y) {
        Eigen::VectorXd v = Ainv * (Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())) - B);
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    return m;
}

PointMap PointMap::cubic(double c) {
    if (c < 0) throw Error("cubic map needs c >= 0");
    if (c == 0) return identity(1);
    PointMap m;
    m.dim = 1;
    m.forward = [c](const std::vector<double>& x) { return std::vector<double>{x[0] + c * x[0] * x[0] * x[0]}; };
    m.inverse = [c](const std::vector<double>& y) {
        const double p = y[0] / (2 * c);
        const double q = 1 / (3 * c);
        const double s = std::sqrt(p * p + q * q * q);
        return std::vector<double>{std::cbrt(p + s) + std::cbrt(p - s)};
    };
    return m;
}

PointMap PointMap::quadratic_shear(double alpha, double beta) {
    PointMap m;
    m.dim = 2;
    m.forward = [alpha, beta](const std::vector<double>& x) {
        return std::vector<double>{x[0] + alpha * x[0] * x[0], x[1] + beta * x[0] * x[0]};
    };
    m.inverse = [alpha, beta](const std::vector<double>& y) {
        const double disc = 1 + 4 * alpha * y[0];
        if (disc <= 0) throw Error("point outside the range of the quadratic shear");
        const double t = 2 * y[0] / (1 + std::sqrt(disc));
        return std::vector<double>{t, y[1] - beta * t * t};
    };
    return m;
}

// ---------------------------------------------------------------------------

sym::CoordMap<double> fd_jets(const TheorySpec& spec, const std::vector<FieldSlot>& slots, const SectionFn& f,
                              const std::vector<double>& x, const std::vector<double>& h, int order) {
    if (order > 2) throw OrderOverflow("finite-difference jets are limited to order 2");
    const int d = spec.base_dim;
    sym::CoordMap<double> out;
    for (int mu = 0; mu < d; ++mu) out[Coord::base(mu)] = x[static_cast<std::size_t>(mu)];
    std::map<std::vector<int>, std::vector<double>> cache;
    auto at = [&](const std::vector<int>& off) -> const std::vector<double>& {
        auto it = cache.find(off);
        if (it != cache.end()) return it->second;
        std::vector<double> y = x;
        for (int mu = 0; mu < d; ++mu) y[static_cast<std::size_t>(mu)] += off[static_cast<std::size_t>(mu)] * h[static_cast<std::size_t>(mu)];
        std::vector<double> v = f(y);
        if (v.size() != slots.size()) throw Error("section returned the wrong number of values");
        return cache.emplace(off, std::move(v)).first->second;
    };
    auto shift = [d](std::initializer_list<std::pair<int, int>> moves) {
        std::vector<int> off(static_cast<std::size_t>(d), 0);
        for (auto [mu, s] : moves) off[static_cast<std::size_t>(mu)] += s;
        return off;
    };
    const std::vector<double> f0 = at(shift({}));
    for (std::size_t s = 0; s < slots.size(); ++s) {
        const FieldDecl& fd = field_of(spec, slots[s].first);
        const int slot = slots[s].second;
        out[fd.value(slot)] = f0[s];
        if (order < 1) continue;
        for (int mu = 0; mu < d; ++mu) {
            const double hm = h[static_cast<std::size_t>(mu)];
            out[fd.jet(slot, {mu})] = (at(shift({{mu, 1}}))[s] - at(shift({{mu, -1}}))[s]) / (2 * hm);
        }
        if (order < 2) continue;
        for (int mu = 0; mu < d; ++mu) {
            const double hm = h[static_cast<std::size_t>(mu)];
            for (int nu = mu; nu < d; ++nu) {
                const double hn = h[static_cast<std::size_t>(nu)];
                double v;
                if (mu == nu) {
                    v = (at(shift({{mu, 1}}))[s] - 2 * f0[s] + at(shift({{mu, -1}}))[s]) / (hm * hm);
                } else {
                    v = (at(shift({{mu, 1}, {nu, 1}}))[s] - at(shift({{mu, 1}, {nu, -1}}))[s] -
                         at(shift({{mu, -1}, {nu, 1}}))[s] + at(shift({{mu, -1}, {nu, -1}}))[s]) /
                        (4 * hm * hn);
                }
                out[fd.jet(slot, {mu, nu})] = v;
            }
        }
    }
    return out;
}

void add_params(const TheorySpec& spec, const NumericOptions& options, sym::CoordMap<double>& point) {
    for (const auto& p : spec.params) point[Coord::param(p)] = param_value(options, p);
}

double max_el_residual(const TheorySpec& spec, const DiscreteSection& section, const NumericOptions& options) {
    section.check();
    if (section.grid.dim() != spec.base_dim) throw Error("section dimension differs from the base");
    const ResidualField rf = residual_field(spec, section);
    const SectionFn sampler = grid_sampler(section, rf.ids);
    double worst = 0;
    for (std::size_t f = 0; f < section.grid.size(); ++f) {
        const auto idx = section.grid.unflat(f);
        if (!interior(section.grid, idx)) continue;
        auto pt = fd_jets(spec, rf.slots, sampler, section.grid.point(idx), section.grid.spacing, rf.order);
        add_params(spec, options, pt);
        for (const auto& r : rf.residuals) worst = std::max(worst, std::abs(sym::eval_double(r, pt, options.interp)));
    }
    return worst;
}

// ---------------------------------------------------------------------------

DiscreteSection integrate_mechanics(const TheorySpec& spec, const std::vector<double>& q0, const std::vector<double>& v0,
                                    double t0, double t1, double h, const MechanicsOptions& options) {
    if (spec.base_dim != 1) throw Error("integrate_mechanics needs a one-dimensional base");
    if (lagrangian_order(spec) > 1) throw OrderOverflow("integrate_mechanics needs a first-order Lagrangian");
    if (!(h > 0)) throw Error("step must be positive");
    std::vector<FieldSlot> dofs;
    for (const auto& f : spec.fields) {
        for (int slot : f.slots()) {
            if (options.prescribed.count({f.name, slot})) continue;
            if (f.kind == FieldKind::Background) throw Error("background " + f.name + " must be prescribed");
            dofs.push_back({f.name, slot});
        }
    }
    const std::size_t n = dofs.size();
    if (q0.size() != n || v0.size() != n) throw Error("initial data has " + std::to_string(q0.size()) + " entries, expected " + std::to_string(n));

    std::vector<Coord> qc, vc, ac;
    for (const auto& d : dofs) {
        const FieldDecl& f = field_of(spec, d.first);
        qc.push_back(f.value(d.second));
        vc.push_back(f.jet(d.second, {0}));
        ac.push_back(f.jet(d.second, {0, 0}));
    }
    sym::Substitution no_acc;
    for (const auto& a : ac) no_acc[a] = Expr();
    std::vector<Expr> rhs(n);
    std::vector<std::vector<Expr>> mass(n, std::vector<Expr>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const Expr r = euler_lagrange_residual(spec, field_of(spec, dofs[i].first), dofs[i].second);
        rhs[i] = sym::substitute(r, no_acc);
        for (std::size_t j = 0; j < n; ++j) {
            mass[i][j] = sym::canonicalize(-sym::partial(r, ac[j]));
            for (const auto& c : sym::coords_of(mass[i][j])) {
                if (c.order() == 2) throw Error("Euler-Lagrange system is not linear in accelerations");
            }
        }
    }

    sym::CoordMap<double> pt;
    add_params(spec, options, pt);
    auto load = [&](double t, const Eigen::VectorXd& y) {
        pt[Coord::base(0)] = t;
        for (std::size_t i = 0; i < n; ++i) {
            pt[qc[i]] = y(static_cast<Eigen::Index>(i));
            pt[vc[i]] = y(static_cast<Eigen::Index>(n + i));
        }
        for (const auto& [slot, traj] : options.prescribed) {
            const FieldDecl& f = field_of(spec, slot.first);
            pt[f.value(slot.second)] = traj(t, 0);
            pt[f.jet(slot.second, {0})] = traj(t, 1);
            pt[f.jet(slot.second, {0, 0})] = traj(t, 2);
        }
    };
    const auto N = static_cast<Eigen::Index>(n);
    auto deriv = [&](double t, const Eigen::VectorXd& y) {
        load(t, y);
        Eigen::MatrixXd M(N, N);
        Eigen::VectorXd b(N);
        for (Eigen::Index i = 0; i < N; ++i) {
            b(i) = sym::eval_double(rhs[static_cast<std::size_t>(i)], pt, options.interp);
            for (Eigen::Index j = 0; j < N; ++j) {
                M(i, j) = sym::eval_double(mass[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], pt, options.interp);
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
        if (!lu.isInvertible()) throw Error("degenerate Lagrangian: singular mass matrix");
        Eigen::VectorXd out(2 * N);
        out.head(N) = y.tail(N);
        out.tail(N) = lu.solve(b);
        return out;
    };

    const bool autonomous = options.prescribed.empty() && !sym::coords_of(spec.lagrangian).count(Coord::base(0));
    Expr energy_expr;
    bool track_energy = false;
    if (autonomous && n > 0) {
        energy_expr = energy(spec);
        track_energy = true;
    }

    const auto steps = std::max<long>(1, std::lround((t1 - t0) / h));
    const double dt = (t1 - t0) / static_cast<double>(steps);
    DiscreteSection s;
    s.grid.coords = {spec.coords.empty() ? "t" : spec.coords[0]};
    s.grid.origin = {t0};
    s.grid.spacing = {dt};
    s.grid.extents = {static_cast<int>(steps + 1)};
    s.slots = dofs;
    for (const auto& [slot, traj] : options.prescribed) s.slots.push_back(slot);
    s.values.assign(s.slots.size(), std::vector<double>(static_cast<std::size_t>(steps + 1)));
    s.fixed.assign(static_cast<std::size_t>(steps + 1), false);
    s.fixed[0] = true;

    Eigen::VectorXd y(2 * N);
    for (std::size_t i = 0; i < n; ++i) {
        y(static_cast<Eigen::Index>(i)) = q0[i];
        y(static_cast<Eigen::Index>(n + i)) = v0[i];
    }
    auto store = [&](long k, double t) {
        for (std::size_t i = 0; i < n; ++i) s.values[i][static_cast<std::size_t>(k)] = y(static_cast<Eigen::Index>(i));
        std::size_t col = n;
        for (const auto& [slot, traj] : options.prescribed) s.values[col++][static_cast<std::size_t>(k)] = traj(t, 0);
    };
    auto current_energy = [&](double t) {
        load(t, y);
        return sym::eval_double(energy_expr, pt, options.interp);
    };
    double e_prev = track_energy ? current_energy(t0) : 0;
    const double e_scale = std::max(std::abs(e_prev), 1e-12);
    bool warned = false;
    store(0, t0);
    for (long k = 0; k < steps; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        const Eigen::VectorXd k1 = deriv(t, y);
        const Eigen::VectorXd k2 = deriv(t + dt / 2, y + dt / 2 * k1);
        const Eigen::VectorXd k3 = deriv(t + dt / 2, y + dt / 2 * k2);
        const Eigen::VectorXd k4 = deriv(t + dt, y + dt * k3);
        y += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        store(k + 1, t + dt);
        if (track_energy) {
            const double e = current_energy(t + dt);
            if (!warned && std::abs(e - e_prev) > 0.01 * std::max(std::abs(e_prev), e_scale)) {
                s.warnings.push_back("StiffnessWarning: energy changed by more than 1% at t = " + fmt(t + dt));
                warned = true;
            }
            e_prev = e;
        }
    }
    return s;
}

// ---------------------------------------------------------------------------

std::optional<KGForm> kg_form(const TheorySpec& spec, const NumericOptions& options) {
    if (spec.base_dim != 2) return std::nullopt;
    const FieldDecl* field = nullptr;
    for (const auto& f : spec.fields) {
        if (f.kind == FieldKind::Background) return std::nullopt;
        if (f.kind != FieldKind::Variational) continue;
        if (field || f.components != 1 || f.geom != Geom::Scalar) return std::nullopt;
        field = &f;
    }
    if (!field) return std::nullopt;
    const Expr r = euler_lagrange_residual(spec, *field, 0);
    const Coord phi = field->value(0);
    const Coord ptx = field->jet(0, {0, 1});
    const Expr a = sym::partial(r, ptx);
    const Expr b = sym::partial(r, phi);
    auto constant = [](const Expr& e) {
        for (const auto& c : sym::coords_of(e)) {
            if (c.kind() != sym::CoordKind::Param) return false;
        }
        return true;
    };
    if (!constant(a) || !constant(b) || !sym::is_canonical_zero(r - a * Expr(ptx) - b * Expr(phi))) return std::nullopt;
    sym::CoordMap<double> pv;
    add_params(spec, options, pv);
    KGForm out{field->name, sym::eval_double(a, pv), sym::eval_double(b, pv), r};
    if (out.a == 0) return std::nullopt;
    return out;
}

DiscreteSection solve_kg_grid(const TheorySpec& spec, const Grid& grid, const SectionFn& data, const NumericOptions& options) {
    if (spec.base_dim != 2 || grid.dim() != 2) throw Error("solve_kg_grid needs a two-dimensional base");
    const auto form = kg_form(spec, options);
    if (!form) throw Error("field equation is not of the form a phi_tx + b phi = 0");
    const FieldDecl* field = spec.find_field(form->field);
    const Expr& r = form->residual;
    const double kappa = -form->b / form->a;

    DiscreteSection s;
    s.grid = grid;
    if (s.grid.coords.empty()) s.grid.coords = spec.coords;
    s.slots = {{field->name, 0}};
    s.values.assign(1, std::vector<double>(grid.size()));
    s.fixed.assign(grid.size(), false);
    s.check();
    const int nt = grid.extents[0];
    const int nx = grid.extents[1];
    if (nt < 3 || nx < 3) throw Error("grid too small");
    auto& v = s.values[0];
    auto at = [&](int i, int j) -> double& { return v[grid.flat({i, j})]; };
    const double c = kappa * grid.spacing[0] * grid.spacing[1] / 4;
    for (int i = 0; i < nt; ++i) {
        for (int j = 0; j < nx; ++j) {
            if (i == 0 || j == 0) {
                at(i, j) = data(grid.point({i, j}))[0];
                s.fixed[grid.flat({i, j})] = true;
                continue;
            }
            const double p10 = at(i, j - 1);
            const double p01 = at(i - 1, j);
            const double p00 = at(i - 1, j - 1);
            at(i, j) = (p10 + p01 - p00 + c * (p10 + p01 + p00)) / (1 - c);
        }
    }

    const SectionFn sampler = grid_sampler(s, {0});
    const std::vector<FieldSlot> slots = s.slots;
    double near = 0;
    double worst = 0;
    double amplitude = 0;
    for (double x : v) amplitude = std::max(amplitude, std::abs(x));
    for (int i = 1; i < nt - 1; ++i) {
        for (int j = 1; j < nx - 1; ++j) {
            auto pt = fd_jets(spec, slots, sampler, grid.point({i, j}), grid.spacing, 2);
            add_params(spec, options, pt);
            const double res = std::abs(sym::eval_double(r, pt, options.interp));
            worst = std::max(worst, res);
            if (i <= 2 || j <= 2) near = std::max(near, res);
        }
    }
    if (worst > 10 * std::max(near, 1e-12 * (1 + amplitude))) {
        throw UnstableScheme("residual grew from " + fmt(near) + " to " + fmt(worst));
    }
    return s;
}

// ---------------------------------------------------------------------------

double discrete_action(const TheorySpec& spec, const DiscreteSection& section, const NumericOptions& options) {
    section.check();
    const int d = spec.base_dim;
    if (section.grid.dim() != d) throw Error("section dimension differs from the base");
    if (lagrangian_order(spec) > 1) throw OrderOverflow("discrete_action needs a first-order Lagrangian");
    for (const auto& c : sym::coords_of(spec.lagrangian)) {
        if (!c.is_field_coord()) continue;
        bool found = false;
        for (const auto& sl : section.slots) {
            if (field_of(spec, sl.first).value(sl.second) == c.value_coord()) found = true;
        }
        if (!found) throw Error("section lacks values for " + spec.render(Expr(c)));
    }
    const Grid& g = section.grid;
    std::vector<int> cells(static_cast<std::size_t>(d));
    std::size_t ncells = 1;
    double volume = 1;
    for (int k = 0; k < d; ++k) {
        cells[static_cast<std::size_t>(k)] = g.extents[static_cast<std::size_t>(k)] - 1;
        ncells *= static_cast<std::size_t>(std::max(0, cells[static_cast<std::size_t>(k)]));
        volume *= g.spacing[static_cast<std::size_t>(k)];
    }
    sym::CoordMap<double> pt;
    add_params(spec, options, pt);
    std::vector<Coord> vals;
    std::vector<std::vector<Coord>> firsts;
    for (const auto& sl : section.slots) {
        const FieldDecl& f = field_of(spec, sl.first);
        vals.push_back(f.value(sl.second));
        std::vector<Coord> fs;
        for (int mu = 0; mu < d; ++mu) fs.push_back(f.jet(sl.second, {mu}));
        firsts.push_back(std::move(fs));
    }
    const int corners = 1 << d;
    const double inv_corners = 1.0 / corners;
    double total = 0;
    double carry = 0;  // Neumaier compensation
    std::vector<int> c(static_cast<std::size_t>(d));
    std::vector<int> idx(static_cast<std::size_t>(d));
    for (std::size_t n = 0; n < ncells; ++n) {
        std::size_t rest = n;
        for (int k = d - 1; k >= 0; --k) {
            c[static_cast<std::size_t>(k)] = static_cast<int>(rest % static_cast<std::size_t>(cells[static_cast<std::size_t>(k)]));
            rest /= static_cast<std::size_t>(cells[static_cast<std::size_t>(k)]);
        }
        for (int k = 0; k < d; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            pt[Coord::base(k)] = g.origin[kk] + (c[kk] + 0.5) * g.spacing[kk];
        }
        for (std::size_t s = 0; s < section.slots.size(); ++s) {
            double avg = 0;
            std::vector<double> diff(static_cast<std::size_t>(d), 0.0);
            for (int corner = 0; corner < corners; ++corner) {
                for (int k = 0; k < d; ++k) idx[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(k)] + ((corner >> k) & 1);
                const double v = section.values[s][g.flat(idx)];
                avg += v;
                for (int k = 0; k < d; ++k) diff[static_cast<std::size_t>(k)] += ((corner >> k) & 1) ? v : -v;
            }
            pt[vals[s]] = avg * inv_corners;
            for (int k = 0; k < d; ++k) {
                pt[firsts[s][static_cast<std::size_t>(k)]] = diff[static_cast<std::size_t>(k)] * 2 * inv_corners / g.spacing[static_cast<std::size_t>(k)];
            }
        }
        const double v = sym::eval_double(spec.lagrangian, pt, options.interp);
        const double next = total + v;
        carry += std::abs(total) >= std::abs(v) ? (total - next) + v : (v - next) + total;
        total = next;
    }
    return (total + carry) * volume;
}

double first_variation(const TheorySpec& spec, const DiscreteSection& section, const FieldSlot& slot,
                       const std::function<double(const std::vector<double>&)>& bump, double eps,
                       const NumericOptions& options) {
    const int id = section.slot_index(slot);
    if (id < 0) throw Error("section lacks " + slot_label(slot));
    DiscreteSection plus = section;
    DiscreteSection minus = section;
    for (std::size_t f = 0; f < section.grid.size(); ++f) {
        const double b = bump(section.grid.point(section.grid.unflat(f)));
        plus.values[static_cast<std::size_t>(id)][f] += eps * b;
        minus.values[static_cast<std::size_t>(id)][f] -= eps * b;
    }
    return (discrete_action(spec, plus, options) - discrete_action(spec, minus, options)) / (2 * eps);
}

std::vector<double> observed_orders(const std::vector<double>& errors) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) out.push_back(std::log2(errors[i] / errors[i + 1]));
    return out;
}

}  // namespace covar
