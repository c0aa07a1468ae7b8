#include "covar/verify.hpp"

#include <cmath>

namespace covar {

namespace {

std::vector<FieldSlot> variational_slots(const TheorySpec& spec) {
    std::vector<FieldSlot> out;
    for (const auto& f : spec.fields) {
        if (f.kind == FieldKind::Background) throw Error("correspondence check does not handle background fields");
        if (f.kind != FieldKind::Variational) continue;
        for (int s : f.slots()) out.push_back({f.name, s});
    }
    return out;
}

std::vector<Expr> all_residuals(const TheorySpec& spec) {
    std::vector<Expr> out;
    for (const auto& [slot, r] : euler_lagrange(spec).residuals) out.push_back(r);
    return out;
}

struct Sweep {
    double worst = 0;
    std::vector<std::pair<std::string, double>> cases;
};

double max_abs(const TheorySpec& spec, const std::vector<Expr>& residuals, sym::CoordMap<double> jets,
               const NumericOptions& numeric) {
    add_params(spec, numeric, jets);
    double worst = 0;
    for (const auto& r : residuals) worst = std::max(worst, std::abs(sym::eval_double(r, jets, numeric.interp)));
    return worst;
}

}  // namespace

Report check_solution_correspondence(const TheorySpec& spec, const TheorySpec& tilde, const CorrespondenceCase& in,
                                     double tol) {
    const FieldDecl* x = tilde.covariance_field(Geom::Diffeo);
    if (!x) throw Error("correspondence check needs a horizontally covariantized theory");
    const int d = spec.base_dim;
    const std::vector<FieldSlot> vars = variational_slots(spec);
    std::vector<FieldSlot> tslots = vars;
    for (int a = 0; a < d; ++a) tslots.push_back({x->name, a});
    const std::vector<Expr> r_spec = all_residuals(spec);
    const std::vector<Expr> r_tilde = all_residuals(tilde);

    const SectionFn body = [&](const std::vector<double>& p) {
        const std::vector<double> X = in.eta.forward(p);
        std::vector<double> v = in.phi(X);
        v.insert(v.end(), X.begin(), X.end());
        return v;
    };
    const SectionFn pulled = [&](const std::vector<double>& p) { return in.phi(in.eta.forward(p)); };
    const SectionFn recovered = [&](const std::vector<double>& X) { return pulled(in.eta.inverse(X)); };

    auto sweep = [&](double h) {
        Sweep s;
        const std::vector<double> hv(static_cast<std::size_t>(d), h);
        for (std::size_t i = 0; i < in.points.size(); ++i) {
            const auto& p = in.points[i];
            const std::vector<double> X = in.eta.forward(p);
            const std::string n = std::to_string(i);
            s.cases.emplace_back("tilde-" + n, max_abs(tilde, r_tilde, fd_jets(tilde, tslots, body, p, hv, 2), in.numeric));
            s.cases.emplace_back("original-" + n, max_abs(spec, r_spec, fd_jets(spec, vars, in.phi, X, hv, 2), in.numeric));
            s.cases.emplace_back("reverse-" + n, max_abs(spec, r_spec, fd_jets(spec, vars, recovered, X, hv, 2), in.numeric));
        }
        for (const auto& c : s.cases) s.worst = std::max(s.worst, c.second);
        return s;
    };

    const Sweep fine = sweep(in.h);
    if (fine.worst > tol) {
        const Sweep coarse = sweep(2 * in.h);
        if (coarse.worst > 2 * fine.worst) {
            throw GridTooCoarse("finite-difference truncation dominates: residual " + std::to_string(fine.worst) +
                                " at h, " + std::to_string(coarse.worst) + " at 2h");
        }
    }
    Report r;
    r.check = "correspondence";
    r.subject = tilde.name;
    r.tolerance = tol;
    r.samples = static_cast<int>(in.points.size());
    for (const auto& [id, v] : fine.cases) r.add(id, v);
    return r;
}

}  // namespace covar
