// Acceptance run: one PASS/FAIL line per criterion with wall time.

#include "covar/fixtures.hpp"
#include "covar/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

using namespace covar;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

TheorySpec tilde_of(const std::string& name) {
    const TheorySpec spec = fixtures::load(name);
    if (spec.has_kind(FieldKind::Covariance)) return spec;
    const Mode m = default_mode(spec);
    const std::string kind = name == "minimal-coupling" ? "minimal" : "shift";
    return covariantize(spec, m, m == Mode::Vertical ? vertical_action(spec, kind) : VerticalAction{});
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

bool exact_pass(const Report& r) { return r.status == Status::Pass && r.worst_residual == 0; }

Outcome golden() {
    const TheorySpec mech = covariantize_horizontal(fixtures::load("mechanics"));
    const TheorySpec kg = covariantize_horizontal(fixtures::load("kg1"));
    const bool a = sym::equal_identically(mech.lagrangian, mech.parse("((1/2)*m*D[q;t]^2*D[Xt;t]^-2 - V(q))*D[Xt;t]"), 32, 1);
    const bool b = sym::equal_identically(
        kg.lagrangian,
        kg.parse("(D[phi;x]*D[phi;t]*(D[Xx;t]*D[Xt;x] + D[Xt;t]*D[Xx;x]) - D[phi;x]^2*D[Xt;t]*D[Xx;t]"
                 " - D[phi;t]^2*D[Xt;x]*D[Xx;x])/(D[Xt;t]*D[Xx;x] - D[Xt;x]*D[Xx;t])"
                 " - (1/2)*m^2*phi^2*(D[Xt;t]*D[Xx;x] - D[Xt;x]*D[Xx;t])"),
        32, 1);
    return {a && b, std::string("mechanics ") + (a ? "match" : "differ") + ", kg1 " + (b ? "match" : "differ")};
}

Outcome reduction() {
    const Report r = check_reduction_kg(ReductionVariant::Lightcone);
    return {exact_pass(r), "lightcone " + to_string(r.status)};
}

Outcome covariance() {
    bool ok = true;
    double worst = 0;
    for (const auto& name : fixtures::names()) {
        const Report r = check_covariance(tilde_of(name), 100, kDefaultSeed, 1e-9);
        ok = ok && r.status == Status::Pass && r.details.size() == 100;
        worst = std::max(worst, r.worst_residual);
    }
    const Report control = check_covariance(fixtures::load("kg1"), 100, kDefaultSeed, 1e-9);
    const bool failed = control.status == Status::Fail;
    return {ok && failed, std::to_string(fixtures::names().size()) + " fixtures worst " + sci(worst) + ", kg1 control " +
                              to_string(control.status)};
}

Outcome vacuous() {
    bool ok = true;
    std::string detail;
    for (const char* name : {"mechanics", "kg1"}) {
        const TheorySpec spec = fixtures::load(name);
        const bool p = exact_pass(check_vacuous_el(covariantize_horizontal(spec), &spec));
        ok = ok && p;
        detail += std::string(name) + (p ? " zero " : " nonzero ");
    }
    for (const char* name : {"chern-simons", "stueckelberg"}) {
        const bool p = exact_pass(check_vacuous_el(tilde_of(name)));
        ok = ok && p;
        detail += std::string(name) + (p ? " zero " : " nonzero ");
    }
    detail.pop_back();
    return {ok, detail};
}

Outcome piola() {
    bool ok = true;
    for (int d = 1; d <= 3; ++d) ok = ok && exact_pass(check_piola_identity(d));
    return {ok, "dims 1-3"};
}

Outcome sem_divergence() {
    bool ok = true;
    int n = 0;
    for (const auto& name : fixtures::names()) {
        const TheorySpec spec = fixtures::load(name);
        if (lagrangian_order(spec) > 1) continue;
        ok = ok && exact_pass(check_sem_divergence(spec));
        ++n;
    }
    return {ok, std::to_string(n) + " order-1 theories"};
}

Outcome correspondence() {
    const TheorySpec osc = fixtures::load("oscillator");
    MechanicsOptions mo;
    const auto section = integrate_mechanics(osc, {1.0}, {0.0}, 0, 3, 1e-3, mo);
    CorrespondenceCase in;
    in.eta = PointMap::affine({{2}}, {0});
    in.phi = interpolate(section, {{"q", 0}});
    in.points = {{0.1}, {0.3}, {0.5}, {0.7}, {0.9}, {1.1}, {1.3}};
    in.h = 1e-3;
    const Report a = check_solution_correspondence(osc, covariantize_horizontal(osc), in, 1e-5);

    const TheorySpec kg1 = fixtures::load("kg1");
    const auto ref = reference_correspondence(kg1);
    if (!ref) return {false, "no kg1 reference"};
    const Report b = check_solution_correspondence(kg1, covariantize_horizontal(kg1), *ref, 1e-3);
    return {a.status == Status::Pass && b.status == Status::Pass,
            "oscillator worst " + sci(a.worst_residual) + ", kg1 plane wave worst " + sci(b.worst_residual)};
}

Outcome flatness() {
    const Report r = check_flatness(10, kDefaultSeed, 1e-9);
    bool abelian = true;
    for (const auto& c : r.details) {
        if (c.id.rfind("abelian", 0) == 0) abelian = abelian && c.residual == 0;
    }
    return {r.status == Status::Pass && abelian, "rotation worst " + sci(r.worst_residual)};
}

Outcome convergence() {
    const TheorySpec osc = fixtures::load("oscillator");
    std::vector<double> rk;
    for (double h : {0.1, 0.05, 0.025, 0.0125}) {
        const auto s = integrate_mechanics(osc, {1.0}, {0.0}, 0, 2, h);
        double e = 0;
        for (std::size_t i = 0; i < s.grid.size(); ++i) e = std::max(e, std::abs(s.values[0][i] - std::cos(s.grid.point({static_cast<int>(i)})[0])));
        rk.push_back(e);
    }
    const TheorySpec kg1 = fixtures::load("kg1");
    auto wave = [](const std::vector<double>& p) { return std::vector<double>{std::cos(p[0] + 0.5 * p[1])}; };
    std::vector<double> kg;
    for (int n : {16, 32, 64, 128}) {
        const Grid g{kg1.coords, {0, 0}, {1.0 / n, 1.0 / n}, {n + 1, n + 1}};
        kg.push_back(max_el_residual(kg1, solve_kg_grid(kg1, g, wave)));
    }
    auto bump = [](const std::vector<double>& x) {
        return x[0] > 0.5 && x[0] < 2.5 ? std::pow(std::sin(3.14159265358979323846 * (x[0] - 0.5) / 2), 2) : 0.0;
    };
    std::vector<double> fv;
    for (double h : {0.02, 0.01, 0.005, 0.0025}) {
        fv.push_back(std::abs(first_variation(osc, integrate_mechanics(osc, {1.0}, {0.0}, 0, 3, h), {"q", 0}, bump, 1e-4)));
    }
    auto lowest = [](const std::vector<double>& e) {
        double m = 1e9;
        for (double p : observed_orders(e)) m = std::min(m, p);
        return m;
    };
    const double a = lowest(rk), b = lowest(kg), c = lowest(fv);
    char buf[128];
    std::snprintf(buf, sizeof buf, "rk4 %.2f, kg %.2f, first variation %.2f", a, b, c);
    return {a >= 3.9 && b >= 1.9 && c >= 1.9, buf};
}

Outcome controls() {
    Report proca = check_gauge_shift(fixtures::load("proca"));
    proca.expected_failure = true;
    Report euclid = check_reduction_kg(ReductionVariant::Euclidean);
    euclid.expected_failure = true;
    return {proca.ok() && euclid.ok(), "proca gauge shift " + to_string(proca.status) + ", euclidean reduction " +
                                           to_string(euclid.status)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* title;
        double budget;  // seconds
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "golden covariantized Lagrangians", 2, golden},
        {2, "KG-II lightcone reduction", 5, reduction},
        {3, "covariance sampling", 10, covariance},
        {4, "vacuous covariance field equations", 10, vacuous},
        {5, "Piola identity", 5, piola},
        {6, "SEM divergence identity", 10, sem_divergence},
        {7, "solution correspondence", 30, correspondence},
        {8, "flatness", 10, flatness},
        {9, "convergence orders", 60, convergence},
        {10, "negative controls", 10, controls},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = o.pass && dt <= c.budget;
        if (!pass) ++failed;
        if (o.pass && !pass) o.detail += ", over the " + std::to_string(static_cast<int>(c.budget)) + " s budget";
        std::printf("%s %2d %-36s %7.3f s  %s\n", pass ? "PASS" : "FAIL", c.id, c.title, dt, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
