#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "covar/fixtures.hpp"
#include "covar/variational.hpp"

#include <random>

using namespace covar;

namespace {

bool same(const Expr& a, const Expr& b) { return sym::equal_identically(a, b, 32, 11); }

}  // namespace

TEST_CASE("Euler-Lagrange residuals") {
    TheorySpec kg1 = fixtures::load("kg1");
    ELSystem el = euler_lagrange(kg1, kg1.fields[0]);
    CHECK(el.residuals.at({"phi", 0}) == kg1.parse("-2*D[phi;t,x] - m^2*phi"));
    CHECK(el.order == 2);

    TheorySpec osc = fixtures::load("oscillator");
    CHECK(euler_lagrange(osc).residuals.at({"q", 0}) == osc.parse("-q - D[q;t,t]"));

    TheorySpec c = parse_theory("theory c\nbase 2 (t, x)\nfield u[2] : scalar variational\nlagrangian 5\n");
    for (const auto& [k, r] : euler_lagrange(c).residuals) CHECK(r.is_zero());

    TheorySpec mech = fixtures::load("mechanics");
    CHECK(euler_lagrange(mech).residuals.at({"q", 0}) == mech.parse("-V'(q) - m*D[q;t,t]"));
}

TEST_CASE("second-order Lagrangian uses symmetric jets") {
    TheorySpec bih = parse_theory("theory b\nbase 1 (t)\nfield u[1] : scalar variational\nlagrangian (1/2)*D[u;t,t]^2\n");
    CHECK_THROWS_AS(euler_lagrange(bih), OrderOverflow);
    TheorySpec lap = parse_theory("theory l\nbase 2 (t, x)\nfield u[1] : scalar variational\nlagrangian u*D[u;t,x]\n");
    CHECK(euler_lagrange(lap).residuals.at({"u", 0}) == lap.parse("2*D[u;t,x]"));
}

TEST_CASE("canonical SEM tensor and energy") {
    TheorySpec mech = fixtures::load("mechanics");
    SEMTensor s = sem_tensor(mech);
    CHECK(s.t[0][0] == mech.parse("-(1/2)*m*D[q;t]^2 - V(q)"));
    CHECK(energy(mech) == mech.parse("(1/2)*m*D[q;t]^2 + V(q)"));
    CHECK(energy(fixtures::load("oscillator")) == fixtures::load("oscillator").parse("(1/2)*D[q;t]^2 + (1/2)*q^2"));
    TheorySpec free = parse_theory("theory f\nbase 1 (t)\nfield q[1] : scalar variational\nlagrangian (1/2)*D[q;t]^2\n");
    CHECK(energy(free) == free.parse("(1/2)*D[q;t]^2"));

    TheorySpec kg1 = fixtures::load("kg1");
    SEMTensor k = sem_tensor(kg1);
    CHECK(k.t[0][0] == kg1.parse("-(1/2)*m^2*phi^2"));
    CHECK(k.t[1][0] == kg1.parse("-D[phi;t]^2"));

    TheorySpec pot = parse_theory("theory p\nbase 2 (t, x)\nparam c\nfield u[1] : scalar variational\nlagrangian c*u^2\n");
    SEMTensor p = sem_tensor(pot);
    CHECK(p.t[0][0] == pot.lagrangian);
    CHECK(p.t[1][1] == pot.lagrangian);
    CHECK(p.t[0][1].is_zero());

    TheorySpec second = parse_theory("theory s\nbase 1 (t)\nfield q[1] : scalar variational\nlagrangian D[q;t,t]*q\n");
    CHECK_THROWS_AS(sem_tensor(second), OrderOverflow);
}

TEST_CASE("Piola transform") {
    TheorySpec mech = fixtures::load("mechanics");
    SEMTensor s = sem_tensor(mech);
    SEMTensor p = piola_transform(s, jacobian_bundle(1));
    CHECK(p.variant == SEMTensor::Variant::PiolaKirchhoff);
    CHECK(p.t[0][0] == s.t[0][0]);

    // Identity Jacobian
    TheorySpec kg1 = fixtures::load("kg1");
    const JacobianBundle jb = jacobian_bundle(2);
    SEMTensor k = sem_tensor(kg1);
    SEMTensor pk = piola_transform(k, jb);
    sym::Substitution id;
    for (int a = 0; a < 2; ++a) {
        for (int mu = 0; mu < 2; ++mu) id[Coord::cov_jet("X", a, {mu})] = Expr(a == mu ? 1 : 0);
    }
    for (int mu = 0; mu < 2; ++mu) {
        for (int a = 0; a < 2; ++a) CHECK(sym::substitute(pk.t[mu][a], id) == k.t[mu][a]);
    }

    // Covariantized KG-I: direct evaluation of the defining formula.
    TheorySpec t = covariantize_horizontal(kg1);
    SEMTensor tt = sem_tensor(t);
    SEMTensor pt = piola_transform(tt, jb);
    std::mt19937_64 rng(16);
    std::uniform_int_distribution<int> num(-40, 40);
    std::uniform_int_distribution<int> den(1, 9);
    const auto coords = jet_coords(t, 1);
    for (int n = 0; n < 16; ++n) {
        std::map<Coord, sym::Number> point;
        for (const auto& c : coords) point[c] = Rational(num(rng), den(rng));
        point[Coord::param("m")] = Rational(num(rng), den(rng));
        try {
            const Rational det = sym::eval_at(jb.det, point).exact();
            for (int mu = 0; mu < 2; ++mu) {
                for (int a = 0; a < 2; ++a) {
                    Rational direct(0);
                    for (int c = 0; c < 2; ++c) {
                        direct += sym::eval_at(tt.t[c][a], point).exact() * sym::eval_at(jb.inverse[mu][c], point).exact();
                    }
                    CHECK(sym::eval_at(pt.t[mu][a], point).exact() == direct * det);
                }
            }
        } catch (const PoleHit&) {
        }
    }
}

TEST_CASE("Piola-Kirchhoff tensor is the Jacobian derivative of the covariantized Lagrangian") {
    for (const char* name : {"mechanics", "kg1", "oscillator"}) {
        CAPTURE(name);
        TheorySpec s = fixtures::load(name);
        TheorySpec t = covariantize_horizontal(s);
        const JacobianBundle jb = jacobian_bundle(s.base_dim);
        const auto sub = spatial_substitution(s, jb);
        SEMTensor spatial = sem_tensor(s);
        for (auto& row : spatial.t) {
            for (auto& e : row) e = sym::substitute(e, sub);
        }
        SEMTensor p = piola_transform(spatial, jb);
        for (int a = 0; a < s.base_dim; ++a) {
            for (int mu = 0; mu < s.base_dim; ++mu) {
                CHECK(same(sym::partial(t.lagrangian, Coord::cov_jet("X", a, {mu})), p.t[mu][a]));
            }
        }
    }
}

TEST_CASE("SEM divergence identity on bundled first-order theories") {
    for (const auto& name : fixtures::names()) {
        CAPTURE(name);
        TheorySpec s = fixtures::load(name);
        for (int a = 0; a < s.base_dim; ++a) CHECK(sem_divergence_defect(s, a).is_zero());
    }
}

TEST_CASE("energy identity") {
    for (const char* name : {"mechanics", "oscillator"}) {
        CHECK(energy_defect(fixtures::load(name)).is_zero());
    }
    TheorySpec driven = parse_theory("theory d\nbase 1 (t)\nfield q[1] : scalar variational\nlagrangian (1/2)*D[q;t]^2 - t*q^3\n");
    CHECK(energy_defect(driven).is_zero());
}
