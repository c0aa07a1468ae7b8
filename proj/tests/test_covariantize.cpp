#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "covar/covariantize.hpp"
#include "covar/fixtures.hpp"

#include <cmath>

using namespace covar;

namespace {

bool same(const Expr& a, const Expr& b) { return sym::equal_identically(a, b, 32, 7); }

Expr cj(int a, int mu) { return Expr(Coord::cov_jet("X", a, {mu})); }

}  // namespace

TEST_CASE("jacobian bundle identities") {
    for (int d = 1; d <= 3; ++d) {
        CAPTURE(d);
        const JacobianBundle jb = jacobian_bundle(d);
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
                std::vector<Expr> terms;
                for (int mu = 0; mu < d; ++mu) terms.push_back(jb.J[a][mu] * jb.inverse[mu][b]);
                CHECK(sym::canonicalize(Expr::sum(terms)) == Expr(a == b ? 1 : 0));
            }
        }
        for (int nu = 0; nu < d; ++nu) {
            std::vector<Expr> terms;
            for (int c = 0; c < d; ++c) terms.push_back(jb.J[c][nu] * jb.cofactor[c][nu]);
            CHECK(sym::is_canonical_zero(Expr::sum(terms) - jb.det));
        }
    }
    const JacobianBundle j2 = jacobian_bundle(2);
    CHECK(j2.det == sym::canonicalize(cj(0, 0) * cj(1, 1) - cj(0, 1) * cj(1, 0)));
}

TEST_CASE("chain rule by Cramer's rule") {
    TheorySpec kg1 = fixtures::load("kg1");
    const JacobianBundle jb = jacobian_bundle(2);
    auto m = chain_rule_jet(kg1, kg1.fields[0], jb);
    const Expr pt = Coord::jet("phi", 0, {0});
    const Expr px = Coord::jet("phi", 0, {1});
    const Expr J = cj(0, 0) * cj(1, 1) - cj(0, 1) * cj(1, 0);
    CHECK(same(m.at(Coord::jet("phi", 0, {0})), (pt * cj(1, 1) - px * cj(1, 0)) / J));
    CHECK(same(m.at(Coord::jet("phi", 0, {1})), (-pt * cj(0, 1) + px * cj(0, 0)) / J));

    sym::Substitution id;
    for (int a = 0; a < 2; ++a) {
        for (int mu = 0; mu < 2; ++mu) id[Coord::cov_jet("X", a, {mu})] = Expr(a == mu ? 1 : 0);
    }
    CHECK(sym::substitute(m.at(Coord::jet("phi", 0, {0})), id) == pt);
    CHECK(sym::substitute(m.at(Coord::jet("phi", 0, {1})), id) == px);

    TheorySpec mech = fixtures::load("mechanics");
    auto m1 = chain_rule_jet(mech, mech.fields[0], jacobian_bundle(1));
    CHECK(same(m1.at(Coord::jet("q", 0, {0})), Expr(Coord::jet("q", 0, {0})) / cj(0, 0)));

    FieldDecl bad{"w", 1, FieldKind::Variational, Geom::Scalar, 2};
    CHECK_THROWS_AS(chain_rule_jet(kg1, bad, jb), UnsupportedIndex);
}

TEST_CASE("second-order spatial jets are symmetric") {
    TheorySpec kg1 = fixtures::load("kg1");
    TheorySpec tilde = covariantize_horizontal(kg1);
    const JacobianBundle jb = jacobian_bundle(2);
    auto m = chain_rule_jet(kg1, kg1.fields[0], jb, 2);
    // y_ab computed with D_b applied last must agree with the a <-> b swap.
    const Expr first_a = m.at(Coord::jet("phi", 0, {0}));
    std::vector<Expr> terms;
    for (int mu = 0; mu < 2; ++mu) terms.push_back(jb.inverse[mu][1] * tilde.D(first_a, mu));
    CHECK(same(Expr::sum(terms), m.at(Coord::jet("phi", 0, {0, 1}))));
}

TEST_CASE("horizontal covariantization of mechanics") {
    TheorySpec mech = fixtures::load("mechanics");
    TheorySpec t = covariantize_horizontal(mech);
    CHECK(t.find_field("X") != nullptr);
    CHECK(t.find_field("X")->geom == Geom::Diffeo);
    const Expr golden = t.parse("((1/2)*m*D[q;t]^2*D[Xt;t]^-2 - V(q))*D[Xt;t]");
    CHECK(same(t.lagrangian, golden));
    CHECK(parse_theory(render_theory(t)) == t);
    CHECK(sym::substitute(t.lagrangian, trivial_covariance(mech, t)) == mech.lagrangian);
}

TEST_CASE("horizontal covariantization of the first Klein-Gordon theory") {
    TheorySpec kg1 = fixtures::load("kg1");
    TheorySpec t = covariantize_horizontal(kg1);
    const Expr golden = t.parse(
        "(D[phi;x]*D[phi;t]*(D[Xx;t]*D[Xt;x] + D[Xt;t]*D[Xx;x]) - D[phi;x]^2*D[Xt;t]*D[Xx;t]"
        " - D[phi;t]^2*D[Xt;x]*D[Xx;x])/(D[Xt;t]*D[Xx;x] - D[Xt;x]*D[Xx;t])"
        " - (1/2)*m^2*phi^2*(D[Xt;t]*D[Xx;x] - D[Xt;x]*D[Xx;t])");
    CHECK(same(t.lagrangian, golden));
    CHECK(sym::is_canonical_zero(t.lagrangian - golden));
    CHECK(sym::substitute(t.lagrangian, trivial_covariance(kg1, t)) == kg1.lagrangian);
    CHECK(parse_theory(render_theory(t)) == t);
}

TEST_CASE("horizontal covariantization preconditions") {
    CHECK_THROWS_AS(covariantize_horizontal(fixtures::load("chern-simons")), UnsupportedIndex);
    CHECK_THROWS_AS(covariantize_horizontal(fixtures::load("kg2")), AnsatzViolation);
    TheorySpec second = parse_theory("theory s\nbase 1 (t)\nfield q[1] : scalar variational\nlagrangian D[q;t,t]^2\n");
    CHECK_THROWS_AS(covariantize_horizontal(second), OrderOverflow);
}

TEST_CASE("background covariantization") {
    TheorySpec kg2 = fixtures::load("kg2");
    TheorySpec t = covariantize_background(kg2);
    CHECK(t.find_field("g") == nullptr);
    CHECK(t.find_field("X") != nullptr);
    for (const char* p : {"gbar_00", "gbar_01", "gbar_11", "gbar_vol"}) {
        CHECK(std::find(t.params.begin(), t.params.end(), p) != t.params.end());
    }
    CHECK(sym::substitute(t.lagrangian, trivial_covariance(kg2, t)) == kg2.lagrangian);
    CHECK(parse_theory(render_theory(t)) == t);

    // Lightcone gbar and unit volume give (x^mu_a x^nu_b gbar^ab phi_mu phi_nu / 2 - m^2 phi^2 / 2) det J.
    const JacobianBundle jb = jacobian_bundle(2);
    sym::Substitution lc{{Coord::param("gbar_00"), Expr(0)},
                         {Coord::param("gbar_01"), Expr(1)},
                         {Coord::param("gbar_11"), Expr(0)},
                         {Coord::param("gbar_vol"), Expr(1)}};
    std::vector<Expr> kin;
    for (int mu = 0; mu < 2; ++mu) {
        for (int nu = 0; nu < 2; ++nu) {
            kin.push_back(jb.inverse[mu][0] * jb.inverse[nu][1] * Expr(Coord::jet("phi", 0, {mu})) *
                          Expr(Coord::jet("phi", 0, {nu})));
        }
    }
    const Expr m = Coord::param("m");
    const Expr phi = Coord::fiber("phi", 0);
    const Expr expected = (Expr::sum(kin) - Expr(Rational(1, 2)) * sym::pow(m, 2) * sym::pow(phi, 2)) * jb.det;
    CHECK(same(sym::substitute(t.lagrangian, lc), expected));

    TheorySpec one = parse_theory(
        "theory one\nbase 1 (t)\nfield phi[1] : scalar variational\nfield g[1] : metric_inverse background\n"
        "lagrangian (1/2)*g[0]*D[phi;t]^2*vol[g]\n");
    TheorySpec t1 = covariantize_background(one);
    const Expr l1 = sym::substitute(t1.lagrangian, {{Coord::param("gbar_00"), Expr(1)}, {Coord::param("gbar_vol"), Expr(1)}});
    CHECK(same(l1, Expr(Rational(1, 2)) * sym::pow(Expr(Coord::jet("phi", 0, {0})), 2) / cj(0, 0)));

    CHECK_THROWS_AS(covariantize_background(fixtures::load("kg1")), AnsatzViolation);
}

TEST_CASE("vertical additive shift") {
    TheorySpec cs = fixtures::load("chern-simons");
    TheorySpec t = covariantize_vertical(cs, {});
    REQUIRE(t.find_field("eta") != nullptr);
    CHECK(t.find_field("eta")->kind == FieldKind::Covariance);
    const Expr golden = t.parse(
        "D[A[1];t]*(A[2] + D[eta;y]) - D[A[2];t]*(A[1] + D[eta;x]) - D[A[0];x]*(A[2] + D[eta;y])"
        " + D[A[2];x]*(A[0] + D[eta;t]) + D[A[0];y]*(A[1] + D[eta;x]) - D[A[1];y]*(A[0] + D[eta;t])");
    CHECK(t.lagrangian == golden);
    CHECK(sym::substitute(t.lagrangian, trivial_covariance(cs, t)) == cs.lagrangian);

    TheorySpec proca = fixtures::load("proca");
    TheorySpec st = covariantize_vertical(proca, {});
    TheorySpec fixture = fixtures::load("stueckelberg");
    CHECK(st.lagrangian == fixture.lagrangian);
    CHECK(st.fields == fixture.fields);
    CHECK(sym::substitute(st.lagrangian, trivial_covariance(proca, st)) == proca.lagrangian);

    CHECK_THROWS_AS(covariantize_vertical(fixtures::load("kg1"), {}), UnsupportedAction);
}

TEST_CASE("vertical minimal coupling") {
    TheorySpec mc = fixtures::load("minimal-coupling");
    VerticalAction act{VerticalAction::Kind::MinimalCoupling, lie_rep("so2")};
    TheorySpec t = covariantize_vertical(mc, act);
    const FieldDecl* a = t.find_field("A");
    REQUIRE(a != nullptr);
    CHECK(a->geom == Geom::LieOneForm);
    CHECK(a->components == 2);
    CHECK(sym::substitute(t.lagrangian, trivial_covariance(mc, t)) == mc.lagrangian);
    // D_t phi^0 = phi^0_t - A_t phi^1 with T = [[0,-1],[1,0]].
    const Expr cov0 = t.parse("D[phi[0];t] - A[0]*phi[1]");
    const Expr cov1 = t.parse("D[phi[1];t] + A[0]*phi[0]");
    const Expr kin = sym::canonicalize(Expr(Rational(1, 2)) * (sym::pow(cov0, 2) + sym::pow(cov1, 2)));
    const Expr rest = sym::canonicalize(t.lagrangian - kin);
    CHECK(sym::coords_of(rest).count(Coord::jet("phi", 0, {0})) == 0);
    CHECK(parse_theory(render_theory(t)) == t);

    VerticalAction so3{VerticalAction::Kind::MinimalCoupling, lie_rep("so3")};
    CHECK_THROWS_AS(covariantize_vertical(mc, so3), UnsupportedAction);
    CHECK_THROWS_AS(lie_rep("e8"), UnsupportedAction);
}

TEST_CASE("flat connections") {
    const Expr t = Coord::base(0);
    const Expr x = Coord::base(1);
    const Expr f = sym::pow(t, 2) * x + Expr(3) * x;
    auto a = flat_connection_from({{sym::exp(f)}}, 2);
    CHECK(a[0][0][0] == sym::partial(f, Coord::base(0)));
    CHECK(a[1][0][0] == sym::partial(f, Coord::base(1)));
    auto F = curvature(a, 2);
    CHECK(F[0][1][0][0].is_zero());

    auto c = flat_connection_from({{Expr(2), Expr(1)}, {Expr(0), Expr(3)}}, 2);
    for (const auto& m : c) {
        for (const auto& row : m) {
            for (const auto& e : row) CHECK(e.is_zero());
        }
    }

    // Rotation by theta = t*x + x^2: A_mu = theta_mu * [[0,-1],[1,0]].
    const Expr theta = t * x + sym::pow(x, 2);
    const Matrix rot = {{sym::cos(theta), -sym::sin(theta)}, {sym::sin(theta), sym::cos(theta)}};
    auto r = flat_connection_from(rot, 2);
    auto fr = curvature(r, 2);
    for (const auto& pt : std::vector<std::vector<double>>{{0.3, -0.7}, {1.1, 0.4}, {-0.2, 2.0}}) {
        const double th_t = pt[1];
        const double th_x = pt[0] + 2 * pt[1];
        auto a0 = eval_matrix(r[0], pt);
        auto a1 = eval_matrix(r[1], pt);
        CHECK(std::abs(a0[0][0]) < 1e-12);
        CHECK(std::abs(a0[0][1] + th_t) < 1e-12);
        CHECK(std::abs(a0[1][0] - th_t) < 1e-12);
        CHECK(std::abs(a1[1][0] - th_x) < 1e-12);
        auto f01 = eval_matrix(fr[0][1], pt);
        for (const auto& row : f01) {
            for (double v : row) CHECK(std::abs(v) < 1e-9);
        }
    }

    CHECK_THROWS_AS(flat_connection_from({{t, x}, {t, x}}, 2), SingularEta);
    auto sing = flat_connection_from({{t}}, 2);
    CHECK_THROWS_AS(eval_matrix(sing[0], {0.0, 1.0}), SingularEta);
}
