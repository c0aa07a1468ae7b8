#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "covar/fixtures.hpp"
#include "covar/theory.hpp"

#include <fstream>
#include <sstream>

using namespace covar;

namespace {

long binomial(int n, int k) {
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

const char* kKg1 = R"(theory kg1
base 2 (t, x)
param m
field phi[1] : scalar variational
lagrangian D[phi;t]*D[phi;x] - (1/2)*m^2*phi^2
)";

}  // namespace

TEST_CASE("first Klein-Gordon source parses to its Lagrangian") {
    TheorySpec s = parse_theory(kKg1);
    CHECK(s.name == "kg1");
    CHECK(s.base_dim == 2);
    CHECK(s.order == 1);
    const Expr phi = Coord::fiber("phi", 0);
    const Expr m = Coord::param("m");
    const Expr expected = Expr(Coord::jet("phi", 0, {0})) * Expr(Coord::jet("phi", 0, {1})) -
                          Expr(Rational(1, 2)) * sym::pow(m, 2) * sym::pow(phi, 2);
    CHECK(s.lagrangian == sym::canonicalize(expected));
}

TEST_CASE("differentiated background is rejected") {
    const char* src = R"(theory bad
base 2 (t, x)
field phi[1] : scalar variational
field rho[1] : scalar background
lagrangian D[phi;t]*D[rho;t]
)";
    try {
        parse_theory(src);
        FAIL("expected validation error");
    } catch (const ValidationError& e) {
        REQUIRE(e.diagnostics().size() == 1);
        CHECK(e.diagnostics()[0].find("A1") != std::string::npos);
    }
    const char* metric = R"(theory bad
base 2 (t, x)
field phi[1] : scalar variational
field g[3] : metric_inverse background
lagrangian D[g[1];t]*phi
)";
    CHECK_THROWS_AS(parse_theory(metric), ValidationError);
}

TEST_CASE("degenerate theory with no fields") {
    TheorySpec s = parse_theory("theory empty\nbase 1 (t)\nlagrangian 3\n");
    CHECK(s.fields.empty());
    CHECK(s.lagrangian == Expr(3));
    CHECK(validate(s).empty());
}

TEST_CASE("validation diagnostics") {
    TheorySpec s = fixtures::load("kg2");
    CHECK(validate(s).empty());

    TheorySpec cov = fixtures::load("kg1");
    FieldDecl x{"X", 2, FieldKind::Covariance, Geom::Diffeo, 0};
    cov.fields.push_back(x);
    cov.lagrangian = cov.lagrangian + Expr(Coord::cov_jet("X", 0, {0, 1}));
    cov.order = 2;
    auto d = validate(cov);
    REQUIRE(d.size() == 1);
    CHECK(d[0].find("covariance field X") != std::string::npos);

    TheorySpec idx = fixtures::load("kg1");
    idx.fields[0].diff_index = 2;
    d = validate(idx);
    REQUIRE_FALSE(d.empty());
    CHECK(d[0].find("A2") != std::string::npos);
}

TEST_CASE("jet coordinate enumeration") {
    TheorySpec s = parse_theory(kKg1);
    CHECK(jet_coords(s, 1).size() == 5);
    const auto second = jet_coords(s, 2);
    CHECK(second.size() == 8);
    CHECK(second[5] == Coord::jet("phi", 0, {0, 0}));
    CHECK(second[6] == Coord::jet("phi", 0, {0, 1}));
    CHECK(second[7] == Coord::jet("phi", 0, {1, 1}));

    TheorySpec c = s;
    c.fields.push_back({"X", 2, FieldKind::Covariance, Geom::Diffeo, 0});
    const auto with_x = jet_coords(c, 1);
    REQUIRE(with_x.size() == 11);
    CHECK(with_x[5] == Coord::cov_base("X", 0));
    CHECK(with_x[6] == Coord::cov_base("X", 1));
    CHECK(with_x[7] == Coord::cov_jet("X", 0, {0}));
    CHECK(with_x[8] == Coord::cov_jet("X", 0, {1}));
    CHECK(with_x[9] == Coord::cov_jet("X", 1, {0}));
    CHECK(with_x[10] == Coord::cov_jet("X", 1, {1}));

    for (const auto& name : fixtures::names()) {
        TheorySpec f = fixtures::load(name);
        int slots = 0;
        for (const auto& fd : f.fields) slots += static_cast<int>(fd.slots().size());
        for (int upto = 0; upto <= 2; ++upto) {
            long expected = f.base_dim;
            for (int s = 0; s <= upto; ++s) expected += slots * binomial(f.base_dim - 1 + s, s);
            CAPTURE(name);
            CHECK(static_cast<long>(jet_coords(f, upto).size()) == expected);
        }
    }
}

TEST_CASE("bundled theories validate and round-trip") {
    const auto names = fixtures::names();
    CHECK(names.size() == 8);
    for (const auto& name : names) {
        CAPTURE(name);
        TheorySpec s = fixtures::load(name);
        CHECK(s.name == name);
        CHECK(validate(s).empty());
        CHECK(parse_theory(render_theory(s)) == s);
    }
}

TEST_CASE("bundled texts match the files on disk") {
    for (const auto& name : fixtures::names()) {
        std::ifstream in(std::string(COVAR_SOURCE_DIR) + "/theories/" + name + ".thy");
        REQUIRE(in);
        std::stringstream buf;
        buf << in.rdbuf();
        CHECK(buf.str() == fixtures::text(name));
    }
}

TEST_CASE("syntax errors report line and column") {
    const char* src = "theory t\nbase 1 (t)\nfield q[1] : scalar variational\nlagrangian D[q;t]^2 +\n";
    try {
        parse_theory(src);
        FAIL("expected syntax error");
    } catch (const SyntaxError& e) {
        CHECK(e.line() == 4);
    }
    const char* cont = "theory t\nbase 1 (t)\nfield q[1] : scalar variational\nlagrangian q\n    + * q\n";
    try {
        parse_theory(cont);
        FAIL("expected syntax error");
    } catch (const SyntaxError& e) {
        CHECK(e.line() == 5);
        CHECK(e.column() == 7);
    }
    CHECK_THROWS_AS(parse_theory("theory t\nbase 1 (t)\nfield q[1] : spinor variational\nlagrangian q\n"), SyntaxError);
    CHECK_THROWS_AS(parse_theory("theory t\nbase 1 (t)\nlagrangian zz\n"), SyntaxError);
    CHECK_THROWS_AS(parse_theory("theory t\nbase 2 (t)\nlagrangian 1\n"), ValidationError);
    CHECK_THROWS_AS(parse_theory("theory t\nbase 1 (t)\nfrobnicate\nlagrangian 1\n"), SyntaxError);
}

TEST_CASE("order inference") {
    TheorySpec s = parse_theory("theory t\nbase 1 (t)\nfield q[1] : scalar variational\nlagrangian D[q;t,t]*q\n");
    CHECK(s.order == 2);
    CHECK_THROWS_AS(parse_theory("theory t\nbase 1 (t)\nfield q[1] : scalar variational\nlagrangian D[q;t,t,t]\n"),
                    ValidationError);
}
