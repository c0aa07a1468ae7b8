#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "covar/fixtures.hpp"
#include "covar/numerics.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace covar;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(COVAR_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string thy(const std::string& name) { return std::string(COVAR_SOURCE_DIR) + "/theories/" + name + ".thy"; }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("covariantize prints the covariantized theory") {
    const Run r = run("covariantize --mode horizontal " + thy("mechanics"));
    CHECK(r.code == 0);
    const TheorySpec tilde = parse_theory(r.out);
    CHECK(sym::equal_identically(tilde.lagrangian, tilde.parse("((1/2)*m*D[q;t]^2*D[Xt;t]^-2 - V(q))*D[Xt;t]"), 32, 3));
    CHECK(run("covariantize " + thy("chern-simons")).code == 0);
    CHECK(run("covariantize --mode horizontal " + thy("chern-simons")).code == 2);
    CHECK(run("covariantize --mode vertical --action minimal " + thy("minimal-coupling")).code == 0);
}

TEST_CASE("parse, el, sem and energy") {
    const Run p = run("parse " + thy("kg1"));
    CHECK(p.code == 0);
    CHECK(parse_theory(p.out) == fixtures::load("kg1"));

    const Run el = run("el " + thy("kg1"));
    CHECK(el.code == 0);
    CHECK(el.out == "EL[phi] = -2*D[phi;t,x] - phi*m^2\n");

    const Run e = run("energy " + thy("oscillator"));
    CHECK(e.out == "E = (1/2)*q^2 + (1/2)*D[q;t]^2\n");

    const Run sem = run("sem " + thy("kg1"));
    CHECK(sem.code == 0);
    CHECK(std::count(sem.out.begin(), sem.out.end(), '\n') == 4);

    const Run elx = run("el --mode horizontal " + thy("oscillator"));
    CHECK(elx.out.find("EL[Xt] = ") != std::string::npos);
}

TEST_CASE("input errors exit with status 2") {
    CHECK(run("el nonexistent.thy").code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("verify " + thy("kg1") + " --checks nonsense").code == 2);
    CHECK(run("verify " + thy("kg1") + " --format xml").code == 2);
    CHECK(run("verify").code == 2);
    const auto bad = std::filesystem::temp_directory_path() / "covar-bad.thy";
    std::ofstream(bad) << "theory bad\nbase 1 (t)\nfield q[1] : scalar variational\nlagrangian D[q;t]^\n";
    CHECK(run("parse " + bad.string()).code == 2);
}

TEST_CASE("verify exit codes and determinism") {
    const std::string args = "verify " + thy("kg1") + " --checks covariance,vacuous-el --samples 100 --seed 42";
    const Run a = run(args);
    CHECK(a.code == 0);
    CHECK(a.out.find("unexpected = 0\n") != std::string::npos);
    CHECK(run(args).out == a.out);

    const Run rec = run(args + " --format records");
    CHECK(rec.code == 0);
    CHECK(std::count(rec.out.begin(), rec.out.end(), '\n') == 102);
    CHECK(rec.out.rfind("covariance\tkg1-horizontal:sample-0\t", 0) == 0);

    CHECK(run("verify " + thy("proca") + " --checks gauge-shift --samples 10").code == 1);
    CHECK(run("verify " + thy("kg1") + " --mode vertical --checks covariance").code == 1);
}

TEST_CASE("verify --all runs the bundled suite") {
    const Run r = run("verify --all --format records");
    CHECK(r.code == 0);
    CHECK(r.out.find("expected-fail") != std::string::npos);
    CHECK(r.out.find("reduction\tkg2-background vs kg1-horizontal (lightcone):lightcone\t0.000e+00\tpass\n") != std::string::npos);
}

TEST_CASE("simulate and dump-section") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto osc = dir / "covar-osc.txt";
    CHECK(run("simulate " + thy("oscillator") + " --t1 1 --step 0.01 -o " + osc.string()).code == 0);
    const DiscreteSection s = read_section(slurp(osc));
    CHECK(s.grid.extents == std::vector<int>{101});
    CHECK(s.values[0].back() == doctest::Approx(std::cos(1.0)).epsilon(1e-8));

    const Run d = run("dump-section " + osc.string() + " --theory " + thy("oscillator"));
    CHECK(d.code == 0);
    CHECK(d.out.rfind("dim = 1\npoints = 101\naxis.t = 0 0.01 101\nslot = q[0]\nmax_el_residual = ", 0) == 0);

    const auto kg = dir / "covar-kg.txt";
    CHECK(run("simulate " + thy("kg1") + " --data 'cos(t + x/2)' --n 33 -o " + kg.string()).code == 0);
    const Run dk = run("dump-section " + kg.string() + " --theory " + thy("kg1"));
    CHECK(dk.code == 0);
    const auto pos = dk.out.find("max_el_residual = ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(dk.out.substr(pos + 18)) < 1e-2);

    CHECK(run("simulate " + thy("proca")).code == 2);
    CHECK(run("dump-section " + thy("kg1")).code == 2);
}
