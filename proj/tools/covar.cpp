// covar: command-line front end.
//
//   covar parse FILE
//   covar covariantize [--mode M] [--action A] [--rep R] FILE
//   covar el|sem|energy [--mode M] FILE
//   covar verify [FILE] [--checks LIST | --all] [--samples N] [--seed N] [--tol X] [--format F]
//   covar simulate FILE [--q0 ..] [--v0 ..] [--t1 T] [--step H] | [--data EXPR] [--n N]
//   covar dump-section SECTION [--theory FILE]
//
// Exit status: 0 success, 1 check failure, 2 usage or input error, 3 internal error.

#include "covar/fixtures.hpp"
#include "covar/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace covar;

struct UsageError : Error {
    using Error::Error;
};

struct Args {
    std::string file;
    std::string mode;
    std::string action = "shift";
    std::string rep;
    std::string checks;
    bool all = false;
    int samples = kDefaultSamples;
    std::uint64_t seed = kDefaultSeed;
    std::optional<double> tol;
    std::string format = "text";
    std::string output;
    std::vector<std::string> params;

    std::vector<double> q0;
    std::vector<double> v0;
    double t0 = 0;
    double t1 = 1;
    double h = 1e-3;
    std::string data;
    int n = 65;
    double length = 1;
    std::string theory;
};

TheorySpec load(const std::string& path) {
    try {
        return load_theory(path);
    } catch (const SyntaxError& e) {
        throw UsageError(path + ": " + e.what());
    } catch (const ValidationError& e) {
        throw UsageError(path + ": " + e.what());
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

NumericOptions numeric_options(const Args& a) {
    NumericOptions o;
    for (const auto& p : a.params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--param expects name=value, got '" + p + "'");
        try {
            o.params[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
        } catch (const std::exception&) {
            throw UsageError("--param " + p + ": not a number");
        }
    }
    return o;
}

std::optional<Mode> mode_of(const Args& a) {
    if (a.mode.empty()) return std::nullopt;
    try {
        return parse_mode(a.mode);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

TheorySpec transformed(const TheorySpec& spec, const Args& a) {
    const auto m = mode_of(a);
    if (!m) return spec;
    return covariantize(spec, *m, *m == Mode::Vertical ? vertical_action(spec, a.action, a.rep) : VerticalAction{});
}

std::string slot_name(const TheorySpec& spec, const FieldSlot& s) {
    const FieldDecl* f = spec.find_field(s.first);
    if (f && f->components == 1 && f->geom == Geom::Scalar) return s.first;
    return spec.render(Expr(f->value(s.second)));
}

int cmd_parse(const Args& a, std::ostream& out) {
    out << render_theory(load(a.file));
    return 0;
}

int cmd_covariantize(const Args& a, std::ostream& out) {
    const TheorySpec spec = load(a.file);
    const Mode m = mode_of(a).value_or(default_mode(spec));
    out << render_theory(covariantize(spec, m, m == Mode::Vertical ? vertical_action(spec, a.action, a.rep) : VerticalAction{}));
    return 0;
}

int cmd_el(const Args& a, std::ostream& out) {
    const TheorySpec spec = transformed(load(a.file), a);
    for (const auto& [slot, r] : euler_lagrange(spec).residuals) out << "EL[" << slot_name(spec, slot) << "] = " << spec.render(r) << "\n";
    return 0;
}

int cmd_sem(const Args& a, std::ostream& out) {
    const TheorySpec spec = transformed(load(a.file), a);
    const SEMTensor t = sem_tensor(spec);
    for (int c = 0; c < t.dim; ++c) {
        for (int b = 0; b < t.dim; ++b) {
            out << "t[" << spec.coords[static_cast<std::size_t>(c)] << "][" << spec.coords[static_cast<std::size_t>(b)]
                << "] = " << spec.render(t.t[static_cast<std::size_t>(c)][static_cast<std::size_t>(b)]) << "\n";
        }
    }
    return 0;
}

int cmd_energy(const Args& a, std::ostream& out) {
    const TheorySpec spec = transformed(load(a.file), a);
    out << "E = " << spec.render(energy(spec)) << "\n";
    return 0;
}

int cmd_verify(const Args& a, std::ostream& out) {
    SuiteOptions o;
    o.samples = a.samples;
    o.seed = a.seed;
    o.tol = a.tol;
    o.mode = mode_of(a);
    o.action = a.action;
    o.rep = a.rep;
    o.numeric = numeric_options(a);
    if (!a.checks.empty()) {
        std::stringstream ss(a.checks);
        for (std::string c; std::getline(ss, c, ',');) {
            if (std::find(check_names().begin(), check_names().end(), c) == check_names().end()) {
                throw UsageError("unknown check '" + c + "'");
            }
            o.checks.push_back(c);
        }
    }
    std::vector<Report> reports;
    if (a.file.empty()) {
        if (!a.all) throw UsageError("verify needs a theory file or --all");
        reports = run_bundled_suite(o);
    } else {
        reports = run_checks(load(a.file), o);
    }
    int failed = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (!reports[i].ok()) ++failed;
        if (a.format == "records") {
            out << to_records(reports[i]);
        } else {
            if (i) out << "\n";
            out << to_text(reports[i]);
        }
    }
    if (a.format != "records") {
        out << "\nreports = " << reports.size() << "\nunexpected = " << failed << "\n";
    }
    return failed ? 1 : 0;
}

int cmd_simulate(const Args& a, std::ostream& out) {
    const TheorySpec spec = load(a.file);
    const NumericOptions numeric = numeric_options(a);
    DiscreteSection s;
    if (spec.base_dim == 1) {
        MechanicsOptions mo;
        mo.params = numeric.params;
        std::vector<double> q0 = a.q0;
        std::vector<double> v0 = a.v0;
        std::size_t n = 0;
        for (const auto& f : spec.fields) n += f.slots().size();
        if (q0.empty()) q0.assign(n, 1.0);
        if (v0.empty()) v0.assign(n, 0.0);
        s = integrate_mechanics(spec, q0, v0, a.t0, a.t1, a.h, mo);
    } else if (kg_form(spec, numeric)) {
        if (a.data.empty()) throw UsageError("simulate on a two-dimensional theory needs --data EXPR");
        if (a.n < 3) throw UsageError("--n must be at least 3");
        const Expr data = spec.parse(a.data);
        for (const auto& c : sym::coords_of(data)) {
            if (c.is_field_coord()) throw UsageError("--data must depend on base coordinates and parameters only");
        }
        const double step = a.length / (a.n - 1);
        const Grid g{spec.coords, {0, 0}, {step, step}, {a.n, a.n}};
        s = solve_kg_grid(spec, g, [&](const std::vector<double>& p) {
            sym::CoordMap<double> pt{{Coord::base(0), p[0]}, {Coord::base(1), p[1]}};
            add_params(spec, numeric, pt);
            return std::vector<double>{sym::eval_double(data, pt, numeric.interp)};
        }, numeric);
    } else {
        throw UsageError("simulate handles one-dimensional mechanics and a phi_tx + b phi = 0 field equations");
    }
    for (const auto& w : s.warnings) std::cerr << "covar: " << w << "\n";
    out << write_section(s);
    return 0;
}

int cmd_dump_section(const Args& a, std::ostream& out) {
    std::ifstream in(a.file);
    if (!in) throw UsageError("cannot open " + a.file);
    std::stringstream buf;
    buf << in.rdbuf();
    DiscreteSection s;
    try {
        s = read_section(buf.str());
    } catch (const Error& e) {
        throw UsageError(a.file + ": " + e.what());
    }
    out << "dim = " << s.grid.dim() << "\npoints = " << s.grid.size() << "\n";
    for (int k = 0; k < s.grid.dim(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        char buf2[96];
        std::snprintf(buf2, sizeof buf2, "%.17g %.17g %d", s.grid.origin[kk], s.grid.spacing[kk], s.grid.extents[kk]);
        out << "axis." << s.grid.coords[kk] << " = " << buf2 << "\n";
    }
    for (const auto& sl : s.slots) out << "slot = " << sl.first << "[" << sl.second << "]\n";
    if (!a.theory.empty()) {
        const TheorySpec spec = load(a.theory);
        const NumericOptions numeric = numeric_options(a);
        char buf2[64];
        std::snprintf(buf2, sizeof buf2, "%.6e", max_el_residual(spec, s, numeric));
        out << "max_el_residual = " << buf2 << "\n";
        if (lagrangian_order(spec) <= 1) {
            std::snprintf(buf2, sizeof buf2, "%.12e", discrete_action(spec, s, numeric));
            out << "action = " << buf2 << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Covariantization and verification of Lagrangian field theories"};
    app.require_subcommand(1);
    Args a;

    auto add_file = [&](CLI::App* sub, bool required = true) {
        auto* opt = sub->add_option("file", a.file, "theory file");
        if (required) opt->required();
    };
    auto add_mode = [&](CLI::App* sub) {
        sub->add_option("--mode", a.mode, "horizontal, background or vertical")
            ->check(CLI::IsMember({"horizontal", "background", "vertical"}));
        sub->add_option("--action", a.action, "vertical action: shift or minimal")->check(CLI::IsMember({"shift", "minimal"}));
        sub->add_option("--rep", a.rep, "representation for minimal coupling (so2, so3)");
    };
    auto add_params = [&](CLI::App* sub) {
        sub->add_option("--param", a.params, "parameter value name=value (default 1)");
    };
    auto add_output = [&](CLI::App* sub) { sub->add_option("-o", a.output, "output path"); };

    auto* parse = app.add_subcommand("parse", "validate and print a theory");
    add_file(parse);
    add_output(parse);

    auto* cov = app.add_subcommand("covariantize", "print the covariantized theory");
    add_file(cov);
    add_mode(cov);
    add_output(cov);

    auto* el = app.add_subcommand("el", "Euler-Lagrange residuals");
    auto* sem = app.add_subcommand("sem", "canonical stress-energy-momentum tensor");
    auto* en = app.add_subcommand("energy", "energy -t^0_0");
    for (auto* sub : {el, sem, en}) {
        add_file(sub);
        add_mode(sub);
        add_output(sub);
    }

    auto* verify = app.add_subcommand("verify", "run verification checks");
    add_file(verify, false);
    add_mode(verify);
    add_params(verify);
    add_output(verify);
    auto* checks = verify->add_option("--checks", a.checks, "comma-separated checks");
    verify->add_flag("--all", a.all, "every applicable check; the bundled suite without a file")->excludes(checks);
    verify->add_option("--samples", a.samples, "samples per sampled check")->check(CLI::PositiveNumber);
    verify->add_option("--seed", a.seed, "random seed");
    verify->add_option("--tol", a.tol, "tolerance override")->check(CLI::NonNegativeNumber);
    verify->add_option("--format", a.format, "text or records")->check(CLI::IsMember({"text", "records"}));

    auto* sim = app.add_subcommand("simulate", "solve the field equations and print the section");
    add_file(sim);
    add_params(sim);
    add_output(sim);
    sim->add_option("--q0", a.q0, "initial values");
    sim->add_option("--v0", a.v0, "initial velocities");
    sim->add_option("--t0", a.t0, "start time");
    sim->add_option("--t1", a.t1, "end time");
    sim->add_option("--step", a.h, "step")->check(CLI::PositiveNumber);
    sim->add_option("--data", a.data, "characteristic data phi(t, x) for two-dimensional theories");
    sim->add_option("--n", a.n, "grid points per axis");
    sim->add_option("--length", a.length, "side of the square domain")->check(CLI::PositiveNumber);

    auto* dump = app.add_subcommand("dump-section", "summarize a section file");
    dump->add_option("section", a.file, "section file")->required();
    dump->add_option("--theory", a.theory, "theory for residual and action");
    add_params(dump);
    add_output(dump);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::ostringstream out;
    int code = 0;
    try {
        if (*parse) code = cmd_parse(a, out);
        else if (*cov) code = cmd_covariantize(a, out);
        else if (*el) code = cmd_el(a, out);
        else if (*sem) code = cmd_sem(a, out);
        else if (*en) code = cmd_energy(a, out);
        else if (*verify) code = cmd_verify(a, out);
        else if (*sim) code = cmd_simulate(a, out);
        else if (*dump) code = cmd_dump_section(a, out);
    } catch (const UsageError& e) {
        std::cerr << "covar: " << e.what() << "\n";
        return 2;
    } catch (const SyntaxError& e) {
        std::cerr << "covar: " << e.what() << "\n";
        return 2;
    } catch (const UnsupportedIndex& e) {
        std::cerr << "covar: " << e.what() << "\n";
        return 2;
    } catch (const AnsatzViolation& e) {
        std::cerr << "covar: " << e.what() << "\n";
        return 2;
    } catch (const UnsupportedAction& e) {
        std::cerr << "covar: " << e.what() << "\n";
        return 2;
    } catch (const OrderOverflow& e) {
        std::cerr << "covar: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "covar: internal error: " << e.what() << "\n";
        return 3;
    }

    if (a.output.empty()) {
        std::cout << out.str();
    } else {
        std::ofstream f(a.output, std::ios::binary);
        if (!f) {
            std::cerr << "covar: cannot write " << a.output << "\n";
            return 2;
        }
        f << out.str();
    }
    return code;
}
