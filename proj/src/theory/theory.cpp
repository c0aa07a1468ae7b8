#include "covar/theory.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace covar {

using sym::CoordKind;

// ---------------------------------------------------------------------------
// FieldDecl

int diff_index_of(Geom g) {
    switch (g) {
        case Geom::Scalar:
        case Geom::Diffeo: return 0;
        default: return 1;
    }
}

int metric_slot(int mu, int nu, int dim) {
    if (mu > nu) std::swap(mu, nu);
    return mu * dim - mu * (mu - 1) / 2 + (nu - mu);
}

std::vector<int> FieldDecl::slots() const {
    std::vector<int> out;
    for (int i = 0; i < components; ++i) out.push_back(i);
    if (geom == Geom::MetricInverse) out.push_back(sym::kVolumeSlot);
    return out;
}

Coord FieldDecl::value(int slot) const {
    return geom == Geom::Diffeo ? Coord::cov_base(name, slot) : Coord::fiber(name, slot);
}

Coord FieldDecl::jet(int slot, const MultiIndex& multi) const {
    return geom == Geom::Diffeo ? Coord::cov_jet(name, slot, multi) : Coord::jet(name, slot, multi);
}

std::string to_string(FieldKind kind) {
    switch (kind) {
        case FieldKind::Variational: return "variational";
        case FieldKind::Background: return "background";
        case FieldKind::Covariance: return "covariance";
    }
    return {};
}

std::string to_string(Geom geom) {
    switch (geom) {
        case Geom::Scalar: return "scalar";
        case Geom::Covector: return "covector";
        case Geom::MetricInverse: return "metric_inverse";
        case Geom::LieOneForm: return "lie_oneform";
        case Geom::Diffeo: return "diffeo";
    }
    return {};
}

// ---------------------------------------------------------------------------
// TheorySpec

const FieldDecl* TheorySpec::find_field(std::string_view field) const {
    for (const auto& f : fields) {
        if (f.name == field) return &f;
    }
    return nullptr;
}

const FieldDecl* TheorySpec::covariance_field(Geom geom) const {
    for (const auto& f : fields) {
        if (f.kind == FieldKind::Covariance && f.geom == geom) return &f;
    }
    return nullptr;
}

bool TheorySpec::has_kind(FieldKind kind) const {
    return std::any_of(fields.begin(), fields.end(), [&](const FieldDecl& f) { return f.kind == kind; });
}

sym::Naming TheorySpec::naming() const {
    sym::Naming n;
    n.base = coords;
    for (const auto& f : fields) {
        if (f.components > 1 && f.geom != Geom::Diffeo) n.indexed.insert(f.name);
    }
    return n;
}

namespace {

class SpecResolver : public sym::SymbolResolver {
public:
    explicit SpecResolver(const TheorySpec& spec) : spec_(spec) {}

    std::optional<Coord> resolve(const std::string& name) const override {
        if (auto mu = base_index(name)) return Coord::base(*mu);
        if (std::find(spec_.params.begin(), spec_.params.end(), name) != spec_.params.end()) {
            return Coord::param(name);
        }
        if (const auto* f = spec_.find_field(name); f && f->components == 1 && f->geom != Geom::Diffeo) {
            return f->value(0);
        }
        for (const auto& f : spec_.fields) {
            if (f.geom != Geom::Diffeo || !name.starts_with(f.name)) continue;
            if (auto a = base_index(name.substr(f.name.size())); a && *a < f.components) return f.value(*a);
        }
        return std::nullopt;
    }

    std::optional<Coord> resolve_component(const std::string& name, int component) const override {
        const auto* f = spec_.find_field(name);
        if (!f || component < 0 || component >= f->components) return std::nullopt;
        return f->value(component);
    }

    std::optional<Coord> resolve_volume(const std::string& field) const override {
        const auto* f = spec_.find_field(field);
        if (!f || f->geom != Geom::MetricInverse) return std::nullopt;
        return f->value(sym::kVolumeSlot);
    }

    std::optional<int> base_index(const std::string& name) const override {
        auto it = std::find(spec_.coords.begin(), spec_.coords.end(), name);
        if (it == spec_.coords.end()) return std::nullopt;
        return static_cast<int>(it - spec_.coords.begin());
    }

private:
    const TheorySpec& spec_;
};

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool is_identifier(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    return out;
}

struct Line {
    int number;
    std::string text;
};

class TheoryParser {
public:
    explicit TheoryParser(std::string_view text) {
        int n = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string_view::npos) end = text.size();
            std::string line(text.substr(start, end - start));
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines_.push_back({++n, line});
            start = end + 1;
        }
    }

    TheorySpec parse() {
        TheorySpec spec;
        bool have_base = false;
        bool have_lagrangian = false;
        // Lagrangian text pieces: (line, column of first char, text)
        struct Piece {
            int line;
            int column;
            std::string text;
        };
        std::vector<Piece> lagrangian;
        int lagrangian_line = 0;

        for (std::size_t i = 0; i < lines_.size(); ++i) {
            const auto& [num, raw] = lines_[i];
            const std::string body = trim(raw);
            if (body.empty() || body.front() == '#') continue;
            if (std::isspace(static_cast<unsigned char>(raw.front()))) {
                if (lagrangian.empty() || lagrangian_line == 0) fail(num, 1, "unexpected indented line");
                const std::size_t col = raw.find_first_not_of(" \t");
                lagrangian.push_back({num, static_cast<int>(col) + 1, body});
                continue;
            }
            lagrangian_line = 0;
            const std::size_t sp = body.find_first_of(" \t");
            const std::string keyword = body.substr(0, sp);
            const std::string rest = sp == std::string::npos ? std::string() : trim(body.substr(sp));
            const int rest_col = static_cast<int>(raw.find(rest, keyword.size())) + 1;
            if (keyword == "theory") {
                if (!is_identifier(rest) && !valid_name(rest)) fail(num, rest_col, "expected theory name");
                spec.name = rest;
            } else if (keyword == "base") {
                parse_base(spec, rest, num, rest_col);
                have_base = true;
            } else if (keyword == "param") {
                for (const auto& p : split_list(rest)) {
                    if (!is_identifier(p)) fail(num, rest_col, "bad parameter name '" + p + "'");
                    spec.params.push_back(p);
                }
            } else if (keyword == "field") {
                spec.fields.push_back(parse_field(rest, num, rest_col));
            } else if (keyword == "lagrangian") {
                if (have_lagrangian) fail(num, 1, "duplicate lagrangian");
                have_lagrangian = true;
                if (rest.empty()) fail(num, static_cast<int>(raw.size()) + 1, "empty lagrangian");
                lagrangian.push_back({num, rest_col, rest});
                lagrangian_line = num;
            } else {
                fail(num, 1, "unknown directive '" + keyword + "'");
            }
        }
        if (!have_base) fail(lines_.empty() ? 1 : lines_.back().number, 1, "missing base declaration");
        if (!have_lagrangian) fail(lines_.empty() ? 1 : lines_.back().number, 1, "missing lagrangian");

        // Names must be known before the Lagrangian is resolved.
        std::vector<std::string> early = name_diagnostics(spec);
        if (!early.empty()) throw ValidationError(early);

        std::string joined;
        std::vector<std::pair<std::size_t, const Piece*>> offsets;
        for (const auto& p : lagrangian) {
            if (!joined.empty()) joined += ' ';
            offsets.emplace_back(joined.size(), &p);
            joined += p.text;
        }
        SpecResolver resolver(spec);
        try {
            spec.lagrangian = sym::canonicalize(sym::parse_expr(joined, resolver, 1, 0));
        } catch (const SyntaxError& e) {
            const std::size_t at = static_cast<std::size_t>(e.column() - 1);
            const Piece* piece = offsets.front().second;
            std::size_t base = 0;
            for (const auto& [off, p] : offsets) {
                if (off <= at) {
                    piece = p;
                    base = off;
                }
            }
            const std::string msg = e.what();
            const std::size_t colon = msg.find(": ");
            throw SyntaxError(piece->line, piece->column + static_cast<int>(at - base),
                              colon == std::string::npos ? msg : msg.substr(colon + 2));
        } catch (const PoleHit&) {
            throw SyntaxError(lagrangian.front().line, lagrangian.front().column, "division by zero in lagrangian");
        }
        spec.order = std::max(1, lagrangian_order(spec));
        auto diags = validate(spec);
        if (!diags.empty()) throw ValidationError(diags);
        return spec;
    }

private:
    [[noreturn]] static void fail(int line, int column, const std::string& message) {
        throw SyntaxError(line, column, message);
    }

    static bool valid_name(const std::string& s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
        });
    }

    static void parse_base(TheorySpec& spec, const std::string& rest, int line, int col) {
        const std::size_t open = rest.find('(');
        const std::size_t close = rest.rfind(')');
        if (open == std::string::npos || close == std::string::npos || close < open) {
            fail(line, col, "expected base <n> (<coord>, ...)");
        }
        const std::string count = trim(rest.substr(0, open));
        if (count.empty() || !std::all_of(count.begin(), count.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            fail(line, col, "expected base dimension");
        }
        spec.base_dim = std::stoi(count);
        spec.coords.clear();
        for (const auto& c : split_list(rest.substr(open + 1, close - open - 1))) {
            if (!is_identifier(c)) fail(line, col + static_cast<int>(open) + 1, "bad coordinate name '" + c + "'");
            spec.coords.push_back(c);
        }
        if (!trim(rest.substr(close + 1)).empty()) fail(line, col + static_cast<int>(close) + 1, "trailing text after base");
    }

    static FieldDecl parse_field(const std::string& rest, int line, int col) {
        // name[k] : geom kind
        FieldDecl f;
        const std::size_t open = rest.find('[');
        const std::size_t close = rest.find(']');
        const std::size_t colon = rest.find(':');
        if (open == std::string::npos || close == std::string::npos || colon == std::string::npos || close < open ||
            colon < close) {
            fail(line, col, "expected field <name>[<components>] : <geom> <kind>");
        }
        f.name = trim(rest.substr(0, open));
        if (!is_identifier(f.name)) fail(line, col, "bad field name '" + f.name + "'");
        const std::string count = trim(rest.substr(open + 1, close - open - 1));
        if (count.empty() || !std::all_of(count.begin(), count.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            fail(line, col + static_cast<int>(open) + 1, "expected component count");
        }
        f.components = std::stoi(count);
        std::stringstream words(rest.substr(colon + 1));
        std::string geom;
        std::string kind;
        std::string extra;
        words >> geom >> kind >> extra;
        const int wcol = col + static_cast<int>(colon) + 2;
        if (geom == "scalar") {
            f.geom = Geom::Scalar;
        } else if (geom == "covector") {
            f.geom = Geom::Covector;
        } else if (geom == "metric_inverse") {
            f.geom = Geom::MetricInverse;
        } else if (geom == "lie_oneform") {
            f.geom = Geom::LieOneForm;
        } else if (geom == "diffeo") {
            f.geom = Geom::Diffeo;
        } else {
            fail(line, wcol, "unknown field geometry '" + geom + "'");
        }
        if (kind == "variational") {
            f.kind = FieldKind::Variational;
        } else if (kind == "background") {
            f.kind = FieldKind::Background;
        } else if (kind == "covariance") {
            f.kind = FieldKind::Covariance;
        } else {
            fail(line, wcol, "unknown field kind '" + kind + "'");
        }
        if (!extra.empty()) fail(line, wcol, "trailing text after field kind");
        f.diff_index = diff_index_of(f.geom);
        return f;
    }

    std::vector<Line> lines_;

public:
    static std::vector<std::string> name_diagnostics(const TheorySpec& spec);
};

const std::set<std::string> kReserved = {"D", "vol", "sin", "cos", "exp"};

std::vector<std::string> TheoryParser::name_diagnostics(const TheorySpec& spec) {
    std::vector<std::string> out;
    if (spec.base_dim < 1) out.push_back("base dimension must be at least 1");
    if (static_cast<int>(spec.coords.size()) != spec.base_dim) {
        out.push_back("base declares " + std::to_string(spec.base_dim) + " dimensions but names " +
                      std::to_string(spec.coords.size()) + " coordinates");
    }
    std::set<std::string> names;
    auto claim = [&](const std::string& n, const std::string& what) {
        if (kReserved.contains(n)) out.push_back(what + " '" + n + "' uses a reserved name");
        if (!names.insert(n).second) out.push_back("duplicate name '" + n + "'");
    };
    for (const auto& c : spec.coords) claim(c, "coordinate");
    for (const auto& p : spec.params) claim(p, "parameter");
    for (const auto& f : spec.fields) {
        claim(f.name, "field");
        if (f.geom == Geom::Diffeo) {
            for (const auto& c : spec.coords) claim(f.name + c, "covariance component");
        }
    }
    return out;
}

}  // namespace

Expr TheorySpec::parse(std::string_view expr_text) const {
    SpecResolver resolver(*this);
    return sym::canonicalize(sym::parse_expr(expr_text, resolver));
}

TheorySpec parse_theory(std::string_view text) {
    TheoryParser p(text);
    return p.parse();
}

TheorySpec load_theory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_theory(buf.str());
}

int lagrangian_order(const TheorySpec& spec) {
    return sym::max_order(spec.lagrangian, [](const Coord& c) { return c.is_field_coord(); });
}

std::vector<std::string> validate(const TheorySpec& spec) {
    std::vector<std::string> out = TheoryParser::name_diagnostics(spec);
    const int d = spec.base_dim;

    for (const auto& f : spec.fields) {
        const std::string who = "field " + f.name + ": ";
        if (f.components < 1) out.push_back(who + "needs at least one component");
        switch (f.geom) {
            case Geom::Scalar: break;
            case Geom::Covector:
                if (f.components != d) out.push_back(who + "covector needs " + std::to_string(d) + " components");
                break;
            case Geom::MetricInverse:
                if (f.components != d * (d + 1) / 2) {
                    out.push_back(who + "metric_inverse needs " + std::to_string(d * (d + 1) / 2) + " components");
                }
                break;
            case Geom::LieOneForm:
                if (f.components % d != 0) out.push_back(who + "lie_oneform components must be a multiple of " + std::to_string(d));
                break;
            case Geom::Diffeo:
                if (f.components != d) out.push_back(who + "diffeo needs " + std::to_string(d) + " components");
                if (f.kind != FieldKind::Covariance) out.push_back(who + "diffeo fields must be covariance fields");
                break;
        }
        if (f.diff_index > 1) out.push_back(who + "differential index " + std::to_string(f.diff_index) + " exceeds 1 (Ansatz A2)");
        if (f.diff_index != diff_index_of(f.geom)) {
            out.push_back(who + "differential index " + std::to_string(f.diff_index) + " inconsistent with " + to_string(f.geom));
        }
        if (f.kind == FieldKind::Background && f.geom == Geom::LieOneForm) {
            out.push_back(who + "lie_oneform backgrounds are not supported");
        }
    }

    if (spec.order < 1 || spec.order > 2) out.push_back("order must be 1 or 2");

    for (const auto& c : sym::coords_of(spec.lagrangian)) {
        const std::string label = sym::render(c, spec.naming());
        switch (c.kind()) {
            case CoordKind::Base:
                if (c.index() < 0 || c.index() >= d) out.push_back("lagrangian uses undeclared base coordinate " + label);
                continue;
            case CoordKind::Param:
                if (std::find(spec.params.begin(), spec.params.end(), c.name()) == spec.params.end()) {
                    out.push_back("lagrangian uses undeclared parameter " + label);
                }
                continue;
            default: break;
        }
        const FieldDecl* f = spec.find_field(c.name());
        const bool cov = c.kind() == CoordKind::CovBase || c.kind() == CoordKind::CovJet;
        if (!f || (f->geom == Geom::Diffeo) != cov) {
            out.push_back("lagrangian uses undeclared field coordinate " + label);
            continue;
        }
        const auto slots = f->slots();
        if (std::find(slots.begin(), slots.end(), c.index()) == slots.end()) {
            out.push_back("lagrangian uses undeclared component " + label);
        }
        for (int i = 0; i < c.multi_index().size(); ++i) {
            if (c.multi_index()[i] >= d) out.push_back("lagrangian differentiates along undeclared direction in " + label);
        }
        if (f->kind == FieldKind::Background && c.order() > 0) {
            out.push_back("background field " + f->name + " appears differentiated in " + label +
                          " (Ansatz A1: backgrounds enter only to zeroth order)");
        }
        if (f->kind == FieldKind::Covariance && c.order() > 1) {
            out.push_back("covariance field " + f->name + " appears with jets of order " + std::to_string(c.order()) +
                          " in " + label + "; at most first jets are supported");
        }
        if (c.order() > 2) out.push_back("jet order " + std::to_string(c.order()) + " of " + label + " exceeds 2");
        if (c.order() > spec.order) out.push_back("jet " + label + " exceeds the declared order");
    }
    if (sym::contains_function(spec.lagrangian, false)) {
        // Function heads must not shadow declared names.
        std::set<std::string> names(spec.params.begin(), spec.params.end());
        for (const auto& f : spec.fields) names.insert(f.name);
        for (const auto& c : spec.coords) names.insert(c);
        std::function<void(const Expr&)> walk = [&](const Expr& e) {
            switch (e.kind()) {
                case sym::ExprKind::Function:
                    if (names.contains(e.tag().name)) out.push_back("function name '" + e.tag().name + "' clashes with a declaration");
                    walk(e.argument());
                    break;
                case sym::ExprKind::Power: walk(e.base()); break;
                case sym::ExprKind::Sum:
                case sym::ExprKind::Product:
                    for (const auto& k : e.children()) walk(k);
                    break;
                default: break;
            }
        };
        walk(spec.lagrangian);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string render_theory(const TheorySpec& spec) {
    std::ostringstream out;
    out << "theory " << spec.name << "\n";
    out << "base " << spec.base_dim << " (";
    for (std::size_t i = 0; i < spec.coords.size(); ++i) out << (i ? ", " : "") << spec.coords[i];
    out << ")\n";
    if (!spec.params.empty()) {
        out << "param ";
        for (std::size_t i = 0; i < spec.params.size(); ++i) out << (i ? ", " : "") << spec.params[i];
        out << "\n";
    }
    for (const auto& f : spec.fields) {
        out << "field " << f.name << "[" << f.components << "] : " << to_string(f.geom) << " " << to_string(f.kind) << "\n";
    }
    out << "lagrangian " << spec.render(spec.lagrangian) << "\n";
    return out.str();
}

namespace {

void multi_indices(int dim, int order, int from, std::vector<int>& cur, std::vector<MultiIndex>& out) {
    if (static_cast<int>(cur.size()) == order) {
        out.emplace_back(std::span<const int>(cur));
        return;
    }
    for (int mu = from; mu < dim; ++mu) {
        cur.push_back(mu);
        multi_indices(dim, order, mu, cur, out);
        cur.pop_back();
    }
}

}  // namespace

std::vector<Coord> jet_coords(const TheorySpec& spec, int upto) {
    if (upto < 0 || upto > sym::kMaxJetOrder) throw OrderOverflow("jet order " + std::to_string(upto) + " not supported");
    std::vector<Coord> out;
    for (int mu = 0; mu < spec.base_dim; ++mu) out.push_back(Coord::base(mu));
    std::vector<std::vector<MultiIndex>> by_order(static_cast<std::size_t>(upto) + 1);
    for (int s = 1; s <= upto; ++s) {
        std::vector<int> cur;
        multi_indices(spec.base_dim, s, 0, cur, by_order[static_cast<std::size_t>(s)]);
    }
    for (const auto& f : spec.fields) {
        for (int slot : f.slots()) out.push_back(f.value(slot));
        for (int s = 1; s <= upto; ++s) {
            for (int slot : f.slots()) {
                for (const auto& m : by_order[static_cast<std::size_t>(s)]) out.push_back(f.jet(slot, m));
            }
        }
    }
    return out;
}

}  // namespace covar
