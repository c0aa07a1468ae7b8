#include "covar/symexpr.hpp"

#include "symexpr/node.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace covar::sym {

namespace {

constexpr std::size_t mix(std::size_t h, std::size_t v) noexcept {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

std::size_t hash_string(const std::string& s) noexcept {
    // FNV-1a, stable across platforms and runs.
    std::size_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::size_t hash_rational(const Rational& q) {
    constexpr unsigned long kPrime = 4294967291UL;
    std::size_t h = mpz_fdiv_ui(q.get_num_mpz_t(), kPrime);
    h = mix(h, mpz_fdiv_ui(q.get_den_mpz_t(), kPrime));
    return mix(h, static_cast<std::size_t>(sgn(q) + 1));
}

}  // namespace

// ---------------------------------------------------------------------------
// MultiIndex

MultiIndex::MultiIndex(std::initializer_list<int> indices) {
    for (int mu : indices) push_sorted(mu);
}

MultiIndex::MultiIndex(std::span<const int> indices) {
    for (int mu : indices) push_sorted(mu);
}

void MultiIndex::push_sorted(int mu) {
    if (size_ >= kMaxJetOrder) {
        throw OrderOverflow("jet order exceeds " + std::to_string(kMaxJetOrder));
    }
    auto pos = static_cast<std::size_t>(size_);
    while (pos > 0 && idx_[pos - 1] > mu) {
        idx_[pos] = idx_[pos - 1];
        --pos;
    }
    idx_[pos] = static_cast<std::int8_t>(mu);
    ++size_;
}

MultiIndex MultiIndex::with(int mu) const {
    MultiIndex out = *this;
    out.push_sorted(mu);
    return out;
}

int MultiIndex::multiplicity() const {
    // size! / prod(count_i!)
    int total = 1;
    for (int i = 2; i <= size_; ++i) total *= i;
    int run = 1;
    for (int i = 1; i <= size_; ++i) {
        if (i < size_ && idx_[static_cast<std::size_t>(i)] == idx_[static_cast<std::size_t>(i - 1)]) {
            ++run;
        } else {
            for (int k = 2; k <= run; ++k) total /= k;
            run = 1;
        }
    }
    return total;
}

std::vector<int> MultiIndex::to_vector() const {
    return {idx_.begin(), idx_.begin() + size_};
}

bool operator==(const MultiIndex& a, const MultiIndex& b) noexcept {
    return a.size_ == b.size_ && std::equal(a.idx_.begin(), a.idx_.begin() + a.size_, b.idx_.begin());
}

std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b) noexcept {
    if (auto c = a.size_ <=> b.size_; c != 0) return c;
    for (int i = 0; i < a.size_; ++i) {
        if (auto c = a[i] <=> b[i]; c != 0) return c;
    }
    return std::strong_ordering::equal;
}

// ---------------------------------------------------------------------------
// Coord

Coord::Coord(CoordKind kind, std::string name, int index, MultiIndex multi)
    : kind_(kind), name_(std::move(name)), index_(index), multi_(multi) {
    std::size_t h = static_cast<std::size_t>(kind_) + 1;
    h = mix(h, hash_string(name_));
    h = mix(h, static_cast<std::size_t>(index_ + 7));
    for (int i = 0; i < multi_.size(); ++i) h = mix(h, static_cast<std::size_t>(multi_[i] + 3));
    hash_ = h;
}

Coord Coord::base(int mu) { return {CoordKind::Base, {}, mu, {}}; }
Coord Coord::fiber(std::string field, int component) { return {CoordKind::Fiber, std::move(field), component, {}}; }
Coord Coord::jet(std::string field, int component, MultiIndex multi) {
    if (multi.empty()) return fiber(std::move(field), component);
    return {CoordKind::Jet, std::move(field), component, multi};
}
Coord Coord::cov_base(std::string field, int a) { return {CoordKind::CovBase, std::move(field), a, {}}; }
Coord Coord::cov_jet(std::string field, int a, MultiIndex multi) {
    if (multi.empty()) return cov_base(std::move(field), a);
    return {CoordKind::CovJet, std::move(field), a, multi};
}
Coord Coord::param(std::string name) { return {CoordKind::Param, std::move(name), 0, {}}; }

bool Coord::is_field_coord() const noexcept {
    return kind_ == CoordKind::Fiber || kind_ == CoordKind::Jet || kind_ == CoordKind::CovBase ||
           kind_ == CoordKind::CovJet;
}

Coord Coord::raised(int mu) const {
    switch (kind_) {
        case CoordKind::Fiber:
        case CoordKind::Jet:
            return jet(name_, index_, multi_.with(mu));
        case CoordKind::CovBase:
        case CoordKind::CovJet:
            return cov_jet(name_, index_, multi_.with(mu));
        default:
            throw Error("coordinate has no jet prolongation");
    }
}

Coord Coord::value_coord() const {
    switch (kind_) {
        case CoordKind::Jet: return fiber(name_, index_);
        case CoordKind::CovJet: return cov_base(name_, index_);
        default: return *this;
    }
}

bool operator==(const Coord& a, const Coord& b) noexcept {
    return a.hash_ == b.hash_ && a.kind_ == b.kind_ && a.index_ == b.index_ && a.multi_ == b.multi_ &&
           a.name_ == b.name_;
}

std::strong_ordering operator<=>(const Coord& a, const Coord& b) noexcept {
    if (auto c = a.kind_ <=> b.kind_; c != 0) return c;
    if (auto c = a.name_.compare(b.name_); c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    if (auto c = a.index_ <=> b.index_; c != 0) return c;
    return a.multi_ <=> b.multi_;
}

// ---------------------------------------------------------------------------
// FunctionTag

FunctionTag FunctionTag::builtin(FnKind kind) {
    FunctionTag t;
    t.kind = kind;
    switch (kind) {
        case FnKind::Sin: t.name = "sin"; break;
        case FnKind::Cos: t.name = "cos"; break;
        case FnKind::Exp: t.name = "exp"; break;
        case FnKind::User: break;
    }
    return t;
}

FunctionTag FunctionTag::user(std::string name, int derivative) {
    FunctionTag t;
    t.kind = FnKind::User;
    t.name = std::move(name);
    t.derivative = derivative;
    return t;
}

std::string FunctionTag::display_name() const { return name + std::string(static_cast<std::size_t>(derivative), '\''); }

std::strong_ordering operator<=>(const FunctionTag& a, const FunctionTag& b) {
    if (auto c = a.kind <=> b.kind; c != 0) return c;
    if (auto c = a.name.compare(b.name); c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    return a.derivative <=> b.derivative;
}

// ---------------------------------------------------------------------------
// Expr

namespace {

std::shared_ptr<const detail::Node> make_constant(Rational v) {
    auto n = std::make_shared<detail::Node>();
    n->kind = ExprKind::Constant;
    n->value = std::move(v);
    n->value.canonicalize();
    n->hash = mix(11, hash_rational(n->value));
    return n;
}

const std::shared_ptr<const detail::Node>& zero_node() {
    static const auto z = make_constant(Rational(0));
    return z;
}

}  // namespace

Expr::Expr() : node_(zero_node()) {}
Expr::Expr(int value) : Expr(Rational(value)) {}
Expr::Expr(long value) : Expr(Rational(value)) {}
Expr::Expr(const Rational& value) : node_(make_constant(value)) {}
Expr::Expr(const Coord& coord) : Expr(symbol(coord)) {}

Expr Expr::constant(Rational value) { return Expr(make_constant(std::move(value))); }

Expr Expr::symbol(Coord coord) {
    auto n = std::make_shared<detail::Node>();
    n->kind = ExprKind::Symbol;
    n->hash = mix(23, coord.hash());
    n->coord.emplace(std::move(coord));
    return Expr(std::move(n));
}

Expr Expr::sum(std::vector<Expr> terms) {
    if (terms.empty()) return Expr();
    if (terms.size() == 1) return terms.front();
    auto n = std::make_shared<detail::Node>();
    n->kind = ExprKind::Sum;
    std::size_t h = 31;
    for (const auto& t : terms) h = mix(h, t.hash());
    n->hash = h;
    n->children = std::move(terms);
    return Expr(std::move(n));
}

Expr Expr::product(std::vector<Expr> factors) {
    if (factors.empty()) return Expr(1);
    if (factors.size() == 1) return factors.front();
    auto n = std::make_shared<detail::Node>();
    n->kind = ExprKind::Product;
    std::size_t h = 37;
    for (const auto& f : factors) h = mix(h, f.hash());
    n->hash = h;
    n->children = std::move(factors);
    return Expr(std::move(n));
}

Expr Expr::power(Expr base, long exponent) {
    if (exponent == 1) return base;
    if (exponent == 0) return Expr(1);
    auto n = std::make_shared<detail::Node>();
    n->kind = ExprKind::Power;
    n->exponent = exponent;
    n->hash = mix(mix(41, base.hash()), static_cast<std::size_t>(exponent + 1000));
    n->children.push_back(std::move(base));
    return Expr(std::move(n));
}

Expr Expr::function(FunctionTag tag, Expr argument) {
    auto n = std::make_shared<detail::Node>();
    n->kind = ExprKind::Function;
    std::size_t h = mix(43, hash_string(tag.name));
    h = mix(h, static_cast<std::size_t>(tag.kind));
    h = mix(h, static_cast<std::size_t>(tag.derivative));
    n->hash = mix(h, argument.hash());
    n->tag = std::move(tag);
    n->children.push_back(std::move(argument));
    return Expr(std::move(n));
}

ExprKind Expr::kind() const noexcept { return node_->kind; }

const Rational& Expr::value() const {
    if (kind() != ExprKind::Constant) throw Error("expression is not a constant");
    return node_->value;
}

const Coord& Expr::coord() const {
    if (kind() != ExprKind::Symbol) throw Error("expression is not a coordinate");
    return *node_->coord;
}

std::span<const Expr> Expr::children() const {
    if (kind() != ExprKind::Sum && kind() != ExprKind::Product) return {};
    return node_->children;
}

const Expr& Expr::base() const {
    if (kind() != ExprKind::Power) throw Error("expression is not a power");
    return node_->children.front();
}

long Expr::exponent() const {
    if (kind() != ExprKind::Power) throw Error("expression is not a power");
    return node_->exponent;
}

const FunctionTag& Expr::tag() const {
    if (kind() != ExprKind::Function) throw Error("expression is not a function application");
    return node_->tag;
}

const Expr& Expr::argument() const {
    if (kind() != ExprKind::Function) throw Error("expression is not a function application");
    return node_->children.front();
}

std::size_t Expr::hash() const noexcept { return node_->hash; }

bool Expr::is_zero() const noexcept { return kind() == ExprKind::Constant && sgn(node_->value) == 0; }

bool Expr::is_one() const noexcept { return kind() == ExprKind::Constant && node_->value == 1; }

std::size_t Expr::node_count() const {
    std::size_t n = 1;
    for (const auto& c : node_->children) n += c.node_count();
    return n;
}

std::strong_ordering detail::compare_nodes(const Node& a, const Node& b) noexcept {
    if (&a == &b) return std::strong_ordering::equal;
    if (auto c = a.kind <=> b.kind; c != 0) return c;
    switch (a.kind) {
        case ExprKind::Constant: {
            const int c = cmp(a.value, b.value);
            return c < 0 ? std::strong_ordering::less : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
        }
        case ExprKind::Symbol:
            return *a.coord <=> *b.coord;
        case ExprKind::Power:
            if (auto c = a.children.front() <=> b.children.front(); c != 0) return c;
            return a.exponent <=> b.exponent;
        case ExprKind::Sum:
        case ExprKind::Product: {
            const std::size_t n = std::min(a.children.size(), b.children.size());
            for (std::size_t i = 0; i < n; ++i) {
                if (auto c = a.children[i] <=> b.children[i]; c != 0) return c;
            }
            return a.children.size() <=> b.children.size();
        }
        case ExprKind::Function:
            if (auto c = a.tag <=> b.tag; c != 0) return c;
            return a.children.front() <=> b.children.front();
    }
    return std::strong_ordering::equal;
}

bool operator==(const Expr& a, const Expr& b) noexcept {
    if (a.node_ == b.node_) return true;
    if (a.hash() != b.hash()) return false;
    return detail::compare_nodes(*a.node_, *b.node_) == 0;
}

std::strong_ordering operator<=>(const Expr& a, const Expr& b) noexcept {
    if (a.node_ == b.node_) return std::strong_ordering::equal;
    return detail::compare_nodes(*a.node_, *b.node_);
}

// ---------------------------------------------------------------------------
// Builders

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    return Expr::sum({a, b});
}

Expr operator-(const Expr& a) {
    if (a.is_constant()) return Expr::constant(-a.value());
    return Expr::product({Expr(-1), a});
}

Expr operator-(const Expr& a, const Expr& b) {
    if (b.is_zero()) return a;
    return a + (-b);
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero() || b.is_zero()) return Expr();
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    return Expr::product({a, b});
}

Expr operator/(const Expr& a, const Expr& b) { return a * Expr::power(b, -1); }

Expr pow(const Expr& base, long exponent) { return Expr::power(base, exponent); }
Expr sin(const Expr& arg) { return Expr::function(FunctionTag::builtin(FnKind::Sin), arg); }
Expr cos(const Expr& arg) { return Expr::function(FunctionTag::builtin(FnKind::Cos), arg); }
Expr exp(const Expr& arg) { return Expr::function(FunctionTag::builtin(FnKind::Exp), arg); }
Expr apply(const std::string& user_function, const Expr& arg, int derivative) {
    return Expr::function(FunctionTag::user(user_function, derivative), arg);
}

// ---------------------------------------------------------------------------
// Queries

namespace {

void collect_coords(const Expr& e, std::set<Coord>& out) {
    switch (e.kind()) {
        case ExprKind::Constant: return;
        case ExprKind::Symbol: out.insert(e.coord()); return;
        case ExprKind::Power: collect_coords(e.base(), out); return;
        case ExprKind::Function: collect_coords(e.argument(), out); return;
        case ExprKind::Sum:
        case ExprKind::Product:
            for (const auto& c : e.children()) collect_coords(c, out);
            return;
    }
}

}  // namespace

std::set<Coord> coords_of(const Expr& e) {
    std::set<Coord> out;
    collect_coords(e, out);
    return out;
}

bool contains_function(const Expr& e, bool transcendental_only) {
    switch (e.kind()) {
        case ExprKind::Constant:
        case ExprKind::Symbol: return false;
        case ExprKind::Power: return contains_function(e.base(), transcendental_only);
        case ExprKind::Function:
            if (!transcendental_only || e.tag().kind != FnKind::User) return true;
            return contains_function(e.argument(), transcendental_only);
        case ExprKind::Sum:
        case ExprKind::Product:
            return std::any_of(e.children().begin(), e.children().end(),
                               [&](const Expr& c) { return contains_function(c, transcendental_only); });
    }
    return false;
}

int max_order(const Expr& e, const std::function<bool(const Coord&)>& pred) {
    int best = 0;
    for (const auto& c : coords_of(e)) {
        if (pred(c)) best = std::max(best, c.order());
    }
    return best;
}

std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 over the pair
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace covar::sym
