#pragma once

// Symbolic expressions over exact rationals in jet coordinates.
//
// Expr is an immutable tree with shared nodes. Builders (operator+, etc.) do
// not simplify; canonicalize() maps a tree to its normal form
//
//     N / (S_1^e_1 * ... * S_k^e_k)
//
// where N is a Laurent polynomial in atoms (coordinates and function
// applications) and each S_i is a primitive, monomial-free polynomial with
// at least two terms. N is zero iff the expression is identically zero as a
// rational function of its atoms.
//
// Node order used for canonical trees:
//   constants < coordinates < powers < products < sums < functions
// Coordinates are ordered by kind (Base, Fiber, Jet, CovBase, CovJet, Param),
// then field name, then component index, then multi-index.

#include "covar/errors.hpp"

#include <gmpxx.h>

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace covar::sym {

using Rational = mpq_class;

/// Highest jet order a coordinate may carry. Lagrangians are limited to
/// order 2 by validation; order 3 is reachable only transiently, e.g. when
/// differentiating a second-order Euler-Lagrange residual.
inline constexpr int kMaxJetOrder = 3;

/// Component slot holding sqrt|det g| of a metric background field.
inline constexpr int kVolumeSlot = -1;

/// Sorted multiset of base indices.
class MultiIndex {
public:
    MultiIndex() = default;
    MultiIndex(std::initializer_list<int> indices);
    explicit MultiIndex(std::span<const int> indices);

    [[nodiscard]] int size() const noexcept { return size_; }
    [[nodiscard]] bool empty() const noexcept { return size_ == 0; }
    [[nodiscard]] int operator[](int i) const noexcept { return idx_[static_cast<std::size_t>(i)]; }

    /// Multi-index with `mu` added; throws OrderOverflow past kMaxJetOrder.
    [[nodiscard]] MultiIndex with(int mu) const;

    /// Number of distinct orderings of this multiset (mixed-partial multiplicity).
    [[nodiscard]] int multiplicity() const;

    [[nodiscard]] std::vector<int> to_vector() const;

    friend bool operator==(const MultiIndex& a, const MultiIndex& b) noexcept;
    friend std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b) noexcept;

private:
    void push_sorted(int mu);

    std::array<std::int8_t, kMaxJetOrder> idx_{};
    std::uint8_t size_ = 0;
};

enum class CoordKind : std::uint8_t { Base, Fiber, Jet, CovBase, CovJet, Param };

/// A classified coordinate symbol on (covariantized) jet space.
///
/// - Base:    x^mu                 index = mu
/// - Fiber:   component of a field index = component (kVolumeSlot for vol[g])
/// - Jet:     y^A_{I}              index = component, multi = I
/// - CovBase: x^a of a point-map covariance field
/// - CovJet:  x^a_{I}
/// - Param:   named constant
class Coord {
public:
    static Coord base(int mu);
    static Coord fiber(std::string field, int component);
    static Coord jet(std::string field, int component, MultiIndex multi);
    static Coord cov_base(std::string field, int a);
    static Coord cov_jet(std::string field, int a, MultiIndex multi);
    static Coord param(std::string name);

    [[nodiscard]] CoordKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] int index() const noexcept { return index_; }
    [[nodiscard]] const MultiIndex& multi_index() const noexcept { return multi_; }
    [[nodiscard]] int order() const noexcept { return multi_.size(); }

    /// True for Fiber/Jet/CovBase/CovJet.
    [[nodiscard]] bool is_field_coord() const noexcept;

    /// Coordinate representing D_mu of this one (Fiber->Jet, Jet->higher Jet,
    /// CovBase->CovJet). Not defined for Base or Param.
    [[nodiscard]] Coord raised(int mu) const;

    /// Underlying zeroth-order coordinate (drops the multi-index).
    [[nodiscard]] Coord value_coord() const;

    [[nodiscard]] std::size_t hash() const noexcept { return hash_; }

    friend bool operator==(const Coord& a, const Coord& b) noexcept;
    friend std::strong_ordering operator<=>(const Coord& a, const Coord& b) noexcept;

private:
    Coord(CoordKind kind, std::string name, int index, MultiIndex multi);

    CoordKind kind_ = CoordKind::Base;
    std::string name_;
    int index_ = 0;
    MultiIndex multi_;
    std::size_t hash_ = 0;
};

struct CoordHash {
    std::size_t operator()(const Coord& c) const noexcept { return c.hash(); }
};

template <class T>
using CoordMap = std::unordered_map<Coord, T, CoordHash>;

enum class ExprKind : std::uint8_t { Constant, Symbol, Power, Product, Sum, Function };

enum class FnKind : std::uint8_t { Sin, Cos, Exp, User };

/// Function head; `derivative` counts formal derivatives (V, V', V'', ...).
struct FunctionTag {
    FnKind kind = FnKind::User;
    std::string name;
    int derivative = 0;

    [[nodiscard]] static FunctionTag builtin(FnKind kind);
    [[nodiscard]] static FunctionTag user(std::string name, int derivative = 0);
    [[nodiscard]] std::string display_name() const;

    friend bool operator==(const FunctionTag&, const FunctionTag&) = default;
    friend std::strong_ordering operator<=>(const FunctionTag& a, const FunctionTag& b);
};

namespace detail {
struct Node;
}

class Expr {
public:
    Expr();  // zero
    Expr(int value);  // NOLINT(google-explicit-constructor)
    Expr(long value);  // NOLINT(google-explicit-constructor)
    Expr(const Rational& value);  // NOLINT(google-explicit-constructor)
    Expr(const Coord& coord);  // NOLINT(google-explicit-constructor)

    static Expr constant(Rational value);
    static Expr symbol(Coord coord);
    static Expr sum(std::vector<Expr> terms);
    static Expr product(std::vector<Expr> factors);
    static Expr power(Expr base, long exponent);
    static Expr function(FunctionTag tag, Expr argument);

    [[nodiscard]] ExprKind kind() const noexcept;
    [[nodiscard]] const Rational& value() const;       // Constant
    [[nodiscard]] const Coord& coord() const;          // Symbol
    [[nodiscard]] std::span<const Expr> children() const;  // Sum / Product
    [[nodiscard]] const Expr& base() const;            // Power
    [[nodiscard]] long exponent() const;               // Power
    [[nodiscard]] const FunctionTag& tag() const;      // Function
    [[nodiscard]] const Expr& argument() const;        // Function

    [[nodiscard]] std::size_t hash() const noexcept;
    [[nodiscard]] bool is_constant() const noexcept { return kind() == ExprKind::Constant; }
    [[nodiscard]] bool is_zero() const noexcept;
    [[nodiscard]] bool is_one() const noexcept;
    [[nodiscard]] std::size_t node_count() const;

    friend bool operator==(const Expr& a, const Expr& b) noexcept;
    friend std::strong_ordering operator<=>(const Expr& a, const Expr& b) noexcept;

private:
    explicit Expr(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const detail::Node> node_;
};

struct ExprHash {
    std::size_t operator()(const Expr& e) const noexcept { return e.hash(); }
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr pow(const Expr& base, long exponent);
Expr sin(const Expr& arg);
Expr cos(const Expr& arg);
Expr exp(const Expr& arg);
Expr apply(const std::string& user_function, const Expr& arg, int derivative = 0);

/// Deterministic normal form (see file comment).
Expr canonicalize(const Expr& e);

/// True iff canonicalize(e) is the zero constant.
bool is_canonical_zero(const Expr& e);

/// Generic derivation: Coord nodes map to `coord_derivative(c)`; the
/// function-, power- and product rules are applied structurally. Result is
/// canonicalized.
Expr derive(const Expr& e, const std::function<Expr(const Coord&)>& coord_derivative);

/// Formal partial derivative treating every distinct Coord as independent.
Expr partial(const Expr& e, const Coord& c);

/// Total derivative D_mu in a base of dimension `base_dim`:
///   D_mu e = de/dx^mu + sum_c (D_mu c) de/dc
/// over all field coordinates c occurring in e. Throws OrderOverflow when a
/// jet of order > kMaxJetOrder would be required.
Expr total_derivative(const Expr& e, int mu, int base_dim);

using Substitution = std::map<Coord, Expr>;

/// Simultaneous substitution followed by canonicalization.
Expr substitute(const Expr& e, const Substitution& map);

std::set<Coord> coords_of(const Expr& e);
bool contains_function(const Expr& e, bool transcendental_only);

/// Highest jet order among coordinates satisfying `pred` (0 if none).
int max_order(const Expr& e, const std::function<bool(const Coord&)>& pred);

// ---------------------------------------------------------------------------
// Evaluation

/// Exact rational or floating value.
class Number {
public:
    Number() : v_(Rational(0)) {}
    Number(Rational q) : v_(std::move(q)) {}  // NOLINT(google-explicit-constructor)
    Number(double d) : v_(d) {}               // NOLINT(google-explicit-constructor)

    [[nodiscard]] bool is_exact() const noexcept { return std::holds_alternative<Rational>(v_); }
    [[nodiscard]] const Rational& exact() const { return std::get<Rational>(v_); }
    [[nodiscard]] double to_double() const;

    friend bool operator==(const Number& a, const Number& b);

private:
    std::variant<Rational, double> v_;
};

/// Numeric meaning of user functions (and their formal derivatives). Returns
/// nullopt when the tag is unknown.
using Interpretation = std::function<std::optional<double>(const FunctionTag&, double)>;

/// Numeric value of builtin functions and their derivatives.
double eval_builtin(const FunctionTag& tag, double x);

/// Fixed smooth stand-in for user functions: f(u) = exp(u/2) + u^2/2, and
/// its derivatives.
Interpretation default_interpretation();

/// Exact result when every point value is exact and no function nodes occur;
/// floating otherwise. Throws PoleHit on a vanishing denominator and
/// Inconclusive when a user function has no interpretation.
Number eval_at(const Expr& e, const std::map<Coord, Number>& point, const Interpretation& interp = {});

/// Fast floating evaluation.
double eval_double(const Expr& e, const CoordMap<double>& point, const Interpretation& interp = {});

/// Exact evaluation; user function values come from `user_value`, builtin
/// transcendental functions throw Inconclusive.
using ExactInterpretation = std::function<Rational(const FunctionTag&, const Rational&)>;
Rational eval_exact(const Expr& e, const CoordMap<Rational>& point, const ExactInterpretation& user_value = {});

// ---------------------------------------------------------------------------
// Identity testing

struct IdentityOptions {
    int trials = 32;
    std::uint64_t seed = 0;
    /// Numerators and denominators of sample values are drawn from [1, height].
    long height = 1L << 16;
};

/// canonicalize(e1 - e2) == 0, otherwise exact-rational sampling at
/// `trials` points. User functions are treated as free functions: each
/// (tag, argument value) pair receives an independent pseudo-random value.
/// Throws Inconclusive if builtin transcendental functions survive
/// canonicalization.
bool equal_identically(const Expr& e1, const Expr& e2, int trials, std::uint64_t seed);
bool equal_identically(const Expr& e1, const Expr& e2, const IdentityOptions& options);

/// Pseudo-random stream for trial `index` of a run seeded with `seed`.
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index);

// ---------------------------------------------------------------------------
// Text

/// Names used when rendering coordinates: base coordinate names. Covariance
/// coordinates render as `X` + base name (e.g. `Xt`).
struct Naming {
    std::vector<std::string> base;
    /// Fields with more than one component render as `f[i]`, others as `f`.
    std::set<std::string> indexed;

    [[nodiscard]] std::string base_name(int mu) const;
};

std::string render(const Coord& c, const Naming& naming);
std::string render(const Expr& e, const Naming& naming);

/// Resolves identifiers while parsing expression text.
class SymbolResolver {
public:
    virtual ~SymbolResolver() = default;
    /// Plain identifier: coordinate, parameter, single-component field or
    /// covariance alias.
    virtual std::optional<Coord> resolve(const std::string& name) const = 0;
    /// `name[i]`.
    virtual std::optional<Coord> resolve_component(const std::string& name, int component) const = 0;
    /// `vol[name]`.
    virtual std::optional<Coord> resolve_volume(const std::string& field) const = 0;
    /// Base coordinate index for a name used inside `D[...;...]`.
    virtual std::optional<int> base_index(const std::string& name) const = 0;
};

/// Parses infix expression text: `+ - * / ^`, integer exponents, rationals,
/// decimals, `D[f;mu,...]`, `f[i]`, `vol[g]`, `sin/cos/exp`, and user
/// functions with formal-derivative primes (`V''(q)`).
/// `line` and `column_offset` position error messages.
Expr parse_expr(std::string_view text, const SymbolResolver& resolver, int line = 1, int column_offset = 0);

}  // namespace covar::sym
