#pragma once

// Field theory declarations and the line-oriented theory DSL.
//
//   theory kg1
//   base 2 (t, x)
//   param m
//   field phi[1] : scalar variational
//   lagrangian D[phi;t]*D[phi;x] - (1/2)*m^2*phi^2
//
// Lines starting with `#` are comments. A line starting with whitespace
// continues the preceding `lagrangian` line.

#include "covar/symexpr.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace covar {

using sym::Coord;
using sym::Expr;
using sym::MultiIndex;
using sym::Rational;

enum class FieldKind { Variational, Background, Covariance };

/// Transformation law of a field under base diffeomorphisms.
///   Scalar        y' = y                       (also multiplets)
///   Covector      A_mu                          index 1
///   MetricInverse packed g^{mu nu}, mu <= nu    index 1, plus vol slot
///   LieOneForm    A_{k mu} at index k*d + mu    index 1
///   Diffeo        point map x^a (covariance)    index 0
enum class Geom { Scalar, Covector, MetricInverse, LieOneForm, Diffeo };

struct FieldDecl {
    std::string name;
    int components = 1;
    FieldKind kind = FieldKind::Variational;
    Geom geom = Geom::Scalar;
    int diff_index = 0;

    /// Component slots as they appear in coordinates; metric inverses carry
    /// an extra sym::kVolumeSlot for sqrt|det g|.
    [[nodiscard]] std::vector<int> slots() const;
    [[nodiscard]] Coord value(int slot) const;
    [[nodiscard]] Coord jet(int slot, const MultiIndex& multi) const;

    friend bool operator==(const FieldDecl&, const FieldDecl&) = default;
};

/// Differential index implied by a geometric kind.
int diff_index_of(Geom g);

/// Packed position of g^{mu nu} (mu <= nu) in a metric_inverse field.
int metric_slot(int mu, int nu, int dim);

struct TheorySpec {
    std::string name;
    int base_dim = 1;
    std::vector<std::string> coords;
    std::vector<FieldDecl> fields;
    std::vector<std::string> params;
    Expr lagrangian;
    int order = 1;

    [[nodiscard]] const FieldDecl* find_field(std::string_view field) const;
    [[nodiscard]] const FieldDecl* covariance_field(Geom geom) const;
    [[nodiscard]] bool has_kind(FieldKind kind) const;
    [[nodiscard]] sym::Naming naming() const;
    [[nodiscard]] Expr D(const Expr& e, int mu) const { return sym::total_derivative(e, mu, base_dim); }
    [[nodiscard]] std::string render(const Expr& e) const { return sym::render(e, naming()); }
    [[nodiscard]] Expr parse(std::string_view expr_text) const;

    friend bool operator==(const TheorySpec&, const TheorySpec&) = default;
};

std::string to_string(FieldKind kind);
std::string to_string(Geom geom);

/// Parses and validates; throws SyntaxError or ValidationError.
TheorySpec parse_theory(std::string_view text);
TheorySpec load_theory(const std::filesystem::path& path);

/// Empty iff the spec satisfies every invariant (including Ansatz A1/A2).
std::vector<std::string> validate(const TheorySpec& spec);

/// DSL text; parse_theory(render_theory(s)) == s.
std::string render_theory(const TheorySpec& spec);

/// Base, then per field: values, then jets by order, component, multi-index.
std::vector<Coord> jet_coords(const TheorySpec& spec, int upto);

/// Highest jet order of any field coordinate in the Lagrangian.
int lagrangian_order(const TheorySpec& spec);

}  // namespace covar
