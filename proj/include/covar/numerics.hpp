#pragma once

// Desk-scale solvers and finite-difference evaluation of jets on sampled
// sections.

#include "covar/variational.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace covar {

/// Parameter values (missing parameters default to 1) and the numeric
/// meaning of user functions.
struct NumericOptions {
    std::map<std::string, double> params;
    sym::Interpretation interp = sym::default_interpretation();
};

/// Uniform lattice; flat indices are row-major with the last axis fastest.
struct Grid {
    std::vector<std::string> coords;
    std::vector<double> origin;
    std::vector<double> spacing;
    std::vector<int> extents;  // points per axis

    [[nodiscard]] int dim() const { return static_cast<int>(extents.size()); }
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::size_t flat(const std::vector<int>& index) const;
    [[nodiscard]] std::vector<int> unflat(std::size_t flat) const;
    [[nodiscard]] std::vector<double> point(const std::vector<int>& index) const;
};

struct DiscreteSection {
    Grid grid;
    std::vector<FieldSlot> slots;
    std::vector<std::vector<double>> values;  // values[slot][flat]
    std::vector<bool> fixed;                  // prescribed boundary data
    std::vector<std::string> warnings;

    [[nodiscard]] int slot_index(const FieldSlot& slot) const;
    /// Throws Error unless extents, spacing and array sizes are consistent.
    void check() const;
};

/// Plain-text table, one grid point per line:
///
///   # section <dim>
///   # coords t x
///   # origin 0 0
///   # spacing 0.01 0.01
///   # extents 101 101
///   # columns t x phi[0] fixed
///   0 0 1 1
///
/// Columns are the base coordinates, then one column per field slot
/// (`name[slot]`), then the fixed flag.
std::string write_section(const DiscreteSection& section);
DiscreteSection read_section(std::string_view text);

/// Field values at a base point, one entry per requested slot.
using SectionFn = std::function<std::vector<double>(const std::vector<double>&)>;

/// Tensor-product cubic Lagrange interpolation of the given slots.
SectionFn interpolate(const DiscreteSection& section, const std::vector<FieldSlot>& slots);

/// Diffeomorphism of the base with a closed-form inverse.
struct PointMap {
    int dim = 1;
    std::function<std::vector<double>(const std::vector<double>&)> forward;
    std::function<std::vector<double>(const std::vector<double>&)> inverse;

    static PointMap identity(int dim);
    /// x -> a x + b.
    static PointMap affine(const std::vector<std::vector<double>>& a, const std::vector<double>& b);
    /// t -> t + c t^3 on a one-dimensional base, c >= 0.
    static PointMap cubic(double c);
    /// (t, x) -> (t + alpha t^2, x + beta t^2), a diffeomorphism of {1 + 2 alpha t > 0}.
    static PointMap quadratic_shear(double alpha, double beta);
};

/// Jet coordinates of the given slots at `x` by centered differences with
/// steps `h` (order <= 2), plus base coordinates.
sym::CoordMap<double> fd_jets(const TheorySpec& spec, const std::vector<FieldSlot>& slots, const SectionFn& f,
                              const std::vector<double>& x, const std::vector<double>& h, int order);

/// Adds parameter values of `spec` to a point.
void add_params(const TheorySpec& spec, const NumericOptions& options, sym::CoordMap<double>& point);

/// Largest |EL residual| over interior grid points, jets by centered
/// differences of the section's values.
double max_el_residual(const TheorySpec& spec, const DiscreteSection& section, const NumericOptions& options = {});

/// Known function of t with derivatives 0..2.
using Trajectory = std::function<double(double t, int derivative)>;

struct MechanicsOptions : NumericOptions {
    /// Slots held to given trajectories instead of being integrated.
    std::map<FieldSlot, Trajectory> prescribed;
};

/// Classical RK4 on the first-order form of the EL system of a
/// one-dimensional first-order theory. `q0` and `v0` list the integrated
/// slots in declaration order. Adds a StiffnessWarning to `warnings` when the
/// energy of an autonomous system drifts by more than 1% in one step.
DiscreteSection integrate_mechanics(const TheorySpec& spec, const std::vector<double>& q0, const std::vector<double>& v0,
                                    double t0, double t1, double h, const MechanicsOptions& options = {});

/// Field equation a phi_tx + b phi = 0 of a single scalar on a
/// two-dimensional base, with a and b evaluated at the parameter values.
struct KGForm {
    std::string field;
    double a = 0;
    double b = 0;
    Expr residual;
};

std::optional<KGForm> kg_form(const TheorySpec& spec, const NumericOptions& options = {});

/// Characteristic marching for EL = a phi_tx + b phi (a, b constant) on a
/// two-dimensional grid; `data` supplies phi on the lines t = t0 and x = x0.
/// Throws UnstableScheme if the interior residual exceeds ten times its value
/// next to the data lines.
DiscreteSection solve_kg_grid(const TheorySpec& spec, const Grid& grid, const SectionFn& data,
                              const NumericOptions& options = {});

/// Midpoint-rule quadrature of L over the cells of the grid; values and
/// first jets at cell centres from corner averages and differences.
double discrete_action(const TheorySpec& spec, const DiscreteSection& section, const NumericOptions& options = {});

/// (S[y + eps b] - S[y - eps b]) / (2 eps) for a bump b added to one slot.
double first_variation(const TheorySpec& spec, const DiscreteSection& section, const FieldSlot& slot,
                       const std::function<double(const std::vector<double>&)>& bump, double eps,
                       const NumericOptions& options = {});

/// log2(e[i] / e[i+1]) for a sequence of errors at halved steps.
std::vector<double> observed_orders(const std::vector<double>& errors);

}  // namespace covar
