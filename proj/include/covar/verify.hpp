#pragma once

// Checkers for the covariance, vacuous-field-equation and conservation
// identities, with structured reports.

#include "covar/numerics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace covar {

enum class Status { Pass, Fail, Inconclusive };

std::string to_string(Status status);

struct CaseRecord {
    std::string id;
    double residual = 0;
    Status status = Status::Pass;
    std::string note;
};

struct Report {
    std::string check;
    std::string subject;
    Status status = Status::Pass;
    double worst_residual = 0;
    double tolerance = 0;
    int samples = 0;
    std::uint64_t seed = 0;
    /// Negative control: the check is meant to fail.
    bool expected_failure = false;
    std::vector<CaseRecord> details;

    /// Appends a case judged against `tolerance`.
    void add(std::string id, double residual, std::string note = {});
    void add_inconclusive(std::string id, std::string note);
    /// Pass, or Fail for an expected failure.
    [[nodiscard]] bool ok() const;
};

/// Flat key-value document.
std::string to_text(const Report& report);
/// One line per case: check, subject:case, residual, status.
std::string to_records(const Report& report);

inline constexpr int kDefaultSamples = 100;
inline constexpr std::uint64_t kDefaultSeed = 42;

enum class SymmetryDraw { Random, Identity };

/// Samples jet points and symmetries and compares L(g.gamma) with L(gamma).
/// The symmetry group follows the covariance fields of `spec`:
///   diffeo or none  base diffeomorphisms x = psi(x'), psi near the identity;
///                   L must transform as a density
///   scalar eta      A -> A + df, eta -> eta - f for each variational covector
///   lie_oneform     local rotations g (Cayley transform of the generators),
///                   phi -> g phi, A -> g A g^-1 - dg g^-1
/// Exact rational arithmetic unless user functions are present.
/// SymmetryDraw::Identity draws the same streams but with g = id.
Report check_covariance(const TheorySpec& spec, int samples = kDefaultSamples, std::uint64_t seed = kDefaultSeed,
                        double tol = 1e-9, SymmetryDraw draw = SymmetryDraw::Random);

/// Invariance under A -> A + df alone (covariance fields untouched).
Report check_gauge_shift(const TheorySpec& spec, int samples = kDefaultSamples, std::uint64_t seed = kDefaultSeed,
                         double tol = 1e-9);

/// Off-shell identity making the covariance field equations redundant:
///   diffeo X      EL_X^a + sum_y EL_y y_mu x^mu_a = 0, or with `original`
///                 EL_X^a + sum_y (delta L / delta y)(spatial) y_a det J = 0
///   shift eta     EL_eta + sum_mu D_mu EL_{A_mu} = 0
///   lie_oneform   sum_y EL_y T_k y + sum EL_{A_j mu} c_kl^j A_l mu + D_mu EL_{A_k mu} = 0
Report check_vacuous_el(const TheorySpec& spec_tilde, const TheorySpec* original = nullptr, std::uint64_t seed = kDefaultSeed);

struct CorrespondenceCase {
    PointMap eta;                          // body -> space
    SectionFn phi;                         // solution of the original theory
    std::vector<std::vector<double>> points;  // body sample points
    double h = 1e-3;                       // finite-difference step
    NumericOptions numeric;
};

/// EL residuals of spec_tilde on (eta, phi o eta), of spec on phi at eta(x),
/// and of spec on (phi o eta) o eta^-1. Throws GridTooCoarse when a failure
/// is dominated by finite-difference truncation.
Report check_solution_correspondence(const TheorySpec& spec, const TheorySpec& spec_tilde, const CorrespondenceCase& input,
                                     double tol = 1e-4);

/// Reference solution for the correspondence check:
///   one-dimensional base  RK4 trajectory from q = 1, q' = 0 on [0, 1.5],
///                         eta(t) = t + t^3 / 10, points 0.3 .. 0.9
///   a phi_tx + b phi      characteristic solve of the plane wave
///                         cos(t + (b/a) x) on [0,1]^2 with 257^2 points,
///                         eta = quadratic_shear(1/10, 1/10)
/// Returns nullopt for other theories.
std::optional<CorrespondenceCase> reference_correspondence(const TheorySpec& spec, const NumericOptions& numeric = {});

enum class ReductionVariant { Lightcone, Euclidean, Massless };

/// Background-covariantized kg2 with constant gbar against horizontally
/// covariantized kg1.
Report check_reduction_kg(ReductionVariant variant = ReductionVariant::Lightcone);

/// sum_mu D_mu (x^mu_c det J) = 0 for each c.
Report check_piola_identity(int dim);

/// sem_divergence_defect vanishes for each a.
Report check_sem_divergence(const TheorySpec& spec);

/// energy_defect vanishes (one-dimensional base).
Report check_energy_identity(const TheorySpec& spec);

/// Curvature of eta^-1 d eta: exactly zero for eta = exp(f), numerically
/// below `tol` for rotation matrices of random angle polynomials.
Report check_flatness(int samples = 10, std::uint64_t seed = kDefaultSeed, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Suites

struct SuiteOptions {
    std::vector<std::string> checks;  // empty: every applicable check
    int samples = kDefaultSamples;
    std::uint64_t seed = kDefaultSeed;
    std::optional<double> tol;
    std::optional<Mode> mode;
    std::string action = "shift";
    std::string rep;
    NumericOptions numeric;
};

/// Check names accepted by run_checks.
const std::vector<std::string>& check_names();

/// Runs the selected checks on one theory. Theories that already carry
/// covariance fields are checked as given; others are covariantized with
/// `mode` (default_mode when unset).
std::vector<Report> run_checks(const TheorySpec& spec, const SuiteOptions& options);

/// Every bundled theory with its designated checks, the Piola and flatness
/// identities, and the negative controls as expected failures.
std::vector<Report> run_bundled_suite(const SuiteOptions& options);

}  // namespace covar
