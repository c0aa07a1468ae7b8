#pragma once

#include "covar/theory.hpp"

#include <string>
#include <vector>

namespace covar {

using Matrix = std::vector<std::vector<Expr>>;
using RationalMatrix = std::vector<std::vector<Rational>>;

/// Jacobian of a point-map covariance field in body coordinates.
struct JacobianBundle {
    int dim = 0;
    std::string field;
    Matrix J;          // J[a][mu] = x^a_mu
    Expr det;          // Leibniz expansion
    Matrix cofactor;   // cofactor[a][mu] = C_a^mu, sum_mu J[b][mu] C_a^mu = delta_ab det
    Matrix inverse;    // inverse[mu][a] = x^mu_a = C_a^mu / det
};

JacobianBundle jacobian_bundle(int dim, const std::string& field = "X");

/// Determinant of a square matrix of expressions by Leibniz expansion.
Expr determinant(const Matrix& m);

/// Spatial jets of `field` (as written in the original theory) in terms of
/// body coordinates of the covariantized theory:
///   scalars:   y_a  -> y_mu x^mu_a,  y_ab -> x^mu_a D_mu(y_nu x^nu_b)
///   covectors: A_a  -> A_mu x^mu_a,  A_{a,b} -> x^nu_b D_nu(A_mu x^mu_a)
/// `order` selects how many jet levels are produced (1 or 2 for scalars,
/// 1 for covectors). Throws UnsupportedIndex for other fields.
sym::Substitution chain_rule_jet(const TheorySpec& spec, const FieldDecl& field, const JacobianBundle& jac, int order = 1);

/// Full map from original coordinates to body coordinates: base x^a -> X^a
/// plus chain_rule_jet for every variational field.
sym::Substitution spatial_substitution(const TheorySpec& spec, const JacobianBundle& jac, int order = 1);

/// L~ = L(X, spatial jets) det J with a new diffeo covariance field `X`.
TheorySpec covariantize_horizontal(const TheorySpec& spec);

/// Background fields become constant parameters on the fiber copy of the base,
/// pulled back through a new diffeo covariance field:
///   g^{mu nu} -> x^mu_a x^nu_b gbar_ab,  vol[g] -> gbar_vol det J,
///   A_mu -> x^a_mu Abar_a,  s -> sbar.
TheorySpec covariantize_background(const TheorySpec& spec);

/// Matrix Lie algebra representation (real generators).
struct LieRep {
    std::string name;
    int dim = 0;
    std::vector<RationalMatrix> generators;
};

/// Built-in representations: "so2" (dim 2), "so3" (dim 3).
LieRep lie_rep(const std::string& name);

struct VerticalAction {
    enum class Kind { AdditiveShift, MinimalCoupling } kind = Kind::AdditiveShift;
    LieRep rep;
};

/// AdditiveShift: covector A -> A + d eta with a new scalar covariance field
/// `eta`; jets of A are left alone.
/// MinimalCoupling: y_mu -> y_mu + sum_k a_{k mu} T_k y for every variational
/// multiplet of the representation's dimension; `a` is a new lie_oneform
/// covariance field with component k*d + mu.
TheorySpec covariantize_vertical(const TheorySpec& spec, const VerticalAction& action);

/// Substitution setting every covariance field of `tilde` to its trivial value
/// (X = id, eta = 0, a = 0) and barred background parameters back to the
/// original background coordinates of `original`.
sym::Substitution trivial_covariance(const TheorySpec& original, const TheorySpec& tilde);

/// Name given to the barred parameter for slot `slot` of background `field`.
std::string bar_param(const TheorySpec& original, const FieldDecl& field, int slot);

enum class Mode { Horizontal, Background, Vertical };

Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);

/// Background fields -> Background, variational covectors -> Vertical,
/// otherwise Horizontal.
Mode default_mode(const TheorySpec& spec);

/// `kind` is "shift" or "minimal". Without `rep`, minimal coupling uses so2
/// for the first doublet and so3 for the first triplet.
VerticalAction vertical_action(const TheorySpec& spec, const std::string& kind, const std::string& rep = "");

TheorySpec covariantize(const TheorySpec& spec, Mode mode, const VerticalAction& action = {});

/// Inverse by cofactors; throws SingularEta if the determinant is identically zero.
Matrix matrix_inverse(const Matrix& m);

// ---------------------------------------------------------------------------
// Flat connections A = eta^-1 d eta for matrix-valued eta(x).

/// A[mu] = eta^-1 * d(eta)/dx^mu; entries of eta are expressions in base
/// coordinates. Throws SingularEta if det eta vanishes identically.
std::vector<Matrix> flat_connection_from(const Matrix& eta, int base_dim);

/// F_{mu nu} = d_mu A_nu - d_nu A_mu + [A_mu, A_nu]; result[mu][nu].
std::vector<std::vector<Matrix>> curvature(const std::vector<Matrix>& a, int base_dim);

/// Evaluates a matrix at a base point; throws SingularEta on a pole.
std::vector<std::vector<double>> eval_matrix(const Matrix& m, const std::vector<double>& base_point);

}  // namespace covar
