#pragma once

#include "covar/covariantize.hpp"

#include <map>
#include <utility>

namespace covar {

using FieldSlot = std::pair<std::string, int>;

struct ELSystem {
    std::map<FieldSlot, Expr> residuals;
    int order = 0;
};

/// dL/dy - sum_mu D_mu dL/dy_mu + sum_{mu<=nu} D_mu D_nu dL/dy_{mu nu}
/// for one component slot of `field`.
Expr euler_lagrange_residual(const TheorySpec& spec, const FieldDecl& field, int slot);

/// Residuals for every slot of `field`.
ELSystem euler_lagrange(const TheorySpec& spec, const FieldDecl& field);

/// Residuals for every variational and covariance field.
ELSystem euler_lagrange(const TheorySpec& spec);

struct SEMTensor {
    enum class Variant { Canonical, PiolaKirchhoff };
    Variant variant = Variant::Canonical;
    int dim = 0;
    Matrix t;  // Canonical: t[c][a] = t^c_a; PiolaKirchhoff: t[mu][a] = p^mu_a
};

/// t^c_a = L delta^c_a - sum (dL/dy_c) y_a over variational and covariance
/// fields. Throws OrderOverflow for second-order Lagrangians.
SEMTensor sem_tensor(const TheorySpec& spec);

/// p^mu_a = t^c_a x^mu_c det J.
SEMTensor piola_transform(const SEMTensor& sem, const JacobianBundle& jac);

/// E = -t^0_0.
Expr energy(const TheorySpec& spec);

/// dL/dx^a - D_b t^b_a + sum_y (delta L / delta y) y_a, summed over every
/// field (background fields contribute dL/dchi chi_a). Identically zero.
Expr sem_divergence_defect(const TheorySpec& spec, int a);

/// D_t E + dL/dt + sum_q q_t EL_q for a one-dimensional base. Identically zero.
Expr energy_defect(const TheorySpec& spec);

}  // namespace covar
