#pragma once

#include "covar/verify.hpp"

#include <random>
#include <utility>

namespace covar::detail {

using Rng = std::mt19937_64;

/// n / d with n uniform in [-num, num] and d uniform in [1, den].
inline Rational draw(Rng& rng, long num, long den) {
    std::uniform_int_distribution<long> n(-num, num);
    std::uniform_int_distribution<long> d(1, den);
    Rational q(n(rng), d(rng));
    q.canonicalize();
    return q;
}

inline Rational draw_nonzero(Rng& rng, long num, long den) {
    for (;;) {
        Rational q = draw(rng, num, den);
        if (sgn(q) != 0) return q;
    }
}

/// Representation whose generator count matches a lie_oneform field.
inline LieRep rep_for(const TheorySpec& spec, const FieldDecl& conn) {
    const int ngen = conn.components / spec.base_dim;
    if (ngen == 1) return lie_rep("so2");
    if (ngen == 3) return lie_rep("so3");
    throw UnsupportedAction("no built-in representation with " + std::to_string(ngen) + " generators");
}

/// Variational covectors paired with the scalar covariance field that
/// compensates their shift (nullptr when there is none).
inline std::vector<std::pair<const FieldDecl*, const FieldDecl*>> shift_pairs(const TheorySpec& spec) {
    std::vector<const FieldDecl*> etas;
    for (const auto& f : spec.fields) {
        if (f.kind == FieldKind::Covariance && f.geom == Geom::Scalar && f.components == 1) etas.push_back(&f);
    }
    std::vector<std::pair<const FieldDecl*, const FieldDecl*>> out;
    std::size_t next = 0;
    for (const auto& f : spec.fields) {
        if (f.kind != FieldKind::Variational || f.geom != Geom::Covector) continue;
        out.emplace_back(&f, next < etas.size() ? etas[next++] : nullptr);
    }
    return out;
}

/// Structure constants [T_k, T_l] = sum_j c[k][l][j] T_j by projection.
inline std::vector<std::vector<std::vector<Rational>>> structure_constants(const LieRep& rep) {
    const std::size_t n = rep.generators.size();
    const auto dim = static_cast<std::size_t>(rep.dim);
    auto dot = [dim](const RationalMatrix& a, const RationalMatrix& b) {
        Rational s(0);
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) s += a[i][j] * b[i][j];
        }
        return s;
    };
    std::vector<std::vector<std::vector<Rational>>> c(n, std::vector<std::vector<Rational>>(n, std::vector<Rational>(n)));
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            RationalMatrix comm(dim, std::vector<Rational>(dim));
            for (std::size_t i = 0; i < dim; ++i) {
                for (std::size_t j = 0; j < dim; ++j) {
                    for (std::size_t m = 0; m < dim; ++m) {
                        comm[i][j] += rep.generators[k][i][m] * rep.generators[l][m][j] -
                                      rep.generators[l][i][m] * rep.generators[k][m][j];
                    }
                }
            }
            for (std::size_t j = 0; j < n; ++j) {
                c[k][l][j] = dot(comm, rep.generators[j]) / dot(rep.generators[j], rep.generators[j]);
            }
        }
    }
    return c;
}

}  // namespace covar::detail
