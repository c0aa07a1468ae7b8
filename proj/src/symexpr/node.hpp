#pragma once

#include "covar/symexpr.hpp"

#include <optional>
#include <vector>

namespace covar::sym::detail {

struct Node {
    ExprKind kind = ExprKind::Constant;
    std::size_t hash = 0;
    Rational value;              // Constant
    std::optional<Coord> coord;  // Symbol
    std::vector<Expr> children;  // Sum/Product terms; Power base; Function argument
    long exponent = 0;           // Power
    FunctionTag tag;             // Function
};

std::strong_ordering compare_nodes(const Node& a, const Node& b) noexcept;

}  // namespace covar::sym::detail
