#pragma once

// Theory files bundled from theories/*.thy at build time.

#include "covar/theory.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace covar::fixtures {

std::vector<std::string> names();

/// Source text; throws Error for unknown names.
std::string_view text(std::string_view name);

TheorySpec load(std::string_view name);

}  // namespace covar::fixtures
