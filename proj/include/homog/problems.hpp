#pragma once

// Built-in fast/slow test problems.

#include "homog/problem.hpp"

#include <string>
#include <vector>

namespace homog::problems {

/// Names accepted by make(), plus "spde" (see the spde module).
std::vector<std::string> names();

/// One-line description for listings.
std::string describe(const std::string& name);

/// Throws UsageError for unknown names and for "spde".
FastSlowProblem make(const std::string& name);

/// Builds a problem from expression text. alpha may be empty (no slow noise).
FastSlowProblem from_strings(const std::string& name, int m, int n, const std::string& V,
                             const std::vector<std::string>& f,
                             const std::vector<std::vector<std::string>>& alpha, double lambda);

/// f = -(Delta g - grad V . grad g) for each g, centred against exp(-V) by construction.
std::vector<expr::Expression> centred_drifts(const expr::Expression& V, const std::vector<expr::Expression>& g);

}  // namespace homog::problems
