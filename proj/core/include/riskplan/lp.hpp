#pragma once

#include <vector>

#include "riskplan/types.hpp"

namespace riskplan {

// Dense two-phase simplex for the small subproblems in this toolkit
// (I-state improvement programs, occupancy-measure cross-checks). Bland's
// rule keeps pivoting deterministic and cycle-free.

enum class LpRelation { LessEq, Eq, GreaterEq };

struct LpConstraint {
    Vec coeffs;
    LpRelation rel = LpRelation::LessEq;
    double rhs = 0.0;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Vec x;
    double objective = 0.0;
};

// Minimizes <objective, x> subject to the constraints and x >= 0.
LpResult lp_solve_min(const Vec& objective, const std::vector<LpConstraint>& constraints);

// Maximizes <objective, x>; same feasible set.
LpResult lp_solve_max(const Vec& objective, const std::vector<LpConstraint>& constraints);

}  // namespace riskplan
