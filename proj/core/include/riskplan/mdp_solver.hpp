#pragma once

#include <string>
#include <vector>

#include "riskplan/model.hpp"
#include "riskplan/risk.hpp"
#include "riskplan/types.hpp"

namespace riskplan {

enum class SolveStatus { Converged, IterationCap, InfeasibleSuspected };

struct SolverParams {
    double vi_tol = 1e-8;
    int vi_max_iters = 100000;
    double dual_step0 = 1.0;      // dual step rule: dual_step0 / sqrt(k+1)
    int dual_iters = 200;
    double lambda_cap = 1e6;      // divergence guard for infeasibility detection
    InnerSolveParams inner;
};

struct BackupResult {
    Vec values;
    std::vector<int> policy;  // greedy argmin per state, lowest index on ties
};

// One Jacobi sweep of V'(s) = min_a [ c(s,a) + <lambda, d(s,a)> + gamma * sigma(v, T[s][a]) ].
BackupResult bellman_backup(const Mdp& mdp, const RiskMeasure& measure, const Vec& lambda,
                            const Vec& v, const SolverParams& params);

struct ValueIterationResult {
    Vec values;
    std::vector<int> policy;
    int iterations = 0;
    std::vector<double> residuals;  // sup-norm residual per sweep
};

// Iterates bellman_backup to the fixed point (sup-norm residual <= vi_tol).
// Throws IterationCapError when vi_max_iters is exhausted.
ValueIterationResult risk_value_iteration(const Mdp& mdp, const RiskMeasure& measure,
                                          const Vec& lambda, const SolverParams& params,
                                          const Vec* warm_start = nullptr);

// Selects which cost stream a policy evaluation accumulates.
struct CostSelector {
    int constraint = -1;  // -1: stage cost c; otherwise constraint cost d[i]
    static CostSelector stage() { return {}; }
    static CostSelector constraint_cost(int i) { return {i}; }
};

// Nested discounted risk of the selected cost stream under a fixed policy:
// fixed point of V(s) = cost(s, pi(s)) + gamma * sigma(V, T[s][pi(s)]).
Vec policy_risk_evaluation(const Mdp& mdp, const std::vector<int>& policy,
                           const RiskMeasure& measure, CostSelector selector,
                           const SolverParams& params, const Vec* warm_start = nullptr);

struct DualTraceEntry {
    Vec lambda;
    double lower_bound = 0.0;
    Vec residuals;  // D_i(kappa0, pi_k) - beta_i
};

struct MdpSolveResult {
    Vec value;
    Vec multipliers;
    std::vector<int> policy;
    double lower_bound = 0.0;        // <kappa0, V> - <lambda, beta>
    Vec constraint_values;           // D_i(kappa0, pi) at the reported iterate
    std::vector<DualTraceEntry> trace;
    SolveStatus status = SolveStatus::IterationCap;
};

// Projected subgradient ascent on the Lagrange multipliers wrapped around
// exact risk-averse value iteration; reports the iterate with the best lower
// bound <kappa0, V> - <lambda, beta>.
MdpSolveResult solve_constrained(const Mdp& mdp, const RiskMeasure& measure,
                                 const SolverParams& params);

// Greedy policy at a fixed point v under multipliers lambda.
std::vector<int> extract_policy(const Mdp& mdp, const RiskMeasure& measure, const Vec& v,
                                const Vec& lambda, const SolverParams& params);

// Structured export of the Bellman optimization as a difference-of-convex
// program (JSON text): objective blocks f0/g0 and one constraint record per
// (s, a) with convex part f1 and concave parts g1/g2.
std::string export_dcp(const Mdp& mdp, const RiskMeasure& measure,
                       const Vec& budgets_override = {});

struct OracleParams {
    int horizon = 400;                 // evaluation sweep cap (tail-bounded)
    bool with_lagrangian_grid = false; // also scan lambda over {0, 0.1, ..., 50}^n_c
};

struct OracleResult {
    bool any_feasible = false;
    double best_feasible_value = 0.0;
    std::vector<int> best_policy;
    bool grid_computed = false;
    double lagrangian_grid_bound = 0.0;
};

// Exhaustive enumeration of deterministic stationary policies; the certified
// small-instance reference for the constrained solvers. Requires |S| <= 6 and
// |Act| <= 3, else throws TooLargeError.
OracleResult brute_force_constrained_oracle(const Mdp& mdp, const RiskMeasure& measure,
                                            const Vec& budgets, const OracleParams& oparams,
                                            const SolverParams& params);

}  // namespace riskplan
