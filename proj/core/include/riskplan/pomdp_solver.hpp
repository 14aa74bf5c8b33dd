#pragma once

#include <cstdint>
#include <vector>

#include "riskplan/mdp_solver.hpp"
#include "riskplan/model.hpp"
#include "riskplan/risk.hpp"
#include "riskplan/types.hpp"

namespace riskplan {

struct PiParams {
    int n_max = 6;                 // maximum number of I-states
    int n_new = 1;                 // I-states to add when improvement stalls
    int max_iterations = 100;
    double improvement_tol = 1e-7;
    SolverParams solver;
    double pg_step = 0.1;          // projected-gradient step (EVaR improvement)
    int pg_iters = 5000;
};

// Fixed point of the product-chain policy evaluation, with the inner-optimal
// zeta per product state recorded for the improvement programs.
struct ProductEvaluation {
    Vec values;                         // V[s,g], g-major (ProductChain::index)
    int iterations = 0;
    Vec zeta;                           // frozen inner zeta per product state
    std::vector<std::uint8_t> constant_row;  // sigma short-circuited on this row
};

// Low-level evaluation: V = stage + gamma * sigma(V, T^M row) on a prebuilt
// product chain with an arbitrary stage cost vector.
ProductEvaluation evaluate_product(const ProductChain& pc, const Vec& stage, double discount,
                                   const RiskMeasure& measure, const SolverParams& params,
                                   const Vec* warm_start = nullptr);

// Policy evaluation of an FSC under the Lagrangian stage cost
// c + <lambda, d>, lifted to the product chain.
ProductEvaluation evaluate_fsc(const Pomdp& pomdp, const Fsc& fsc, const RiskMeasure& measure,
                               const Vec& lambda, const SolverParams& params);

// Best-valued I-state for the initial condition: argmin over g of
// <state marginal of iota, V(., g)>, lowest index on ties.
int select_initial_istate(const Vec& values, const Vec& iota, int num_states, int num_istates);

struct ImprovementResult {
    Vec new_rows;           // |O| x (|G| * |Act|) replacement rows for I-state g
    double epsilon = 0.0;   // best uniform one-step improvement (>= 0)
    double total_decrease = 0.0;  // secondary objective: summed backup decrease
    bool subproblem_converged = true;  // false when the EVaR search hit its cap
};

// I-state improvement program: maximize the uniform one-step decrease eps
// subject to backup(s; omega) <= V([s,g]) - eps for every s and simplex
// constraints per observation, with the inner zeta frozen at the evaluation
// values. LP for expectation/CVaR; projected subgradient for EVaR. Among
// eps-optimal solutions the LP path additionally minimizes the summed backup.
ImprovementResult improve_istate(const Pomdp& pomdp, const Fsc& fsc, int g,
                                 const ProductEvaluation& eval, const Vec& lambda,
                                 const RiskMeasure& measure, const PiParams& params);

// Grows the controller by up to n_new I-states whose rows are one-step greedy
// backups of the current value function; duplicates of existing I-states are
// discarded. Returns the number actually added.
int add_istates(Fsc& fsc, const Pomdp& pomdp, const ProductEvaluation& eval, const Vec& lambda,
                const RiskMeasure& measure, int n_new, const PiParams& params);

struct FscTraceEntry {
    int num_istates = 0;
    double lower_bound = 0.0;  // best certificate observed so far (nondecreasing)
    bool improved = false;
    double evaluation = 0.0;   // raw certificate of the current iterate
};

struct FscSolveResult {
    Fsc fsc;
    Vec value;  // product value function at the returned iterate
    Vec multipliers;
    int g_init = 0;
    double lower_bound = 0.0;  // <iota_init, V> - <lambda, beta> of the stored fields
    std::vector<FscTraceEntry> trace;
    SolveStatus status = SolveStatus::IterationCap;
};

// Policy iteration: alternates product-chain evaluation (with dual ascent on
// the multipliers, as in solve_constrained) and I-state improvement; on a
// full stall the controller grows by n_new I-states until n_max.
FscSolveResult policy_iteration(const Pomdp& pomdp, const RiskMeasure& measure,
                                const PiParams& params, const Fsc* initial_fsc = nullptr);

}  // namespace riskplan
