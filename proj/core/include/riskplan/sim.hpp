#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "riskplan/gridworld.hpp"
#include "riskplan/model.hpp"
#include "riskplan/types.hpp"

namespace riskplan {

struct RolloutRecord {
    std::vector<int> states;
    std::vector<int> actions;
    Vec costs;
    std::vector<Vec> constraint_costs;  // one stream per constraint
    double discounted_cost = 0.0;
    Vec discounted_constraint_costs;
    bool collided = false;
    std::uint64_t seed = 0;
};

// Samples one trajectory of `horizon` steps with a counter-based generator
// keyed by `seed`. The obstacle mask (when given) drives the collision flag.
RolloutRecord rollout_mdp(const Mdp& mdp, const std::vector<int>& policy, int horizon,
                          std::uint64_t seed,
                          const std::vector<std::uint8_t>* obstacle_mask = nullptr);

// POMDP rollout: sample state, observation, then (g', alpha) from omega.
RolloutRecord rollout_fsc(const Pomdp& pomdp, const Fsc& fsc, int horizon, std::uint64_t seed,
                          const std::vector<std::uint8_t>* obstacle_mask = nullptr);

struct McSummary {
    int n_runs = 0;
    double failure_rate = 0.0;
    double mean_cost = 0.0;
    double cvar_cost = 0.0;  // static CVaR of the discounted cost samples
    double evar_cost = 0.0;  // static EVaR of the discounted cost samples
    double epsilon = 0.2;    // confidence level used for the static statistics
    Vec constraint_satisfaction_rate;  // fraction of runs within each budget
};

// Robustness protocol: trial i rebuilds the world by perturbing the uncertain
// obstacles with trial seed hash(master_seed, i), rolls out the policy on the
// perturbed world, and aggregates order-independent statistics.
McSummary monte_carlo_mdp(const GridSpec& spec, const GridLayout& base,
                          const std::vector<int>& policy, int n_runs, int horizon,
                          std::uint64_t master_seed, double epsilon_for_stats);

McSummary monte_carlo_fsc(const GridSpec& spec, const GridLayout& base, const Fsc& fsc,
                          int n_runs, int horizon, std::uint64_t master_seed,
                          double epsilon_for_stats);

// Plot-ready CSV: columns x, y, value, action_label, obstacle_flag, goal_flag
// in state-index order. `policy` may be null (empty labels).
void export_heatmap(const Vec& values, const std::vector<int>* policy, const GridSpec& spec,
                    const GridLayout& layout, const std::string& path);

}  // namespace riskplan
