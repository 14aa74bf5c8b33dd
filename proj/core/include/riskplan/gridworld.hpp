#pragma once

#include <cstdint>
#include <vector>

#include "riskplan/model.hpp"
#include "riskplan/types.hpp"

namespace riskplan {

// Rover navigation scenario on an M x N grid with 8 compass moves. Cells are
// indexed s = x + M*y with x in [0, M) (row, x = M-1 is the bottom row) and
// y in [0, N) (column).
struct GridCell {
    int x = 0;
    int y = 0;
};

struct GridSpec {
    int rows = 10;  // M
    int cols = 10;  // N
    double obstacle_density = 0.25;
    GridCell goal{0, 9};
    GridCell start{9, 0};
    double intent_prob = 0.7;
    double slip_prob = 0.3;
    double obstacle_cost = 10.0;
    double step_cost = 2.0;
    double goal_cost = 0.0;
    double discount = 0.95;
    double detect_prob = 0.6;
    int n_uncertain = 3;
    double perturb_prob = 0.3;
    double budget = 50.0;  // fuel budget beta for the single constraint
    std::uint64_t seed = 1;
};

// Compass actions in fixed order E, W, N, S, NE, NW, SE, SW.
inline constexpr int kNumGridActions = 8;
extern const char* const kGridActionNames[kNumGridActions];

struct GridLayout {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> obstacle;  // mask over states
    std::vector<int> uncertain;          // isolated obstacles subject to perturbation
    int goal_state = 0;
    int start_state = 0;

    int index(int x, int y) const { return x + rows * y; }
    int num_states() const { return rows * cols; }
};

// Seeded obstacle placement; resamples until the free cells connect start to
// goal and enough isolated obstacles exist (up to 100 attempts, then throws
// NoFeasibleLayoutError).
GridLayout build_layout(const GridSpec& spec);

// MDP with the grid transition kernel, collision/fuel cost structure, and a
// single fuel-budget constraint. Transitions depend only on the geometry;
// obstacle placement enters through the costs.
Mdp build_mdp(const GridSpec& spec, const GridLayout& layout);
Mdp build_mdp(const GridSpec& spec);

// POMDP extension: cell-labeled observations; next to an obstacle the true
// obstacle cell is seen with detect_prob and the rest spreads uniformly over
// that obstacle's existing neighbors.
Pomdp build_pomdp(const GridSpec& spec, const GridLayout& layout);
Pomdp build_pomdp(const GridSpec& spec);

// Independently relocates each uncertain obstacle to a uniformly chosen
// existing neighbor (never the goal) with probability perturb_prob.
GridLayout perturb_layout(const GridSpec& spec, const GridLayout& base,
                          std::uint64_t trial_seed);

// Rebuilt model with identical dynamics and relocated obstacle costs.
Mdp perturb_obstacles(const GridSpec& spec, const GridLayout& base, std::uint64_t trial_seed);

}  // namespace riskplan
