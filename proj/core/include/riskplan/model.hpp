#pragma once

#include <string>
#include <vector>

#include "riskplan/types.hpp"

namespace riskplan {

// Finite constrained MDP. All tensors are flattened row-major:
//   transition[(s * num_actions + a) * num_states + s']
//   stage_cost[s * num_actions + a], constraint_costs[i][s * num_actions + a]
// Models are immutable after construction and safe to share across readers.
struct Mdp {
    int num_states = 0;
    int num_actions = 0;
    Vec transition;
    Vec initial_dist;
    Vec stage_cost;
    std::vector<Vec> constraint_costs;
    Vec budgets;
    double discount = 0.95;

    double trans(int s, int a, int s2) const {
        return transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
    }
    double cost(int s, int a) const {
        return stage_cost[static_cast<std::size_t>(s) * num_actions + a];
    }
    double ccost(int i, int s, int a) const {
        return constraint_costs[i][static_cast<std::size_t>(s) * num_actions + a];
    }
    int num_constraints() const { return static_cast<int>(constraint_costs.size()); }
};

struct Pomdp {
    Mdp mdp;
    int num_observations = 0;
    Vec observation;  // observation[s * num_observations + o]

    double obs(int s, int o) const {
        return observation[static_cast<std::size_t>(s) * num_observations + o];
    }
};

struct Belief {
    Vec probs;
};

// Stochastic finite-state controller. omega[g][o] is a distribution over
// (next I-state, action) pairs flattened as k = g' * num_actions + alpha.
struct Fsc {
    int num_istates = 0;
    int num_actions = 0;
    int num_observations = 0;
    Vec omega;  // omega[((g * num_observations) + o) * (num_istates * num_actions) + k]
    Vec kappa;  // initial distribution over I-states

    std::size_t row_len() const {
        return static_cast<std::size_t>(num_istates) * num_actions;
    }
    double om(int g, int o, int g2, int a) const {
        return omega[(static_cast<std::size_t>(g) * num_observations + o) * row_len() +
                     static_cast<std::size_t>(g2) * num_actions + a];
    }
    double* row(int g, int o) {
        return omega.data() + (static_cast<std::size_t>(g) * num_observations + o) * row_len();
    }
    const double* row(int g, int o) const {
        return omega.data() + (static_cast<std::size_t>(g) * num_observations + o) * row_len();
    }

    // |G|=1 controller with uniform omega rows, the policy-iteration start.
    static Fsc uniform_initial(int num_actions, int num_observations);
};

// Closed-loop Markov chain over S x G induced by a POMDP and an FSC.
// Product states are indexed g-major: idx = g * |S| + s, so the value slice
// of a single I-state is contiguous.
struct ProductChain {
    int num_states = 0;    // |S|
    int num_istates = 0;   // |G|
    Vec transition;        // dense [N x N], N = |S| * |G|
    Vec initial_dist;      // iota_init
    Vec lifted_cost;       // policy-weighted stage cost per product state
    std::vector<Vec> lifted_constraint_costs;

    int num_product_states() const { return num_states * num_istates; }
    int index(int s, int g) const { return g * num_states + s; }
    double trans(int from, int to) const {
        return transition[static_cast<std::size_t>(from) * num_product_states() + to];
    }
};

// Invariant checks. Returns one message per violation, empty when valid.
std::vector<std::string> validate(const Mdp& mdp);
std::vector<std::string> validate(const Pomdp& pomdp);
std::vector<std::string> validate(const Fsc& fsc);

// Bayes posterior after taking `action` and observing `observation`.
// Throws ImpossibleObservationError when the normalizer underflows.
Belief belief_update(const Pomdp& pomdp, const Belief& prior, int action, int observation);

// Belief conditioned on the first observation, before any action.
Belief initial_belief(const Pomdp& pomdp, int observation);

ProductChain product_chain(const Pomdp& pomdp, const Fsc& fsc);

// Action marginal of the FSC at (s, g): sum_o O(o|s) sum_{g'} omega(g',a|g,o).
Vec policy_action_distribution(const Pomdp& pomdp, const Fsc& fsc, int s, int g);

}  // namespace riskplan
