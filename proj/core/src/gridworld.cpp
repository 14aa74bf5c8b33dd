#include "riskplan/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "riskplan/rng.hpp"

namespace riskplan {

const char* const kGridActionNames[kNumGridActions] = {"E", "W", "N", "S",
                                                       "NE", "NW", "SE", "SW"};

namespace {

// (dx, dy) per action; x grows downward (south), y grows eastward.
constexpr int kDx[kNumGridActions] = {0, 0, -1, 1, -1, -1, 1, 1};
constexpr int kDy[kNumGridActions] = {1, -1, 0, 0, 1, -1, 1, -1};

bool in_grid(const GridSpec& spec, int x, int y) {
    return x >= 0 && x < spec.rows && y >= 0 && y < spec.cols;
}

std::vector<int> neighbors8(int rows, int cols, int s) {
    const int x = s % rows, y = s / rows;
    std::vector<int> out;
    out.reserve(8);
    for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
            if (dx == 0 && dy == 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx >= 0 && nx < rows && ny >= 0 && ny < cols) out.push_back(nx + rows * ny);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool connected(const GridLayout& layout) {
    if (layout.obstacle[layout.start_state] || layout.obstacle[layout.goal_state]) return false;
    std::vector<std::uint8_t> seen(layout.num_states(), 0);
    std::deque<int> queue{layout.start_state};
    seen[layout.start_state] = 1;
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        if (s == layout.goal_state) return true;
        for (int n : neighbors8(layout.rows, layout.cols, s)) {
            if (!seen[n] && !layout.obstacle[n]) {
                seen[n] = 1;
                queue.push_back(n);
            }
        }
    }
    return false;
}

std::vector<int> isolated_obstacles(const GridLayout& layout) {
    std::vector<int> out;
    for (int s = 0; s < layout.num_states(); ++s) {
        if (!layout.obstacle[s]) continue;
        bool isolated = true;
        for (int n : neighbors8(layout.rows, layout.cols, s)) {
            if (layout.obstacle[n]) {
                isolated = false;
                break;
            }
        }
        if (isolated) out.push_back(s);
    }
    return out;
}

}  // namespace

GridLayout build_layout(const GridSpec& spec) {
    if (!(spec.obstacle_density > 0.0 && spec.obstacle_density < 1.0)) {
        throw ModelError("gridworld: obstacle_density must lie in (0,1)");
    }
    if (std::abs(spec.intent_prob + spec.slip_prob - 1.0) > 1e-12) {
        throw ModelError("gridworld: intent_prob + slip_prob must equal 1");
    }
    if (!in_grid(spec, spec.goal.x, spec.goal.y) || !in_grid(spec, spec.start.x, spec.start.y)) {
        throw ModelError("gridworld: goal or start outside the grid");
    }

    GridLayout layout;
    layout.rows = spec.rows;
    layout.cols = spec.cols;
    layout.goal_state = layout.index(spec.goal.x, spec.goal.y);
    layout.start_state = layout.index(spec.start.x, spec.start.y);
    if (layout.goal_state == layout.start_state) {
        throw ModelError("gridworld: goal equals start");
    }

    const int n = layout.num_states();
    const int n_obstacles = static_cast<int>(std::lround(spec.obstacle_density * n));
    std::vector<int> candidates;
    candidates.reserve(n);
    for (int s = 0; s < n; ++s) {
        if (s != layout.goal_state && s != layout.start_state) candidates.push_back(s);
    }
    if (n_obstacles > static_cast<int>(candidates.size())) {
        throw ModelError("gridworld: obstacle count exceeds available cells");
    }

    for (int attempt = 0; attempt < 100; ++attempt) {
        CounterRng rng(hash_combine(spec.seed, static_cast<std::uint64_t>(attempt)));
        std::vector<int> pool = candidates;
        layout.obstacle.assign(n, 0);
        for (int k = 0; k < n_obstacles; ++k) {
            const int j = k + rng.next_int(static_cast<int>(pool.size()) - k);
            std::swap(pool[k], pool[j]);
            layout.obstacle[pool[k]] = 1;
        }
        if (!connected(layout)) continue;
        std::vector<int> isolated = isolated_obstacles(layout);
        if (static_cast<int>(isolated.size()) < spec.n_uncertain) continue;
        layout.uncertain.assign(isolated.begin(), isolated.begin() + spec.n_uncertain);
        return layout;
    }
    throw NoFeasibleLayoutError("gridworld: no feasible layout in 100 attempts");
}

Mdp build_mdp(const GridSpec& spec, const GridLayout& layout) {
    const int n = layout.num_states();
    const int A = kNumGridActions;
    Mdp mdp;
    mdp.num_states = n;
    mdp.num_actions = A;
    mdp.discount = spec.discount;
    mdp.transition.assign(static_cast<std::size_t>(n) * A * n, 0.0);
    mdp.initial_dist.assign(n, 0.0);
    mdp.initial_dist[layout.start_state] = 1.0;
    mdp.stage_cost.assign(static_cast<std::size_t>(n) * A, 0.0);
    mdp.constraint_costs.assign(1, Vec(static_cast<std::size_t>(n) * A, 0.0));
    mdp.budgets = {spec.budget};

    for (int s = 0; s < n; ++s) {
        const int x = s % spec.rows, y = s / spec.rows;
        const double c = layout.obstacle[s] ? spec.obstacle_cost
                         : s == layout.goal_state ? spec.goal_cost
                                                  : spec.step_cost;
        const double d = (s == layout.goal_state) ? 0.0 : spec.step_cost;
        const std::vector<int> adj = neighbors8(spec.rows, spec.cols, s);
        for (int a = 0; a < A; ++a) {
            mdp.stage_cost[static_cast<std::size_t>(s) * A + a] = c;
            mdp.constraint_costs[0][static_cast<std::size_t>(s) * A + a] = d;
            double* row = mdp.transition.data() +
                          (static_cast<std::size_t>(s) * A + a) * n;
            if (s == layout.goal_state) {
                row[s] = 1.0;  // absorbing goal
                continue;
            }
            const int ix = x + kDx[a], iy = y + kDy[a];
            const bool intended_exists = in_grid(spec, ix, iy);
            const int intended = intended_exists ? layout.index(ix, iy) : s;
            row[intended] += spec.intent_prob;
            // Slip mass spreads uniformly over the remaining existing neighbors.
            std::vector<int> slip;
            slip.reserve(adj.size());
            for (int nb : adj) {
                if (intended_exists && nb == intended) continue;
                slip.push_back(nb);
            }
            if (slip.empty()) {
                row[s] += spec.slip_prob;
            } else {
                const double share = spec.slip_prob / static_cast<double>(slip.size());
                for (int nb : slip) row[nb] += share;
            }
        }
    }
    return mdp;
}

Mdp build_mdp(const GridSpec& spec) { return build_mdp(spec, build_layout(spec)); }

Pomdp build_pomdp(const GridSpec& spec, const GridLayout& layout) {
    Pomdp pomdp;
    pomdp.mdp = build_mdp(spec, layout);
    const int n = layout.num_states();
    pomdp.num_observations = n;
    pomdp.observation.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int s = 0; s < n; ++s) {
        double* row = pomdp.observation.data() + static_cast<std::size_t>(s) * n;
        std::vector<int> adj_obstacles;
        for (int nb : neighbors8(spec.rows, spec.cols, s)) {
            if (layout.obstacle[nb]) adj_obstacles.push_back(nb);
        }
        if (adj_obstacles.empty()) {
            row[s] = 1.0;
            continue;
        }
        const double w = 1.0 / static_cast<double>(adj_obstacles.size());
        for (int b : adj_obstacles) {
            row[b] += w * spec.detect_prob;
            const std::vector<int> bnb = neighbors8(spec.rows, spec.cols, b);
            const double share = w * (1.0 - spec.detect_prob) / static_cast<double>(bnb.size());
            for (int nb : bnb) row[nb] += share;
        }
    }
    return pomdp;
}

Pomdp build_pomdp(const GridSpec& spec) { return build_pomdp(spec, build_layout(spec)); }

GridLayout perturb_layout(const GridSpec& spec, const GridLayout& base,
                          std::uint64_t trial_seed) {
    GridLayout out = base;
    CounterRng rng(hash_combine(trial_seed, 0x6f6273746163ULL));
    for (int s : base.uncertain) {
        const double u = rng.next_double();
        std::vector<int> targets;
        for (int nb : neighbors8(spec.rows, spec.cols, s)) {
            if (nb != base.goal_state) targets.push_back(nb);
        }
        if (u < spec.perturb_prob && !targets.empty()) {
            const int dest = targets[rng.next_int(static_cast<int>(targets.size()))];
            out.obstacle[s] = 0;
            out.obstacle[dest] = 1;
        }
    }
    out.uncertain.clear();  // relocated obstacles are not re-designated
    return out;
}

Mdp perturb_obstacles(const GridSpec& spec, const GridLayout& base, std::uint64_t trial_seed) {
    return build_mdp(spec, perturb_layout(spec, base, trial_seed));
}

}  // namespace riskplan
