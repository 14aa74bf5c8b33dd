#include "riskplan/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "riskplan/risk.hpp"
#include "riskplan/rng.hpp"

namespace riskplan {

namespace {

void record_step(RolloutRecord& rec, const Mdp& mdp, int s, int a, double discount_pow) {
    rec.states.push_back(s);
    rec.actions.push_back(a);
    const double c = mdp.cost(s, a);
    rec.costs.push_back(c);
    rec.discounted_cost += discount_pow * c;
    for (int i = 0; i < mdp.num_constraints(); ++i) {
        const double d = mdp.ccost(i, s, a);
        rec.constraint_costs[i].push_back(d);
        rec.discounted_constraint_costs[i] += discount_pow * d;
    }
}

int sample_row(CounterRng& rng, const double* row, int n) {
    const double u = rng.next_double();
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        acc += row[j];
        if (u < acc) return j;
    }
    // Guard against accumulated rounding in the row sum.
    for (int j = n - 1; j >= 0; --j) {
        if (row[j] > 0.0) return j;
    }
    return n - 1;
}

McSummary summarize(std::vector<RolloutRecord>& runs, const Vec& budgets, double eps) {
    McSummary sum;
    sum.n_runs = static_cast<int>(runs.size());
    sum.epsilon = eps;
    int failures = 0;
    Vec costs;
    costs.reserve(runs.size());
    sum.constraint_satisfaction_rate.assign(budgets.size(), 0.0);
    for (const RolloutRecord& r : runs) {
        if (r.collided) ++failures;
        costs.push_back(r.discounted_cost);
        for (std::size_t i = 0; i < budgets.size(); ++i) {
            if (r.discounted_constraint_costs[i] <= budgets[i] + 1e-12) {
                sum.constraint_satisfaction_rate[i] += 1.0;
            }
        }
    }
    for (double& v : sum.constraint_satisfaction_rate) v /= std::max(1, sum.n_runs);
    sum.failure_rate = static_cast<double>(failures) / std::max(1, sum.n_runs);
    // Sorted samples keep the statistics bit-stable under trial reordering.
    std::sort(costs.begin(), costs.end());
    sum.mean_cost = static_risk(RiskMeasure::expectation(), costs);
    sum.cvar_cost = static_risk(RiskMeasure::cvar(eps), costs);
    sum.evar_cost = static_risk(RiskMeasure::evar(eps), costs);
    return sum;
}

}  // namespace

RolloutRecord rollout_mdp(const Mdp& mdp, const std::vector<int>& policy, int horizon,
                          std::uint64_t seed,
                          const std::vector<std::uint8_t>* obstacle_mask) {
    if (static_cast<int>(policy.size()) != mdp.num_states) {
        throw DimensionMismatchError("rollout_mdp: policy length mismatch");
    }
    CounterRng rng(seed);
    RolloutRecord rec;
    rec.seed = seed;
    rec.constraint_costs.assign(mdp.num_constraints(), Vec{});
    rec.discounted_constraint_costs.assign(mdp.num_constraints(), 0.0);

    int s = sample_row(rng, mdp.initial_dist.data(), mdp.num_states);
    double dpow = 1.0;
    for (int t = 0; t < horizon; ++t) {
        if (obstacle_mask != nullptr && (*obstacle_mask)[s]) rec.collided = true;
        const int a = policy[s];
        record_step(rec, mdp, s, a, dpow);
        dpow *= mdp.discount;
        const double* row =
            mdp.transition.data() + (static_cast<std::size_t>(s) * mdp.num_actions + a) *
                                        mdp.num_states;
        s = sample_row(rng, row, mdp.num_states);
    }
    return rec;
}

RolloutRecord rollout_fsc(const Pomdp& pomdp, const Fsc& fsc, int horizon, std::uint64_t seed,
                          const std::vector<std::uint8_t>* obstacle_mask) {
    const Mdp& mdp = pomdp.mdp;
    if (fsc.num_actions != mdp.num_actions || fsc.num_observations != pomdp.num_observations) {
        throw DimensionMismatchError("rollout_fsc: alphabet mismatch");
    }
    CounterRng rng(seed);
    RolloutRecord rec;
    rec.seed = seed;
    rec.constraint_costs.assign(mdp.num_constraints(), Vec{});
    rec.discounted_constraint_costs.assign(mdp.num_constraints(), 0.0);

    int s = sample_row(rng, mdp.initial_dist.data(), mdp.num_states);
    int g = sample_row(rng, fsc.kappa.data(), fsc.num_istates);
    double dpow = 1.0;
    for (int t = 0; t < horizon; ++t) {
        if (obstacle_mask != nullptr && (*obstacle_mask)[s]) rec.collided = true;
        const double* orow =
            pomdp.observation.data() + static_cast<std::size_t>(s) * pomdp.num_observations;
        const int o = sample_row(rng, orow, pomdp.num_observations);
        const int k = sample_row(rng, fsc.row(g, o), static_cast<int>(fsc.row_len()));
        const int a = k % fsc.num_actions;
        record_step(rec, mdp, s, a, dpow);
        dpow *= mdp.discount;
        const double* trow =
            mdp.transition.data() + (static_cast<std::size_t>(s) * mdp.num_actions + a) *
                                        mdp.num_states;
        s = sample_row(rng, trow, mdp.num_states);
        g = k / fsc.num_actions;
    }
    return rec;
}

McSummary monte_carlo_mdp(const GridSpec& spec, const GridLayout& base,
                          const std::vector<int>& policy, int n_runs, int horizon,
                          std::uint64_t master_seed, double epsilon_for_stats) {
    std::vector<RolloutRecord> runs;
    runs.reserve(n_runs);
    for (int i = 0; i < n_runs; ++i) {
        const std::uint64_t trial_seed = hash_combine(master_seed, static_cast<std::uint64_t>(i));
        const GridLayout world = perturb_layout(spec, base, trial_seed);
        const Mdp model = build_mdp(spec, world);
        runs.push_back(rollout_mdp(model, policy, horizon,
                                   hash_combine(trial_seed, 0x726f6c6cULL), &world.obstacle));
    }
    return summarize(runs, {spec.budget}, epsilon_for_stats);
}

McSummary monte_carlo_fsc(const GridSpec& spec, const GridLayout& base, const Fsc& fsc,
                          int n_runs, int horizon, std::uint64_t master_seed,
                          double epsilon_for_stats) {
    std::vector<RolloutRecord> runs;
    runs.reserve(n_runs);
    for (int i = 0; i < n_runs; ++i) {
        const std::uint64_t trial_seed = hash_combine(master_seed, static_cast<std::uint64_t>(i));
        const GridLayout world = perturb_layout(spec, base, trial_seed);
        const Pomdp model = build_pomdp(spec, world);
        runs.push_back(rollout_fsc(model, fsc, horizon,
                                   hash_combine(trial_seed, 0x726f6c6cULL), &world.obstacle));
    }
    return summarize(runs, {spec.budget}, epsilon_for_stats);
}

void export_heatmap(const Vec& values, const std::vector<int>* policy, const GridSpec& spec,
                    const GridLayout& layout, const std::string& path) {
    if (static_cast<int>(values.size()) != layout.num_states()) {
        throw DimensionMismatchError("export_heatmap: value length mismatch");
    }
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw IoError("export_heatmap: cannot open " + path);
    std::fprintf(f, "x,y,value,action_label,obstacle_flag,goal_flag\n");
    for (int s = 0; s < layout.num_states(); ++s) {
        const int x = s % spec.rows, y = s / spec.rows;
        const char* label = "";
        if (policy != nullptr) label = kGridActionNames[(*policy)[s]];
        std::fprintf(f, "%d,%d,%.12g,%s,%d,%d\n", x, y, values[s], label,
                     layout.obstacle[s] ? 1 : 0, s == layout.goal_state ? 1 : 0);
    }
    std::fclose(f);
}

}  // namespace riskplan
