#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "riskplan/gridworld.hpp"
#include "riskplan/mdp_solver.hpp"
#include "riskplan/rng.hpp"
#include "riskplan/sim.hpp"

using namespace riskplan;

namespace {

GridSpec tiny_spec(std::uint64_t seed = 5) {
    GridSpec spec;
    spec.rows = 4;
    spec.cols = 4;
    spec.goal = {0, 3};
    spec.start = {3, 0};
    spec.n_uncertain = 1;
    spec.seed = seed;
    spec.budget = 50.0;
    return spec;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("rollout without obstacles never collides") {
    const GridSpec spec = tiny_spec();
    const GridLayout layout = build_layout(spec);
    const Mdp mdp = build_mdp(spec, layout);
    const std::vector<std::uint8_t> clear_mask(mdp.num_states, 0);
    const RolloutRecord rec = rollout_mdp(mdp, std::vector<int>(mdp.num_states, 0), 100, 7,
                                          &clear_mask);
    CHECK(!rec.collided);
    CHECK(static_cast<int>(rec.states.size()) == 100);
}

TEST_CASE("starting absorbed at the goal accrues zero cost") {
    const GridSpec spec = tiny_spec();
    const GridLayout layout = build_layout(spec);
    Mdp mdp = build_mdp(spec, layout);
    std::fill(mdp.initial_dist.begin(), mdp.initial_dist.end(), 0.0);
    mdp.initial_dist[layout.goal_state] = 1.0;
    const RolloutRecord rec =
        rollout_mdp(mdp, std::vector<int>(mdp.num_states, 0), 200, 11, &layout.obstacle);
    CHECK(rec.discounted_cost == doctest::Approx(0.0));
    CHECK(!rec.collided);
}

TEST_CASE("fixed seeds reproduce identical records") {
    const GridSpec spec = tiny_spec();
    const GridLayout layout = build_layout(spec);
    const Mdp mdp = build_mdp(spec, layout);
    const std::vector<int> policy(mdp.num_states, 3);
    const RolloutRecord a = rollout_mdp(mdp, policy, 150, 99, &layout.obstacle);
    const RolloutRecord b = rollout_mdp(mdp, policy, 150, 99, &layout.obstacle);
    CHECK(a.states == b.states);
    CHECK(a.discounted_cost == b.discounted_cost);
    CHECK(a.collided == b.collided);
}

TEST_CASE("discounted cost is recomputable from the trajectory") {
    const GridSpec spec = tiny_spec();
    const GridLayout layout = build_layout(spec);
    const Mdp mdp = build_mdp(spec, layout);
    const RolloutRecord rec =
        rollout_mdp(mdp, std::vector<int>(mdp.num_states, 2), 120, 5, &layout.obstacle);
    double acc = 0.0, dpow = 1.0;
    for (std::size_t t = 0; t < rec.costs.size(); ++t) {
        acc += dpow * rec.costs[t];
        dpow *= mdp.discount;
    }
    CHECK(std::abs(acc - rec.discounted_cost) < 1e-10);
}

TEST_CASE("fsc rollout is deterministic and records constraint streams") {
    const GridSpec spec = tiny_spec();
    const GridLayout layout = build_layout(spec);
    const Pomdp pomdp = build_pomdp(spec, layout);
    const Fsc fsc = Fsc::uniform_initial(kNumGridActions, pomdp.num_observations);
    const RolloutRecord a = rollout_fsc(pomdp, fsc, 80, 123, &layout.obstacle);
    const RolloutRecord b = rollout_fsc(pomdp, fsc, 80, 123, &layout.obstacle);
    CHECK(a.states == b.states);
    CHECK(a.actions == b.actions);
    REQUIRE(a.constraint_costs.size() == 1);
    CHECK(a.constraint_costs[0].size() == a.costs.size());
}

TEST_CASE("monte carlo summary") {
    const GridSpec spec = tiny_spec();
    const GridLayout layout = build_layout(spec);
    const Mdp mdp = build_mdp(spec, layout);
    const MdpSolveResult solved = solve_constrained(mdp, RiskMeasure::expectation(),
                                                    SolverParams{});

    SUBCASE("single run and mean identity") {
        const McSummary one = monte_carlo_mdp(spec, layout, solved.policy, 1, 100, 3, 0.2);
        CHECK(one.n_runs == 1);
        CHECK((one.failure_rate == 0.0 || one.failure_rate == 1.0));

        const int n = 32;
        const McSummary sum = monte_carlo_mdp(spec, layout, solved.policy, n, 100, 3, 0.2);
        double mean = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::uint64_t trial_seed = hash_combine(3, static_cast<std::uint64_t>(i));
            const GridLayout world = perturb_layout(spec, layout, trial_seed);
            const Mdp model = build_mdp(spec, world);
            mean += rollout_mdp(model, solved.policy, 100,
                                hash_combine(trial_seed, 0x726f6c6cULL), &world.obstacle)
                        .discounted_cost;
        }
        mean /= n;
        CHECK(sum.mean_cost == doctest::Approx(mean).epsilon(1e-12));
    }
    SUBCASE("identical master seeds give identical summaries") {
        const McSummary a = monte_carlo_mdp(spec, layout, solved.policy, 50, 120, 77, 0.2);
        const McSummary b = monte_carlo_mdp(spec, layout, solved.policy, 50, 120, 77, 0.2);
        CHECK(a.failure_rate == b.failure_rate);
        CHECK(a.mean_cost == b.mean_cost);
        CHECK(a.cvar_cost == b.cvar_cost);
        CHECK(a.evar_cost == b.evar_cost);
    }
    SUBCASE("failure rate is unchanged by horizon extension") {
        const McSummary h1 = monte_carlo_mdp(spec, layout, solved.policy, 200, 300, 9, 0.2);
        const McSummary h2 = monte_carlo_mdp(spec, layout, solved.policy, 200, 600, 9, 0.2);
        CHECK(h1.failure_rate == doctest::Approx(h2.failure_rate).epsilon(1e-12));
    }
}

TEST_CASE("monte carlo mean converges to the policy evaluation") {
    // Unperturbed world (no uncertain obstacles): the sample mean of the
    // discounted cost must sit within three standard errors of <kappa0, V>.
    GridSpec spec = tiny_spec();
    spec.n_uncertain = 0;
    const GridLayout layout = build_layout(spec);
    const Mdp mdp = build_mdp(spec, layout);
    const MdpSolveResult solved =
        solve_constrained(mdp, RiskMeasure::expectation(), SolverParams{});
    const Vec v = policy_risk_evaluation(mdp, solved.policy, RiskMeasure::expectation(),
                                         CostSelector::stage(), SolverParams{});
    double expect = 0.0;
    for (int s = 0; s < mdp.num_states; ++s) expect += mdp.initial_dist[s] * v[s];

    const int n = 10000;
    Vec samples;
    samples.reserve(n);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        const std::uint64_t trial_seed = hash_combine(1234, static_cast<std::uint64_t>(i));
        const double c = rollout_mdp(mdp, solved.policy, 400,
                                     hash_combine(trial_seed, 0x726f6c6cULL), nullptr)
                             .discounted_cost;
        samples.push_back(c);
        mean += c;
    }
    mean /= n;
    double var = 0.0;
    for (double c : samples) var += (c - mean) * (c - mean);
    var /= (n - 1);
    const double se = std::sqrt(var / n);
    CHECK(std::abs(mean - expect) <= 3.0 * se + 1e-9);
}

TEST_CASE("heatmap export") {
    GridSpec spec;
    spec.rows = 2;
    spec.cols = 2;
    spec.goal = {0, 1};
    spec.start = {1, 0};
    spec.obstacle_density = 0.26;  // exactly one obstacle cell
    spec.n_uncertain = 0;
    spec.seed = 1;
    const GridLayout layout = build_layout(spec);
    const Vec values = {1.0, 2.0, 3.0, 4.0};
    const std::vector<int> policy = {0, 1, 2, 3};

    const std::string path = "heatmap_test.csv";
    export_heatmap(values, &policy, spec, layout, path);
    const std::string first = slurp(path);
    CHECK(first.find("x,y,value,action_label,obstacle_flag,goal_flag\n") == 0);
    // Rows follow state-index order s = x + rows * y.
    CHECK(first.find("0,0,1,E,") != std::string::npos);
    CHECK(first.find("1,0,2,W,") != std::string::npos);
    CHECK(first.find("0,1,3,N,") != std::string::npos);
    // Goal flag marks the goal cell row.
    std::istringstream lines(first);
    std::string line;
    std::getline(lines, line);  // header
    int goal_flags = 0;
    while (std::getline(lines, line)) {
        if (line.size() >= 2 && line.back() == '1') ++goal_flags;
    }
    CHECK(goal_flags == 1);

    export_heatmap(values, &policy, spec, layout, path);
    CHECK(slurp(path) == first);  // byte-identical re-export
    std::remove(path.c_str());
}
