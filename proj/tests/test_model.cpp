#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "riskplan/model.hpp"
#include "riskplan/rng.hpp"
#include "test_support.hpp"

using namespace riskplan;
using oracles::random_mdp;
using oracles::random_simplex;

namespace {

Mdp two_state_mdp() {
    Mdp m;
    m.num_states = 2;
    m.num_actions = 1;
    m.transition = {0.5, 0.5, 1.0, 0.0};  // [s][a][s']
    m.initial_dist = {1.0, 0.0};
    m.stage_cost = {1.0, 2.0};
    m.discount = 0.9;
    return m;
}

Pomdp random_pomdp(std::uint64_t seed, int S, int A, int O) {
    CounterRng rng(hash_combine(seed, 0xabcdULL));
    Pomdp p;
    p.mdp = random_mdp(seed, S, A);
    p.num_observations = O;
    p.observation.assign(static_cast<std::size_t>(S) * O, 0.0);
    for (int s = 0; s < S; ++s) {
        const Vec row = random_simplex(rng, O, 0.05);
        std::copy(row.begin(), row.end(), p.observation.begin() + static_cast<std::size_t>(s) * O);
    }
    return p;
}

// Single-I-state controller that plays a fixed action for every observation.
Fsc fixed_action_fsc(int A, int O, int action) {
    Fsc f;
    f.num_istates = 1;
    f.num_actions = A;
    f.num_observations = O;
    f.omega.assign(static_cast<std::size_t>(O) * A, 0.0);
    for (int o = 0; o < O; ++o) f.omega[static_cast<std::size_t>(o) * A + action] = 1.0;
    f.kappa = {1.0};
    return f;
}

}  // namespace

TEST_CASE("validate flags a broken transition row with its location") {
    Mdp m = two_state_mdp();
    m.transition[2] = 0.9;  // row (s=1, a=0) now sums to 0.9
    m.transition[3] = 0.0;
    const auto report = validate(m);
    REQUIRE(!report.empty());
    CHECK(report.front().find("s=1") != std::string::npos);
    CHECK(report.front().find("a=0") != std::string::npos);
}

TEST_CASE("validate accepts a well-formed model") {
    CHECK(validate(two_state_mdp()).empty());
    CHECK(validate(random_pomdp(3, 4, 2, 3)).empty());
}

TEST_CASE("validate names the offending omega entry") {
    Fsc f = fixed_action_fsc(2, 2, 0);
    f.omega[1] = -0.1;  // (g=0, o=0, g'=0, a=1)
    f.omega[0] = 1.1;
    const auto report = validate(f);
    REQUIRE(!report.empty());
    CHECK(report.front().find("g=0") != std::string::npos);
    CHECK(report.front().find("a=1") != std::string::npos);
}

TEST_CASE("belief update on a deterministic chain is one-hot") {
    Pomdp p;
    p.mdp.num_states = 2;
    p.mdp.num_actions = 1;
    p.mdp.transition = {0.0, 1.0, 0.0, 1.0};  // every action leads to state 1
    p.mdp.initial_dist = {0.5, 0.5};
    p.mdp.stage_cost = {0.0, 0.0};
    p.mdp.discount = 0.9;
    p.num_observations = 2;
    p.observation = {1.0, 0.0, 0.0, 1.0};  // state 1 emits observation 1 surely

    const Belief post = belief_update(p, Belief{{0.3, 0.7}}, 0, 1);
    CHECK(post.probs[0] == doctest::Approx(0.0));
    CHECK(post.probs[1] == doctest::Approx(1.0));

    // Observation 0 is impossible after the transition.
    CHECK_THROWS_AS(belief_update(p, Belief{{0.3, 0.7}}, 0, 0), ImpossibleObservationError);
}

TEST_CASE("uninformative update keeps the prior") {
    Pomdp p;
    p.mdp.num_states = 2;
    p.mdp.num_actions = 1;
    p.mdp.transition = {1.0, 0.0, 0.0, 1.0};
    p.mdp.initial_dist = {0.5, 0.5};
    p.mdp.stage_cost = {0.0, 0.0};
    p.mdp.discount = 0.9;
    p.num_observations = 2;
    p.observation = {0.5, 0.5, 0.5, 0.5};

    const Belief post = belief_update(p, Belief{{0.5, 0.5}}, 0, 0);
    CHECK(post.probs[0] == doctest::Approx(0.5));
    CHECK(post.probs[1] == doctest::Approx(0.5));
}

TEST_CASE("belief update matches the hand Bayes computation") {
    Pomdp p;
    p.mdp.num_states = 2;
    p.mdp.num_actions = 1;
    p.mdp.transition = {1.0, 0.0, 0.0, 1.0};
    p.mdp.initial_dist = {0.5, 0.5};
    p.mdp.stage_cost = {0.0, 0.0};
    p.mdp.discount = 0.9;
    p.num_observations = 2;
    p.observation = {0.8, 0.2, 0.3, 0.7};

    const Belief post = belief_update(p, Belief{{0.5, 0.5}}, 0, 0);
    CHECK(post.probs[0] == doctest::Approx(0.8 / 1.1));
    CHECK(post.probs[1] == doctest::Approx(0.3 / 1.1));
}

TEST_CASE("initial belief examples") {
    Pomdp p;
    p.mdp.num_states = 2;
    p.mdp.num_actions = 1;
    p.mdp.transition = {1.0, 0.0, 0.0, 1.0};
    p.mdp.initial_dist = {0.9, 0.1};
    p.mdp.stage_cost = {0.0, 0.0};
    p.mdp.discount = 0.9;
    p.num_observations = 2;
    p.observation = {0.5, 0.5, 1.0, 0.0};  // column for o=0 is (0.5, 1.0)

    const Belief b = initial_belief(p, 0);
    CHECK(b.probs[0] == doctest::Approx(0.45 / 0.55));
    CHECK(b.probs[1] == doctest::Approx(0.10 / 0.55));

    Pomdp onehot = p;
    onehot.mdp.initial_dist = {1.0, 0.0};
    const Belief b2 = initial_belief(onehot, 0);
    CHECK(b2.probs[0] == doctest::Approx(1.0));
}

TEST_CASE("product chain of a fixed-action controller reproduces the MDP kernel") {
    const Pomdp p = random_pomdp(11, 3, 2, 4);
    const Fsc f = fixed_action_fsc(2, 4, 1);
    const ProductChain pc = product_chain(p, f);
    REQUIRE(pc.num_product_states() == 3);
    for (int s = 0; s < 3; ++s) {
        for (int sp = 0; sp < 3; ++sp) {
            CHECK(std::abs(pc.trans(pc.index(s, 0), pc.index(sp, 0)) -
                           p.mdp.trans(s, 1, sp)) < 1e-12);
        }
        CHECK(pc.initial_dist[pc.index(s, 0)] == doctest::Approx(p.mdp.initial_dist[s]));
        CHECK(pc.lifted_cost[pc.index(s, 0)] == doctest::Approx(p.mdp.cost(s, 1)));
    }
}

TEST_CASE("product chain matches direct summation for a uniform controller") {
    const Pomdp p = random_pomdp(12, 3, 2, 3);
    Fsc f = fixed_action_fsc(2, 3, 0);
    for (double& w : f.omega) w = 0.5;  // uniform over (g0, a)
    const ProductChain pc = product_chain(p, f);
    for (int s = 0; s < 3; ++s) {
        for (int sp = 0; sp < 3; ++sp) {
            // Direct summation over o and a.
            double expect = 0.0;
            for (int o = 0; o < 3; ++o) {
                for (int a = 0; a < 2; ++a) {
                    expect += p.obs(s, o) * 0.5 * p.mdp.trans(s, a, sp);
                }
            }
            CHECK(pc.trans(s, sp) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("product chain rows are stochastic on random instances") {
    CounterRng rng(31);
    for (int it = 0; it < 40; ++it) {
        const int S = 2 + rng.next_int(3), A = 1 + rng.next_int(3), O = 2 + rng.next_int(3);
        const int G = 1 + rng.next_int(3);
        const Pomdp p = random_pomdp(1000 + it, S, A, O);
        Fsc f;
        f.num_istates = G;
        f.num_actions = A;
        f.num_observations = O;
        f.omega.assign(static_cast<std::size_t>(G) * O * G * A, 0.0);
        for (int g = 0; g < G; ++g) {
            for (int o = 0; o < O; ++o) {
                const Vec row = random_simplex(rng, G * A);
                std::copy(row.begin(), row.end(), f.row(g, o));
            }
        }
        f.kappa = random_simplex(rng, G);
        REQUIRE(validate(f).empty());
        const ProductChain pc = product_chain(p, f);
        double iota_sum = 0.0;
        for (int q = 0; q < pc.num_product_states(); ++q) {
            double sum = 0.0;
            for (int q2 = 0; q2 < pc.num_product_states(); ++q2) sum += pc.trans(q, q2);
            CHECK(std::abs(sum - 1.0) < 1e-9);
            iota_sum += pc.initial_dist[q];
        }
        CHECK(std::abs(iota_sum - 1.0) < 1e-9);
    }
}

TEST_CASE("policy action distribution examples") {
    const Pomdp p = random_pomdp(21, 2, 2, 2);
    // Deterministic selection of action 1 regardless of observation.
    const Fsc det = fixed_action_fsc(2, 2, 1);
    Vec dist = policy_action_distribution(p, det, 0, 0);
    CHECK(dist[0] == doctest::Approx(0.0));
    CHECK(dist[1] == doctest::Approx(1.0));

    // Uniform controller: uniform action marginal.
    Fsc uni = det;
    for (double& w : uni.omega) w = 0.5;
    dist = policy_action_distribution(p, uni, 1, 0);
    CHECK(dist[0] == doctest::Approx(0.5));
    CHECK(dist[1] == doctest::Approx(0.5));

    // Observation-dependent action choice with a 50/50 observation row.
    Pomdp half = p;
    half.observation = {0.5, 0.5, 0.5, 0.5};
    Fsc sw = det;
    sw.omega = {1.0, 0.0, 0.0, 1.0};  // o=0 -> a0, o=1 -> a1
    dist = policy_action_distribution(half, sw, 0, 0);
    CHECK(dist[0] == doctest::Approx(0.5));
    CHECK(dist[1] == doctest::Approx(0.5));

    double sum = 0.0;
    for (double d : dist) sum += d;
    CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("belief update posterior is a valid belief on random instances") {
    CounterRng rng(41);
    for (int it = 0; it < 100; ++it) {
        const int S = 2 + rng.next_int(4), A = 1 + rng.next_int(2), O = 2 + rng.next_int(3);
        const Pomdp p = random_pomdp(2000 + it, S, A, O);
        Belief prior{random_simplex(rng, S, 0.01)};
        const int a = rng.next_int(A), o = rng.next_int(O);
        const Belief post = belief_update(p, prior, a, o);
        double sum = 0.0;
        for (double x : post.probs) {
            CHECK(x >= 0.0);
            sum += x;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}
