#include "riskplan/model.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

namespace riskplan {

namespace {

std::string fmt(const char* pattern, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, args...);
    return std::string(buf);
}

void check_distribution(const Vec& p, std::size_t offset, std::size_t len,
                        std::vector<std::string>& report, const std::string& what) {
    double sum = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
        const double v = p[offset + j];
        if (!std::isfinite(v)) {
            report.push_back(what + fmt(": non-finite entry at %zu", j));
            return;
        }
        if (v < -kProbTol) report.push_back(what + fmt(": negative entry %.3g at %zu", v, j));
        sum += v;
    }
    if (std::abs(sum - 1.0) > kProbTol) {
        report.push_back(what + fmt(": sums to %.12g, expected 1", sum));
    }
}

void check_costs(const Vec& c, std::vector<std::string>& report, const std::string& what) {
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (!std::isfinite(c[j]) || c[j] < 0.0) {
            report.push_back(what + fmt(": entry %zu is negative or non-finite", j));
            return;
        }
    }
}

}  // namespace

Fsc Fsc::uniform_initial(int num_actions, int num_observations) {
    Fsc fsc;
    fsc.num_istates = 1;
    fsc.num_actions = num_actions;
    fsc.num_observations = num_observations;
    fsc.omega.assign(static_cast<std::size_t>(num_observations) * num_actions,
                     1.0 / num_actions);
    fsc.kappa = {1.0};
    return fsc;
}

std::vector<std::string> validate(const Mdp& mdp) {
    std::vector<std::string> report;
    const int S = mdp.num_states, A = mdp.num_actions;
    if (S <= 0 || A <= 0) {
        report.push_back("mdp: num_states and num_actions must be positive");
        return report;
    }
    const std::size_t sa = static_cast<std::size_t>(S) * A;
    if (mdp.transition.size() != sa * S) report.push_back("mdp: transition tensor size mismatch");
    if (mdp.initial_dist.size() != static_cast<std::size_t>(S)) {
        report.push_back("mdp: initial_dist size mismatch");
    }
    if (mdp.stage_cost.size() != sa) report.push_back("mdp: stage_cost size mismatch");
    for (std::size_t i = 0; i < mdp.constraint_costs.size(); ++i) {
        if (mdp.constraint_costs[i].size() != sa) {
            report.push_back(fmt("mdp: constraint_costs[%zu] size mismatch", i));
        }
    }
    if (mdp.budgets.size() != mdp.constraint_costs.size()) {
        report.push_back("mdp: budgets length differs from constraint cost count");
    }
    if (!report.empty()) return report;

    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            check_distribution(mdp.transition, (static_cast<std::size_t>(s) * A + a) * S, S,
                               report, fmt("mdp: transition row (s=%d,a=%d)", s, a));
        }
    }
    check_distribution(mdp.initial_dist, 0, S, report, "mdp: initial_dist");
    check_costs(mdp.stage_cost, report, "mdp: stage_cost");
    for (std::size_t i = 0; i < mdp.constraint_costs.size(); ++i) {
        check_costs(mdp.constraint_costs[i], report, fmt("mdp: constraint_costs[%zu]", i));
    }
    for (std::size_t i = 0; i < mdp.budgets.size(); ++i) {
        if (!(mdp.budgets[i] > 0.0)) report.push_back(fmt("mdp: budgets[%zu] must be > 0", i));
    }
    if (!(mdp.discount > 0.0 && mdp.discount < 1.0)) {
        report.push_back("mdp: discount must lie in (0,1)");
    }
    return report;
}

std::vector<std::string> validate(const Pomdp& pomdp) {
    std::vector<std::string> report = validate(pomdp.mdp);
    const int S = pomdp.mdp.num_states, O = pomdp.num_observations;
    if (O <= 0) {
        report.push_back("pomdp: num_observations must be positive");
        return report;
    }
    if (pomdp.observation.size() != static_cast<std::size_t>(S) * O) {
        report.push_back("pomdp: observation tensor size mismatch");
        return report;
    }
    for (int s = 0; s < S; ++s) {
        check_distribution(pomdp.observation, static_cast<std::size_t>(s) * O, O, report,
                           fmt("pomdp: observation row (s=%d)", s));
    }
    return report;
}

std::vector<std::string> validate(const Fsc& fsc) {
    std::vector<std::string> report;
    const int G = fsc.num_istates, A = fsc.num_actions, O = fsc.num_observations;
    if (G <= 0 || A <= 0 || O <= 0) {
        report.push_back("fsc: num_istates, num_actions, num_observations must be positive");
        return report;
    }
    if (fsc.omega.size() != static_cast<std::size_t>(G) * O * G * A) {
        report.push_back("fsc: omega tensor size mismatch");
        return report;
    }
    if (fsc.kappa.size() != static_cast<std::size_t>(G)) {
        report.push_back("fsc: kappa size mismatch");
        return report;
    }
    for (int g = 0; g < G; ++g) {
        for (int o = 0; o < O; ++o) {
            const double* row = fsc.row(g, o);
            double sum = 0.0;
            for (int g2 = 0; g2 < G; ++g2) {
                for (int a = 0; a < A; ++a) {
                    const double w = row[g2 * A + a];
                    if (!std::isfinite(w) || w < -kProbTol) {
                        report.push_back(
                            fmt("fsc: omega(g=%d,o=%d,g'=%d,a=%d) negative or non-finite",
                                g, o, g2, a));
                    }
                    sum += w;
                }
            }
            if (std::abs(sum - 1.0) > kProbTol) {
                report.push_back(fmt("fsc: omega row (g=%d,o=%d) sums to %.12g", g, o, sum));
            }
        }
    }
    check_distribution(fsc.kappa, 0, G, report, "fsc: kappa");
    return report;
}

Belief belief_update(const Pomdp& pomdp, const Belief& prior, int action, int observation) {
    const int S = pomdp.mdp.num_states;
    if (static_cast<int>(prior.probs.size()) != S) {
        throw DimensionMismatchError("belief_update: prior size mismatch");
    }
    Belief post;
    post.probs.assign(S, 0.0);
    double norm = 0.0;
    for (int s = 0; s < S; ++s) {
        double pred = 0.0;
        for (int sp = 0; sp < S; ++sp) {
            pred += pomdp.mdp.trans(sp, action, s) * prior.probs[sp];
        }
        post.probs[s] = pomdp.obs(s, observation) * pred;
        norm += post.probs[s];
    }
    if (norm <= 1e-300) {
        throw ImpossibleObservationError("belief_update: observation has zero probability");
    }
    for (double& p : post.probs) p /= norm;
    return post;
}

Belief initial_belief(const Pomdp& pomdp, int observation) {
    const int S = pomdp.mdp.num_states;
    Belief b;
    b.probs.assign(S, 0.0);
    double norm = 0.0;
    for (int s = 0; s < S; ++s) {
        b.probs[s] = pomdp.mdp.initial_dist[s] * pomdp.obs(s, observation);
        norm += b.probs[s];
    }
    if (norm <= 1e-300) {
        throw ImpossibleObservationError("initial_belief: observation has zero probability");
    }
    for (double& p : b.probs) p /= norm;
    return b;
}

ProductChain product_chain(const Pomdp& pomdp, const Fsc& fsc) {
    const int S = pomdp.mdp.num_states;
    const int A = pomdp.mdp.num_actions;
    const int O = pomdp.num_observations;
    const int G = fsc.num_istates;
    if (fsc.num_actions != A || fsc.num_observations != O) {
        throw DimensionMismatchError("product_chain: FSC alphabet sizes do not match the POMDP");
    }

    ProductChain pc;
    pc.num_states = S;
    pc.num_istates = G;
    const int N = pc.num_product_states();
    pc.transition.assign(static_cast<std::size_t>(N) * N, 0.0);
    pc.initial_dist.assign(N, 0.0);
    pc.lifted_cost.assign(N, 0.0);
    pc.lifted_constraint_costs.assign(pomdp.mdp.num_constraints(), Vec(N, 0.0));

    for (int g = 0; g < G; ++g) {
        for (int s = 0; s < S; ++s) {
            const int from = pc.index(s, g);
            pc.initial_dist[from] = pomdp.mdp.initial_dist[s] * fsc.kappa[g];
            double* trow = pc.transition.data() + static_cast<std::size_t>(from) * N;
            for (int o = 0; o < O; ++o) {
                const double po = pomdp.obs(s, o);
                if (po <= 0.0) continue;
                const double* orow = fsc.row(g, o);
                for (int g2 = 0; g2 < G; ++g2) {
                    for (int a = 0; a < A; ++a) {
                        const double w = po * orow[g2 * A + a];
                        if (w <= 0.0) continue;
                        pc.lifted_cost[from] += w * pomdp.mdp.cost(s, a);
                        for (int i = 0; i < pomdp.mdp.num_constraints(); ++i) {
                            pc.lifted_constraint_costs[i][from] += w * pomdp.mdp.ccost(i, s, a);
                        }
                        for (int sp = 0; sp < S; ++sp) {
                            const double t = pomdp.mdp.trans(s, a, sp);
                            if (t > 0.0) trow[pc.index(sp, g2)] += w * t;
                        }
                    }
                }
            }
        }
    }
    return pc;
}

Vec policy_action_distribution(const Pomdp& pomdp, const Fsc& fsc, int s, int g) {
    const int A = pomdp.mdp.num_actions;
    const int O = pomdp.num_observations;
    const int G = fsc.num_istates;
    if (fsc.num_actions != A || fsc.num_observations != O) {
        throw DimensionMismatchError("policy_action_distribution: alphabet mismatch");
    }
    Vec dist(A, 0.0);
    for (int o = 0; o < O; ++o) {
        const double po = pomdp.obs(s, o);
        if (po <= 0.0) continue;
        const double* row = fsc.row(g, o);
        for (int g2 = 0; g2 < G; ++g2) {
            for (int a = 0; a < A; ++a) dist[a] += po * row[g2 * A + a];
        }
    }
    return dist;
}

}  // namespace riskplan
