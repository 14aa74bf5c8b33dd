#pragma once

// Shared oracles and instance generators for the test suites. Everything here
// is independent of the solver paths it checks: CVaR via tail averaging and
// dense zeta grids, EVaR via dense zeta grids, constrained optima via
// occupancy-measure linear programs and exhaustive policy enumeration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "riskplan/lp.hpp"
#include "riskplan/model.hpp"
#include "riskplan/risk.hpp"
#include "riskplan/rng.hpp"
#include "riskplan/types.hpp"

namespace oracles {

using riskplan::CounterRng;
using riskplan::Mdp;
using riskplan::Pomdp;
using riskplan::RiskMeasure;
using riskplan::Vec;

// Tail-average CVaR: sort outcomes descending and average the worst eps mass.
inline double cvar_tail(const Vec& values, const Vec& probs, double eps) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (probs[j] > 0.0) pts.emplace_back(values[j], probs[j]);
    }
    std::sort(pts.begin(), pts.end(), std::greater<>());
    double remaining = eps, acc = 0.0;
    for (const auto& [v, p] : pts) {
        const double take = std::min(p, remaining);
        acc += take * v;
        remaining -= take;
        if (remaining <= 0.0) break;
    }
    return acc / eps;
}

inline double cvar_zeta_grid(const Vec& values, const Vec& probs, double eps, int n_points) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (probs[j] > 0.0) {
            lo = std::min(lo, values[j]);
            hi = std::max(hi, values[j]);
        }
    }
    double best = 1e300;
    for (int i = 0; i < n_points; ++i) {
        const double z = lo + (hi - lo) * i / (n_points - 1.0);
        double f = z;
        for (std::size_t j = 0; j < values.size(); ++j) {
            f += probs[j] * std::max(values[j] - z, 0.0) / eps;
        }
        best = std::min(best, f);
    }
    return best;
}

// Dense-grid EVaR over zeta in [lo, hi], max-shifted log-sum-exp.
inline double evar_zeta_grid(const Vec& values, const Vec& probs, double eps,
                             double lo = 1e-4, double hi = 50.0, int n_points = 1000000) {
    double m = -1e300;
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (probs[j] > 0.0) m = std::max(m, values[j]);
    }
    double best = 1e300;
    for (int i = 0; i < n_points; ++i) {
        const double z = lo + (hi - lo) * i / (n_points - 1.0);
        double acc = 0.0;
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (probs[j] > 0.0) acc += probs[j] * std::exp(z * (values[j] - m));
        }
        best = std::min(best, m + (std::log(acc) - std::log(eps)) / z);
    }
    return best;
}

inline double sigma_oracle(const RiskMeasure& m, const Vec& values, const Vec& probs,
                           int evar_points = 20000) {
    switch (m.kind) {
        case RiskMeasure::Kind::Expectation: {
            double r = 0.0;
            for (std::size_t j = 0; j < values.size(); ++j) r += probs[j] * values[j];
            return r;
        }
        case RiskMeasure::Kind::Cvar:
            return cvar_tail(values, probs, m.epsilon);
        case RiskMeasure::Kind::Evar: {
            double lo = 1e300, hi = -1e300;
            for (std::size_t j = 0; j < values.size(); ++j) {
                if (probs[j] > 0.0) {
                    lo = std::min(lo, values[j]);
                    hi = std::max(hi, values[j]);
                }
            }
            if (hi - lo < 1e-12) return hi;
            const double zhi = 1e4 / (std::max(std::abs(lo), std::abs(hi)) + 1.0);
            const double raw = evar_zeta_grid(values, probs, m.epsilon, 1e-6, zhi, evar_points);
            return std::min(raw, hi);
        }
    }
    return 0.0;
}

// Depth-truncated nested risk of a fixed policy, evaluated with the oracle
// sigma; tail error is bounded by gamma^depth * c_max / (1 - gamma).
inline Vec nested_recursion(const Mdp& mdp, const std::vector<int>& policy,
                            const RiskMeasure& measure, const Vec& costs, int depth,
                            int evar_points = 20000) {
    const int S = mdp.num_states;
    Vec v(S, 0.0);
    Vec row(S), next(S);
    for (int k = 0; k < depth; ++k) {
        for (int s = 0; s < S; ++s) {
            const int a = policy[s];
            for (int sp = 0; sp < S; ++sp) row[sp] = mdp.trans(s, a, sp);
            next[s] = costs[static_cast<std::size_t>(s) * mdp.num_actions + a] +
                      mdp.discount * sigma_oracle(measure, v, row, evar_points);
        }
        v = next;
    }
    return v;
}

// Exact constrained optimum over randomized stationary policies for the
// expectation measure: the discounted occupancy-measure LP.
//   min sum x(s,a) c(s,a)
//   s.t. sum_a x(s',a) - gamma sum_{s,a} T(s'|s,a) x(s,a) = kappa0(s')
//        sum x(s,a) d_i(s,a) <= beta_i,  x >= 0
inline double occupancy_lp_optimum(const Mdp& mdp) {
    using riskplan::LpConstraint;
    using riskplan::LpRelation;
    const int S = mdp.num_states, A = mdp.num_actions;
    const int n = S * A;
    Vec obj(n);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) obj[s * A + a] = mdp.cost(s, a);
    }
    std::vector<LpConstraint> cons;
    for (int sp = 0; sp < S; ++sp) {
        LpConstraint c;
        c.coeffs.assign(n, 0.0);
        for (int a = 0; a < A; ++a) c.coeffs[sp * A + a] += 1.0;
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                c.coeffs[s * A + a] -= mdp.discount * mdp.trans(s, a, sp);
            }
        }
        c.rel = LpRelation::Eq;
        c.rhs = mdp.initial_dist[sp];
        cons.push_back(std::move(c));
    }
    for (int i = 0; i < mdp.num_constraints(); ++i) {
        LpConstraint c;
        c.coeffs.assign(n, 0.0);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) c.coeffs[s * A + a] = mdp.ccost(i, s, a);
        }
        c.rel = LpRelation::LessEq;
        c.rhs = mdp.budgets[i];
        cons.push_back(std::move(c));
    }
    const riskplan::LpResult res = riskplan::lp_solve_min(obj, cons);
    if (res.status != riskplan::LpStatus::Optimal) return 1e300;
    return res.objective;
}

// ---- instance generators -------------------------------------------------

inline Vec random_simplex(CounterRng& rng, int n, double min_mass = 0.0) {
    Vec p(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        p[i] = min_mass + rng.next_double();
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

inline Mdp random_mdp(std::uint64_t seed, int S, int A, int n_constraints = 1,
                      double cost_max = 5.0, double discount = 0.9) {
    CounterRng rng(seed);
    Mdp mdp;
    mdp.num_states = S;
    mdp.num_actions = A;
    mdp.discount = discount;
    mdp.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const Vec row = random_simplex(rng, S, 0.05);
            std::copy(row.begin(), row.end(),
                      mdp.transition.begin() + (static_cast<std::size_t>(s) * A + a) * S);
        }
    }
    mdp.initial_dist = random_simplex(rng, S, 0.1);
    mdp.stage_cost.resize(static_cast<std::size_t>(S) * A);
    for (double& c : mdp.stage_cost) c = cost_max * rng.next_double();
    for (int i = 0; i < n_constraints; ++i) {
        Vec d(static_cast<std::size_t>(S) * A);
        for (double& x : d) x = cost_max * rng.next_double();
        mdp.constraint_costs.push_back(std::move(d));
        mdp.budgets.push_back(1.0);  // caller usually overrides
    }
    return mdp;
}

// Fully observable POMDP wrapper: observations mirror states exactly.
inline Pomdp identity_pomdp(const Mdp& mdp) {
    Pomdp p;
    p.mdp = mdp;
    p.num_observations = mdp.num_states;
    p.observation.assign(static_cast<std::size_t>(mdp.num_states) * mdp.num_states, 0.0);
    for (int s = 0; s < mdp.num_states; ++s) {
        p.observation[static_cast<std::size_t>(s) * mdp.num_states + s] = 1.0;
    }
    return p;
}

}  // namespace oracles
