#include "riskplan/mdp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace riskplan {

namespace {

double dot(const Vec& a, const Vec& b) {
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r += a[i] * b[i];
    return r;
}

Vec combined_cost(const Mdp& mdp, const Vec& lambda) {
    Vec c = mdp.stage_cost;
    for (int i = 0; i < mdp.num_constraints(); ++i) {
        const double li = lambda.empty() ? 0.0 : lambda[i];
        if (li == 0.0) continue;
        for (std::size_t j = 0; j < c.size(); ++j) c[j] += li * mdp.constraint_costs[i][j];
    }
    return c;
}

}  // namespace

BackupResult bellman_backup(const Mdp& mdp, const RiskMeasure& measure, const Vec& lambda,
                            const Vec& v, const SolverParams& params) {
    const int S = mdp.num_states, A = mdp.num_actions;
    const Vec ctilde = combined_cost(mdp, lambda);
    BackupResult out;
    out.values.assign(S, 0.0);
    out.policy.assign(S, 0);
    Vec row(S);
    for (int s = 0; s < S; ++s) {
        double best = std::numeric_limits<double>::infinity();
        int best_a = 0;
        for (int a = 0; a < A; ++a) {
            const std::size_t off = (static_cast<std::size_t>(s) * A + a) * S;
            std::copy(mdp.transition.begin() + off, mdp.transition.begin() + off + S,
                      row.begin());
            const double q = ctilde[static_cast<std::size_t>(s) * A + a] +
                             mdp.discount * sigma(measure, v, row, params.inner);
            if (q < best) {
                best = q;
                best_a = a;
            }
        }
        out.values[s] = best;
        out.policy[s] = best_a;
    }
    return out;
}

ValueIterationResult risk_value_iteration(const Mdp& mdp, const RiskMeasure& measure,
                                          const Vec& lambda, const SolverParams& params,
                                          const Vec* warm_start) {
    ValueIterationResult res;
    res.values = (warm_start != nullptr) ? *warm_start : Vec(mdp.num_states, 0.0);
    for (int k = 0; k < params.vi_max_iters; ++k) {
        BackupResult b = bellman_backup(mdp, measure, lambda, res.values, params);
        double resid = 0.0;
        for (int s = 0; s < mdp.num_states; ++s) {
            resid = std::max(resid, std::abs(b.values[s] - res.values[s]));
        }
        res.values = std::move(b.values);
        res.policy = std::move(b.policy);
        res.residuals.push_back(resid);
        res.iterations = k + 1;
        if (resid <= params.vi_tol) return res;
    }
    throw IterationCapError("risk_value_iteration: no fixed point within vi_max_iters");
}

Vec policy_risk_evaluation(const Mdp& mdp, const std::vector<int>& policy,
                           const RiskMeasure& measure, CostSelector selector,
                           const SolverParams& params, const Vec* warm_start) {
    const int S = mdp.num_states;
    if (static_cast<int>(policy.size()) != S) {
        throw DimensionMismatchError("policy_risk_evaluation: policy length mismatch");
    }
    const Vec& costs = (selector.constraint < 0) ? mdp.stage_cost
                                                 : mdp.constraint_costs[selector.constraint];
    Vec v = (warm_start != nullptr) ? *warm_start : Vec(S, 0.0);
    Vec next(S);
    Vec row(S);
    for (int k = 0; k < params.vi_max_iters; ++k) {
        double resid = 0.0;
        for (int s = 0; s < S; ++s) {
            const int a = policy[s];
            const std::size_t off = (static_cast<std::size_t>(s) * mdp.num_actions + a) * S;
            std::copy(mdp.transition.begin() + off, mdp.transition.begin() + off + S,
                      row.begin());
            next[s] = costs[static_cast<std::size_t>(s) * mdp.num_actions + a] +
                      mdp.discount * sigma(measure, v, row, params.inner);
            resid = std::max(resid, std::abs(next[s] - v[s]));
        }
        v.swap(next);
        if (resid <= params.vi_tol) return v;
    }
    throw IterationCapError("policy_risk_evaluation: no fixed point within vi_max_iters");
}

std::vector<int> extract_policy(const Mdp& mdp, const RiskMeasure& measure, const Vec& v,
                                const Vec& lambda, const SolverParams& params) {
    return bellman_backup(mdp, measure, lambda, v, params).policy;
}

MdpSolveResult solve_constrained(const Mdp& mdp, const RiskMeasure& measure,
                                 const SolverParams& params) {
    const int nc = mdp.num_constraints();
    MdpSolveResult res;
    Vec lambda(nc, 0.0);

    double best_bound = -std::numeric_limits<double>::infinity();
    int last_best_iter = 0;
    std::vector<int> cap_streak(nc, 0);
    Vec warm_v;
    std::vector<Vec> warm_d(nc);
    res.status = SolveStatus::IterationCap;

    // Evaluates one dual iterate: inner value iteration at lambda, greedy
    // policy, constraint risks, Theorem-1 lower bound. Every iterate is a
    // valid lower bound regardless of lambda, so all of them enter the trace.
    auto probe = [&](const Vec& lam, Vec& dvals, Vec& resid) {
        ValueIterationResult vi = risk_value_iteration(mdp, measure, lam, params,
                                                       warm_v.empty() ? nullptr : &warm_v);
        warm_v = vi.values;
        const double bound = dot(mdp.initial_dist, vi.values) - dot(lam, mdp.budgets);
        dvals.assign(nc, 0.0);
        resid.assign(nc, 0.0);
        for (int i = 0; i < nc; ++i) {
            Vec vd = policy_risk_evaluation(mdp, vi.policy, measure,
                                            CostSelector::constraint_cost(i), params,
                                            warm_d[i].empty() ? nullptr : &warm_d[i]);
            warm_d[i] = vd;
            dvals[i] = dot(mdp.initial_dist, vd);
            resid[i] = dvals[i] - mdp.budgets[i];
        }
        res.trace.push_back({lam, bound, resid});
        if (bound > best_bound) {
            best_bound = bound;
            last_best_iter = static_cast<int>(res.trace.size()) - 1;
            res.value = vi.values;
            res.policy = vi.policy;
            res.multipliers = lam;
            res.constraint_values = dvals;
        }
        return bound;
    };

    // Residuals within the value-iteration error of zero count as satisfied
    // when bracketing; an exactly tight constraint must not read as violated.
    const double feas_tol = 10.0 * params.vi_tol / (1.0 - mdp.discount);

    // Bracket of the single-constraint residual sign change, for the
    // refinement phase below.
    double lam_lo = -1.0, lam_hi = -1.0;
    Vec dvals, resid;
    bool stopped = false;
    for (int k = 0; k < params.dual_iters && !stopped; ++k) {
        probe(lambda, dvals, resid);
        if (nc == 1) {
            if (resid[0] > feas_tol) lam_lo = std::max(lam_lo, lambda[0]);
            else if (lam_hi < 0.0 || lambda[0] < lam_hi) lam_hi = lambda[0];
        }

        bool infeasible = false;
        for (int i = 0; i < nc; ++i) {
            if (lambda[i] > params.lambda_cap && resid[i] > 0.0) {
                if (++cap_streak[i] >= 10) infeasible = true;
            } else {
                cap_streak[i] = 0;
            }
        }
        if (infeasible) {
            res.status = SolveStatus::InfeasibleSuspected;
            stopped = true;
            break;
        }
        if (nc == 0 ||
            (k >= 25 && static_cast<int>(res.trace.size()) - 1 - last_best_iter >= 25)) {
            res.status = SolveStatus::Converged;
            stopped = true;
            break;
        }
        const double step = params.dual_step0 / std::sqrt(static_cast<double>(k + 1));
        for (int i = 0; i < nc; ++i) lambda[i] = std::max(0.0, lambda[i] + step * resid[i]);
    }

    // Single-constraint refinement: locate the residual sign change by
    // bisection. The subgradient phase with its sqrt-k steps localizes the
    // dual optimum too slowly for tight tolerances; every bisection probe is
    // still a plain dual iterate and lands in the trace.
    if (nc == 1 && res.status != SolveStatus::InfeasibleSuspected) {
        if (lam_hi < 0.0) {
            // Never saw a satisfied constraint; expand upward.
            double hi = std::max(1.0, 2.0 * std::max(lam_lo, 0.0));
            while (hi <= params.lambda_cap) {
                probe(Vec{hi}, dvals, resid);
                if (resid[0] <= feas_tol) {
                    lam_hi = hi;
                    break;
                }
                lam_lo = std::max(lam_lo, hi);
                hi *= 2.0;
            }
            if (lam_hi < 0.0) res.status = SolveStatus::InfeasibleSuspected;
        }
        if (lam_hi >= 0.0 && lam_lo >= 0.0 && lam_hi > lam_lo) {
            while (lam_hi - lam_lo > 1e-11 * (1.0 + lam_hi)) {
                const double mid = 0.5 * (lam_lo + lam_hi);
                probe(Vec{mid}, dvals, resid);
                if (resid[0] > feas_tol) lam_lo = mid;
                else lam_hi = mid;
            }
            probe(Vec{lam_hi}, dvals, resid);
            res.status = SolveStatus::Converged;
        } else if (lam_hi >= 0.0 && lam_lo < 0.0) {
            // Constraint satisfied from the start: lambda* = 0.
            res.status = SolveStatus::Converged;
        }
    }

    res.lower_bound = dot(mdp.initial_dist, res.value) - dot(res.multipliers, mdp.budgets);
    return res;
}

std::string export_dcp(const Mdp& mdp, const RiskMeasure& measure, const Vec& budgets_override) {
    using nlohmann::json;
    const int S = mdp.num_states, A = mdp.num_actions, nc = mdp.num_constraints();
    const Vec& beta = budgets_override.empty() ? mdp.budgets : budgets_override;
    const bool needs_zeta = measure.kind != RiskMeasure::Kind::Expectation;

    json doc;
    doc["format"] = "riskplan-dcp";
    doc["version"] = 1;
    doc["sense"] = "sup";
    doc["discount"] = mdp.discount;
    doc["measure"] = {{"kind", measure.kind == RiskMeasure::Kind::Expectation ? "expectation"
                               : measure.kind == RiskMeasure::Kind::Cvar      ? "cvar"
                                                                              : "evar"},
                      {"epsilon", measure.epsilon}};
    doc["variables"] = {{"V", {{"count", S}}},
                        {"lambda", {{"count", nc}, {"lower_bound", 0.0}}}};
    if (needs_zeta) {
        doc["variables"]["zeta"] = {{"count", S * A},
                                    {"positive", measure.kind == RiskMeasure::Kind::Evar}};
    }
    doc["objective"] = {
        {"g0", {{"kind", "linear"}, {"V_coeffs", mdp.initial_dist}}},
        {"f0", {{"kind", "linear"}, {"lambda_coeffs", beta}}},
    };

    json cons = json::array();
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            json rec;
            rec["state"] = s;
            rec["action"] = a;
            rec["f1"] = {{"kind", "linear"}, {"var", "V"}, {"index", s}};
            Vec dcoef(nc);
            for (int i = 0; i < nc; ++i) dcoef[i] = mdp.ccost(i, s, a);
            rec["g1"] = {{"kind", "linear"},
                         {"constant", mdp.cost(s, a)},
                         {"lambda_coeffs", dcoef}};
            json succ = json::array();
            for (int sp = 0; sp < S; ++sp) {
                const double p = mdp.trans(s, a, sp);
                if (p > 0.0) succ.push_back({sp, p});
            }
            json g2;
            g2["discount"] = mdp.discount;
            g2["succ"] = succ;
            switch (measure.kind) {
                case RiskMeasure::Kind::Expectation:
                    g2["kind"] = "linear";
                    break;
                case RiskMeasure::Kind::Cvar:
                    g2["kind"] = "cvar_positive_part";
                    g2["epsilon"] = measure.epsilon;
                    g2["inv_epsilon_coeff"] = 1.0 / measure.epsilon;
                    g2["zeta_index"] = s * A + a;
                    break;
                case RiskMeasure::Kind::Evar:
                    g2["kind"] = "evar_log_sum_exp";
                    g2["epsilon"] = measure.epsilon;
                    g2["zeta_index"] = s * A + a;
                    break;
            }
            rec["g2"] = g2;
            cons.push_back(rec);
        }
    }
    doc["constraints"] = cons;
    return doc.dump(2) + "\n";
}

OracleResult brute_force_constrained_oracle(const Mdp& mdp, const RiskMeasure& measure,
                                            const Vec& budgets, const OracleParams& oparams,
                                            const SolverParams& params) {
    const int S = mdp.num_states, A = mdp.num_actions;
    if (S > 6 || A > 3) throw TooLargeError("oracle: instance exceeds |S| <= 6, |Act| <= 3");
    const int nc = static_cast<int>(budgets.size());

    SolverParams eval_params = params;
    eval_params.vi_max_iters = oparams.horizon;

    std::vector<std::vector<int>> policies;
    std::vector<int> pol(S, 0);
    long total = 1;
    for (int s = 0; s < S; ++s) total *= A;
    policies.reserve(total);
    for (long code = 0; code < total; ++code) {
        long c = code;
        for (int s = 0; s < S; ++s) {
            pol[s] = static_cast<int>(c % A);
            c /= A;
        }
        policies.push_back(pol);
    }

    auto eval = [&](const Mdp& model, const std::vector<int>& p, CostSelector sel) {
        Vec v = policy_risk_evaluation(model, p, measure, sel, eval_params);
        return dot(model.initial_dist, v);
    };

    OracleResult res;
    res.best_feasible_value = std::numeric_limits<double>::infinity();
    std::vector<double> objective(policies.size());
    std::vector<Vec> dvalues(policies.size(), Vec(nc, 0.0));
    for (std::size_t pi = 0; pi < policies.size(); ++pi) {
        objective[pi] = eval(mdp, policies[pi], CostSelector::stage());
        bool feasible = true;
        for (int i = 0; i < nc; ++i) {
            dvalues[pi][i] = eval(mdp, policies[pi], CostSelector::constraint_cost(i));
            if (dvalues[pi][i] > budgets[i] + 1e-9) feasible = false;
        }
        if (feasible && objective[pi] < res.best_feasible_value) {
            res.any_feasible = true;
            res.best_feasible_value = objective[pi];
            res.best_policy = policies[pi];
        }
    }

    if (oparams.with_lagrangian_grid && nc > 0) {
        // Best lower bound over the lambda grid {0, 0.1, ..., 50}^nc.
        std::vector<int> idx(nc, 0);
        const int grid_n = 501;
        double best = -std::numeric_limits<double>::infinity();
        Vec lam(nc);
        while (true) {
            for (int i = 0; i < nc; ++i) lam[i] = 0.1 * idx[i];
            double inner = std::numeric_limits<double>::infinity();
            if (measure.kind == RiskMeasure::Kind::Expectation) {
                // rho(c + lam . d) decomposes for the linear measure
                for (std::size_t pi = 0; pi < policies.size(); ++pi) {
                    double val = objective[pi];
                    for (int i = 0; i < nc; ++i) val += lam[i] * dvalues[pi][i];
                    inner = std::min(inner, val);
                }
            } else {
                Mdp folded = mdp;
                for (int i = 0; i < nc; ++i) {
                    if (lam[i] == 0.0) continue;
                    for (std::size_t j = 0; j < folded.stage_cost.size(); ++j) {
                        folded.stage_cost[j] += lam[i] * mdp.constraint_costs[i][j];
                    }
                }
                for (const auto& p : policies) {
                    inner = std::min(inner, eval(folded, p, CostSelector::stage()));
                }
            }
            double bound = inner;
            for (int i = 0; i < nc; ++i) bound -= lam[i] * budgets[i];
            best = std::max(best, bound);

            int d = 0;
            while (d < nc && ++idx[d] == grid_n) idx[d++] = 0;
            if (d == nc) break;
        }
        res.grid_computed = true;
        res.lagrangian_grid_bound = best;
    }
    return res;
}

}  // namespace riskplan
