#include "riskplan/pomdp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "riskplan/lp.hpp"

namespace riskplan {

namespace {

double dot(const Vec& a, const Vec& b) {
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r += a[i] * b[i];
    return r;
}

// Euclidean projection onto the probability simplex.
void project_to_simplex(double* v, int n) {
    thread_local std::vector<double> sorted;
    sorted.assign(v, v + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cum = 0.0, tau = 0.0;
    int rho = 0;
    for (int j = 0; j < n; ++j) {
        cum += sorted[j];
        const double t = (cum - 1.0) / (j + 1);
        if (sorted[j] - t > 0.0) {
            rho = j + 1;
            tau = t;
        }
    }
    for (int i = 0; i < n; ++i) v[i] = std::max(0.0, v[i] - tau);
}

Vec lagrangian_stage(const ProductChain& pc, const Vec& lambda) {
    Vec stage = pc.lifted_cost;
    for (std::size_t i = 0; i < pc.lifted_constraint_costs.size(); ++i) {
        const double li = i < lambda.size() ? lambda[i] : 0.0;
        if (li == 0.0) continue;
        for (std::size_t j = 0; j < stage.size(); ++j) {
            stage[j] += li * pc.lifted_constraint_costs[i][j];
        }
    }
    return stage;
}

Vec combined_cost(const Mdp& mdp, const Vec& lambda) {
    Vec c = mdp.stage_cost;
    for (int i = 0; i < mdp.num_constraints(); ++i) {
        const double li = i < static_cast<int>(lambda.size()) ? lambda[i] : 0.0;
        if (li == 0.0) continue;
        for (std::size_t j = 0; j < c.size(); ++j) c[j] += li * mdp.constraint_costs[i][j];
    }
    return c;
}

// Extends product values to a grown I-state set; new slices start from the
// per-state minimum over existing I-states.
Vec resize_product_values(const Vec& old_values, int S, int g_old, int g_new) {
    Vec out(static_cast<std::size_t>(S) * g_new, 0.0);
    std::copy(old_values.begin(), old_values.end(), out.begin());
    for (int s = 0; s < S; ++s) {
        double lo = std::numeric_limits<double>::infinity();
        for (int g = 0; g < g_old; ++g) lo = std::min(lo, old_values[g * S + s]);
        for (int g = g_old; g < g_new; ++g) out[static_cast<std::size_t>(g) * S + s] = lo;
    }
    return out;
}

}  // namespace

ProductEvaluation evaluate_product(const ProductChain& pc, const Vec& stage, double discount,
                                   const RiskMeasure& measure, const SolverParams& params,
                                   const Vec* warm_start) {
    const int N = pc.num_product_states();
    ProductEvaluation ev;
    ev.values = (warm_start != nullptr && static_cast<int>(warm_start->size()) == N)
                    ? *warm_start
                    : Vec(N, 0.0);
    Vec next(N);
    Vec row(N);
    bool done = false;
    for (int k = 0; k < params.vi_max_iters && !done; ++k) {
        double resid = 0.0;
        for (int q = 0; q < N; ++q) {
            const std::size_t off = static_cast<std::size_t>(q) * N;
            std::copy(pc.transition.begin() + off, pc.transition.begin() + off + N, row.begin());
            next[q] = stage[q] + discount * sigma(measure, ev.values, row, params.inner);
            resid = std::max(resid, std::abs(next[q] - ev.values[q]));
        }
        ev.values.swap(next);
        ev.iterations = k + 1;
        done = resid <= params.vi_tol;
    }
    if (!done) throw IterationCapError("evaluate_product: no fixed point within vi_max_iters");

    // Record the inner-optimal zeta per row for the improvement programs.
    ev.zeta.assign(N, 0.0);
    ev.constant_row.assign(N, 0);
    SigmaDiagnostics diag;
    for (int q = 0; q < N; ++q) {
        const std::size_t off = static_cast<std::size_t>(q) * N;
        std::copy(pc.transition.begin() + off, pc.transition.begin() + off + N, row.begin());
        sigma(measure, ev.values, row, params.inner, &diag);
        ev.zeta[q] = diag.zeta;
        ev.constant_row[q] = diag.constant_support ? 1 : 0;
    }
    return ev;
}

ProductEvaluation evaluate_fsc(const Pomdp& pomdp, const Fsc& fsc, const RiskMeasure& measure,
                               const Vec& lambda, const SolverParams& params) {
    const ProductChain pc = product_chain(pomdp, fsc);
    return evaluate_product(pc, lagrangian_stage(pc, lambda), pomdp.mdp.discount, measure,
                            params);
}

int select_initial_istate(const Vec& values, const Vec& iota, int num_states, int num_istates) {
    // State marginal of iota; with iota = kappa0 x kappa this recovers kappa0.
    Vec marginal(num_states, 0.0);
    for (int g = 0; g < num_istates; ++g) {
        for (int s = 0; s < num_states; ++s) marginal[s] += iota[g * num_states + s];
    }
    int best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int g = 0; g < num_istates; ++g) {
        double score = 0.0;
        for (int s = 0; s < num_states; ++s) score += marginal[s] * values[g * num_states + s];
        if (score < best_score - 1e-15) {
            best_score = score;
            best = g;
        }
    }
    return best;
}

namespace {

// One-step backup of I-state g as a function of its omega rows, with the
// inner zeta frozen at the evaluation values (Proposition-2 style). For
// expectation/CVaR the backup is affine in omega; for EVaR it carries a
// log-sum-exp term per state.
struct FrozenBackup {
    int S = 0, O = 0, G = 0, A = 0;
    RiskMeasure measure;
    double discount = 0.0;
    std::vector<Vec> lin;       // affine part per state over the row space
    Vec constant;               // per-state additive constant
    std::vector<Vec> bmat;      // EVaR log-sum-exp coefficients (empty if unused)
    Vec mshift;                 // EVaR max-shift
    Vec zeta;                   // frozen zeta
    Vec vref;                   // V([s,g]) at the current evaluation
    Vec delta;                  // backup(current omega) - vref, consistency slack

    int dim() const { return O * G * A; }

    double backup(int s, const double* w) const {
        double val = constant[s];
        const Vec& l = lin[s];
        for (int j = 0; j < dim(); ++j) val += l[j] * w[j];
        if (!bmat.empty() && !bmat[s].empty()) {
            double acc = 0.0;
            for (int j = 0; j < dim(); ++j) acc += bmat[s][j] * w[j];
            acc = std::max(acc, 1e-300);
            val += discount *
                   (mshift[s] + (std::log(acc) - std::log(measure.epsilon)) / zeta[s]);
        }
        return val;
    }

    void add_backup_gradient(int s, const double* w, double scale, Vec& grad) const {
        const Vec& l = lin[s];
        for (int j = 0; j < dim(); ++j) grad[j] += scale * l[j];
        if (!bmat.empty() && !bmat[s].empty()) {
            double acc = 0.0;
            for (int j = 0; j < dim(); ++j) acc += bmat[s][j] * w[j];
            acc = std::max(acc, 1e-300);
            const double f = scale * discount / (zeta[s] * acc);
            for (int j = 0; j < dim(); ++j) grad[j] += f * bmat[s][j];
        }
    }
};

FrozenBackup build_frozen_backup(const Pomdp& pomdp, const Fsc& fsc, int g,
                                 const ProductEvaluation& eval, const Vec& lambda,
                                 const RiskMeasure& measure, const PiParams& params) {
    const Mdp& mdp = pomdp.mdp;
    const int S = mdp.num_states, A = mdp.num_actions, O = pomdp.num_observations;
    const int G = fsc.num_istates;
    const Vec ctilde = combined_cost(mdp, lambda);
    const bool evar = measure.kind == RiskMeasure::Kind::Evar;

    FrozenBackup fb;
    fb.S = S;
    fb.O = O;
    fb.G = G;
    fb.A = A;
    fb.measure = measure;
    fb.discount = mdp.discount;
    fb.lin.assign(S, Vec(static_cast<std::size_t>(O) * G * A, 0.0));
    fb.constant.assign(S, 0.0);
    fb.mshift.assign(S, 0.0);
    fb.zeta.assign(S, 0.0);
    fb.vref.assign(S, 0.0);
    fb.delta.assign(S, 0.0);
    if (evar) fb.bmat.assign(S, Vec());

    for (int s = 0; s < S; ++s) {
        fb.vref[s] = eval.values[static_cast<std::size_t>(g) * S + s];

        // Reachable successor values under any action / next I-state.
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < A; ++a) {
            for (int sp = 0; sp < S; ++sp) {
                if (mdp.trans(s, a, sp) <= 0.0) continue;
                for (int g2 = 0; g2 < G; ++g2) {
                    const double v = eval.values[static_cast<std::size_t>(g2) * S + sp];
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
        }
        const bool const_support = hi - lo < 1e-12;
        fb.mshift[s] = hi;

        double zeta_s = eval.zeta[static_cast<std::size_t>(g) * S + s];
        if (evar && !const_support &&
            (eval.constant_row[static_cast<std::size_t>(g) * S + s] != 0 || zeta_s <= 0.0)) {
            // The evaluation short-circuited this row; refreeze zeta against a
            // uniform reference over the reachable support.
            Vec vals;
            for (int a = 0; a < A; ++a) {
                for (int sp = 0; sp < S; ++sp) {
                    if (mdp.trans(s, a, sp) <= 0.0) continue;
                    for (int g2 = 0; g2 < G; ++g2) {
                        vals.push_back(eval.values[static_cast<std::size_t>(g2) * S + sp]);
                    }
                }
            }
            SigmaDiagnostics diag;
            const Vec uni(vals.size(), 1.0 / static_cast<double>(vals.size()));
            sigma(measure, vals, uni, params.solver.inner, &diag);
            zeta_s = diag.zeta;
        }
        fb.zeta[s] = zeta_s;

        Vec& l = fb.lin[s];
        Vec* b = nullptr;
        if (evar && !const_support) {
            fb.bmat[s].assign(static_cast<std::size_t>(O) * G * A, 0.0);
            b = &fb.bmat[s];
        }
        if (const_support) fb.constant[s] = mdp.discount * hi;
        else if (measure.kind == RiskMeasure::Kind::Cvar) {
            fb.constant[s] = mdp.discount * zeta_s;
        }

        for (int o = 0; o < O; ++o) {
            const double po = pomdp.obs(s, o);
            if (po <= 0.0) continue;
            for (int g2 = 0; g2 < G; ++g2) {
                for (int a = 0; a < A; ++a) {
                    const std::size_t j =
                        static_cast<std::size_t>(o) * G * A + static_cast<std::size_t>(g2) * A + a;
                    l[j] += po * ctilde[static_cast<std::size_t>(s) * A + a];
                    if (const_support) continue;
                    double risk_part = 0.0;
                    for (int sp = 0; sp < S; ++sp) {
                        const double t = mdp.trans(s, a, sp);
                        if (t <= 0.0) continue;
                        const double v = eval.values[static_cast<std::size_t>(g2) * S + sp];
                        switch (measure.kind) {
                            case RiskMeasure::Kind::Expectation:
                                risk_part += t * v;
                                break;
                            case RiskMeasure::Kind::Cvar:
                                risk_part += t * std::max(v - zeta_s, 0.0) / measure.epsilon;
                                break;
                            case RiskMeasure::Kind::Evar:
                                (*b)[j] += po * t * std::exp(zeta_s * (v - hi));
                                break;
                        }
                    }
                    if (measure.kind != RiskMeasure::Kind::Evar) {
                        l[j] += mdp.discount * po * risk_part;
                    }
                }
            }
        }
    }
    return fb;
}

}  // namespace

ImprovementResult improve_istate(const Pomdp& pomdp, const Fsc& fsc, int g,
                                 const ProductEvaluation& eval, const Vec& lambda,
                                 const RiskMeasure& measure, const PiParams& params) {
    const int S = pomdp.mdp.num_states, A = pomdp.mdp.num_actions;
    const int O = pomdp.num_observations, G = fsc.num_istates;
    const int dim = O * G * A;

    FrozenBackup fb = build_frozen_backup(pomdp, fsc, g, eval, lambda, measure, params);
    // Current rows of I-state g, flattened over observations.
    const double* cur = fsc.row(g, 0);
    for (int s = 0; s < S; ++s) fb.delta[s] = fb.backup(s, cur) - fb.vref[s];

    ImprovementResult out;
    out.new_rows.assign(cur, cur + dim);

    if (measure.kind != RiskMeasure::Kind::Evar) {
        // LP over (omega, eps): maximize eps subject to
        // backup(s; omega) <= vref[s] + delta[s] - eps, simplex rows per o.
        std::vector<LpConstraint> cons;
        cons.reserve(S + O);
        for (int s = 0; s < S; ++s) {
            LpConstraint c;
            c.coeffs = fb.lin[s];
            c.coeffs.push_back(1.0);  // eps
            c.rel = LpRelation::LessEq;
            c.rhs = fb.vref[s] + fb.delta[s] - fb.constant[s];
            cons.push_back(std::move(c));
        }
        for (int o = 0; o < O; ++o) {
            LpConstraint c;
            c.coeffs.assign(dim + 1, 0.0);
            for (int j = 0; j < G * A; ++j) c.coeffs[o * G * A + j] = 1.0;
            c.rel = LpRelation::Eq;
            c.rhs = 1.0;
            cons.push_back(std::move(c));
        }
        Vec obj(dim + 1, 0.0);
        obj[dim] = 1.0;
        LpResult phase1 = lp_solve_max(obj, cons);
        if (phase1.status != LpStatus::Optimal) return out;
        const double eps_star = phase1.x[dim];
        out.epsilon = std::max(0.0, eps_star);

        // Among eps-optimal rows, minimize the summed backup so states whose
        // constraint is slack still move to their greedy choice.
        std::vector<LpConstraint> cons2 = cons;
        LpConstraint pin;
        pin.coeffs.assign(dim + 1, 0.0);
        pin.coeffs[dim] = 1.0;
        pin.rel = LpRelation::GreaterEq;
        pin.rhs = eps_star - 1e-12;
        cons2.push_back(std::move(pin));
        Vec obj2(dim + 1, 0.0);
        for (int s = 0; s < S; ++s) {
            for (int j = 0; j < dim; ++j) obj2[j] += fb.lin[s][j];
        }
        LpResult phase2 = lp_solve_min(obj2, cons2);
        const Vec& x = (phase2.status == LpStatus::Optimal) ? phase2.x : phase1.x;
        std::copy(x.begin(), x.begin() + dim, out.new_rows.begin());
    } else {
        // Projected subgradient ascent on min_s [vref + delta - backup(s; omega)].
        Vec w(cur, cur + dim);
        Vec grad(dim);
        Vec best_w = w;
        double best_f = 0.0;  // the current rows achieve slack 0 by construction
        double best_sum = 0.0;
        int since_best = 0;
        const int stall_window = std::max(50, params.pg_iters / 10);
        for (int it = 0; it < params.pg_iters; ++it) {
            int smin = 0;
            double fmin = std::numeric_limits<double>::infinity();
            double total = 0.0;
            for (int s = 0; s < S; ++s) {
                const double slack = fb.vref[s] + fb.delta[s] - fb.backup(s, w.data());
                total += slack;
                if (slack < fmin) {
                    fmin = slack;
                    smin = s;
                }
            }
            if (fmin > best_f + 1e-15 ||
                (fmin >= best_f - 1e-15 && total > best_sum + 1e-15)) {
                best_f = fmin;
                best_sum = total;
                best_w = w;
                since_best = 0;
            } else if (++since_best >= stall_window) {
                break;
            }
            grad.assign(dim, 0.0);
            fb.add_backup_gradient(smin, w.data(), -1.0, grad);
            for (int j = 0; j < dim; ++j) w[j] += params.pg_step * grad[j];
            for (int o = 0; o < O; ++o) project_to_simplex(w.data() + o * G * A, G * A);
        }
        out.subproblem_converged = since_best >= stall_window;
        out.epsilon = std::max(0.0, best_f);
        out.new_rows = best_w;
    }

    // Keep the rows exactly on the simplex.
    for (int o = 0; o < O; ++o) {
        double sum = 0.0;
        for (int j = 0; j < G * A; ++j) {
            double& v = out.new_rows[o * G * A + j];
            if (v < 0.0) v = 0.0;
            sum += v;
        }
        if (sum <= 0.0) {
            for (int j = 0; j < G * A; ++j) out.new_rows[o * G * A + j] = 1.0 / (G * A);
        } else {
            for (int j = 0; j < G * A; ++j) out.new_rows[o * G * A + j] /= sum;
        }
    }
    for (int s = 0; s < S; ++s) {
        out.total_decrease += fb.backup(s, cur) - fb.backup(s, out.new_rows.data());
    }
    return out;
}

int add_istates(Fsc& fsc, const Pomdp& pomdp, const ProductEvaluation& eval, const Vec& lambda,
                const RiskMeasure& measure, int n_new, const PiParams& params) {
    const Mdp& mdp = pomdp.mdp;
    const int S = mdp.num_states, A = mdp.num_actions, O = pomdp.num_observations;
    const int G = fsc.num_istates;
    if (n_new <= 0) return 0;
    const Vec ctilde = combined_cost(mdp, lambda);

    // q(s, a, g') = ctilde(s,a) + gamma * sigma(V(., g'), T[s][a])
    std::vector<Vec> q(G, Vec(static_cast<std::size_t>(S) * A, 0.0));
    Vec row(S), vals(S);
    for (int g2 = 0; g2 < G; ++g2) {
        std::copy(eval.values.begin() + static_cast<std::size_t>(g2) * S,
                  eval.values.begin() + static_cast<std::size_t>(g2 + 1) * S, vals.begin());
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const std::size_t off = (static_cast<std::size_t>(s) * A + a) * S;
                std::copy(mdp.transition.begin() + off, mdp.transition.begin() + off + S,
                          row.begin());
                q[g2][static_cast<std::size_t>(s) * A + a] =
                    ctilde[static_cast<std::size_t>(s) * A + a] +
                    mdp.discount * sigma(measure, vals, row, params.solver.inner);
            }
        }
    }

    // Greedy rows: per observation, probability 1 on the (g', a) minimizing
    // the observation-likelihood-weighted backup.
    const int row_len_new = (G + 1) * A;
    Vec cand(static_cast<std::size_t>(O) * row_len_new, 0.0);
    for (int o = 0; o < O; ++o) {
        Vec w(S, 0.0);
        double wsum = 0.0;
        for (int s = 0; s < S; ++s) {
            w[s] = pomdp.obs(s, o);
            wsum += w[s];
        }
        if (wsum <= 0.0) {
            w.assign(S, 1.0 / S);
        } else {
            for (double& x : w) x /= wsum;
        }
        int best_g = 0, best_a = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int g2 = 0; g2 < G; ++g2) {
            for (int a = 0; a < A; ++a) {
                double score = 0.0;
                for (int s = 0; s < S; ++s) {
                    if (w[s] > 0.0) score += w[s] * q[g2][static_cast<std::size_t>(s) * A + a];
                }
                if (score < best - 1e-15) {
                    best = score;
                    best_g = g2;
                    best_a = a;
                }
            }
        }
        cand[static_cast<std::size_t>(o) * row_len_new + best_g * A + best_a] = 1.0;
    }

    // Discard duplicates of existing I-states (candidate rows only reference
    // existing g', so compare against the old row space).
    for (int g = 0; g < G; ++g) {
        double diff = 0.0;
        for (int o = 0; o < O; ++o) {
            const double* old_row = fsc.row(g, o);
            for (int j = 0; j < G * A; ++j) {
                diff = std::max(diff,
                                std::abs(old_row[j] -
                                         cand[static_cast<std::size_t>(o) * row_len_new + j]));
            }
            for (int j = G * A; j < row_len_new; ++j) {
                diff = std::max(diff, cand[static_cast<std::size_t>(o) * row_len_new + j]);
            }
        }
        if (diff < 1e-9) return 0;
    }

    // Append the new I-state: the omega tensor is rebuilt because the row
    // length grows with |G|.
    Fsc grown;
    grown.num_istates = G + 1;
    grown.num_actions = A;
    grown.num_observations = O;
    grown.omega.assign(static_cast<std::size_t>(G + 1) * O * row_len_new, 0.0);
    for (int g = 0; g < G; ++g) {
        for (int o = 0; o < O; ++o) {
            const double* src = fsc.row(g, o);
            double* dst = grown.row(g, o);
            std::copy(src, src + static_cast<std::size_t>(G) * A, dst);
        }
    }
    for (int o = 0; o < O; ++o) {
        std::copy(cand.begin() + static_cast<std::size_t>(o) * row_len_new,
                  cand.begin() + static_cast<std::size_t>(o + 1) * row_len_new,
                  grown.row(G, o));
    }
    grown.kappa = fsc.kappa;
    grown.kappa.push_back(0.0);
    fsc = std::move(grown);

    // The greedy construction is a pure function of the current evaluation, so
    // further candidates this round would duplicate the one just added.
    return 1;
}

FscSolveResult policy_iteration(const Pomdp& pomdp, const RiskMeasure& measure,
                                const PiParams& params, const Fsc* initial_fsc) {
    const Mdp& mdp = pomdp.mdp;
    const int S = mdp.num_states, A = mdp.num_actions, O = pomdp.num_observations;
    const int nc = mdp.num_constraints();

    FscSolveResult res;
    res.fsc = (initial_fsc != nullptr) ? *initial_fsc : Fsc::uniform_initial(A, O);
    Vec lambda(nc, 0.0);
    res.status = SolveStatus::IterationCap;

    ProductChain pc;
    ProductEvaluation ev;
    bool dirty = true;
    Vec warm;
    std::vector<Vec> warm_d(nc);

    auto refresh = [&]() {
        if (!dirty) return;
        pc = product_chain(pomdp, res.fsc);
        const int n = pc.num_product_states();
        if (static_cast<int>(warm.size()) != n && !warm.empty()) {
            warm = resize_product_values(warm, S, static_cast<int>(warm.size()) / S,
                                         pc.num_istates);
        }
        ev = evaluate_product(pc, lagrangian_stage(pc, lambda), mdp.discount, measure,
                              params.solver, warm.empty() ? nullptr : &warm);
        warm = ev.values;
        dirty = false;
    };

    auto init_cost = [&](const ProductEvaluation& e, int g_init) {
        double c = 0.0;
        for (int s = 0; s < S; ++s) c += mdp.initial_dist[s] * e.values[g_init * S + s];
        return c;
    };

    double best_cert = -std::numeric_limits<double>::infinity();
    bool last_improved = false;
    std::vector<int> cap_streak(nc, 0);

    for (int k = 0; k < params.max_iterations; ++k) {
        refresh();
        const int G = res.fsc.num_istates;
        const int g_init = select_initial_istate(ev.values, pc.initial_dist, S, G);
        const double bound_raw = init_cost(ev, g_init) - dot(lambda, mdp.budgets);
        best_cert = std::max(best_cert, bound_raw);
        res.trace.push_back({G, best_cert, last_improved, bound_raw});

        // Constraint risks of the current controller on the product chain.
        Vec resid(nc, 0.0);
        bool infeasible = false;
        for (int i = 0; i < nc; ++i) {
            if (static_cast<int>(warm_d[i].size()) != pc.num_product_states() &&
                !warm_d[i].empty()) {
                warm_d[i] = resize_product_values(
                    warm_d[i], S, static_cast<int>(warm_d[i].size()) / S, G);
            }
            ProductEvaluation wd =
                evaluate_product(pc, pc.lifted_constraint_costs[i], mdp.discount, measure,
                                 params.solver, warm_d[i].empty() ? nullptr : &warm_d[i]);
            warm_d[i] = wd.values;
            double di = 0.0;
            for (int s = 0; s < S; ++s) di += mdp.initial_dist[s] * wd.values[g_init * S + s];
            resid[i] = di - mdp.budgets[i];
            if (lambda[i] > params.solver.lambda_cap && resid[i] > 0.0) {
                if (++cap_streak[i] >= 10) infeasible = true;
            } else {
                cap_streak[i] = 0;
            }
        }
        if (infeasible) {
            res.status = SolveStatus::InfeasibleSuspected;
            break;
        }
        const double step = params.solver.dual_step0 / std::sqrt(static_cast<double>(k + 1));
        bool lambda_moved = false;
        for (int i = 0; i < nc; ++i) {
            const double ln = std::max(0.0, lambda[i] + step * resid[i]);
            if (std::abs(ln - lambda[i]) > 1e-12) {
                lambda[i] = ln;
                lambda_moved = true;
            }
        }
        if (lambda_moved) dirty = true;

        // Improvement sweep in I-state index order; each candidate is accepted
        // only if the re-evaluated initial cost strictly decreases.
        bool improved = false;
        for (int g = 0; g < res.fsc.num_istates; ++g) {
            refresh();
            ImprovementResult cand =
                improve_istate(pomdp, res.fsc, g, ev, lambda, measure, params);
            if (cand.epsilon <= params.improvement_tol &&
                cand.total_decrease <= params.improvement_tol) {
                continue;
            }
            const int gi_before = select_initial_istate(ev.values, pc.initial_dist, S,
                                                        res.fsc.num_istates);
            const double cost_before = init_cost(ev, gi_before);

            Vec saved(res.fsc.row(g, 0), res.fsc.row(g, 0) + cand.new_rows.size());
            std::copy(cand.new_rows.begin(), cand.new_rows.end(), res.fsc.row(g, 0));
            ProductChain pc_try = product_chain(pomdp, res.fsc);
            ProductEvaluation ev_try =
                evaluate_product(pc_try, lagrangian_stage(pc_try, lambda), mdp.discount,
                                 measure, params.solver, &warm);
            const int gi_after = select_initial_istate(ev_try.values, pc_try.initial_dist, S,
                                                       res.fsc.num_istates);
            if (init_cost(ev_try, gi_after) < cost_before - params.improvement_tol) {
                pc = std::move(pc_try);
                ev = std::move(ev_try);
                warm = ev.values;
                improved = true;
            } else {
                std::copy(saved.begin(), saved.end(), res.fsc.row(g, 0));
            }
        }

        if (!improved && res.fsc.num_istates < params.n_max) {
            refresh();
            const int added = add_istates(res.fsc, pomdp, ev, lambda, measure,
                                          std::min(params.n_new,
                                                   params.n_max - res.fsc.num_istates),
                                          params);
            if (added > 0) {
                improved = true;
                dirty = true;
            }
        }
        last_improved = improved;
        if (!improved && !lambda_moved && k >= 1) {
            res.status = SolveStatus::Converged;
            break;
        }
    }

    refresh();
    res.g_init = select_initial_istate(ev.values, pc.initial_dist, S, res.fsc.num_istates);
    res.fsc.kappa.assign(res.fsc.num_istates, 0.0);
    res.fsc.kappa[res.g_init] = 1.0;
    res.value = ev.values;
    res.multipliers = lambda;
    res.lower_bound = init_cost(ev, res.g_init) - dot(lambda, mdp.budgets);
    return res;
}

}  // namespace riskplan
