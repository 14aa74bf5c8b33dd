#include "riskplan/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace riskplan {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr int kMaxPivots = 200000;

struct Tableau {
    int rows = 0;
    int cols = 0;  // excludes the rhs column
    std::vector<double> a;  // rows x (cols + 1), rhs last
    std::vector<int> basis;

    double& at(int i, int j) { return a[static_cast<std::size_t>(i) * (cols + 1) + j]; }
    double at(int i, int j) const { return a[static_cast<std::size_t>(i) * (cols + 1) + j]; }
    double& rhs(int i) { return at(i, cols); }
    double rhs(int i) const { return at(i, cols); }

    void pivot(int pr, int pc) {
        const double piv = at(pr, pc);
        for (int j = 0; j <= cols; ++j) at(pr, j) /= piv;
        for (int i = 0; i < rows; ++i) {
            if (i == pr) continue;
            const double f = at(i, pc);
            if (f == 0.0) continue;
            for (int j = 0; j <= cols; ++j) at(i, j) -= f * at(pr, j);
        }
        basis[pr] = pc;
    }
};

std::vector<double> reduced_costs(const Tableau& t, const std::vector<double>& cost);

// Runs simplex iterations for the given cost vector. Bland's rule: entering
// is the lowest eligible column, leaving breaks ratio ties by lowest basis
// index. `allowed` masks columns that may enter. The reduced-cost row is
// recomputed from the tableau every iteration; the incremental update drifts
// on ill-conditioned instances and can certify false optima.
LpStatus run_simplex(Tableau& t, const std::vector<double>& cost,
                     const std::vector<bool>& allowed) {
    for (int iter = 0; iter < kMaxPivots; ++iter) {
        const std::vector<double> r = reduced_costs(t, cost);
        int entering = -1;
        for (int j = 0; j < t.cols; ++j) {
            if (allowed[j] && r[j] < -kPivotTol) {
                entering = j;
                break;
            }
        }
        if (entering < 0) return LpStatus::Optimal;

        // Bland's leaving rule: exact minimum ratio, ties by lowest basis
        // index. Approximate tie zones would break the anti-cycling property.
        int leaving = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < t.rows; ++i) {
            const double aij = t.at(i, entering);
            if (aij > kPivotTol) {
                const double ratio = std::max(t.rhs(i), 0.0) / aij;
                if (ratio < best_ratio ||
                    (ratio == best_ratio && (leaving < 0 || t.basis[i] < t.basis[leaving]))) {
                    best_ratio = ratio;
                    leaving = i;
                }
            }
        }
        if (leaving < 0) return LpStatus::Unbounded;

        // Update the reduced-cost row with the same elimination.
        const double piv = t.at(leaving, entering);
        const double f = r[entering] / piv;
        if (f != 0.0) {
            for (int j = 0; j <= t.cols; ++j) r[j] -= f * t.at(leaving, j);
        }
        t.pivot(leaving, entering);
        r[entering] = 0.0;
    }
    throw IterationCapError("lp: simplex pivot cap exceeded");
}

std::vector<double> reduced_costs(const Tableau& t, const std::vector<double>& cost) {
    std::vector<double> r(t.cols + 1, 0.0);
    for (int j = 0; j < t.cols; ++j) r[j] = cost[j];
    for (int i = 0; i < t.rows; ++i) {
        const double cb = cost[t.basis[i]];
        if (cb == 0.0) continue;
        for (int j = 0; j <= t.cols; ++j) r[j] -= cb * t.at(i, j);
    }
    return r;
}

}  // namespace

LpResult lp_solve_min(const Vec& objective, const std::vector<LpConstraint>& constraints) {
    const int n = static_cast<int>(objective.size());
    const int m = static_cast<int>(constraints.size());

    // Normalize to nonnegative right-hand sides.
    std::vector<Vec> rows(m);
    std::vector<LpRelation> rels(m);
    Vec b(m);
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(constraints[i].coeffs.size()) != n) {
            throw DimensionMismatchError("lp: constraint width mismatch");
        }
        rows[i] = constraints[i].coeffs;
        rels[i] = constraints[i].rel;
        b[i] = constraints[i].rhs;
        if (b[i] < 0.0) {
            for (double& v : rows[i]) v = -v;
            b[i] = -b[i];
            if (rels[i] == LpRelation::LessEq) rels[i] = LpRelation::GreaterEq;
            else if (rels[i] == LpRelation::GreaterEq) rels[i] = LpRelation::LessEq;
        }
    }

    int num_slack = 0, num_art = 0;
    for (int i = 0; i < m; ++i) {
        if (rels[i] != LpRelation::Eq) ++num_slack;
        if (rels[i] != LpRelation::LessEq) ++num_art;
    }

    Tableau t;
    t.rows = m;
    t.cols = n + num_slack + num_art;
    t.a.assign(static_cast<std::size_t>(m) * (t.cols + 1), 0.0);
    t.basis.assign(m, -1);

    int slack_at = n;
    int art_at = n + num_slack;
    std::vector<bool> is_artificial(t.cols, false);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) t.at(i, j) = rows[i][j];
        t.rhs(i) = b[i];
        if (rels[i] == LpRelation::LessEq) {
            t.at(i, slack_at) = 1.0;
            t.basis[i] = slack_at++;
        } else if (rels[i] == LpRelation::GreaterEq) {
            t.at(i, slack_at) = -1.0;
            ++slack_at;
            t.at(i, art_at) = 1.0;
            is_artificial[art_at] = true;
            t.basis[i] = art_at++;
        } else {
            t.at(i, art_at) = 1.0;
            is_artificial[art_at] = true;
            t.basis[i] = art_at++;
        }
    }

    std::vector<bool> allow_all(t.cols, true);
    if (num_art > 0) {
        std::vector<double> phase1_cost(t.cols, 0.0);
        for (int j = 0; j < t.cols; ++j) {
            if (is_artificial[j]) phase1_cost[j] = 1.0;
        }
        std::vector<double> r = reduced_costs(t, phase1_cost);
        const LpStatus st = run_simplex(t, r, allow_all);
        (void)st;  // phase 1 is bounded below by 0
        double infeas = 0.0;
        for (int i = 0; i < m; ++i) {
            if (is_artificial[t.basis[i]]) infeas += t.rhs(i);
        }
        if (infeas > 1e-7) return {LpStatus::Infeasible, {}, 0.0};

        // Pivot any degenerate artificial out of the basis when possible.
        for (int i = 0; i < m; ++i) {
            if (!is_artificial[t.basis[i]]) continue;
            for (int j = 0; j < t.cols; ++j) {
                if (!is_artificial[j] && std::abs(t.at(i, j)) > kPivotTol) {
                    t.pivot(i, j);
                    break;
                }
            }
        }
    }

    std::vector<bool> allowed(t.cols, true);
    for (int j = 0; j < t.cols; ++j) {
        if (is_artificial[j]) allowed[j] = false;
    }
    std::vector<double> cost(t.cols, 0.0);
    for (int j = 0; j < n; ++j) cost[j] = objective[j];
    std::vector<double> r = reduced_costs(t, cost);
    const LpStatus st = run_simplex(t, r, allowed);
    if (st == LpStatus::Unbounded) return {LpStatus::Unbounded, {}, 0.0};

    LpResult res;
    res.status = LpStatus::Optimal;
    res.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i) {
        if (t.basis[i] < n) res.x[t.basis[i]] = t.rhs(i);
    }
    res.objective = 0.0;
    for (int j = 0; j < n; ++j) res.objective += objective[j] * res.x[j];
    return res;
}

LpResult lp_solve_max(const Vec& objective, const std::vector<LpConstraint>& constraints) {
    Vec neg(objective.size());
    for (std::size_t j = 0; j < objective.size(); ++j) neg[j] = -objective[j];
    LpResult res = lp_solve_min(neg, constraints);
    res.objective = -res.objective;
    return res;
}

}  // namespace riskplan
