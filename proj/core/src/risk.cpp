#include "riskplan/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace riskplan {

namespace {

struct Support {
    std::vector<std::pair<double, double>> points;  // (value, prob), prob > 0
    double lo = 0.0;
    double hi = 0.0;
    double mean = 0.0;
};

Support collect_support(const Vec& values, const Vec& dist) {
    if (values.size() != dist.size() || values.empty()) {
        throw InvalidDistributionError("sigma: values and distribution sizes differ or are empty");
    }
    double sum = 0.0;
    for (double p : dist) {
        if (!std::isfinite(p) || p < -1e-12) {
            throw InvalidDistributionError("sigma: distribution has a negative or non-finite entry");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw InvalidDistributionError("sigma: distribution does not sum to 1");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw NonFiniteValueError("sigma: non-finite outcome value");
    }

    Support s;
    s.lo = std::numeric_limits<double>::infinity();
    s.hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (dist[j] <= 0.0) continue;
        s.points.emplace_back(values[j], dist[j]);
        s.lo = std::min(s.lo, values[j]);
        s.hi = std::max(s.hi, values[j]);
        s.mean += dist[j] * values[j];
    }
    if (s.points.empty()) throw InvalidDistributionError("sigma: distribution has empty support");
    return s;
}

// Exact CVaR by breakpoint enumeration: the piecewise-linear convex objective
// zeta + (1/eps) sum p_j (v_j - zeta)_+ attains its minimum at a support value.
double cvar_exact(const Support& s, double eps, SigmaDiagnostics* diag) {
    std::vector<std::pair<double, double>> pts = s.points;
    std::sort(pts.begin(), pts.end());
    const int n = static_cast<int>(pts.size());

    // Suffix sums over sorted support: mass and probability-weighted value.
    std::vector<double> suf_p(n + 1, 0.0), suf_pv(n + 1, 0.0);
    for (int k = n - 1; k >= 0; --k) {
        suf_p[k] = suf_p[k + 1] + pts[k].second;
        suf_pv[k] = suf_pv[k + 1] + pts[k].second * pts[k].first;
    }

    double best = std::numeric_limits<double>::infinity();
    double best_zeta = pts[0].first;
    for (int k = 0; k < n; ++k) {
        const double zeta = pts[k].first;
        // sum over v_j > zeta of p_j (v_j - zeta); entries equal to zeta cancel.
        const double tail = suf_pv[k + 1] - zeta * suf_p[k + 1];
        const double f = zeta + tail / eps;
        if (f < best) {
            best = f;
            best_zeta = zeta;
        }
    }
    if (diag != nullptr) diag->zeta = best_zeta;
    return best;
}

// Max-shifted EVaR objective: h(zeta) = m + (log sum p_j e^{zeta (v_j - m)} - log eps) / zeta.
double evar_objective(const Support& s, double eps, double zeta) {
    double acc = 0.0;
    for (const auto& [v, p] : s.points) acc += p * std::exp(zeta * (v - s.hi));
    return s.hi + (std::log(acc) - std::log(eps)) / zeta;
}

double evar_golden(const Support& s, double eps, const InnerSolveParams& params,
                   SigmaDiagnostics* diag) {
    const double vscale = std::max(std::abs(s.lo), std::abs(s.hi));
    const double hi_cap = params.zeta_max / (vscale + 1.0);
    double a = std::min(params.tol, hi_cap * 0.5);
    double b = hi_cap;

    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = evar_objective(s, eps, x1);
    double f2 = evar_objective(s, eps, x2);
    int iters = 0;
    while ((b - a) > params.tol * (1.0 + b) && iters < params.max_iters) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = evar_objective(s, eps, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = evar_objective(s, eps, x2);
        }
        ++iters;
    }
    const double zeta_star = (f1 <= f2) ? x1 : x2;
    const double f_star = std::min(f1, f2);
    if (diag != nullptr) {
        diag->zeta = zeta_star;
        diag->zeta_cap_active = zeta_star >= hi_cap * (1.0 - 1e-6);
    }
    return f_star;
}

}  // namespace

double sigma(const RiskMeasure& measure, const Vec& values, const Vec& dist,
             const InnerSolveParams& params, SigmaDiagnostics* diag) {
    if (diag != nullptr) *diag = SigmaDiagnostics{};
    const Support s = collect_support(values, dist);

    if (measure.kind == RiskMeasure::Kind::Expectation) {
        return s.mean;
    }
    const double eps = measure.epsilon;
    if (!(eps > 0.0) || eps > 1.0) {
        throw InvalidDistributionError("sigma: epsilon must lie in (0, 1]");
    }

    // Constant support: every coherent measure returns the constant. For EVaR
    // the infimum is attained only as zeta -> infinity, so short-circuit.
    if (s.hi - s.lo < 1e-12) {
        if (diag != nullptr) {
            diag->constant_support = true;
            diag->zeta = s.hi;  // CVaR breakpoint convention; harmless for EVaR
        }
        return s.hi;
    }

    double result;
    if (measure.kind == RiskMeasure::Kind::Cvar) {
        result = cvar_exact(s, eps, diag);
    } else {
        // eps == 1 is exactly the risk-neutral case; the inner infimum is the
        // zeta -> 0 limit, which the bracketed search can only approach.
        if (eps >= 1.0) {
            if (diag != nullptr) diag->zeta = 0.0;
            result = s.mean;
        } else {
            result = evar_golden(s, eps, params, diag);
        }
    }
    return std::clamp(result, s.lo, s.hi);
}

double static_risk(const RiskMeasure& measure, const Vec& samples,
                   const InnerSolveParams& params) {
    if (samples.empty()) throw EmptySamplesError("static_risk: no samples");
    const Vec uniform(samples.size(), 1.0 / static_cast<double>(samples.size()));
    return sigma(measure, samples, uniform, params);
}

}  // namespace riskplan
