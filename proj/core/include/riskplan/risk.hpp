#pragma once

#include "riskplan/types.hpp"

namespace riskplan {

// One-step coherent risk measure selector. epsilon is the confidence level in
// (0, 1]; smaller epsilon is more risk-averse. Unused for Expectation.
struct RiskMeasure {
    enum class Kind { Expectation, Cvar, Evar };

    Kind kind = Kind::Expectation;
    double epsilon = 1.0;

    static RiskMeasure expectation() { return {Kind::Expectation, 1.0}; }
    static RiskMeasure cvar(double eps) { return {Kind::Cvar, eps}; }
    static RiskMeasure evar(double eps) { return {Kind::Evar, eps}; }
};

// Controls for the 1-D inner minimization over the auxiliary variable zeta.
// The effective EVaR search interval is [tol, zeta_max / (max|v| + 1)]; the
// rescaling keeps exp(zeta * v) well-conditioned after the max-shift.
struct InnerSolveParams {
    double zeta_max = 1e4;
    double tol = 1e-10;
    int max_iters = 200;
};

struct SigmaDiagnostics {
    // Inner-optimal zeta: the minimizing breakpoint (CVaR) or the
    // golden-section minimizer (EVaR). Meaningless for Expectation.
    double zeta = 0.0;
    // All support outcomes equal; the inner search was short-circuited.
    bool constant_support = false;
    // EVaR search ended against the zeta cap (warning, not a failure).
    bool zeta_cap_active = false;
};

// Risk transition mapping sigma(v, p): the one-step risk of successor values
// v under distribution p.
//   Expectation: <p, v>
//   CVaR_eps:    min over breakpoints zeta in support(v) of
//                zeta + (1/eps) sum_j p_j (v_j - zeta)_+   (exact)
//   EVaR_eps:    min over zeta in (0, cap] of log(sum_j p_j e^{zeta v_j} / eps) / zeta
//                via max-shifted log-sum-exp and golden-section search.
// The result is clamped to [min, max] of the support of p.
double sigma(const RiskMeasure& measure, const Vec& values, const Vec& dist,
             const InnerSolveParams& params = {}, SigmaDiagnostics* diag = nullptr);

// Empirical risk of realized scalar costs: sigma against the uniform
// distribution over the samples.
double static_risk(const RiskMeasure& measure, const Vec& samples,
                   const InnerSolveParams& params = {});

}  // namespace riskplan
