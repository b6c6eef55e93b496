#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "flow.hpp"
#include "metric.hpp"

namespace cone_ricci {

/// Parameters of the blunt-cone upper barrier U(r, t): a rescaled
/// hemisphere of radius lambda_bar(t) glued onto the hyperbolic cone v1 + C.
struct BarrierSpec {
    double beta = -0.5;
    double C = 0.0;
    /// sup over the window of S(0, lambda_bar(t)) - slope * ln t.
    double B = 0.0;
    double t_lo = 1e-4;
    double t_hi = 1e-2;
    /// Set when check_barrier_pde passed for (beta, C) on [t_lo, t_hi].
    bool verified = false;

    /// beta / (2(beta + 1)), the ln t coefficient of the sup bound.
    double slope() const noexcept { return beta / (2.0 * (beta + 1.0)); }
};

inline void require_barrier_exponent(double beta) {
    if (!(beta > -1.0 && beta < 0.0)) {
        std::ostringstream os;
        os << "barrier needs a singular cone, beta in (-1, 0); got " << beta
           << (beta == 0.0 ? " (a smooth point needs no barrier)" : "");
        throw ParameterError(os.str());
    }
}

/// lambda_bar(t) = (-t e^{-2C} / (4 beta (beta+1)))^{1/(2(beta+1))}.
inline double lambda_bar(double t, double beta, double C) {
    require_barrier_exponent(beta);
    if (!(t > 0.0)) throw DomainError("lambda_bar requires t > 0");
    const double q = -t * std::exp(-2.0 * C) / (4.0 * beta * (beta + 1.0));
    const double lam = std::pow(q, 1.0 / (2.0 * (beta + 1.0)));
    if (!(lam < 1.0)) {
        std::ostringstream os;
        os << "barrier window exceeded: lambda_bar(" << t << ") = " << lam << " >= 1";
        throw DomainError(os.str());
    }
    return lam;
}

/// Schedule solving beta lambda'/lambda = -lambda^{-2(beta+1)} e^{-2C} / (4 (beta+1)^2),
/// (-t e^{-2C} / (2 beta (beta+1)))^{1/(2(beta+1))}. Reference only; the
/// checks use lambda_bar.
inline double lambda_critical(double t, double beta, double C) {
    require_barrier_exponent(beta);
    if (!(t > 0.0)) throw DomainError("lambda_critical requires t > 0");
    return std::pow(-t * std::exp(-2.0 * C) / (2.0 * beta * (beta + 1.0)), 1.0 / (2.0 * (beta + 1.0)));
}

/// True when t > 0 and lambda_bar(t) < 1.
inline bool barrier_defined(double t, const BarrierSpec& spec) {
    if (!(t > 0.0)) return false;
    const double q = -t * std::exp(-2.0 * spec.C) / (4.0 * spec.beta * (spec.beta + 1.0));
    return q < 1.0;
}

/// Cap S(r, lambda) = s(r/lambda) + v1(lambda) + C.
inline double blunt_cap(double r, double lambda, double beta, double C) {
    return eval_sphere(r / lambda) + eval_hyperbolic_cone(beta, lambda) + C;
}

/// U(r, t): the cap for r <= lambda_bar(t), v1(r) + C beyond.
inline double blunt_cone(double r, double t, const BarrierSpec& spec) {
    if (!(r >= 0.0 && r < 1.0)) throw DomainError("blunt cone defined for 0 <= r < 1");
    const double lam = lambda_bar(t, spec.beta, spec.C);
    if (r <= lam) return blunt_cap(r, lam, spec.beta, spec.C);
    return eval_hyperbolic_cone(spec.beta, r) + spec.C;
}

/// dS/dt along lambda = lambda_bar(t), differentiated in closed form.
inline double barrier_time_derivative(double r, double t, double beta, double C) {
    const double lam = lambda_bar(t, beta, C);
    const double rho = r / lam;
    const double p = std::pow(lam, 2.0 * (beta + 1.0));
    // d lambda_bar / dt = lambda_bar / (2 (beta+1) t)
    const double bracket = 2.0 * rho * rho / (1.0 + rho * rho) + beta + 2.0 * (beta + 1.0) * p / (1.0 - p);
    return bracket / (2.0 * (beta + 1.0) * t);
}

/// Lower bound (beta / lambda) d lambda / dt = beta / (2 (beta+1) t).
inline double barrier_time_derivative_lower_bound(double t, double beta) {
    return beta / (2.0 * (beta + 1.0) * t);
}

/// e^{-2S} Delta S = -(lambda^{-2(beta+1)} / (beta+1)^2) (e^{-2C}/4) (1 - lambda^{2(beta+1)})^2,
/// independent of r on the cap.
inline double barrier_curvature_term(double lambda, double beta, double C) {
    const double p = std::pow(lambda, 2.0 * (beta + 1.0));
    return -(1.0 / (p * (beta + 1.0) * (beta + 1.0))) * (std::exp(-2.0 * C) / 4.0) * (1.0 - p) * (1.0 - p);
}

struct BarrierPdeReport {
    double beta = 0.0;
    double C = 0.0;
    double B = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::size_t samples = 0;
    /// min over samples of dS/dt - e^{-2S} Delta S.
    double min_margin = kInf;
    /// min over samples of (dS/dt - e^{-2S} Delta S) / |dS/dt|.
    double min_relative_margin = kInf;
    /// dS/dt >= (beta/lambda) d lambda/dt at every sample.
    bool lower_bound_holds = true;
    bool pass = false;
};

/// Sup of S(0, lambda_bar(t)) - slope ln t over a log-uniform sample of the window.
inline double compute_sup_constant(double beta, double C, double t_lo, double t_hi, std::size_t n = 257) {
    require_barrier_exponent(beta);
    const double slope = beta / (2.0 * (beta + 1.0));
    double B = -kInf;
    for (std::size_t j = 0; j < n; ++j) {
        const double t = t_lo * std::pow(t_hi / t_lo, static_cast<double>(j) / static_cast<double>(n - 1));
        B = std::max(B, blunt_cap(0.0, lambda_bar(t, beta, C), beta, C) - slope * std::log(t));
    }
    return B;
}

inline BarrierSpec make_barrier_spec(double beta, double C, double t_lo, double t_hi) {
    require_barrier_exponent(beta);
    if (!(t_lo > 0.0 && t_hi > t_lo)) throw ParameterError("barrier window must satisfy 0 < t_lo < t_hi");
    lambda_bar(t_hi, beta, C);  // throws when the window leaves the unit disc
    BarrierSpec s{beta, C, 0.0, t_lo, t_hi, false};
    s.B = compute_sup_constant(beta, C, t_lo, t_hi);
    return s;
}

/// Evaluates dS/dt > e^{-2S} Delta S on an n x n sample of the cap region
/// 0 < r <= lambda_bar(t), t log-uniform in [t_lo, t_hi].
inline BarrierPdeReport check_barrier_pde(const BarrierSpec& spec, double t_lo, double t_hi, std::size_t n = 64,
                                          double required_relative_margin = 0.0) {
    require_barrier_exponent(spec.beta);
    if (!(t_lo > 0.0 && t_hi > t_lo)) throw ParameterError("barrier window must satisfy 0 < t_lo < t_hi");
    if (n < 2) throw ParameterError("check_barrier_pde needs n >= 2");
    lambda_bar(t_hi, spec.beta, spec.C);
    BarrierPdeReport rep{spec.beta, spec.C, spec.B, t_lo, t_hi};
    for (std::size_t j = 0; j < n; ++j) {
        const double t = t_lo * std::pow(t_hi / t_lo, static_cast<double>(j) / static_cast<double>(n - 1));
        const double lam = lambda_bar(t, spec.beta, spec.C);
        const double rhs = barrier_curvature_term(lam, spec.beta, spec.C);
        const double floor = barrier_time_derivative_lower_bound(t, spec.beta);
        for (std::size_t i = 1; i <= n; ++i) {
            const double r = lam * static_cast<double>(i) / static_cast<double>(n);
            const double lhs = barrier_time_derivative(r, t, spec.beta, spec.C);
            const double margin = lhs - rhs;
            rep.min_margin = std::min(rep.min_margin, margin);
            rep.min_relative_margin = std::min(rep.min_relative_margin, margin / std::abs(lhs));
            if (lhs < floor * (1.0 + 1e-12)) rep.lower_bound_holds = false;
            ++rep.samples;
        }
    }
    rep.pass = rep.min_margin > 0.0 && rep.min_relative_margin >= required_relative_margin;
    return rep;
}

/// Raises C from `C_start` in steps of `step` until check_barrier_pde passes
/// with relative margin >= 10%. Returns the verified spec.
inline BarrierSpec calibrate_barrier(double beta, double C_start, double t_lo, double t_hi, double step = 0.25,
                                     std::size_t max_iter = 200) {
    require_barrier_exponent(beta);
    double C = C_start;
    for (std::size_t it = 0; it < max_iter; ++it, C += step) {
        BarrierSpec spec;
        try {
            spec = make_barrier_spec(beta, C, t_lo, t_hi);
        } catch (const DomainError&) {
            continue;  // lambda_bar >= 1 in the window: C still too small
        }
        if (check_barrier_pde(spec, t_lo, t_hi, 64, 0.1).pass) {
            spec.verified = true;
            return spec;
        }
    }
    throw ParameterError("barrier calibration did not converge");
}

struct SupBound {
    double cap_value = 0.0;  // S(0, lambda_bar(t))
    double majorant = 0.0;   // B + slope ln t
};

inline SupBound sup_bound(double t, const BarrierSpec& spec) {
    if (!(t > 0.0)) throw DomainError("sup_bound requires t > 0");
    return {blunt_cap(0.0, lambda_bar(t, spec.beta, spec.C), spec.beta, spec.C), spec.B + spec.slope() * std::log(t)};
}

/// C making v1 + C dominate both A + beta ln r and the hyperbolic-cone flow
/// started from it up to t_max: (A - ln(2(beta+1))) + (1/2) ln(1 + 2 e^{-2(A - ln(2(beta+1)))} t_max).
inline double barrier_offset_for(double beta, double A, double t_max) {
    const double base = A - std::log(2.0 * (beta + 1.0));
    return base + 0.5 * std::log1p(2.0 * std::exp(-2.0 * base) * t_max);
}

/// Barrier spec for a flow with u(0) <= A + beta ln r on [0, t_max]: C is the
/// larger of the calibrated PDE constant and barrier_offset_for.
inline BarrierSpec match_barrier(double beta, double A, double t_lo, double t_max) {
    BarrierSpec pde = calibrate_barrier(beta, 0.0, t_lo, t_max);
    const double C = std::max(pde.C, barrier_offset_for(beta, A, t_max));
    BarrierSpec spec = make_barrier_spec(beta, C, t_lo, t_max);
    spec.verified = check_barrier_pde(spec, t_lo, t_max, 64, 0.1).pass;
    return spec;
}

struct BarrierFlowReport {
    bool pass = false;
    /// max over stored t > 0 and nodes r < 1 of u - U.
    double worst_violation = -kInf;
    double worst_time = 0.0;
    double worst_radius = 0.0;
    /// max over stored t in the spec window of sup_r u - (B + slope ln t).
    double sup_bound_excess = -kInf;
    double tolerance = 0.0;
    std::size_t checked_times = 0;
};

/// Checks u(r_i, t_m) <= U(r_i, t_m) + tol at every stored t_m > 0 where
/// lambda_bar(t_m) < 1, and sup_r u <= B + slope ln t + tol inside the spec
/// window. Throws when u(., 0) <= A + beta ln r fails.
inline BarrierFlowReport verify_flow_under_barrier(const FlowResult& flow, const BarrierSpec& spec, double A,
                                                   std::optional<double> tolerance = std::nullopt) {
    require_barrier_exponent(spec.beta);
    const RadialGrid& g = flow.grid;
    const Profile& u0 = flow.profiles.front();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g.node(i);
        if (r > 0.0 && u0[i] > A + spec.beta * std::log(r) + 1e-12) {
            std::ostringstream os;
            os << "initial profile exceeds A + beta ln r at r = " << r;
            throw ParameterError(os.str());
        }
    }
    BarrierFlowReport rep;
    const double h = g.spacing();
    rep.tolerance = tolerance.value_or(10.0 * h * h + 10.0 * flow.max_dt);
    for (std::size_t m = 0; m < flow.size(); ++m) {
        const double t = flow.times[m];
        if (!barrier_defined(t, spec)) continue;
        ++rep.checked_times;
        const Profile& p = flow.profiles[m];
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double r = g.node(i);
            if (r >= 1.0) continue;  // U = +inf at the rim
            const double excess = p[i] - blunt_cone(r, t, spec);
            if (excess > rep.worst_violation) {
                rep.worst_violation = excess;
                rep.worst_time = t;
                rep.worst_radius = r;
            }
        }
        if (t >= spec.t_lo * (1.0 - 1e-12) && t <= spec.t_hi * (1.0 + 1e-12))
            rep.sup_bound_excess = std::max(rep.sup_bound_excess, p.max() - sup_bound(t, spec).majorant);
    }
    rep.pass = rep.checked_times > 0 && rep.worst_violation <= rep.tolerance && rep.sup_bound_excess <= rep.tolerance;
    return rep;
}

}  // namespace cone_ricci
