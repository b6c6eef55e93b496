#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "metric.hpp"

namespace cone_ricci {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

enum class Scheme { explicit_euler, semi_implicit };

inline const char* to_string(Scheme s) noexcept {
    return s == Scheme::explicit_euler ? "explicit" : "semi-implicit";
}

/// Dirichlet data at one end of the radial interval.
struct BoundaryCondition {
    enum class Kind { fixed, analytic };

    Kind kind = Kind::fixed;
    std::function<double(double)> trajectory;  // u(t) for Kind::analytic
    std::string description = "fixed";

    /// Hold the initial value u(r_end, 0).
    static BoundaryCondition fixed() { return {}; }

    static BoundaryCondition analytic(std::function<double(double)> f, std::string description = "analytic") {
        return {Kind::analytic, std::move(f), std::move(description)};
    }

    double value(double t, double initial) const { return kind == Kind::fixed ? initial : trajectory(t); }
};

/// Outer boundary always carries Dirichlet data; an annulus also needs inner
/// data, a disc has only the symmetry condition at the origin.
struct BoundarySpec {
    BoundaryCondition outer;
    std::optional<BoundaryCondition> inner;
};

struct SolverParams {
    double cfl = 0.25;
    Scheme scheme = Scheme::explicit_euler;
    double t_end = 0.25;
    /// Snapshot interval in time; 0 stores only t = 0 and t_end.
    double store_every = 0.0;
    /// Extra snapshot instants in (0, t_end].
    std::vector<double> store_times;
    /// Semi-implicit step control: largest allowed |du| per step.
    double max_du = 0.005;
    /// Upper bound on any step (semi-implicit); infinity leaves it to max_du.
    double dt_max = kInf;
    /// Steps below this size stop the run with StopReason::step_underflow.
    double dt_min = 1e-15;
    /// Cap t_end at 0.9 Area/(8 pi) when the initial curvature is positive
    /// (beyond rounding).
    bool extinction_guard = true;
    BoundarySpec boundary;

    void validate(const RadialGrid& grid) const {
        if (!(cfl > 0.0 && cfl <= 0.5)) throw ParameterError("solver.cfl: must lie in (0, 0.5]");
        if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ParameterError("solver.t_end: must be positive");
        if (!(store_every >= 0.0)) throw ParameterError("solver.store_every: must be >= 0");
        if (!(max_du > 0.0)) throw ParameterError("solver.max_du: must be positive");
        if (!(dt_max > 0.0)) throw ParameterError("solver.dt_max: must be positive");
        if (!(dt_min > 0.0)) throw ParameterError("solver.dt_min: must be positive");
        for (double t : store_times)
            if (!(t > 0.0 && t <= t_end)) throw ParameterError("solver.store_times: must lie in (0, t_end]");
        if (grid.contains_origin() && boundary.inner)
            throw ParameterError("boundary.inner: a disc (r_min = 0) takes no inner boundary condition");
        auto check = [](const BoundaryCondition& b, const char* which) {
            if (b.kind == BoundaryCondition::Kind::analytic && !b.trajectory)
                throw ParameterError(std::string("boundary.") + which + ": analytic condition without trajectory");
        };
        check(boundary.outer, "outer");
        if (boundary.inner) check(*boundary.inner, "inner");
    }
};

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

enum class StopReason { completed, step_underflow, non_finite };

inline const char* to_string(StopReason s) noexcept {
    switch (s) {
        case StopReason::completed: return "completed";
        case StopReason::step_underflow: return "step-underflow";
        case StopReason::non_finite: return "non-finite";
    }
    return "unknown";
}

struct Diagnostics {
    double sup_u = 0.0;
    double inf_u = 0.0;
    double min_K = 0.0;
    double max_K = 0.0;
    double area = 0.0;
    /// residual() between this snapshot and the next; NaN on the last one.
    double residual = std::numeric_limits<double>::quiet_NaN();
};

struct FlowResult {
    SolverParams params;
    RadialGrid grid;
    std::vector<double> times;
    std::vector<Profile> profiles;
    std::vector<Diagnostics> diagnostics;
    StopReason stop = StopReason::completed;
    std::string stop_message;
    std::size_t steps = 0;
    double max_dt = 0.0;
    /// t_end after the extinction guard.
    double horizon = 0.0;

    bool completed() const noexcept { return stop == StopReason::completed; }
    std::size_t size() const noexcept { return times.size(); }

    /// Index of the stored time closest to t.
    std::size_t nearest(double t) const {
        std::size_t best = 0;
        for (std::size_t m = 1; m < times.size(); ++m)
            if (std::abs(times[m] - t) < std::abs(times[best] - t)) best = m;
        return best;
    }

    /// Profile at time t by linear interpolation between snapshots.
    Profile at(double t) const {
        if (!(t >= times.front() && t <= times.back())) {
            std::ostringstream os;
            os << "time " << t << " outside stored range [" << times.front() << ", " << times.back() << "]";
            throw DomainError(os.str());
        }
        std::size_t m = 0;
        while (m + 1 < times.size() && times[m + 1] < t) ++m;
        if (m + 1 == times.size() || times[m] == t) return profiles[m];
        const double s = (t - times[m]) / (times[m + 1] - times[m]);
        std::vector<double> u(grid.size());
        const auto a = profiles[m].values();
        const auto b = profiles[m + 1].values();
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = (1.0 - s) * a[i] + s * b[i];
        return Profile(grid, std::move(u));
    }
};

namespace detail {

/// e^{-2u} L u on interior nodes, 0 on Dirichlet nodes.
inline void ricci_rate(const RadialLaplacian& lap, std::span<const double> u, std::vector<double>& rate) {
    const RadialGrid& g = lap.grid();
    rate.assign(u.size(), 0.0);
    for (std::size_t i = g.interior_begin(); i < g.interior_end(); ++i)
        rate[i] = std::exp(-2.0 * u[i]) * lap.apply(u, i);
}

/// Snapshot instants: 0, multiples of store_every, store_times, t_end.
inline std::vector<double> snapshot_times(const SolverParams& p, double t_end) {
    std::vector<double> ts{0.0};
    if (p.store_every > 0.0) {
        for (std::size_t m = 1;; ++m) {
            const double t = static_cast<double>(m) * p.store_every;
            if (t >= t_end * (1.0 - 1e-12)) break;
            ts.push_back(t);
        }
    }
    for (double t : p.store_times)
        if (t < t_end) ts.push_back(t);
    ts.push_back(t_end);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

/// Thomas algorithm; a, b, c are sub-, main and super-diagonal, d is
/// overwritten with the solution.
inline void solve_tridiagonal(std::vector<double>& a, std::vector<double>& b, std::vector<double>& c,
                              std::vector<double>& d) {
    const std::size_t n = d.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    d[n - 1] /= b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

inline bool all_finite(std::span<const double> u) {
    return std::all_of(u.begin(), u.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace detail

/// sup over interior nodes of |(u_{m+1} - u_m)/dt - (R(u_m) + R(u_{m+1}))/2|
/// with R(u) = e^{-2u} Delta u: the trapezoidal defect of stored snapshots
/// m, m+1 in the flow equation.
inline double residual(const FlowResult& f, std::size_t m) {
    if (f.size() < 2) throw ParameterError("residual needs at least two stored instants");
    if (m + 1 >= f.size()) throw ParameterError("residual index has no following snapshot");
    const RadialLaplacian lap(f.grid);
    std::vector<double> r0, r1;
    detail::ricci_rate(lap, f.profiles[m].values(), r0);
    detail::ricci_rate(lap, f.profiles[m + 1].values(), r1);
    const double dt = f.times[m + 1] - f.times[m];
    const auto a = f.profiles[m].values();
    const auto b = f.profiles[m + 1].values();
    double sup = 0.0;
    for (std::size_t i = f.grid.interior_begin(); i < f.grid.interior_end(); ++i)
        sup = std::max(sup, std::abs((b[i] - a[i]) / dt - 0.5 * (r0[i] + r1[i])));
    return sup;
}

/// Recomputes the per-snapshot diagnostics.
inline void compute_diagnostics(FlowResult& f) {
    const RadialLaplacian lap(f.grid);
    f.diagnostics.assign(f.size(), Diagnostics{});
    for (std::size_t m = 0; m < f.size(); ++m) {
        const Profile& p = f.profiles[m];
        const CurvatureProfile K = gauss_curvature(p, lap);
        Diagnostics& d = f.diagnostics[m];
        d.sup_u = p.max();
        d.inf_u = p.min();
        d.min_K = K.min();
        d.max_K = K.max();
        d.area = area(p);
        if (m + 1 < f.size()) d.residual = residual(f, m);
    }
}

/// Integrates du/dt = e^{-2u} Delta u from `initial` to params.t_end.
///
/// Explicit Euler uses dt = cfl * min_i 2 e^{2u_i} / (lower_i + upper_i),
/// which is cfl h^2 e^{2 min u} on interior nodes and half of that at the
/// origin. The semi-implicit scheme freezes e^{-2u} at the old step and solves
/// a tridiagonal system; its step keeps max |du| per step below max_du.
/// Steps are shortened to land exactly on snapshot instants. Underflow or a
/// non-finite value stops the run early with the reason recorded.
inline FlowResult evolve(const Profile& initial, const SolverParams& params) {
    const RadialGrid& g = initial.grid();
    params.validate(g);
    const std::size_t n = g.size();
    const RadialLaplacian lap(g);

    FlowResult out{params, g, {}, {}, {}, StopReason::completed, {}, 0, 0.0, params.t_end};

    double t_end = params.t_end;
    if (params.extinction_guard) {
        const CurvatureProfile K0 = gauss_curvature(initial, lap);
        if (K0.min() > curvature_roundoff(initial, lap)) t_end = std::min(t_end, 0.9 * area(initial) / (8.0 * kPi));
    }
    out.horizon = t_end;

    const std::vector<double> stops = detail::snapshot_times(params, t_end);
    std::vector<double> u(initial.values().begin(), initial.values().end());
    const double outer0 = u[n - 1];
    const double inner0 = u[0];
    // An annulus without inner data holds its inner value.
    const BoundaryCondition inner = params.boundary.inner.value_or(BoundaryCondition::fixed());
    auto apply_boundary = [&](std::vector<double>& v, double t) {
        v[n - 1] = params.boundary.outer.value(t, outer0);
        if (!g.contains_origin()) v[0] = inner.value(t, inner0);
    };

    out.times.push_back(0.0);
    out.profiles.push_back(initial);

    std::vector<double> rate(n), decay(n), a(n), b(n), c(n), d(n);
    double t = 0.0;
    std::size_t next = 1;
    while (next < stops.size()) {
        // decay_i = e^{-2u_i}; rate_i = decay_i (L u)_i on interior nodes.
        double peak = 0.0;
        double bound = kInf;
        for (std::size_t i = 0; i < n; ++i) {
            decay[i] = std::exp(-2.0 * u[i]);
            rate[i] = 0.0;
        }
        for (std::size_t i = g.interior_begin(); i < g.interior_end(); ++i) {
            rate[i] = decay[i] * lap.apply(u, i);
            peak = std::max(peak, std::abs(rate[i]));
            bound = std::min(bound, 2.0 / (decay[i] * lap.diagonal(i)));
        }
        double dt = params.scheme == Scheme::explicit_euler
                        ? params.cfl * bound
                        : std::min(params.dt_max, peak > 0.0 ? params.max_du / peak : kInf);
        if (!(dt >= params.dt_min)) {
            const double umin = *std::min_element(u.begin(), u.end());
            std::ostringstream os;
            os << "step " << dt << " below dt_min at t = " << t << " (min u = " << umin << ")";
            out.stop = StopReason::step_underflow;
            out.stop_message = os.str();
            break;
        }
        bool land = false;
        if (t + dt >= stops[next]) {
            dt = stops[next] - t;
            land = true;
        }
        const double t_new = land ? stops[next] : t + dt;

        if (params.scheme == Scheme::explicit_euler) {
            for (std::size_t i = g.interior_begin(); i < g.interior_end(); ++i) u[i] += dt * rate[i];
        } else {
            const auto lo = lap.lower();
            const auto up = lap.upper();
            for (std::size_t i = 0; i < n; ++i) {
                const bool dirichlet = i + 1 == n || (i == 0 && !g.contains_origin());
                if (dirichlet) {
                    a[i] = 0.0;
                    b[i] = 1.0;
                    c[i] = 0.0;
                } else {
                    const double k = dt * decay[i];
                    a[i] = -k * lo[i];
                    c[i] = -k * up[i];
                    b[i] = 1.0 + k * (lo[i] + up[i]);
                }
                d[i] = u[i];
            }
            apply_boundary(d, t_new);
            detail::solve_tridiagonal(a, b, c, d);
            u.swap(d);
        }
        apply_boundary(u, t_new);
        t = t_new;
        ++out.steps;
        out.max_dt = std::max(out.max_dt, dt);

        if (!detail::all_finite(u)) {
            std::ostringstream os;
            os << "non-finite value at t = " << t;
            out.stop = StopReason::non_finite;
            out.stop_message = os.str();
            break;
        }
        if (land) {
            out.times.push_back(t);
            out.profiles.emplace_back(g, u);
            ++next;
        }
    }
    compute_diagnostics(out);
    return out;
}

// ---------------------------------------------------------------------------
// Comparison, curvature floor, rescaling
// ---------------------------------------------------------------------------

struct OrderingReport {
    bool pass = false;
    /// min over common times and nodes of u2 - u1 (negative means u1 > u2).
    double worst_margin = kInf;
    double worst_time = 0.0;
    double worst_radius = 0.0;
    double tolerance = 0.0;
    std::size_t compared_times = 0;
};

/// Default comparison tolerance 10 (h^2 + dt), dt the largest step either run took.
inline double ordering_tolerance(const FlowResult& f1, const FlowResult& f2) {
    const double h = f1.grid.spacing();
    return 10.0 * (h * h + std::max(f1.max_dt, f2.max_dt));
}

/// Checks u1 <= u2 + tol at every node and every time stored in both runs
/// (times matched within time_tol).
inline OrderingReport compare_flows(const FlowResult& f1, const FlowResult& f2,
                                    std::optional<double> tolerance = std::nullopt, double time_tol = 1e-12) {
    if (!(f1.grid == f2.grid)) throw ParameterError("compare_flows: runs use different grids");
    OrderingReport rep;
    rep.tolerance = tolerance.value_or(ordering_tolerance(f1, f2));
    for (std::size_t m = 0; m < f1.size(); ++m) {
        const double t = f1.times[m];
        const std::size_t q = f2.nearest(t);
        if (std::abs(f2.times[q] - t) > time_tol * std::max(1.0, t)) continue;
        ++rep.compared_times;
        const auto a = f1.profiles[m].values();
        const auto b = f2.profiles[q].values();
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double margin = b[i] - a[i];
            if (margin < rep.worst_margin) {
                rep.worst_margin = margin;
                rep.worst_time = t;
                rep.worst_radius = f1.grid.node(i);
            }
        }
    }
    rep.pass = rep.compared_times > 0 && rep.worst_margin >= -rep.tolerance;
    return rep;
}

struct CurvatureFloorReport {
    std::vector<double> times;
    std::vector<double> min_K;
    /// -min K at t = 0, clamped to >= 0.
    double Lambda = 0.0;
    double floor_min = kInf;
    double tolerance = 0.0;
    bool pass = false;
};

/// Per-time min K and the check min_t min_r K >= -Lambda - tol.
inline CurvatureFloorReport curvature_floor(const FlowResult& f, std::optional<double> tolerance = std::nullopt) {
    CurvatureFloorReport rep;
    const double h = f.grid.spacing();
    rep.tolerance = tolerance.value_or(10.0 * (h * h + f.max_dt));
    for (std::size_t m = 0; m < f.size(); ++m) {
        rep.times.push_back(f.times[m]);
        rep.min_K.push_back(f.diagnostics[m].min_K);
        rep.floor_min = std::min(rep.floor_min, f.diagnostics[m].min_K);
    }
    rep.Lambda = std::max(0.0, -rep.min_K.front());
    rep.pass = rep.floor_min >= -rep.Lambda - rep.tolerance;
    return rep;
}

/// sigma(t) = e^{-2 Lambda t0} g(e^{2 Lambda t0} t + t0), i.e.
/// u_sigma(r, t) = u(r, e^{2 Lambda t0} t + t0) - Lambda t0, on the stored
/// times at or after t0 (t0 itself interpolated linearly when not stored).
inline FlowResult parabolic_rescale(const FlowResult& f, double Lambda, double t0) {
    if (!(Lambda >= 0.0)) throw ParameterError("parabolic_rescale: Lambda must be >= 0");
    const double t_end = f.times.back();
    if (!(t0 >= 0.0 && t0 < t_end)) {
        std::ostringstream os;
        os << "parabolic_rescale: t0 = " << t0 << " outside [0, " << t_end << ")";
        throw DomainError(os.str());
    }
    const double shift = Lambda * t0;
    const double stretch = std::exp(-2.0 * shift);
    FlowResult out{f.params, f.grid, {}, {}, {}, f.stop, f.stop_message, f.steps, f.max_dt * stretch, 0.0};
    out.times.push_back(0.0);
    out.profiles.push_back(f.at(t0).shifted(-shift));
    for (std::size_t m = 0; m < f.size(); ++m) {
        if (f.times[m] <= t0) continue;
        out.times.push_back((f.times[m] - t0) * stretch);
        out.profiles.push_back(f.profiles[m].shifted(-shift));
    }
    out.params.t_end = out.times.back();
    out.horizon = out.times.back();
    compute_diagnostics(out);
    return out;
}

/// Profiles of f at the given times (linear interpolation), packaged as a run.
inline FlowResult resample(const FlowResult& f, const std::vector<double>& times) {
    FlowResult out{f.params, f.grid, {}, {}, {}, f.stop, f.stop_message, f.steps, f.max_dt, f.horizon};
    for (double t : times) {
        out.times.push_back(t);
        out.profiles.push_back(f.at(t));
    }
    compute_diagnostics(out);
    return out;
}

}  // namespace cone_ricci
