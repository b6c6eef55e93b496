#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "barrier.hpp"
#include "flow.hpp"
#include "metric.hpp"
#include "parallel.hpp"
#include "truncation.hpp"

namespace cone_ricci {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class ConeKind { flat, hyperbolic };

inline const char* to_string(ConeKind k) noexcept { return k == ConeKind::flat ? "flat" : "hyperbolic"; }

struct DecaySettings {
    /// Fit window; 0 means t_end / 100 and t_end.
    double t_lo = 0.0;
    double t_hi = 0.0;
    double slope_tolerance = 0.1;
    /// Allowed excess of sup u - slope ln t over the barrier constant B.
    double bound_slack = 0.5;
    /// Largest slope change between the deepest level and the level
    /// `stability_depth` below it before the window counts as cap-limited.
    double stability_tolerance = 0.05;
    double stability_depth = 2.0;
};

struct UniquenessSettings {
    bool enabled = false;
    std::vector<double> schedule_a{3.0, 5.0, 7.0};
    std::vector<double> schedule_b{4.0, 6.0, 8.0};
    double deepen_by = 2.0;
    double window_lo = 0.05;
    double window_hi = 0.2;
    std::vector<double> t0{1e-3, 1e-2};
    double defect_tolerance = 1e-2;
    /// The comparison flow starts from the shallowest truncation lowered by this.
    double below_shift = 0.1;
    /// Identical schedules are rejected unless this is set.
    bool allow_degenerate = false;
};

struct ValidationSettings {
    /// Node count of the curvature oracles.
    std::size_t curvature_n = 2048;
    /// Node count of the exact-flow runs.
    std::size_t flow_n = 257;
    double tolerance = 1e-3;
    double sphere_t_end = 0.2;
    double hyperbolic_t_end = 0.5;
};

struct ExperimentConfig {
    ConeKind kind = ConeKind::flat;
    double beta = -0.5;
    double offset = 0.0;
    RadialGrid grid = RadialGrid::disc(2048);
    SolverParams solver;
    std::vector<double> levels{2.0, 3.0, 4.0, 5.0, 6.0};
    /// Probe times; empty means default_time_samples(solver.t_end).
    std::vector<double> time_samples;
    /// Cauchy gap between the two deepest levels must stay below gap_tolerance
    /// for t >= gap_from.
    double gap_from = 1e-2;
    double gap_tolerance = 1e-3;
    DecaySettings decay;
    UniquenessSettings uniqueness;
    ValidationSettings validation;
    std::string output_dir = "out";
    unsigned threads = 0;

    ConeData cone() const {
        return kind == ConeKind::flat ? ConeData::flat(beta, grid, offset) : ConeData::hyperbolic(beta, grid, offset);
    }

    std::vector<double> probe_times() const;
    std::pair<double, double> decay_window() const {
        return {decay.t_lo > 0.0 ? decay.t_lo : solver.t_end / 100.0, decay.t_hi > 0.0 ? decay.t_hi : solver.t_end};
    }

    void validate() const {
        require_cone_exponent(beta);
        solver.validate(grid);
        if (!grid.contains_origin()) throw ParameterError("solver.r_min: experiments run on a disc (r_min = 0)");
        if (kind == ConeKind::hyperbolic && !(grid.r_max() < 1.0))
            throw ParameterError("solver.r_max: the hyperbolic cone needs r_max < 1");
        if (levels.empty()) throw ParameterError("experiment.levels: at least one cap level is required");
        for (std::size_t j = 1; j < levels.size(); ++j)
            if (!(levels[j] > levels[j - 1])) throw ParameterError("experiment.levels: cap levels must be strictly increasing");
        for (double t : time_samples)
            if (!(t > 0.0 && t <= solver.t_end)) throw ParameterError("experiment.time_samples: probe times must lie in (0, t_end]");
        if (!(gap_tolerance > 0.0)) throw ParameterError("experiment.gap_tolerance: must be positive");
        if (!uniqueness.enabled) return;
        for (double t : uniqueness.t0)
            if (!(t > 0.0 && t < solver.t_end)) throw ParameterError("uniqueness.t0: values must lie in (0, t_end)");
        if (!(uniqueness.window_lo > 0.0 && uniqueness.window_hi > uniqueness.window_lo &&
              uniqueness.window_hi <= solver.t_end))
            throw ParameterError("uniqueness.window: need 0 < window_lo < window_hi <= t_end");
    }
};

/// Log-uniform probe times t_end 10^{-j/6}, j = 0..15.
inline std::vector<double> default_time_samples(double t_end) {
    std::vector<double> ts;
    for (int j = 15; j >= 0; --j) ts.push_back(t_end * std::pow(10.0, -static_cast<double>(j) / 6.0));
    ts.back() = t_end;
    return ts;
}

inline std::vector<double> ExperimentConfig::probe_times() const {
    return time_samples.empty() ? default_time_samples(solver.t_end) : time_samples;
}

// ---------------------------------------------------------------------------
// Level runs
// ---------------------------------------------------------------------------

struct LevelRun {
    double level = 0.0;
    std::shared_ptr<const FlowResult> flow;
    /// Largest node radius where u0 > k - 1; the cap is resolved when at least
    /// one node besides the origin lies in this region.
    double modified_radius = 0.0;
    bool cap_resolved = false;
    /// Set when the solver threw or stopped before t_end.
    bool failed = false;
    std::string error;
};

/// Flows of truncate(cone, k) for the levels an experiment needs, computed
/// once and shared between drivers. All runs use the same snapshot times.
class LevelRuns {
public:
    explicit LevelRuns(const ExperimentConfig& config) : config_(config), cone_(config.cone()), params_(config.solver) {
        config_.validate();
        std::vector<double> st = params_.store_times;
        for (double t : config_.probe_times()) {
            st.push_back(t);
            if (config_.uniqueness.enabled)
                for (double t0 : config_.uniqueness.t0)
                    if (t - t0 > 0.0) st.push_back(t - t0);
        }
        std::sort(st.begin(), st.end());
        st.erase(std::unique(st.begin(), st.end()), st.end());
        params_.store_times = std::move(st);
        params_.extinction_guard = false;
    }

    const ExperimentConfig& config() const noexcept { return config_; }
    const ConeData& cone() const noexcept { return cone_; }
    const SolverParams& params() const noexcept { return params_; }

    /// Runs the missing levels concurrently.
    void ensure(std::vector<double> levels) {
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
        std::vector<double> todo;
        {
            std::lock_guard<std::mutex> lock(mu_);
            for (double k : levels)
                if (!runs_.count(k)) todo.push_back(k);
        }
        std::vector<std::shared_ptr<LevelRun>> out(todo.size());
        const ConeSample u0 = sample_cone(cone_);
        parallel_for(todo.size(), worker_count(config_.threads), [&](std::size_t j) {
            auto run = std::make_shared<LevelRun>();
            run->level = todo[j];
            run->modified_radius = modified_radius(u0, todo[j]);
            run->cap_resolved = run->modified_radius > 0.0;
            try {
                auto flow = std::make_shared<FlowResult>(evolve(truncate(u0, todo[j]), params_));
                if (!flow->completed()) {
                    run->failed = true;
                    run->error = std::string(to_string(flow->stop)) + ": " + flow->stop_message;
                }
                run->flow = std::move(flow);
            } catch (const std::exception& e) {
                run->failed = true;
                run->error = e.what();
            }
            out[j] = std::move(run);
        });
        std::lock_guard<std::mutex> lock(mu_);
        for (std::size_t j = 0; j < todo.size(); ++j) runs_[todo[j]] = std::move(out[j]);
    }

    std::shared_ptr<const LevelRun> get(double k) {
        ensure({k});
        std::lock_guard<std::mutex> lock(mu_);
        return runs_.at(k);
    }

private:
    ExperimentConfig config_;
    ConeData cone_;
    SolverParams params_;
    std::mutex mu_;
    std::map<double, std::shared_ptr<const LevelRun>> runs_;
};

namespace detail {

/// sup over interior nodes of |a - b|, restricted to indices >= from.
inline double sup_gap(const Profile& a, const Profile& b, std::size_t from = 0) {
    const RadialGrid& g = a.grid();
    double s = 0.0;
    for (std::size_t i = std::max(from, g.interior_begin()); i < g.interior_end(); ++i)
        s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

inline bool in_window(double t, double lo, double hi) { return t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12); }

inline bool is_probe(double t, const std::vector<double>& probes) {
    return std::any_of(probes.begin(), probes.end(), [t](double p) { return std::abs(p - t) <= 1e-12 * p; });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Smoothening limit
// ---------------------------------------------------------------------------

struct LevelSummary {
    double level = 0.0;
    bool cap_resolved = false;
    double modified_radius = 0.0;
    bool failed = false;
    std::string error;
    std::size_t steps = 0;
    double max_dt = 0.0;
    double min_K_initial = 0.0;
    double max_K_initial = 0.0;
    double min_K_overall = 0.0;
    CurvatureBoundReport lemma;
    BarrierFlowReport barrier;
};

/// |u_{k_{j+1}} - u_{k_j}| at every stored time.
struct GapSeries {
    double lower = 0.0;
    double upper = 0.0;
    std::vector<double> gap;
    /// Same over the outermost quarter of the nodes.
    std::vector<double> outer_gap;
};

struct LimitReport {
    double beta = 0.0;
    std::vector<double> levels;
    std::vector<double> times;
    std::vector<LevelSummary> level_info;

    std::vector<OrderingReport> monotonicity;
    bool monotone_pass = false;

    std::vector<GapSeries> gaps;
    double gap_from = 0.0;
    double gap_tolerance = 0.0;
    /// max over probe times t >= gap_from of the gap between the two deepest levels.
    double final_gap = 0.0;
    bool gap_pass = false;

    /// Outer-quartile gap for t <= 0.01 against 10 tol.
    double agreement_worst = 0.0;
    double agreement_tolerance = 0.0;
    bool agreement_pass = false;

    bool lemma_pass = false;
    double floor_initial = 0.0;
    double floor_overall = 0.0;
    double Lambda = 0.0;
    double floor_tolerance = 0.0;
    bool floor_pass = false;

    BarrierSpec barrier;
    double sup_bound_excess = 0.0;
    bool barrier_pass = false;

    /// The deepest completed level: the discrete G(t).
    std::shared_ptr<const FlowResult> limit;
    double limit_level = 0.0;

    bool pass = false;
};

inline LimitReport run_smoothening(LevelRuns& runs) {
    const ExperimentConfig& cfg = runs.config();
    if (!(cfg.beta < 0.0)) throw ParameterError("beta: the smoothening experiment needs a singular cone (beta < 0)");
    runs.ensure(cfg.levels);
    const ConeData& cone = runs.cone();
    const RadialGrid& g = cone.grid();
    const double h = g.spacing();
    const RadialLaplacian lap(g);
    const std::vector<double> probes = cfg.probe_times();

    LimitReport rep;
    rep.beta = cfg.beta;
    rep.levels = cfg.levels;
    rep.gap_from = cfg.gap_from;
    rep.gap_tolerance = cfg.gap_tolerance;
    rep.barrier = match_barrier(cfg.beta, cone.sup_finite_part(), probes.front(), cfg.solver.t_end);

    std::vector<std::shared_ptr<const LevelRun>> ok;
    double roundoff = 0.0;
    double ordering_tol = 0.0;
    bool all_ok = true;
    rep.lemma_pass = true;
    rep.barrier_pass = rep.barrier.verified;
    rep.sup_bound_excess = -kInf;
    rep.floor_initial = kInf;
    rep.floor_overall = kInf;
    for (double k : cfg.levels) {
        const auto run = runs.get(k);
        LevelSummary s;
        s.level = k;
        s.cap_resolved = run->cap_resolved;
        s.modified_radius = run->modified_radius;
        s.failed = run->failed;
        s.error = run->error;
        const Profile uk = truncate(cone, k);
        const double ro = curvature_roundoff(uk, lap);
        roundoff = std::max(roundoff, ro);
        s.lemma = curvature_bound_check(cone, k, 10.0 * h * h + ro);
        rep.lemma_pass = rep.lemma_pass && s.lemma.pass;
        if (run->flow) {
            const FlowResult& f = *run->flow;
            s.steps = f.steps;
            s.max_dt = f.max_dt;
            s.min_K_initial = f.diagnostics.front().min_K;
            s.max_K_initial = f.diagnostics.front().max_K;
            s.min_K_overall = kInf;
            for (const auto& d : f.diagnostics) s.min_K_overall = std::min(s.min_K_overall, d.min_K);
            s.barrier = verify_flow_under_barrier(f, rep.barrier, cone.sup_finite_part());
            rep.barrier_pass = rep.barrier_pass && s.barrier.pass;
            rep.sup_bound_excess = std::max(rep.sup_bound_excess, s.barrier.sup_bound_excess);
        }
        if (run->failed || !run->flow) {
            all_ok = false;
            rep.barrier_pass = false;
        } else {
            ok.push_back(run);
            rep.floor_initial = std::min(rep.floor_initial, s.min_K_initial);
            rep.floor_overall = std::min(rep.floor_overall, s.min_K_overall);
            ordering_tol = std::max(ordering_tol, 10.0 * (h * h + run->flow->max_dt));
        }
        rep.level_info.push_back(std::move(s));
    }
    if (ok.empty()) return rep;

    rep.times = ok.front()->flow->times;
    rep.limit = ok.back()->flow;
    rep.limit_level = ok.back()->level;

    rep.monotone_pass = true;
    rep.final_gap = 0.0;
    rep.agreement_tolerance = 10.0 * ordering_tol;
    const std::size_t outer_from = (3 * g.size()) / 4;
    for (std::size_t j = 0; j + 1 < ok.size(); ++j) {
        const FlowResult& lo = *ok[j]->flow;
        const FlowResult& hi = *ok[j + 1]->flow;
        rep.monotonicity.push_back(compare_flows(lo, hi));
        rep.monotone_pass = rep.monotone_pass && rep.monotonicity.back().pass;
        GapSeries gs{ok[j]->level, ok[j + 1]->level, {}, {}};
        for (std::size_t m = 0; m < lo.size(); ++m) {
            gs.gap.push_back(detail::sup_gap(lo.profiles[m], hi.profiles[m]));
            gs.outer_gap.push_back(detail::sup_gap(lo.profiles[m], hi.profiles[m], outer_from));
            if (lo.times[m] <= 0.01) rep.agreement_worst = std::max(rep.agreement_worst, gs.outer_gap.back());
        }
        rep.gaps.push_back(std::move(gs));
    }
    rep.agreement_pass = rep.agreement_worst <= rep.agreement_tolerance;
    if (!rep.gaps.empty()) {
        const GapSeries& last = rep.gaps.back();
        for (std::size_t m = 0; m < rep.times.size(); ++m)
            if (rep.times[m] >= cfg.gap_from * (1.0 - 1e-12) && detail::is_probe(rep.times[m], probes))
                rep.final_gap = std::max(rep.final_gap, last.gap[m]);
        rep.gap_pass = rep.final_gap <= cfg.gap_tolerance;
    }

    rep.Lambda = std::max(0.0, -rep.floor_initial);
    rep.floor_tolerance = ordering_tol + roundoff;
    rep.floor_pass = rep.floor_overall >= rep.floor_initial - rep.floor_tolerance;

    rep.pass = all_ok && rep.monotone_pass && rep.gap_pass && rep.lemma_pass && rep.floor_pass && rep.barrier_pass &&
               rep.agreement_pass;
    return rep;
}

inline LimitReport run_smoothening(const ExperimentConfig& config) {
    LevelRuns runs(config);
    return run_smoothening(runs);
}

// ---------------------------------------------------------------------------
// Decay rate
// ---------------------------------------------------------------------------

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Least-squares line y = slope x + intercept.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ParameterError("fit_line needs at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw ParameterError("fit_line needs distinct abscissae");
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

struct DecayReport {
    double beta = 0.0;
    double target_slope = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double level = 0.0;
    std::vector<double> times;
    std::vector<double> sup_u;
    double slope = 0.0;
    double intercept = 0.0;
    double slope_tolerance = 0.0;
    bool slope_pass = false;

    /// Fit with the level stability_depth below the deepest one.
    std::optional<double> comparison_level;
    std::optional<double> comparison_slope;
    bool cap_limited = false;
    /// The deepest cap sits below the barrier majorant at t_lo: increase k.
    bool cap_saturated = false;

    double B = 0.0;
    /// max over the window of sup u - target_slope ln t.
    double bound_max = 0.0;
    double bound_slack = 0.0;
    bool bound_pass = false;
    bool pass = false;
};

namespace detail {

inline void sup_series(const FlowResult& f, double lo, double hi, std::vector<double>& t, std::vector<double>& s) {
    for (std::size_t m = 0; m < f.size(); ++m)
        if (f.times[m] > 0.0 && in_window(f.times[m], lo, hi)) {
            t.push_back(f.times[m]);
            s.push_back(f.diagnostics[m].sup_u);
        }
}

inline LineFit fit_decay(const std::vector<double>& t, const std::vector<double>& s) {
    std::vector<double> x(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) x[i] = std::log(t[i]);
    return fit_line(x, s);
}

}  // namespace detail

inline DecayReport run_decay(LevelRuns& runs) {
    const ExperimentConfig& cfg = runs.config();
    if (!(cfg.beta < 0.0)) throw ParameterError("beta: the decay experiment needs a singular cone (beta < 0)");
    const auto [t_lo, t_hi] = cfg.decay_window();
    if (!(t_lo > 0.0 && t_hi <= cfg.solver.t_end * (1.0 + 1e-12) && t_hi >= 100.0 * t_lo * (1.0 - 1e-9))) {
        std::ostringstream os;
        os << "decay window [" << t_lo << ", " << t_hi << "] must span two decades inside (0, t_end]";
        throw ParameterError(os.str());
    }
    DecayReport rep;
    rep.beta = cfg.beta;
    rep.target_slope = cfg.beta / (2.0 * (cfg.beta + 1.0));
    rep.t_lo = t_lo;
    rep.t_hi = t_hi;
    rep.level = cfg.levels.back();
    rep.slope_tolerance = cfg.decay.slope_tolerance;
    rep.bound_slack = cfg.decay.bound_slack;

    const auto run = runs.get(rep.level);
    if (run->failed || !run->flow) throw ParameterError("decay: deepest level run failed: " + run->error);
    detail::sup_series(*run->flow, t_lo, t_hi, rep.times, rep.sup_u);
    if (rep.times.size() < 3) throw ParameterError("decay: fewer than three stored times inside the window");
    const LineFit fit = detail::fit_decay(rep.times, rep.sup_u);
    rep.slope = fit.slope;
    rep.intercept = fit.intercept;
    rep.slope_pass = std::abs(rep.slope - rep.target_slope) <= rep.slope_tolerance;

    const double shallower = rep.level - cfg.decay.stability_depth;
    if (shallower > 0.0) {
        const auto cmp = runs.get(shallower);
        if (!cmp->failed && cmp->flow) {
            std::vector<double> t, s;
            detail::sup_series(*cmp->flow, t_lo, t_hi, t, s);
            rep.comparison_level = shallower;
            rep.comparison_slope = detail::fit_decay(t, s).slope;
            rep.cap_limited = std::abs(*rep.comparison_slope - rep.slope) >= cfg.decay.stability_tolerance;
        }
    }

    const BarrierSpec spec = match_barrier(cfg.beta, runs.cone().sup_finite_part(), t_lo, t_hi);
    rep.B = spec.B;
    rep.cap_saturated = rep.level < sup_bound(t_lo, spec).majorant;
    rep.bound_max = -kInf;
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        rep.bound_max = std::max(rep.bound_max, rep.sup_u[i] - rep.target_slope * std::log(rep.times[i]));
    rep.bound_pass = rep.bound_max <= rep.B + rep.bound_slack;
    rep.pass = rep.slope_pass && !rep.cap_limited && !rep.cap_saturated && rep.bound_pass;
    return rep;
}

inline DecayReport run_decay(const ExperimentConfig& config) {
    LevelRuns runs(config);
    return run_decay(runs);
}

// ---------------------------------------------------------------------------
// Uniqueness squeeze
// ---------------------------------------------------------------------------

struct RescaledCheck {
    double t0 = 0.0;
    double Lambda = 0.0;
    /// "A<=B": rescaled flow A under flow B; "B<=A" the reverse.
    std::string direction;
    OrderingReport ordering;
};

struct UniquenessReport {
    std::vector<double> schedule_a;
    std::vector<double> schedule_b;
    double deepen_by = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    bool degenerate = false;

    OrderingReport below_a;
    OrderingReport below_b;
    bool below_pass = false;

    std::vector<RescaledCheck> rescaled;
    bool rescaled_pass = false;

    double defect = 0.0;
    double defect_time = 0.0;
    double defect_tolerance = 0.0;
    bool defect_pass = false;
    double deep_defect = 0.0;
    /// deep_defect <= defect. Reported, not part of `pass`: discretization
    /// noise can perturb it.
    bool defect_monotone = false;

    bool pass = false;
};

namespace detail {

inline void require_schedule(const std::vector<double>& s, const char* name) {
    if (s.empty()) throw ParameterError(std::string(name) + ": schedule needs at least one level");
    for (std::size_t j = 1; j < s.size(); ++j)
        if (!(s[j] > s[j - 1])) throw ParameterError(std::string(name) + ": levels must be strictly increasing");
}

/// sup over stored times in [lo, hi] and interior nodes of |u_a - u_b|.
inline std::pair<double, double> defect(const FlowResult& a, const FlowResult& b, double lo, double hi) {
    double worst = 0.0, at = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) {
        if (!in_window(a.times[m], lo, hi)) continue;
        const std::size_t q = b.nearest(a.times[m]);
        if (std::abs(b.times[q] - a.times[m]) > 1e-12 * a.times[m]) continue;
        const double d = sup_gap(a.profiles[m], b.profiles[q]);
        if (d > worst) {
            worst = d;
            at = a.times[m];
        }
    }
    return {worst, at};
}

inline std::vector<double> shifted(std::vector<double> s, double d) {
    for (double& x : s) x += d;
    return s;
}

inline const FlowResult& require_flow(LevelRuns& runs, double k) {
    const auto run = runs.get(k);
    if (run->failed || !run->flow) {
        std::ostringstream os;
        os << "uniqueness: level " << k << " run failed: " << run->error;
        throw ParameterError(os.str());
    }
    return *run->flow;
}

}  // namespace detail

inline UniquenessReport run_uniqueness(LevelRuns& runs, const std::vector<double>& schedule_a,
                                       const std::vector<double>& schedule_b) {
    const ExperimentConfig& cfg = runs.config();
    const UniquenessSettings& us = cfg.uniqueness;
    detail::require_schedule(schedule_a, "uniqueness.schedule_a");
    detail::require_schedule(schedule_b, "uniqueness.schedule_b");
    UniquenessReport rep;
    rep.schedule_a = schedule_a;
    rep.schedule_b = schedule_b;
    rep.deepen_by = us.deepen_by;
    rep.window_lo = us.window_lo;
    rep.window_hi = us.window_hi;
    rep.defect_tolerance = us.defect_tolerance;
    if (schedule_a == schedule_b) {
        if (!us.allow_degenerate)
            throw ParameterError("uniqueness: schedules share all levels, the comparison is degenerate");
        rep.degenerate = true;  // defect 0 by construction, nothing is tested
        return rep;
    }

    const auto deep_a = detail::shifted(schedule_a, us.deepen_by);
    const auto deep_b = detail::shifted(schedule_b, us.deepen_by);
    std::vector<double> all = schedule_a;
    all.insert(all.end(), schedule_b.begin(), schedule_b.end());
    all.insert(all.end(), deep_a.begin(), deep_a.end());
    all.insert(all.end(), deep_b.begin(), deep_b.end());
    runs.ensure(all);

    const FlowResult& A = detail::require_flow(runs, schedule_a.back());
    const FlowResult& B = detail::require_flow(runs, schedule_b.back());

    // A flow started strictly below the cone data stays below both limits.
    const double k_below = std::min(schedule_a.front(), schedule_b.front());
    const FlowResult below = evolve(truncate(runs.cone(), k_below).shifted(-us.below_shift), runs.params());
    rep.below_a = compare_flows(below, A);
    rep.below_b = compare_flows(below, B);
    rep.below_pass = rep.below_a.pass && rep.below_b.pass;

    // The squeeze uses the deepened pair: its caps sit above sup u(t0) for
    // the t0 probed, as the continuum limits (infinite at the apex) do.
    const FlowResult& DA = detail::require_flow(runs, deep_a.back());
    const FlowResult& DB = detail::require_flow(runs, deep_b.back());
    rep.rescaled_pass = true;
    auto squeeze = [&](const FlowResult& f, const FlowResult& other, double t0, const char* dir) {
        const double Lambda = std::max(0.0, -f.diagnostics.front().min_K);
        const FlowResult sigma = parabolic_rescale(f, Lambda, t0);
        const FlowResult ref = resample(other, sigma.times);
        RescaledCheck c{t0, Lambda, dir, compare_flows(sigma, ref, ordering_tolerance(sigma, other))};
        rep.rescaled_pass = rep.rescaled_pass && c.ordering.pass;
        rep.rescaled.push_back(std::move(c));
    };
    for (double t0 : us.t0) {
        squeeze(DA, DB, t0, "A<=B");
        squeeze(DB, DA, t0, "B<=A");
    }

    std::tie(rep.defect, rep.defect_time) = detail::defect(A, B, us.window_lo, us.window_hi);
    rep.defect_pass = rep.defect <= us.defect_tolerance;
    rep.deep_defect = detail::defect(DA, DB, us.window_lo, us.window_hi).first;
    rep.defect_monotone = rep.deep_defect <= rep.defect;

    rep.pass = rep.below_pass && rep.rescaled_pass && rep.defect_pass;
    return rep;
}

inline UniquenessReport run_uniqueness(const ExperimentConfig& config, const std::vector<double>& schedule_a,
                                       const std::vector<double>& schedule_b) {
    ExperimentConfig c = config;
    c.uniqueness.enabled = true;
    LevelRuns runs(c);
    return run_uniqueness(runs, schedule_a, schedule_b);
}

// ---------------------------------------------------------------------------
// Exact-solution validation
// ---------------------------------------------------------------------------

struct OracleCheck {
    std::string name;
    std::size_t n = 0;
    double error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct OrderCheck {
    std::string name;
    std::vector<double> steps;  // h or dt of each run
    std::vector<double> errors;
    double order = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool pass = false;
};

struct ValidationReport {
    std::vector<OracleCheck> curvature;
    std::vector<OracleCheck> flows;
    std::vector<OrderCheck> orders;
    bool pass = false;
};

/// Sup over interior nodes of |K - K_exact| for a closed-form factor.
template <class F>
double curvature_error(const RadialGrid& g, F&& u, double K_exact) {
    const CurvatureProfile K = gauss_curvature(Profile::from_function(g, u));
    double e = 0.0;
    for (double k : K.K) e = std::max(e, std::abs(k - K_exact));
    return e;
}

/// Sup over stored times and nodes of |u - exact(r, t)|.
template <class F>
double flow_error(const FlowResult& f, F&& exact) {
    double e = 0.0;
    for (std::size_t m = 0; m < f.size(); ++m)
        for (std::size_t i = 0; i < f.grid.size(); ++i)
            e = std::max(e, std::abs(f.profiles[m][i] - exact(f.grid.node(i), f.times[m])));
    return e;
}

/// Sphere factor on [0, 0.9] with the exact boundary trajectory.
inline FlowResult sphere_exact_run(std::size_t n, double t_end, SolverParams p = {}) {
    const RadialGrid g = RadialGrid::disc(n, 0.9);
    p.t_end = t_end;
    if (p.store_every == 0.0) p.store_every = t_end / 20.0;
    p.extinction_guard = false;
    p.boundary.outer = BoundaryCondition::analytic(
        [](double t) { return eval_sphere(0.9) + 0.5 * std::log1p(-2.0 * t); }, "sphere");
    return evolve(Profile::from_function(g, eval_sphere), p);
}

inline double sphere_exact(double r, double t) { return eval_sphere(r) + 0.5 * std::log1p(-2.0 * t); }

/// Hyperbolic cone (beta = -1/2) on [0.1, 0.9] with exact data at both ends.
inline FlowResult hyperbolic_exact_run(std::size_t n, double t_end, SolverParams p = {}) {
    const RadialGrid g(0.1, 0.9, n);
    p.t_end = t_end;
    if (p.store_every == 0.0) p.store_every = t_end / 20.0;
    auto end = [](double r) {
        return [r](double t) { return eval_hyperbolic_cone(-0.5, r) + 0.5 * std::log1p(2.0 * t); };
    };
    p.boundary.outer = BoundaryCondition::analytic(end(0.9), "hyperbolic");
    p.boundary.inner = BoundaryCondition::analytic(end(0.1), "hyperbolic");
    return evolve(Profile::from_function(g, [](double r) { return eval_hyperbolic_cone(-0.5, r); }), p);
}

inline double hyperbolic_exact(double r, double t) {
    return eval_hyperbolic_cone(-0.5, r) + 0.5 * std::log1p(2.0 * t);
}

/// Observed order log(e1/e2)/log(s1/s2) between the last two runs.
inline double observed_order(const std::vector<double>& steps, const std::vector<double>& errors) {
    const std::size_t m = steps.size();
    if (m < 2) throw ParameterError("observed_order needs two runs");
    return std::log(errors[m - 2] / errors[m - 1]) / std::log(steps[m - 2] / steps[m - 1]);
}

inline ValidationReport run_exact_validation(const ValidationSettings& vs = {}) {
    ValidationReport rep;
    const std::size_t n = vs.curvature_n;
    const double beta = -0.5;
    auto sphere = [](double r) { return eval_sphere(r); };
    auto flat = [beta](double r) { return eval_flat_cone(beta, r); };
    auto hyper = [beta](double r) { return eval_hyperbolic_cone(beta, r); };
    auto oracle = [&](const char* name, double err, double tol) {
        rep.curvature.push_back({name, n, err, tol, err <= tol});
    };
    oracle("sphere K=+1 on [0,0.9]", curvature_error(RadialGrid::disc(n, 0.9), sphere, 1.0), 1e-4);
    oracle("flat cone K=0 on [0.1,0.9]", curvature_error(RadialGrid(0.1, 0.9, n), flat, 0.0), 1e-6);
    oracle("hyperbolic cone K=-1 on [0.1,0.9]", curvature_error(RadialGrid(0.1, 0.9, n), hyper, -1.0), 1e-3);

    auto curvature_order = [&](const char* name, double r_min, auto&& f, double K) {
        OrderCheck c{name, {}, {}, 0.0, 1.8, 2.2, false};
        for (std::size_t m : {n / 2, n, 2 * n}) {
            const RadialGrid g(r_min, 0.9, m);
            c.steps.push_back(g.spacing());
            c.errors.push_back(curvature_error(g, f, K));
        }
        c.order = observed_order(c.steps, c.errors);
        c.pass = c.order >= c.lo && c.order <= c.hi;
        rep.orders.push_back(std::move(c));
    };
    curvature_order("sphere curvature, h", 0.0, sphere, 1.0);
    curvature_order("hyperbolic cone curvature, h", 0.1, hyper, -1.0);

    const FlowResult fs = sphere_exact_run(vs.flow_n, vs.sphere_t_end);
    const double es = flow_error(fs, sphere_exact);
    rep.flows.push_back({"sphere flow", vs.flow_n, es, vs.tolerance, fs.completed() && es <= vs.tolerance});
    const FlowResult fh = hyperbolic_exact_run(vs.flow_n, vs.hyperbolic_t_end);
    const double eh = flow_error(fh, hyperbolic_exact);
    rep.flows.push_back({"hyperbolic cone flow", vs.flow_n, eh, vs.tolerance, fh.completed() && eh <= vs.tolerance});

    // Explicit Euler with dt proportional to h^2: both error terms scale as h^2.
    OrderCheck hc{"hyperbolic cone flow, h (explicit)", {}, {}, 0.0, 1.8, 2.2, false};
    for (std::size_t m : {65u, 129u, 257u}) {
        const FlowResult f = hyperbolic_exact_run(m, vs.hyperbolic_t_end);
        hc.steps.push_back(f.grid.spacing());
        hc.errors.push_back(flow_error(f, hyperbolic_exact));
    }
    hc.order = observed_order(hc.steps, hc.errors);
    hc.pass = hc.order >= hc.lo && hc.order <= hc.hi;
    rep.orders.push_back(std::move(hc));

    // Fixed fine grid, semi-implicit steps halved: the time error dominates.
    OrderCheck tc{"hyperbolic cone flow, dt (semi-implicit)", {}, {}, 0.0, 0.9, kInf, false};
    for (double du : {4e-3, 2e-3, 1e-3}) {
        SolverParams p;
        p.scheme = Scheme::semi_implicit;
        p.max_du = du;
        const FlowResult f = hyperbolic_exact_run(2049, vs.hyperbolic_t_end, p);
        tc.steps.push_back(f.max_dt);
        tc.errors.push_back(flow_error(f, hyperbolic_exact));
    }
    tc.order = observed_order(tc.steps, tc.errors);
    tc.pass = tc.order >= tc.lo;
    rep.orders.push_back(std::move(tc));

    rep.pass = true;
    for (const auto& c : rep.curvature) rep.pass = rep.pass && c.pass;
    for (const auto& c : rep.flows) rep.pass = rep.pass && c.pass;
    for (const auto& c : rep.orders) rep.pass = rep.pass && c.pass;
    return rep;
}

inline ValidationReport run_exact_validation(const ExperimentConfig& config) {
    return run_exact_validation(config.validation);
}

}  // namespace cone_ricci
