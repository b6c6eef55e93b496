// Acceptance run: one PASS/FAIL line per criterion, exit 0 iff all pass.
//
// Criteria 5-7 share one flat-cone experiment read from
// configs/acceptance.toml; the CLI reproduces it with
//   cone_ricci experiment --config configs/acceptance.toml

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <cone_ricci/cli.hpp>

using namespace cone_ricci;
namespace fs = std::filesystem;

#ifndef CONE_RICCI_CONFIG_DIR
#define CONE_RICCI_CONFIG_DIR "configs"
#endif

namespace {

struct Line {
    std::ostringstream detail;
    bool pass = true;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!ok) detail << " [failed: " << what << "]";
    }
};

bool report(int id, const char* title, Line& l) {
    std::printf("criterion %d: %s  %s:%s\n", id, l.pass ? "PASS" : "FAIL", title, l.detail.str().c_str());
    std::fflush(stdout);
    return l.pass;
}

double sup_error(const CurvatureProfile& K, double exact) {
    double e = 0.0;
    for (double k : K.K) e = std::max(e, std::abs(k - exact));
    return e;
}

double curvature_error(const RadialGrid& g, const std::function<double(double)>& u, double exact) {
    return sup_error(gauss_curvature(Profile::from_function(g, u)), exact);
}

// --- 1 ---------------------------------------------------------------------

bool curvature_oracles() {
    Line l;
    const std::size_t n = 2048;
    auto sphere = [](double r) { return std::log(2.0 / (1.0 + r * r)); };
    auto flat = [](double r) { return std::log(1.0) - 0.5 * std::log(r); };
    auto hyper = [](double r) { return -0.5 * std::log(r) - std::log(1.0 - r); };

    const double es = curvature_error(RadialGrid::disc(n, 0.9), sphere, 1.0);
    const double ef = curvature_error(RadialGrid(0.1, 0.9, n), flat, 0.0);
    const double eh = curvature_error(RadialGrid(0.1, 0.9, n), hyper, -1.0);
    l.detail << " sphere " << es << ", flat " << ef << ", hyperbolic " << eh;
    l.check(es <= 1e-4, "sphere <= 1e-4");
    l.check(ef <= 1e-6, "flat <= 1e-6");
    l.check(eh <= 1e-3, "hyperbolic <= 1e-3");

    auto order = [&](double r_min, const std::function<double(double)>& u, double exact) {
        const RadialGrid a(r_min, 0.9, n), b(r_min, 0.9, 2 * n);
        return std::log(curvature_error(a, u, exact) / curvature_error(b, u, exact)) /
               std::log(a.spacing() / b.spacing());
    };
    const double os = order(0.0, sphere, 1.0);
    const double oh = order(0.1, hyper, -1.0);
    l.detail << "; order sphere " << os << ", hyperbolic " << oh;
    l.check(os >= 1.8 && os <= 2.2, "sphere order in [1.8, 2.2]");
    l.check(oh >= 1.8 && oh <= 2.2, "hyperbolic order in [1.8, 2.2]");
    return report(1, "curvature oracles", l);
}

// --- 2 ---------------------------------------------------------------------

bool exact_flows() {
    Line l;
    const FlowResult s = sphere_exact_run(257, 0.2);
    const FlowResult h = hyperbolic_exact_run(257, 0.5);
    double es = 0.0, eh = 0.0;
    for (std::size_t m = 0; m < s.size(); ++m)
        for (std::size_t i = 0; i < s.grid.size(); ++i) {
            const double r = s.grid.node(i), t = s.times[m];
            es = std::max(es, std::abs(s.profiles[m][i] - (std::log(2.0 / (1.0 + r * r)) + 0.5 * std::log(1.0 - 2.0 * t))));
        }
    for (std::size_t m = 0; m < h.size(); ++m)
        for (std::size_t i = 0; i < h.grid.size(); ++i) {
            const double r = h.grid.node(i), t = h.times[m];
            const double v1 = -0.5 * std::log(r) - std::log(1.0 - r);
            eh = std::max(eh, std::abs(h.profiles[m][i] - (v1 + 0.5 * std::log(1.0 + 2.0 * t))));
        }
    l.detail << " sphere on [0,0.9] x [0," << s.times.back() << "]: " << es << "; hyperbolic on [0.1,0.9] x [0,"
             << h.times.back() << "]: " << eh;
    l.check(s.completed() && h.completed(), "runs completed");
    l.check(s.times.back() == 0.2 && h.times.back() == 0.5, "full windows");
    l.check(es <= 1e-3 && eh <= 1e-3, "sup error <= 1e-3");
    return report(2, "exact Ricci flows", l);
}

// --- 3 ---------------------------------------------------------------------

bool truncation_suite() {
    Line l;
    std::size_t cases = 0, bound_failures = 0, exact_failures = 0;
    double worst_margin = kInf;
    for (int hyperbolic = 0; hyperbolic < 2; ++hyperbolic)
        for (double beta : {-0.25, -0.5, -0.75}) {
            const RadialGrid g = RadialGrid::disc(2048, hyperbolic ? 0.9 : 1.0);
            const ConeData cone = hyperbolic ? ConeData::hyperbolic(beta, g) : ConeData::flat(beta, g);
            const ConeSample u0 = sample_cone(cone);
            const double tol = 10.0 * g.spacing() * g.spacing();
            std::optional<Profile> prev;
            for (int k = 1; k <= 8; ++k) {
                ++cases;
                const Profile uk = truncate(u0, k);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double u = u0.u[i];
                    bool ok = uk[i] <= std::min(u, static_cast<double>(k));
                    if (u <= k - 1.0) ok = ok && uk[i] == u;
                    if (u >= k + 1.0) ok = ok && uk[i] == k;
                    if (prev) ok = ok && (*prev)[i] <= uk[i];
                    if (!ok) ++exact_failures;
                }
                const CurvatureBoundReport rep = curvature_bound_check(cone, k, tol);
                worst_margin = std::min(worst_margin, rep.min_margin);
                if (!rep.pass) ++bound_failures;
                prev = uk;
            }
        }
    l.detail << " " << cases << " cone/level cases at n = 2048, exact-property violations " << exact_failures
             << ", curvature-bound failures " << bound_failures << ", worst margin " << worst_margin << " (tol 10h^2)";
    l.check(exact_failures == 0, "sandwich, monotonicity and equality zones");
    l.check(bound_failures == 0, "curvature lower bound");
    return report(3, "truncation properties", l);
}

// --- 4 ---------------------------------------------------------------------

double fd_curvature_term(double r, double lam, double beta, double C, double d) {
    auto S = [&](double x) { return blunt_cap(x, lam, beta, C); };
    auto lap = [&](double e) {
        const double s0 = S(r), sp = S(r + e), sm = S(r - e);
        return (sp - 2.0 * s0 + sm) / (e * e) + (sp - sm) / (2.0 * e * r);
    };
    return std::exp(-2.0 * S(r)) * (4.0 * lap(0.5 * d) - lap(d)) / 3.0;
}

bool barrier_suite(const LimitReport& lim) {
    Line l;
    double worst_rel = 0.0;
    for (double beta : {-0.25, -0.5, -0.75}) {
        const BarrierSpec spec = calibrate_barrier(beta, 0.0, 1e-4, 1e-2);
        const BarrierPdeReport rep = check_barrier_pde(spec, 1e-4, 1e-2, 128);
        l.detail << " beta " << beta << ": C " << spec.C << " margin " << rep.min_margin << ";";
        l.check(rep.pass && rep.min_margin > 0.0, "PDE inequality");
        for (double t : {1e-4, 1e-3, 1e-2}) {
            const double lam = lambda_bar(t, beta, spec.C);
            const double exact = barrier_curvature_term(lam, beta, spec.C);
            for (double frac : {0.1, 0.5, 0.9}) {
                const double r = frac * lam;
                const double fd = fd_curvature_term(r, lam, beta, spec.C, 1e-2 * r);
                worst_rel = std::max(worst_rel, std::abs(fd - exact) / std::abs(exact));
            }
        }
    }
    l.detail << " identity rel. error " << worst_rel << ";";
    l.check(worst_rel <= 1e-6, "identity within 1e-6");

    double worst_violation = -kInf;
    for (const auto& s : lim.level_info) {
        worst_violation = std::max(worst_violation, s.barrier.worst_violation);
        l.check(!s.failed && s.barrier.pass, "flow under barrier at level " + std::to_string(s.level));
    }
    l.detail << " " << lim.level_info.size() << " truncated-cone runs under barrier (C " << lim.barrier.C
             << "), worst u - U " << worst_violation;
    return report(4, "blunt-cone barrier", l);
}

// --- 5 ---------------------------------------------------------------------

bool decay_rate(const DecayReport& d) {
    Line l;
    l.detail << " level " << d.level << " on [" << d.t_lo << ", " << d.t_hi << "]: slope " << d.slope << " (target "
             << d.target_slope << "), level " << d.comparison_level.value_or(NAN) << " slope "
             << d.comparison_slope.value_or(NAN) << ", max(sup u - slope ln t) " << d.bound_max << " vs B " << d.B;
    l.check(d.t_hi >= 100.0 * d.t_lo * (1 - 1e-12), "two-decade window");
    l.check(std::abs(d.slope - d.target_slope) <= 0.10, "slope within 0.10");
    l.check(!d.cap_limited, "cap-limited flag clear");
    l.check(!d.cap_saturated, "cap above the bound at t_lo");
    l.check(d.bound_pass, "sup u - slope ln t <= B + 0.5");
    return report(5, "decay rate", l);
}

// --- 6 ---------------------------------------------------------------------

bool smoothening_structure(const LimitReport& lim) {
    Line l;
    double worst = kInf;
    for (const auto& m : lim.monotonicity) worst = std::min(worst, m.worst_margin + m.tolerance);
    l.detail << " " << lim.monotonicity.size() << " level pairs, worst margin over tol " << worst << "; gap(k="
             << (lim.gaps.empty() ? 0.0 : lim.gaps.back().lower) << "," << lim.limit_level << ") for t >= "
             << lim.gap_from << ": " << lim.final_gap << "; floor initial " << lim.floor_initial << ", overall "
             << lim.floor_overall << " (tol " << lim.floor_tolerance << ")";
    for (const auto& s : lim.level_info) l.check(!s.failed, "level " + std::to_string(s.level) + " completed");
    l.check(lim.monotone_pass, "monotone in k within 10(h^2+dt)");
    l.check(lim.gap_pass && lim.final_gap <= 1e-3, "Cauchy gap <= 1e-3");
    l.check(lim.floor_pass, "curvature floor");
    return report(6, "smoothening limit structure", l);
}

// --- 7 ---------------------------------------------------------------------

bool uniqueness(const UniquenessReport& u) {
    Line l;
    auto sched = [](const std::vector<double>& s) {
        std::ostringstream os;
        os << "{";
        for (std::size_t j = 0; j < s.size(); ++j) os << (j ? "," : "") << s[j];
        os << "}";
        return os.str();
    };
    l.detail << " " << sched(u.schedule_a) << " vs " << sched(u.schedule_b) << " on [" << u.window_lo << ", "
             << u.window_hi << "]: defect " << u.defect << ", deepened by " << u.deepen_by << ": " << u.deep_defect
             << "; " << u.rescaled.size() << " rescaled comparisons";
    l.check(!u.degenerate, "distinct schedules");
    l.check(u.defect <= 1e-2, "defect <= 1e-2");
    l.check(u.defect_monotone, "defect non-increasing when deepened");
    l.check(u.below_pass, "flow from below stays below");
    for (const auto& c : u.rescaled) {
        std::ostringstream what;
        what << "rescaled " << c.direction << " at t0 = " << c.t0;
        l.check(c.ordering.pass, what.str());
    }
    l.check(u.rescaled.size() == 4, "t0 in {1e-3, 1e-2}, both directions");
    return report(7, "uniqueness squeeze", l);
}

// --- 8 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "cone_ricci");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path single_subdir(const fs::path& root) {
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) return e.path();
    return {};
}

bool determinism() {
    Line l;
    const fs::path root = fs::temp_directory_path() / "cone_ricci_acceptance_determinism";
    fs::remove_all(root);
    const fs::path cfg = fs::path(CONE_RICCI_CONFIG_DIR) / "flat_cone.toml";
    const int a = run_cli({"experiment", "--config", cfg.string(), "--output", (root / "a").string(), "--log-level",
                           "quiet"});
    const fs::path first = single_subdir(root / "a");
    const int b = run_cli({"experiment", "--config", (first / "resolved_config.json").string(), "--output",
                           (root / "b").string(), "--set", "threads=1", "--log-level", "quiet"});
    const fs::path second = single_subdir(root / "b");
    std::size_t files = 0, differing = 0;
    if (!first.empty() && !second.empty())
        for (const auto& e : fs::recursive_directory_iterator(first)) {
            if (e.path().extension() != ".csv") continue;
            ++files;
            const fs::path twin = second / fs::relative(e.path(), first);
            if (!fs::exists(twin) || slurp(e.path()) != slurp(twin)) ++differing;
        }
    l.detail << " exit codes " << a << "/" << b << ", " << files << " CSV files compared, " << differing
             << " differ";
    l.check(a != 2 && b == a, "both runs completed with the same outcome");
    l.check(!first.empty() && !second.empty() && first.filename() == second.filename(), "same content hash");
    l.check(files > 0 && differing == 0, "byte-identical CSVs");
    fs::remove_all(root);
    return report(8, "determinism", l);
}

}  // namespace

int main() {
    bool all = true;
    all = curvature_oracles() && all;
    all = exact_flows() && all;
    all = truncation_suite() && all;

    const config::RunConfig rc = config::load_config(fs::path(CONE_RICCI_CONFIG_DIR) / "acceptance.toml");
    LevelRuns runs(rc.experiment);
    const LimitReport lim = run_smoothening(runs);
    const DecayReport dec = run_decay(runs);
    const UniquenessSettings& us = rc.experiment.uniqueness;
    const UniquenessReport uni = run_uniqueness(runs, us.schedule_a, us.schedule_b);

    all = barrier_suite(lim) && all;
    all = decay_rate(dec) && all;
    all = smoothening_structure(lim) && all;
    all = uniqueness(uni) && all;
    all = determinism() && all;
    std::printf("acceptance: %s\n", all ? "PASS" : "FAIL");
    return all ? 0 : 1;
}
