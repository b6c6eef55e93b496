#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "barrier.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "flow.hpp"
#include "io.hpp"
#include "truncation.hpp"

namespace cone_ricci::cli {

namespace fs = std::filesystem;
using io::Json;

enum class LogLevel { quiet, info, debug };

/// Timestamped progress lines on stderr. Outputs never carry timestamps.
class Log {
public:
    explicit Log(LogLevel level) : level_(level) {}

    void info(const std::string& msg) const { emit(LogLevel::info, "info", msg); }
    void debug(const std::string& msg) const { emit(LogLevel::debug, "debug", msg); }

private:
    void emit(LogLevel at, const char* tag, const std::string& msg) const {
        if (level_ < at) return;
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        std::clog << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << " [" << tag << "] " << msg << "\n";
    }

    LogLevel level_;
};

struct Options {
    std::string command;
    std::optional<fs::path> config_path;
    std::vector<std::string> overrides;
    std::optional<std::string> output_dir;
    LogLevel log_level = LogLevel::info;
    // barrier-check
    std::optional<double> beta;
    std::optional<double> C;
    std::optional<double> t_lo;
    std::optional<double> t_hi;
    std::size_t samples = 64;
};

/// One machine-parsable line: error kind=<kind> field=<field> message="<text>".
inline void report_error(std::ostream& err, const std::string& kind, const std::string& field, std::string msg) {
    for (char& c : msg)
        if (c == '\n' || c == '\r') c = ' ';
    std::string quoted;
    for (char c : msg) {
        if (c == '"' || c == '\\') quoted += '\\';
        quoted += c;
    }
    err << "error kind=" << kind << " field=" << (field.empty() ? "-" : field) << " message=\"" << quoted << "\""
        << std::endl;
}

inline std::string pass_word(bool p) { return p ? "PASS" : "FAIL"; }

/// <output_dir>/<command>-<hash>, with resolved_config.json written into it.
inline fs::path prepare_run_dir(const config::RunConfig& rc, const std::string& command) {
    const fs::path dir = fs::path(rc.experiment.output_dir) / (command + "-" + config::content_hash(rc));
    fs::create_directories(dir);
    io::write_json(dir / "resolved_config.json", config::resolved(rc));
    return dir;
}

inline std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return os.str();
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline int cmd_simulate(const config::RunConfig& rc, const Log& log) {
    const ExperimentConfig& e = rc.experiment;
    const fs::path dir = prepare_run_dir(rc, "simulate");
    const ConeData cone = e.cone();
    SolverParams p = e.solver;
    for (double t : e.probe_times()) p.store_times.push_back(t);
    log.info("simulate: level " + fmt(rc.simulate_level) + ", n = " + std::to_string(e.grid.size()));
    const FlowResult f = evolve(truncate(cone, rc.simulate_level), p);
    io::write_flow(dir / "flow", f, {}, rc.node_stride);
    log.info("simulate: " + std::string(to_string(f.stop)) + " after " + std::to_string(f.steps) + " steps -> " +
             dir.string());
    if (!f.completed()) log.info("simulate: " + f.stop_message);
    return f.completed() ? 0 : 1;
}

inline int cmd_truncate(const config::RunConfig& rc, const Log& log) {
    const ExperimentConfig& e = rc.experiment;
    const fs::path dir = prepare_run_dir(rc, "truncate");
    const ConeData cone = e.cone();
    const TruncationSequence seq =
        rc.truncate_count >= 2 ? build_sequence(cone, rc.truncate_count) : build_sequence_from_levels(cone, e.levels);
    io::write_truncation(dir / "levels", seq);
    bool pass = true;
    Json checks = Json::array();
    const RadialLaplacian lap(cone.grid());
    for (std::size_t j = 0; j < seq.levels.size(); ++j) {
        const CurvatureBoundReport r = curvature_bound_check(cone, seq.levels[j]);
        pass = pass && r.pass;
        checks.push_back(io::to_json(r));
        char name[32];
        std::snprintf(name, sizeof name, "curvature_%02zu.csv", j);
        io::write_curvature_csv(dir / "levels" / name, gauss_curvature(seq.profiles[j], lap));
    }
    io::write_json(dir / "truncation_report.json", Json{{"pass", pass}, {"curvature_bound", std::move(checks)}});
    log.info("truncate: " + std::to_string(seq.levels.size()) + " levels, curvature bound " + pass_word(pass) +
             " -> " + dir.string());
    return pass ? 0 : 1;
}

inline int cmd_barrier(const config::RunConfig& rc, const Options& o, const Log& log) {
    const double beta = o.beta.value_or(rc.experiment.beta);
    const double t_lo = o.t_lo.value_or(rc.barrier_t_lo);
    const double t_hi = o.t_hi.value_or(rc.barrier_t_hi);
    BarrierSpec spec = o.C ? make_barrier_spec(beta, *o.C, t_lo, t_hi)
                           : calibrate_barrier(beta, rc.barrier_c_start, t_lo, t_hi);
    const BarrierPdeReport rep = check_barrier_pde(spec, t_lo, t_hi, o.samples);
    spec.verified = rep.pass;

    config::RunConfig echo = rc;
    echo.experiment.beta = beta;
    echo.barrier_t_lo = t_lo;
    echo.barrier_t_hi = t_hi;
    echo.barrier_c_start = spec.C;
    const fs::path dir = prepare_run_dir(echo, "barrier-check");
    Json j = io::to_json(rep);
    io::write_json(dir / "barrier_report.json", j);
    std::vector<double> radii, times;
    for (std::size_t i = 0; i < 65; ++i) radii.push_back(0.95 * static_cast<double>(i) / 64.0);
    for (std::size_t m = 0; m < 9; ++m) times.push_back(t_lo * std::pow(t_hi / t_lo, static_cast<double>(m) / 8.0));
    io::write_barrier_surface_csv(dir / "barrier_surface.csv", spec, radii, times);
    std::cout << j.dump() << std::endl;
    log.info("barrier-check: beta " + fmt(beta) + ", C " + fmt(spec.C) + ", min margin " + fmt(rep.min_margin) +
             " " + pass_word(rep.pass));
    return rep.pass ? 0 : 1;
}

inline std::string summary_markdown(const config::RunConfig& rc, const LimitReport& lim, const DecayReport& dec,
                                    const std::optional<UniquenessReport>& uni) {
    const ExperimentConfig& e = rc.experiment;
    std::ostringstream md;
    md << "# Smoothening experiment\n\n";
    md << "Cone: " << to_string(e.kind) << ", beta = " << e.beta << ", n = " << e.grid.size()
       << ", scheme = " << to_string(e.solver.scheme) << ", t_end = " << e.solver.t_end << "\n\n";
    md << "| check | value | result |\n|---|---|---|\n";
    md << "| monotone in k | " << lim.monotonicity.size() << " pairs | " << pass_word(lim.monotone_pass) << " |\n";
    md << "| Cauchy gap (deepest pair, t >= " << lim.gap_from << ") | " << lim.final_gap << " | "
       << pass_word(lim.gap_pass) << " |\n";
    md << "| curvature floor | initial " << lim.floor_initial << ", overall " << lim.floor_overall << " | "
       << pass_word(lim.floor_pass) << " |\n";
    md << "| truncation curvature bound | all levels | " << pass_word(lim.lemma_pass) << " |\n";
    md << "| barrier (C = " << lim.barrier.C << ", B = " << lim.barrier.B << ") | sup excess " << lim.sup_bound_excess
       << " | " << pass_word(lim.barrier_pass) << " |\n";
    md << "| decay slope (target " << dec.target_slope << ") | " << dec.slope << " | " << pass_word(dec.slope_pass)
       << " |\n";
    md << "| cap-limited window | " << (dec.cap_limited ? "yes" : "no") << " | " << pass_word(!dec.cap_limited)
       << " |\n";
    md << "| sup u - slope ln t vs B + " << dec.bound_slack << " | " << dec.bound_max << " vs " << dec.B << " | "
       << pass_word(dec.bound_pass) << " |\n";
    if (uni) {
        md << "| uniqueness defect | " << uni->defect << " (deepened " << uni->deep_defect << ") | "
           << pass_word(uni->defect_pass && uni->defect_monotone) << " |\n";
        md << "| rescaled comparisons | " << uni->rescaled.size() << " checks | " << pass_word(uni->rescaled_pass)
           << " |\n";
    }
    md << "\nLevels:\n\n";
    for (const auto& s : lim.level_info)
        md << "- k = " << s.level << ": " << (s.failed ? "FAILED (" + s.error + ")" : "completed") << ", "
           << s.steps << " steps, cap " << (s.cap_resolved ? "resolved" : "below grid resolution")
           << ", max K(0) = " << s.max_K_initial << "\n";
    return md.str();
}

inline int cmd_experiment(const config::RunConfig& rc, const Log& log) {
    const ExperimentConfig& e = rc.experiment;
    const fs::path dir = prepare_run_dir(rc, "experiment");
    LevelRuns runs(e);
    log.info("experiment: " + std::to_string(e.levels.size()) + " levels on " + std::to_string(e.grid.size()) +
             " nodes, " + std::to_string(worker_count(e.threads)) + " workers");
    const LimitReport lim = run_smoothening(runs);
    log.info("experiment: smoothening " + pass_word(lim.pass));
    const DecayReport dec = run_decay(runs);
    log.info("experiment: decay slope " + fmt(dec.slope) + " " + pass_word(dec.pass));
    std::optional<UniquenessReport> uni;
    if (e.uniqueness.enabled) {
        uni = run_uniqueness(runs, e.uniqueness.schedule_a, e.uniqueness.schedule_b);
        log.info("experiment: uniqueness defect " + fmt(uni->defect) + " " + pass_word(uni->pass));
    }
    const bool pass = lim.pass && dec.pass && (!uni || uni->pass);

    Json report{{"pass", pass}, {"smoothening", io::to_json(lim)}, {"decay", io::to_json(dec)}};
    if (uni) report["uniqueness"] = io::to_json(*uni);
    io::write_json(dir / "report.json", report);
    {
        std::ofstream md = io::open_output(dir / "summary.md");
        md << summary_markdown(rc, lim, dec, uni);
    }

    const std::vector<double> probes = e.probe_times();
    if (lim.limit) io::write_flow(dir / "limit", *lim.limit, probes, rc.node_stride);
    if (rc.write_levels) {
        for (double k : e.levels) {
            const auto run = runs.get(k);
            if (!run->flow) continue;
            char name[48];
            std::snprintf(name, sizeof name, "level_%g", k);
            io::write_flow(dir / "levels" / name, *run->flow, probes, rc.node_stride);
        }
    }
    std::vector<std::string> header{"t"};
    std::vector<std::vector<double>> cols{lim.times};
    for (const auto& g : lim.gaps) {
        header.push_back("gap_" + io::format_double(g.lower) + "_" + io::format_double(g.upper));
        cols.push_back(g.gap);
    }
    io::write_csv(dir / "cauchy_gaps.csv", header, cols);
    io::write_csv(dir / "decay.csv", {"t", "sup_u"}, {dec.times, dec.sup_u});
    log.info("experiment: " + pass_word(pass) + " -> " + dir.string());
    return pass ? 0 : 1;
}

inline int cmd_validate(const config::RunConfig& rc, const Log& log) {
    const fs::path dir = prepare_run_dir(rc, "validate");
    const ValidationReport rep = run_exact_validation(rc.experiment);
    io::write_json(dir / "validation.json", io::to_json(rep));
    for (const auto& c : rep.curvature) log.info(c.name + ": " + fmt(c.error) + " " + pass_word(c.pass));
    for (const auto& c : rep.flows) log.info(c.name + ": " + fmt(c.error) + " " + pass_word(c.pass));
    for (const auto& c : rep.orders) log.info(c.name + ": order " + fmt(c.order) + " " + pass_word(c.pass));
    log.info("validate: " + pass_word(rep.pass) + " -> " + dir.string());
    return rep.pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parses argv and dispatches. Exit 0 all PASS, 1 any FAIL, 2 usage,
/// configuration or domain errors (one line on `err`).
inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
    CLI::App app{"Ricci flow smoothening of cone surfaces"};
    app.require_subcommand(1);
    Options o;
    std::string level = "info";

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "TOML or JSON config file");
        sub->add_option("--set", o.overrides, "override key=value (dotted path), repeatable");
        sub->add_option("--output", o.output_dir, "output root directory");
        sub->add_option("--log-level", level, "quiet, info or debug")
            ->check(CLI::IsMember({"quiet", "info", "debug"}));
    };
    const std::pair<const char*, const char*> commands[] = {
        {"simulate", "evolve one truncated cone and write its snapshots"},
        {"truncate", "build the truncation sequence and check its curvature bound"},
        {"experiment", "smoothening limit, decay rate and (optionally) uniqueness"},
        {"validate", "curvature oracles and exact flows"},
    };
    for (const auto& [name, help] : commands) common(app.add_subcommand(name, help));
    CLI::App* bar = app.add_subcommand("barrier-check", "check the blunt-cone barrier inequality");
    common(bar);
    bar->add_option("--beta", o.beta, "cone exponent in (-1, 0)");
    bar->add_option("--c", o.C, "barrier offset C (calibrated when omitted)");
    bar->add_option("--t-lo", o.t_lo, "window start");
    bar->add_option("--t-hi", o.t_hi, "window end");
    bar->add_option("--samples", o.samples, "samples per axis");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        report_error(err, "usage", "", e.what());
        return 2;
    }
    o.command = app.get_subcommands().front()->get_name();
    o.log_level = level == "quiet" ? LogLevel::quiet : level == "debug" ? LogLevel::debug : LogLevel::info;
    const Log log(o.log_level);

    try {
        std::vector<std::string> overrides = o.overrides;
        if (o.output_dir) overrides.push_back("output_dir=\"" + *o.output_dir + "\"");
        const config::RunConfig rc = config::load_config(o.config_path, overrides);
        log.debug("config: " + config::resolved(rc).dump());
        if (o.command == "simulate") return cmd_simulate(rc, log);
        if (o.command == "truncate") return cmd_truncate(rc, log);
        if (o.command == "barrier-check") return cmd_barrier(rc, o, log);
        if (o.command == "experiment") return cmd_experiment(rc, log);
        return cmd_validate(rc, log);
    } catch (const ConfigError& e) {
        report_error(err, "config", e.field(), e.what());
    } catch (const DomainError& e) {
        report_error(err, "domain", "", e.what());
    } catch (const ParameterError& e) {
        report_error(err, "parameter", "", e.what());
    } catch (const Error& e) {
        report_error(err, "error", "", e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        report_error(err, "io", "", e.what());
    }
    return 2;
}

}  // namespace cone_ricci::cli
