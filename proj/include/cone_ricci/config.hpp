#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "error.hpp"
#include "experiments.hpp"

namespace cone_ricci::config {

using Json = nlohmann::ordered_json;

/// Everything a CLI command needs, with all defaults materialized.
struct RunConfig {
    ExperimentConfig experiment;
    /// Level evolved by `simulate`; defaults to the deepest experiment level.
    double simulate_level = 0.0;
    /// `truncate` builds levels k_j for j = 1..count when count >= 2, else
    /// uses experiment.levels.
    std::size_t truncate_count = 0;
    double barrier_c_start = 0.0;
    double barrier_t_lo = 1e-4;
    double barrier_t_hi = 1e-2;
    /// Experiment CSVs keep every node_stride-th node; write_levels adds one
    /// directory per level besides the limit flow.
    std::size_t node_stride = 1;
    bool write_levels = true;
};

// ---------------------------------------------------------------------------
// TOML -> JSON
// ---------------------------------------------------------------------------

inline Json from_toml(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        Json j = Json::object();
        for (const auto& [k, v] : *t) j[std::string(k.str())] = from_toml(v);
        return j;
    }
    if (const auto* a = node.as_array()) {
        Json j = Json::array();
        for (const auto& v : *a) j.push_back(from_toml(v));
        return j;
    }
    if (const auto* v = node.as_integer()) return Json(v->get());
    if (const auto* v = node.as_floating_point()) return Json(v->get());
    if (const auto* v = node.as_boolean()) return Json(v->get());
    if (const auto* v = node.as_string()) return Json(v->get());
    throw ConfigError("", "unsupported TOML value (dates and times are not part of the schema)");
}

inline Json parse_toml_text(const std::string& text, const std::string& source) {
    try {
        return from_toml(toml::parse(text, source));
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
        throw ConfigError("", os.str());
    }
}

inline Json read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (path.extension() == ".json") {
        try {
            return Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw ConfigError("", std::string("JSON parse error: ") + e.what());
        }
    }
    return parse_toml_text(text, path.string());
}

// ---------------------------------------------------------------------------
// Overrides
// ---------------------------------------------------------------------------

/// Applies "dotted.key=value"; the value is read as a TOML value, bare words
/// fall back to strings.
inline void apply_override(Json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("", "override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    Json value;
    try {
        value = from_toml(*toml::parse("v = " + text)["v"].node());
    } catch (const toml::parse_error&) {
        value = text;
    }
    Json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError(key, "empty path component in override");
        if (!node->is_object()) throw ConfigError(key, "override path crosses a non-table value");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = Json::object();
        start = dot + 1;
    }
}

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

/// Typed reads from one table with dotted field paths in errors; unknown keys
/// are rejected by finish().
class Table {
public:
    Table(const Json* j, std::string path) : j_(j), path_(std::move(path)) {
        if (j_ && !j_->is_null() && !j_->is_object()) throw ConfigError(path_, "expected a table");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const Json* find(const std::string& key) {
        seen_.insert(key);
        if (!j_ || j_->is_null()) return nullptr;
        auto it = j_->find(key);
        return it == j_->end() || it->is_null() ? nullptr : &*it;
    }

    double number(const std::string& key, double def) {
        const Json* v = find(key);
        if (!v) return def;
        if (!v->is_number()) throw ConfigError(field(key), "expected a number");
        return v->get<double>();
    }

    std::optional<double> optional_number(const std::string& key) {
        const Json* v = find(key);
        if (!v) return std::nullopt;
        if (!v->is_number()) throw ConfigError(field(key), "expected a number");
        return v->get<double>();
    }

    std::size_t count(const std::string& key, std::size_t def) {
        const Json* v = find(key);
        if (!v) return def;
        if (!v->is_number_integer() || v->get<long long>() < 0)
            throw ConfigError(field(key), "expected a non-negative integer");
        return v->get<std::size_t>();
    }

    bool boolean(const std::string& key, bool def) {
        const Json* v = find(key);
        if (!v) return def;
        if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& def) {
        const Json* v = find(key);
        if (!v) return def;
        if (!v->is_string()) throw ConfigError(field(key), "expected a string");
        return v->get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, const std::vector<double>& def) {
        const Json* v = find(key);
        if (!v) return def;
        if (!v->is_array()) throw ConfigError(field(key), "expected an array of numbers");
        std::vector<double> out;
        for (const auto& x : *v) {
            if (!x.is_number()) throw ConfigError(field(key), "expected an array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    Table sub(const std::string& key) { return Table(find(key), field(key)); }

    void finish() const {
        if (!j_ || j_->is_null()) return;
        for (auto it = j_->begin(); it != j_->end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
    }

private:
    const Json* j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline RunConfig parse(const Json& root) {
    if (!root.is_object()) throw ConfigError("", "config root must be a table");
    Table top(&root, "");
    RunConfig rc;
    ExperimentConfig& e = rc.experiment;

    const std::string cone = top.string("cone", "flat");
    if (cone == "flat")
        e.kind = ConeKind::flat;
    else if (cone == "hyperbolic")
        e.kind = ConeKind::hyperbolic;
    else
        throw ConfigError("cone", "expected \"flat\" or \"hyperbolic\", got \"" + cone + "\"");
    e.beta = top.number("beta", -0.5);
    if (!valid_cone_exponent(e.beta)) {
        std::ostringstream os;
        os << "cone exponent must lie in (-1, 0], got " << e.beta;
        throw ConfigError("beta", os.str());
    }
    e.offset = top.number("offset", 0.0);
    e.output_dir = top.string("output_dir", "out");
    e.threads = static_cast<unsigned>(top.count("threads", 0));

    Table s = top.sub("solver");
    const std::size_t n = s.count("n", 2048);
    const double r_min = s.number("r_min", 0.0);
    const double r_max = s.number("r_max", e.kind == ConeKind::hyperbolic ? 0.9 : 1.0);
    try {
        e.grid = RadialGrid(r_min, r_max, n);
    } catch (const ParameterError& err) {
        throw ConfigError(s.field("n"), err.what());
    }
    const std::string scheme = s.string("scheme", "explicit");
    if (scheme == "explicit")
        e.solver.scheme = Scheme::explicit_euler;
    else if (scheme == "semi-implicit")
        e.solver.scheme = Scheme::semi_implicit;
    else
        throw ConfigError(s.field("scheme"), "expected \"explicit\" or \"semi-implicit\", got \"" + scheme + "\"");
    e.solver.cfl = s.number("cfl", 0.25);
    e.solver.t_end = s.number("t_end", 0.25);
    e.solver.store_every = s.number("store_every", 0.0);
    e.solver.store_times = s.numbers("store_times", {});
    e.solver.max_du = s.number("max_du", 0.005);
    e.solver.dt_max = s.optional_number("dt_max").value_or(kInf);  // null: unbounded
    e.solver.dt_min = s.number("dt_min", 1e-15);
    e.solver.extinction_guard = s.boolean("extinction_guard", true);
    s.finish();

    Table b = top.sub("boundary");
    const std::string outer = b.string("outer", "fixed");
    if (outer != "fixed") throw ConfigError(b.field("outer"), "only \"fixed\" Dirichlet data can be configured");
    if (const Json* inner = b.find("inner")) {
        if (!inner->is_string() || inner->get<std::string>() != "fixed")
            throw ConfigError(b.field("inner"), "only \"fixed\" Dirichlet data can be configured");
        if (e.grid.contains_origin())
            throw ConfigError(b.field("inner"), "a disc (solver.r_min = 0) takes no inner boundary condition");
        e.solver.boundary.inner = BoundaryCondition::fixed();
    }
    b.finish();

    Table x = top.sub("experiment");
    e.levels = x.numbers("levels", e.levels);
    e.time_samples = x.numbers("time_samples", default_time_samples(e.solver.t_end));
    e.gap_from = x.number("gap_from", e.gap_from);
    e.gap_tolerance = x.number("gap_tolerance", e.gap_tolerance);
    x.finish();

    Table d = top.sub("decay");
    e.decay.t_lo = d.number("t_lo", e.solver.t_end / 100.0);
    e.decay.t_hi = d.number("t_hi", e.solver.t_end);
    e.decay.slope_tolerance = d.number("slope_tolerance", e.decay.slope_tolerance);
    e.decay.bound_slack = d.number("bound_slack", e.decay.bound_slack);
    e.decay.stability_tolerance = d.number("stability_tolerance", e.decay.stability_tolerance);
    e.decay.stability_depth = d.number("stability_depth", e.decay.stability_depth);
    d.finish();

    Table u = top.sub("uniqueness");
    UniquenessSettings& us = e.uniqueness;
    us.enabled = u.boolean("enabled", us.enabled);
    us.schedule_a = u.numbers("schedule_a", us.schedule_a);
    us.schedule_b = u.numbers("schedule_b", us.schedule_b);
    us.deepen_by = u.number("deepen_by", us.deepen_by);
    const auto window = u.numbers("window", {us.window_lo, us.window_hi});
    if (window.size() != 2) throw ConfigError(u.field("window"), "expected [t_lo, t_hi]");
    us.window_lo = window[0];
    us.window_hi = window[1];
    us.t0 = u.numbers("t0", us.t0);
    us.defect_tolerance = u.number("defect_tolerance", us.defect_tolerance);
    us.below_shift = u.number("below_shift", us.below_shift);
    us.allow_degenerate = u.boolean("allow_degenerate", us.allow_degenerate);
    u.finish();

    Table v = top.sub("validation");
    e.validation.curvature_n = v.count("curvature_n", e.validation.curvature_n);
    e.validation.flow_n = v.count("flow_n", e.validation.flow_n);
    e.validation.tolerance = v.number("tolerance", e.validation.tolerance);
    e.validation.sphere_t_end = v.number("sphere_t_end", e.validation.sphere_t_end);
    e.validation.hyperbolic_t_end = v.number("hyperbolic_t_end", e.validation.hyperbolic_t_end);
    v.finish();

    Table sim = top.sub("simulate");
    rc.simulate_level = sim.number("level", e.levels.empty() ? 0.0 : e.levels.back());
    sim.finish();

    Table tr = top.sub("truncate");
    rc.truncate_count = tr.count("count", 0);
    tr.finish();

    Table bar = top.sub("barrier");
    rc.barrier_c_start = bar.number("c_start", rc.barrier_c_start);
    rc.barrier_t_lo = bar.number("t_lo", rc.barrier_t_lo);
    rc.barrier_t_hi = bar.number("t_hi", rc.barrier_t_hi);
    bar.finish();

    Table out = top.sub("output");
    rc.node_stride = out.count("node_stride", 1);
    if (rc.node_stride == 0) throw ConfigError(out.field("node_stride"), "must be >= 1");
    rc.write_levels = out.boolean("write_levels", true);
    out.finish();

    top.finish();

    try {
        e.validate();
    } catch (const ParameterError& err) {
        const std::string what = err.what();
        const auto colon = what.find(": ");
        if (colon != std::string::npos && what.find(' ') > colon) throw ConfigError(what.substr(0, colon), what.substr(colon + 2));
        throw ConfigError("", what);
    }
    return rc;
}

/// The resolved configuration in schema form; parse(resolved(c)) == c.
inline Json resolved(const RunConfig& rc) {
    const ExperimentConfig& e = rc.experiment;
    Json j;
    j["cone"] = to_string(e.kind);
    j["beta"] = e.beta;
    j["offset"] = e.offset;
    j["output_dir"] = e.output_dir;
    j["threads"] = e.threads;
    j["solver"] = {{"n", e.grid.size()},
                   {"r_min", e.grid.r_min()},
                   {"r_max", e.grid.r_max()},
                   {"scheme", to_string(e.solver.scheme)},
                   {"cfl", e.solver.cfl},
                   {"t_end", e.solver.t_end},
                   {"store_every", e.solver.store_every},
                   {"store_times", e.solver.store_times},
                   {"max_du", e.solver.max_du},
                   {"dt_max", std::isfinite(e.solver.dt_max) ? Json(e.solver.dt_max) : Json(nullptr)},
                   {"dt_min", e.solver.dt_min},
                   {"extinction_guard", e.solver.extinction_guard}};
    j["boundary"] = {{"outer", "fixed"}};
    if (e.solver.boundary.inner) j["boundary"]["inner"] = "fixed";
    j["experiment"] = {{"levels", e.levels},
                       {"time_samples", e.probe_times()},
                       {"gap_from", e.gap_from},
                       {"gap_tolerance", e.gap_tolerance}};
    const auto [t_lo, t_hi] = e.decay_window();
    j["decay"] = {{"t_lo", t_lo},
                  {"t_hi", t_hi},
                  {"slope_tolerance", e.decay.slope_tolerance},
                  {"bound_slack", e.decay.bound_slack},
                  {"stability_tolerance", e.decay.stability_tolerance},
                  {"stability_depth", e.decay.stability_depth}};
    const UniquenessSettings& us = e.uniqueness;
    j["uniqueness"] = {{"enabled", us.enabled},
                       {"schedule_a", us.schedule_a},
                       {"schedule_b", us.schedule_b},
                       {"deepen_by", us.deepen_by},
                       {"window", {us.window_lo, us.window_hi}},
                       {"t0", us.t0},
                       {"defect_tolerance", us.defect_tolerance},
                       {"below_shift", us.below_shift},
                       {"allow_degenerate", us.allow_degenerate}};
    j["validation"] = {{"curvature_n", e.validation.curvature_n},
                       {"flow_n", e.validation.flow_n},
                       {"tolerance", e.validation.tolerance},
                       {"sphere_t_end", e.validation.sphere_t_end},
                       {"hyperbolic_t_end", e.validation.hyperbolic_t_end}};
    j["simulate"] = {{"level", rc.simulate_level}};
    j["truncate"] = {{"count", rc.truncate_count}};
    j["barrier"] = {{"c_start", rc.barrier_c_start}, {"t_lo", rc.barrier_t_lo}, {"t_hi", rc.barrier_t_hi}};
    j["output"] = {{"node_stride", rc.node_stride}, {"write_levels", rc.write_levels}};
    return j;
}

/// Reads a TOML (or .json) file, applies overrides in order and validates.
inline RunConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::string>& overrides = {}) {
    Json root = path ? read_file(*path) : Json::object();
    for (const auto& o : overrides) apply_override(root, o);
    return parse(root);
}

/// 64-bit FNV-1a of the resolved config, ignoring keys that cannot change
/// results (output_dir, threads). Hex, 16 digits.
inline std::string content_hash(const RunConfig& rc) {
    Json j = resolved(rc);
    j.erase("output_dir");
    j.erase("threads");
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace cone_ricci::config
