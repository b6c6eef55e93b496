#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "barrier.hpp"
#include "experiments.hpp"
#include "flow.hpp"
#include "metric.hpp"
#include "truncation.hpp"

namespace cone_ricci::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// CSV: comma separated, CRLF line ends, "%.17g" numbers.
// ---------------------------------------------------------------------------

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

inline std::ofstream open_output(const fs::path& path) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    return out;
}

/// Writes equal-length columns under a header row.
inline void write_csv(const fs::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
    std::ofstream out = open_output(path);
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << "\r\n";
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << format_double(columns[c][r]);
        out << "\r\n";
    }
}

/// Every `stride`-th node plus the last one.
inline void write_profile_csv(const fs::path& path, const Profile& p, std::size_t stride = 1) {
    stride = std::max<std::size_t>(stride, 1);
    std::vector<double> r, u;
    for (std::size_t i = 0; i < p.size(); i += stride) {
        r.push_back(p.grid().node(i));
        u.push_back(p[i]);
    }
    if ((p.size() - 1) % stride != 0) {
        r.push_back(p.grid().r_max());
        u.push_back(p[p.size() - 1]);
    }
    write_csv(path, {"r", "u"}, {r, u});
}

inline void write_curvature_csv(const fs::path& path, const CurvatureProfile& K) {
    std::vector<double> r(K.K.size());
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = K.radius(j);
    write_csv(path, {"r", "K"}, {r, K.K});
}

/// U(r, t) on the product of the given radii (r < 1) and times (lambda_bar < 1).
inline void write_barrier_surface_csv(const fs::path& path, const BarrierSpec& spec, const std::vector<double>& radii,
                                      const std::vector<double>& times) {
    std::vector<double> rs, ts, us;
    for (double t : times) {
        if (!barrier_defined(t, spec)) continue;
        for (double r : radii) {
            if (!(r >= 0.0 && r < 1.0)) continue;
            rs.push_back(r);
            ts.push_back(t);
            us.push_back(blunt_cone(r, t, spec));
        }
    }
    write_csv(path, {"r", "t", "U"}, {rs, ts, us});
}

inline void write_json(const fs::path& path, const Json& j) {
    std::ofstream out = open_output(path);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// JSON views of the library types
// ---------------------------------------------------------------------------

/// Non-finite numbers become null.
inline Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json nums(const std::vector<double>& xs) {
    Json a = Json::array();
    for (double x : xs) a.push_back(num(x));
    return a;
}

inline Json to_json(const RadialGrid& g) {
    return Json{{"r_min", g.r_min()}, {"r_max", g.r_max()}, {"n", g.size()}, {"h", g.spacing()}};
}

inline Json to_json(const SolverParams& p) {
    Json j;
    j["scheme"] = to_string(p.scheme);
    j["cfl"] = p.cfl;
    j["t_end"] = p.t_end;
    j["store_every"] = p.store_every;
    j["store_times"] = nums(p.store_times);
    j["max_du"] = p.max_du;
    j["dt_max"] = num(p.dt_max);
    j["dt_min"] = p.dt_min;
    j["extinction_guard"] = p.extinction_guard;
    j["boundary_outer"] = p.boundary.outer.description;
    j["boundary_inner"] = p.boundary.inner ? Json(p.boundary.inner->description) : Json(nullptr);
    return j;
}

inline Json to_json(const Diagnostics& d) {
    return Json{{"sup_u", num(d.sup_u)}, {"inf_u", num(d.inf_u)}, {"min_K", num(d.min_K)},
                {"max_K", num(d.max_K)}, {"area", num(d.area)}, {"residual", num(d.residual)}};
}

inline Json to_json(const OrderingReport& r) {
    return Json{{"pass", r.pass},
                {"worst_margin", num(r.worst_margin)},
                {"worst_time", r.worst_time},
                {"worst_radius", r.worst_radius},
                {"tolerance", r.tolerance},
                {"compared_times", r.compared_times}};
}

inline Json to_json(const CurvatureBoundReport& r) {
    return Json{{"level", r.level},
                {"pass", r.pass},
                {"tolerance", r.tolerance},
                {"min_margin", num(r.min_margin)},
                {"worst_radius", r.worst_radius},
                {"apex_adjacent_nodes", r.apex_adjacent_nodes},
                {"analytic_min_margin", r.analytic_min_margin ? num(*r.analytic_min_margin) : Json(nullptr)},
                {"min_curvature", num(r.min_curvature)}};
}

inline Json to_json(const BarrierSpec& s) {
    return Json{{"beta", s.beta}, {"C", s.C}, {"B", s.B}, {"window", {s.t_lo, s.t_hi}}, {"verified", s.verified}};
}

inline Json to_json(const BarrierPdeReport& r) {
    return Json{{"beta", r.beta},
                {"C", r.C},
                {"B", r.B},
                {"window", {r.t_lo, r.t_hi}},
                {"samples", r.samples},
                {"min_margin", num(r.min_margin)},
                {"min_relative_margin", num(r.min_relative_margin)},
                {"lower_bound_holds", r.lower_bound_holds},
                {"pass", r.pass}};
}

inline Json to_json(const BarrierFlowReport& r) {
    return Json{{"pass", r.pass},
                {"worst_violation", num(r.worst_violation)},
                {"worst_time", r.worst_time},
                {"worst_radius", r.worst_radius},
                {"sup_bound_excess", num(r.sup_bound_excess)},
                {"tolerance", r.tolerance},
                {"checked_times", r.checked_times}};
}

inline Json to_json(const FlowResult& f) {
    Json j;
    j["grid"] = to_json(f.grid);
    j["params"] = to_json(f.params);
    j["stop"] = to_string(f.stop);
    j["stop_message"] = f.stop_message;
    j["steps"] = f.steps;
    j["max_dt"] = f.max_dt;
    j["horizon"] = f.horizon;
    Json snaps = Json::array();
    for (std::size_t m = 0; m < f.size(); ++m) {
        Json s{{"index", m}, {"t", f.times[m]}};
        s.update(to_json(f.diagnostics[m]));
        snaps.push_back(std::move(s));
    }
    j["snapshots"] = std::move(snaps);
    return j;
}

inline Json to_json(const LimitReport& r) {
    Json j;
    j["pass"] = r.pass;
    j["beta"] = r.beta;
    j["levels"] = nums(r.levels);
    j["limit_level"] = r.limit_level;
    j["times"] = nums(r.times);
    Json lv = Json::array();
    for (const auto& s : r.level_info) {
        lv.push_back(Json{{"level", s.level},
                          {"cap_resolved", s.cap_resolved},
                          {"modified_radius", s.modified_radius},
                          {"failed", s.failed},
                          {"error", s.error},
                          {"steps", s.steps},
                          {"max_dt", s.max_dt},
                          {"min_K_initial", num(s.min_K_initial)},
                          {"max_K_initial", num(s.max_K_initial)},
                          {"min_K_overall", num(s.min_K_overall)},
                          {"curvature_bound", to_json(s.lemma)},
                          {"barrier", to_json(s.barrier)}});
    }
    j["level_runs"] = std::move(lv);
    Json mono = Json::array();
    for (const auto& m : r.monotonicity) mono.push_back(to_json(m));
    j["monotonicity"] = {{"pass", r.monotone_pass}, {"pairs", std::move(mono)}};
    Json gaps = Json::array();
    for (const auto& g : r.gaps)
        gaps.push_back(Json{{"levels", {g.lower, g.upper}}, {"gap", nums(g.gap)}, {"outer_gap", nums(g.outer_gap)}});
    j["cauchy"] = {{"pass", r.gap_pass},
                   {"from", r.gap_from},
                   {"tolerance", r.gap_tolerance},
                   {"final_gap", r.final_gap},
                   {"series", std::move(gaps)}};
    j["agreement_zone"] = {
        {"pass", r.agreement_pass}, {"worst", r.agreement_worst}, {"tolerance", r.agreement_tolerance}};
    j["curvature_floor"] = {{"pass", r.floor_pass},
                            {"lemma_pass", r.lemma_pass},
                            {"floor_initial", num(r.floor_initial)},
                            {"floor_overall", num(r.floor_overall)},
                            {"Lambda", r.Lambda},
                            {"tolerance", r.floor_tolerance}};
    j["barrier"] = to_json(r.barrier);
    j["sup_bound"] = {{"pass", r.barrier_pass}, {"excess", num(r.sup_bound_excess)}};
    return j;
}

inline Json to_json(const DecayReport& r) {
    return Json{{"pass", r.pass},
                {"beta", r.beta},
                {"level", r.level},
                {"window", {r.t_lo, r.t_hi}},
                {"target_slope", r.target_slope},
                {"slope", r.slope},
                {"intercept", r.intercept},
                {"slope_tolerance", r.slope_tolerance},
                {"slope_pass", r.slope_pass},
                {"comparison_level", r.comparison_level ? Json(*r.comparison_level) : Json(nullptr)},
                {"comparison_slope", r.comparison_slope ? Json(*r.comparison_slope) : Json(nullptr)},
                {"cap_limited", r.cap_limited},
                {"cap_saturated", r.cap_saturated},
                {"B", r.B},
                {"bound_max", num(r.bound_max)},
                {"bound_slack", r.bound_slack},
                {"bound_pass", r.bound_pass},
                {"times", nums(r.times)},
                {"sup_u", nums(r.sup_u)}};
}

inline Json to_json(const UniquenessReport& r) {
    Json resc = Json::array();
    for (const auto& c : r.rescaled)
        resc.push_back(Json{{"t0", c.t0}, {"Lambda", c.Lambda}, {"direction", c.direction}, {"ordering", to_json(c.ordering)}});
    return Json{{"pass", r.pass},
                {"schedule_a", nums(r.schedule_a)},
                {"schedule_b", nums(r.schedule_b)},
                {"deepen_by", r.deepen_by},
                {"window", {r.window_lo, r.window_hi}},
                {"degenerate", r.degenerate},
                {"below", {{"pass", r.below_pass}, {"a", to_json(r.below_a)}, {"b", to_json(r.below_b)}}},
                {"rescaled", {{"pass", r.rescaled_pass}, {"checks", std::move(resc)}}},
                {"defect", r.defect},
                {"defect_time", r.defect_time},
                {"defect_tolerance", r.defect_tolerance},
                {"defect_pass", r.defect_pass},
                {"deep_defect", r.deep_defect},
                {"defect_monotone", r.defect_monotone}};
}

inline Json to_json(const ValidationReport& r) {
    Json cur = Json::array(), flows = Json::array(), orders = Json::array();
    for (const auto& c : r.curvature)
        cur.push_back(Json{{"name", c.name}, {"n", c.n}, {"error", c.error}, {"tolerance", c.tolerance}, {"pass", c.pass}});
    for (const auto& c : r.flows)
        flows.push_back(
            Json{{"name", c.name}, {"n", c.n}, {"error", c.error}, {"tolerance", c.tolerance}, {"pass", c.pass}});
    for (const auto& c : r.orders)
        orders.push_back(Json{{"name", c.name},
                              {"steps", nums(c.steps)},
                              {"errors", nums(c.errors)},
                              {"order", c.order},
                              {"range", {num(c.lo), num(c.hi)}},
                              {"pass", c.pass}});
    return Json{{"pass", r.pass}, {"curvature", std::move(cur)}, {"flows", std::move(flows)}, {"orders", std::move(orders)}};
}

// ---------------------------------------------------------------------------
// Directories
// ---------------------------------------------------------------------------

inline std::string snapshot_name(std::size_t m) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "t_%04zu.csv", m);
    return buf;
}

/// meta.json plus one t_<index>.csv per snapshot; `keep` selects snapshots
/// (all when empty), `stride` thins the nodes.
inline void write_flow(const fs::path& dir, const FlowResult& f, const std::vector<double>& keep = {},
                       std::size_t stride = 1) {
    fs::create_directories(dir);
    Json meta = to_json(f);
    Json files = Json::array();
    for (std::size_t m = 0; m < f.size(); ++m) {
        if (!keep.empty() && m != 0 && !detail::is_probe(f.times[m], keep)) continue;
        write_profile_csv(dir / snapshot_name(m), f.profiles[m], stride);
        files.push_back(Json{{"index", m}, {"t", f.times[m]}, {"file", snapshot_name(m)}});
    }
    meta["node_stride"] = std::max<std::size_t>(stride, 1);
    meta["files"] = std::move(files);
    write_json(dir / "meta.json", meta);
}

/// One CSV per level plus manifest.json.
inline void write_truncation(const fs::path& dir, const TruncationSequence& seq) {
    fs::create_directories(dir);
    Json levels = Json::array();
    for (std::size_t j = 0; j < seq.levels.size(); ++j) {
        char name[32];
        std::snprintf(name, sizeof name, "level_%02zu.csv", j);
        write_profile_csv(dir / name, seq.profiles[j]);
        Json e{{"index", j}, {"level", seq.levels[j]}, {"file", name}, {"support_radius", seq.support_radii[j]}};
        if (j < seq.support_bounds.size()) e["support_bound"] = seq.support_bounds[j];
        levels.push_back(std::move(e));
    }
    write_json(dir / "manifest.json", Json{{"cone", seq.cone.label()},
                                           {"beta", seq.cone.beta()},
                                           {"grid", to_json(seq.cone.grid())},
                                           {"degenerate", seq.degenerate},
                                           {"levels", std::move(levels)}});
}

}  // namespace cone_ricci::io
