#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "metric.hpp"

namespace cone_ricci {

// Smoothed minimum psi: psi(s) = s for s <= -1, 0 for s >= 1, C^2 in between,
// with psi' = (1 - sin(pi s / 2)) / 2 on [-1, 1] so that psi' >= 0, psi'' <= 0.

inline double psi(double s) noexcept {
    if (s <= -1.0) return s;
    if (s >= 1.0) return 0.0;
    return 0.5 * s - 0.5 + std::cos(0.5 * kPi * s) / kPi;
}

inline double psi_d1(double s) noexcept {
    if (s <= -1.0) return 1.0;
    if (s >= 1.0) return 0.0;
    return 0.5 * (1.0 - std::sin(0.5 * kPi * s));
}

inline double psi_d2(double s) noexcept {
    if (s <= -1.0 || s >= 1.0) return 0.0;
    return -0.25 * kPi * std::cos(0.5 * kPi * s);
}

/// Smoothed min{u0, k}: psi(u0 - k) + k, with u0 = +inf mapped to k.
///
/// Outside the transition band the result is bit-identical to u0 (u0 <= k-1)
/// or to k (u0 >= k+1); inside it is clamped to min{u0, k} so the upper
/// bound holds in floating point.
inline double smoothed_min(double u0, double k) noexcept {
    if (u0 <= k - 1.0) return u0;
    if (u0 >= k + 1.0) return k;
    return std::min(psi(u0 - k) + k, std::min(u0, k));
}

inline Profile truncate(const ConeSample& sample, double k) {
    if (!std::isfinite(k)) throw ParameterError("cap level must be finite");
    std::vector<double> u(sample.u.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = smoothed_min(sample.u[i], k);
    return Profile(sample.grid, std::move(u));
}

inline Profile truncate(const ConeData& cone, double k) { return truncate(sample_cone(cone), k); }

// ---------------------------------------------------------------------------
// Curvature lower bound K[g_k] >= min{e^2 K[g_0], 0}
// ---------------------------------------------------------------------------

struct CurvatureBoundReport {
    double level = 0.0;
    double tolerance = 0.0;
    /// min over interior nodes of K[g_k] - min{e^2 K[g_0], 0}, with K[g_0] the
    /// discrete curvature of the sampled cone (same stencil). Nodes whose
    /// stencil touches the apex have K[g_0] = -inf and impose no constraint.
    double min_margin = kInf;
    double worst_radius = 0.0;
    std::size_t apex_adjacent_nodes = 0;
    /// Same margin against the closed-form K[g_0], over the nodes whose stencil
    /// stays away from the apex. Empty when the cone carries no closed form.
    std::optional<double> analytic_min_margin;
    double min_curvature = kInf;
    bool pass = false;
};

/// Compares the discrete curvature of truncate(cone, k) with the lower bound.
/// Default tolerance is 10 h^2.
inline CurvatureBoundReport curvature_bound_check(const ConeData& cone, double k,
                                                  std::optional<double> tolerance = std::nullopt) {
    const RadialGrid& g = cone.grid();
    const double h = g.spacing();
    const RadialLaplacian lap(g);
    const ConeSample u0 = sample_cone(cone);
    const Profile uk = truncate(u0, k);
    const CurvatureProfile Kk = gauss_curvature(uk, lap);
    const double e2 = std::exp(2.0);

    CurvatureBoundReport rep;
    rep.level = k;
    rep.tolerance = tolerance.value_or(10.0 * h * h);
    std::optional<double> analytic;
    for (std::size_t j = 0; j < Kk.K.size(); ++j) {
        const std::size_t i = Kk.first + j;
        const double kk = Kk.K[j];
        rep.min_curvature = std::min(rep.min_curvature, kk);
        const bool touches_apex = !std::isfinite(u0.u[i]) || !std::isfinite(u0.u[i + 1]) ||
                                  (i > 0 && !std::isfinite(u0.u[i - 1]));
        if (touches_apex) {
            ++rep.apex_adjacent_nodes;
            continue;
        }
        const double k0 = -std::exp(-2.0 * u0.u[i]) * lap.apply(u0.u, i);
        const double margin = kk - std::min(e2 * k0, 0.0);
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.worst_radius = g.node(i);
        }
        if (cone.has_analytic_curvature()) {
            const double a = kk - std::min(e2 * cone.analytic_curvature(g.node(i)), 0.0);
            analytic = analytic ? std::min(*analytic, a) : a;
        }
    }
    rep.analytic_min_margin = analytic;
    rep.pass = rep.min_margin >= -rep.tolerance;
    return rep;
}

// ---------------------------------------------------------------------------
// Increasing sequence of truncations
// ---------------------------------------------------------------------------

struct TruncationSequence {
    ConeData cone;
    std::vector<double> levels;
    std::vector<Profile> profiles;
    /// Largest node radius where u0 > k - 1 (0 when only the origin is modified).
    std::vector<double> support_radii;
    /// Radius bound 1/j each modified region must sit in (empty for explicit levels).
    std::vector<double> support_bounds;
    /// True when the cone has no singular part (beta = 0) and u0 never exceeds
    /// the levels, so no truncation takes place.
    bool degenerate = false;
};

/// Largest node radius where u0 > k - 1.
inline double modified_radius(const ConeSample& u0, double k) {
    double r = 0.0;
    for (std::size_t i = 0; i < u0.u.size(); ++i)
        if (u0.u[i] > k - 1.0) r = std::max(r, u0.grid.node(i));
    return r;
}

/// Level k_j = sup w + |beta| ln j + 1, the smallest level whose modified
/// region {u0 > k - 1} lies in the disc of radius 1/j.
inline double cap_level_for_radius_index(const ConeData& cone, std::size_t j) {
    return cone.sup_finite_part() - cone.beta() * std::log(static_cast<double>(j)) + 1.0;
}

inline TruncationSequence build_sequence_from_levels(const ConeData& cone, std::vector<double> levels) {
    if (levels.empty()) throw ParameterError("truncation sequence needs at least one level");
    for (std::size_t j = 1; j < levels.size(); ++j)
        if (!(levels[j] > levels[j - 1])) throw ParameterError("cap levels must be strictly increasing");
    const ConeSample u0 = sample_cone(cone);
    TruncationSequence seq{cone, std::move(levels), {}, {}, {}, false};
    seq.profiles.reserve(seq.levels.size());
    for (double k : seq.levels) {
        seq.profiles.push_back(truncate(u0, k));
        seq.support_radii.push_back(modified_radius(u0, k));
    }
    double sup_u0 = -kInf;
    for (double x : u0.u) sup_u0 = std::max(sup_u0, x);
    seq.degenerate = cone.beta() == 0.0 && sup_u0 <= seq.levels.front() - 1.0;
    return seq;
}

/// Levels k_j for j = 1..count with {u0 > k_j - 1} inside D_{1/j}.
inline TruncationSequence build_sequence(const ConeData& cone, std::size_t count) {
    if (count < 2) throw ParameterError("truncation sequence needs count >= 2");
    std::vector<double> levels;
    for (std::size_t j = 1; j <= count; ++j) levels.push_back(cap_level_for_radius_index(cone, j));
    if (cone.beta() == 0.0) {
        // No singular part: all levels coincide. Spread them so the sequence
        // stays strictly increasing; every profile then equals u0.
        for (std::size_t j = 0; j < levels.size(); ++j) levels[j] += static_cast<double>(j);
    }
    TruncationSequence seq = build_sequence_from_levels(cone, levels);
    for (std::size_t j = 1; j <= count; ++j) seq.support_bounds.push_back(1.0 / static_cast<double>(j));
    return seq;
}

/// inf of p over the nodes with r <= radius.
inline double inf_over_disc(const Profile& p, double radius) {
    double m = kInf;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p.grid().node(i) <= radius) m = std::min(m, p[i]);
    return m;
}

}  // namespace cone_ricci
