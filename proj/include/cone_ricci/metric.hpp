#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "grid.hpp"

namespace cone_ricci {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Cone exponent and model conformal factors. All metrics are g = e^{2u}|dz|^2.
// ---------------------------------------------------------------------------

inline bool valid_cone_exponent(double beta) noexcept { return beta > -1.0 && beta <= 0.0; }

inline void require_cone_exponent(double beta) {
    if (!valid_cone_exponent(beta)) {
        std::ostringstream os;
        os << "cone exponent beta must lie in (-1, 0], got " << beta;
        throw ParameterError(os.str());
    }
}

/// Cone angle 2*pi*(beta + 1).
inline double cone_angle(double beta) {
    require_cone_exponent(beta);
    return 2.0 * kPi * (beta + 1.0);
}

/// Euclidean cone, ln(2(beta+1)) + beta ln r. Curvature 0.
inline double eval_flat_cone(double beta, double r) {
    require_cone_exponent(beta);
    if (!(r > 0.0)) throw DomainError("flat cone is singular at r <= 0");
    return std::log(2.0 * (beta + 1.0)) + beta * std::log(r);
}

/// Hyperbolic cone, flat cone minus ln(1 - r^{2(beta+1)}). Curvature -1,
/// diverges at r = 1.
inline double eval_hyperbolic_cone(double beta, double r) {
    require_cone_exponent(beta);
    if (!(r > 0.0 && r < 1.0)) throw DomainError("hyperbolic cone requires 0 < r < 1");
    return std::log(2.0 * (beta + 1.0)) + beta * std::log(r) -
           std::log1p(-std::pow(r, 2.0 * (beta + 1.0)));
}

/// Round unit sphere in stereographic coordinates, ln(2/(1+r^2)).
inline double eval_sphere(double r) {
    if (!std::isfinite(r) || r < 0.0) throw DomainError("sphere factor requires finite r >= 0");
    return std::log(2.0) - std::log1p(r * r);
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

/// Conformal factor sampled on a grid at one instant. All values finite.
class Profile {
public:
    Profile(RadialGrid grid, std::vector<double> u) : grid_(grid), u_(std::move(u)) {
        if (u_.size() != grid_.size()) {
            std::ostringstream os;
            os << "profile has " << u_.size() << " values for a grid of " << grid_.size() << " nodes";
            throw ParameterError(os.str());
        }
        for (std::size_t i = 0; i < u_.size(); ++i) {
            if (!std::isfinite(u_[i])) {
                std::ostringstream os;
                os << "profile value at r = " << grid_.node(i) << " is not finite";
                throw DomainError(os.str());
            }
        }
    }

    /// Samples f at every node.
    template <class F>
    static Profile from_function(const RadialGrid& grid, F&& f) {
        std::vector<double> u(grid.size());
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = f(grid.node(i));
        return Profile(grid, std::move(u));
    }

    const RadialGrid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return u_; }
    std::size_t size() const noexcept { return u_.size(); }
    double operator[](std::size_t i) const noexcept { return u_[i]; }

    double max() const { return *std::max_element(u_.begin(), u_.end()); }
    double min() const { return *std::min_element(u_.begin(), u_.end()); }

    /// Linear interpolation between nodes.
    double at(double r) const {
        const std::size_t i = grid_.locate(r);
        const double r0 = grid_.node(i);
        const double s = (r - r0) / grid_.spacing();
        return (1.0 - s) * u_[i] + s * u_[i + 1];
    }

    /// u + c, the metric scaled by e^{2c}.
    Profile shifted(double c) const {
        std::vector<double> v(u_);
        for (double& x : v) x += c;
        return Profile(grid_, std::move(v));
    }

private:
    RadialGrid grid_;
    std::vector<double> u_;
};

/// Gauss curvature on the interior nodes [grid.interior_begin(), interior_end()).
struct CurvatureProfile {
    RadialGrid grid;
    std::size_t first = 0;  // grid index of K.front()
    std::vector<double> K;

    double radius(std::size_t j) const noexcept { return grid.node(first + j); }
    double min() const { return *std::min_element(K.begin(), K.end()); }
    double max() const { return *std::max_element(K.begin(), K.end()); }
};

// ---------------------------------------------------------------------------
// Radial Laplacian
// ---------------------------------------------------------------------------

/// Three-point radial Laplacian u'' + u'/r with positive weights:
///
///   (L u)_i = lower_i (u_{i-1} - u_i) + upper_i (u_{i+1} - u_i).
///
/// At a node r_i = x h with x > 1 the two weights are fixed by exactness on
/// ln r and r^2 (constants are exact by construction), so cone factors
/// w + beta ln r have zero discrete curvature and smooth data are second
/// order. The node next to the origin (x = 1) uses the arithmetic face
/// weights (x -+ 1/2) / (x h^2), exact on r^2. At the origin the even
/// extension u(-h) = u(h) gives (L u)_0 = 4 (u_1 - u_0) / h^2.
/// Positive weights give a discrete maximum principle.
class RadialLaplacian {
public:
    explicit RadialLaplacian(const RadialGrid& grid)
        : grid_(grid), lower_(grid.size(), 0.0), upper_(grid.size(), 0.0) {
        const std::size_t n = grid.size();
        const double h = grid.spacing();
        const double h2 = h * h;
        if (grid.contains_origin()) upper_[0] = 4.0 / h2;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double x = grid.node(i) / h;
            if (x < 1.0 + 1e-9) {
                lower_[i] = (x - 0.5) / (x * h2);
                upper_[i] = (x + 0.5) / (x * h2);
                continue;
            }
            // rho = lower/upper from ln r; the r^2 condition then fixes upper:
            // upper ((2x+1) - (2x-1) rho) h^2 = 4, the bracket written without
            // cancellation via 1 - rho = -log1p(-1/x^2) / lm.
            const double lp = std::log1p(1.0 / x);
            const double lm = -std::log1p(-1.0 / x);
            const double rho = lp / lm;
            const double d = (2.0 * x + 1.0) * (-std::log1p(-1.0 / (x * x)) / lm) + 2.0 * rho;
            upper_[i] = 4.0 / (d * h2);
            lower_[i] = rho * upper_[i];
        }
    }

    const RadialGrid& grid() const noexcept { return grid_; }
    std::span<const double> lower() const noexcept { return lower_; }
    std::span<const double> upper() const noexcept { return upper_; }

    /// (L u)_i at an interior node i (see RadialGrid::interior_begin).
    double apply(std::span<const double> u, std::size_t i) const noexcept {
        double s = upper_[i] * (u[i + 1] - u[i]);
        if (i > 0) s += lower_[i] * (u[i - 1] - u[i]);
        return s;
    }

    /// Sum of the weights at node i; the explicit step bound uses it.
    double diagonal(std::size_t i) const noexcept { return lower_[i] + upper_[i]; }

private:
    RadialGrid grid_;
    std::vector<double> lower_;
    std::vector<double> upper_;
};

/// K = -e^{-2u} Delta u on interior nodes.
inline CurvatureProfile gauss_curvature(const Profile& p, const RadialLaplacian& lap) {
    const RadialGrid& g = p.grid();
    if (!(lap.grid() == g)) throw ParameterError("laplacian built for a different grid");
    CurvatureProfile out{g, g.interior_begin(), {}};
    out.K.reserve(g.interior_end() - g.interior_begin());
    const auto u = p.values();
    for (std::size_t i = g.interior_begin(); i < g.interior_end(); ++i)
        out.K.push_back(-std::exp(-2.0 * u[i]) * lap.apply(u, i));
    return out;
}

inline CurvatureProfile gauss_curvature(const Profile& p) {
    return gauss_curvature(p, RadialLaplacian(p.grid()));
}

/// Bound on the rounding error of gauss_curvature(p): the differences
/// u_{i+-1} - u_i carry an absolute error of about eps max(|u|, 1), which the
/// stencil amplifies by its weights. Matters only on very fine grids.
inline double curvature_roundoff(const Profile& p, const RadialLaplacian& lap) {
    const RadialGrid& g = p.grid();
    const auto u = p.values();
    constexpr double eps = std::numeric_limits<double>::epsilon();
    double bound = 0.0;
    for (std::size_t i = g.interior_begin(); i < g.interior_end(); ++i) {
        double scale = std::max({1.0, std::abs(u[i]), std::abs(u[i + 1])});
        if (i > 0) scale = std::max(scale, std::abs(u[i - 1]));
        bound = std::max(bound, 4.0 * eps * scale * std::exp(-2.0 * u[i]) * lap.diagonal(i));
    }
    return bound;
}

/// 2 pi \int e^{2u} r dr by the composite trapezoid rule.
inline double area(const Profile& p) {
    const RadialGrid& g = p.grid();
    const auto u = p.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double f = std::exp(2.0 * u[i]) * g.node(i);
        sum += (i == 0 || i + 1 == g.size()) ? 0.5 * f : f;
    }
    return 2.0 * kPi * g.spacing() * sum;
}

/// Length of the circle |z| = r, 2 pi r e^{u(r)}.
inline double circumference(const Profile& p, double r) { return 2.0 * kPi * r * std::exp(p.at(r)); }

/// Radial distance \int_{r_min}^{r} e^{u} dr (trapezoid on the grid nodes, the
/// last partial cell interpolated linearly).
inline double radial_distance(const Profile& p, double r) {
    const RadialGrid& g = p.grid();
    const std::size_t i = g.locate(r);
    const auto u = p.values();
    double d = 0.0;
    for (std::size_t j = 0; j < i; ++j) d += 0.5 * g.spacing() * (std::exp(u[j]) + std::exp(u[j + 1]));
    const double tail = r - g.node(i);
    d += 0.5 * tail * (std::exp(u[i]) + std::exp(p.at(r)));
    return d;
}

// ---------------------------------------------------------------------------
// Cone data
// ---------------------------------------------------------------------------

/// Conformal factor of a cone sampled on a grid. The origin node of a
/// beta < 0 cone holds +inf; everything else is finite.
struct ConeSample {
    RadialGrid grid;
    std::vector<double> u;
};

/// A cone metric u0 = w + beta ln r in split form: w is the bounded finite
/// part, beta in (-1, 0] the cone exponent.
class ConeData {
public:
    using CurvatureFn = std::function<double(double)>;

    ConeData(double beta, RadialGrid grid, std::vector<double> w, CurvatureFn curvature = {},
             std::string label = "custom")
        : beta_(beta), grid_(grid), w_(std::move(w)), curvature_(std::move(curvature)),
          label_(std::move(label)) {
        require_cone_exponent(beta_);
        if (w_.size() != grid_.size()) throw ParameterError("cone finite part does not match grid size");
        for (double x : w_)
            if (!std::isfinite(x)) throw DomainError("cone finite part must be finite at every node");
    }

    /// Euclidean cone scaled by e^{2 offset}: w = ln(2(beta+1)) + offset.
    static ConeData flat(double beta, const RadialGrid& grid, double offset = 0.0) {
        require_cone_exponent(beta);
        std::vector<double> w(grid.size(), std::log(2.0 * (beta + 1.0)) + offset);
        return ConeData(beta, grid, std::move(w), [](double) { return 0.0; }, "flat");
    }

    /// Hyperbolic cone scaled by e^{2 offset}; needs r_max < 1. Curvature -e^{-2 offset}.
    static ConeData hyperbolic(double beta, const RadialGrid& grid, double offset = 0.0) {
        require_cone_exponent(beta);
        if (!(grid.r_max() < 1.0)) throw DomainError("hyperbolic cone requires a grid with r_max < 1");
        std::vector<double> w(grid.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = std::log(2.0 * (beta + 1.0)) + offset - std::log1p(-std::pow(grid.node(i), 2.0 * (beta + 1.0)));
        const double k = -std::exp(-2.0 * offset);
        return ConeData(beta, grid, std::move(w), [k](double) { return k; }, "hyperbolic");
    }

    double beta() const noexcept { return beta_; }
    const RadialGrid& grid() const noexcept { return grid_; }
    std::span<const double> finite_part() const noexcept { return w_; }
    double angle() const { return cone_angle(beta_); }
    const std::string& label() const noexcept { return label_; }

    /// Closed-form curvature of g0, when known.
    bool has_analytic_curvature() const noexcept { return static_cast<bool>(curvature_); }
    double analytic_curvature(double r) const { return curvature_ ? curvature_(r) : std::nan(""); }

    double sup_finite_part() const { return *std::max_element(w_.begin(), w_.end()); }

    /// u0 at node i; +inf at the origin when beta < 0.
    double value(std::size_t i) const {
        const double r = grid_.node(i);
        if (r == 0.0) return beta_ < 0.0 ? kInf : w_[i];
        return w_[i] + beta_ * std::log(r);
    }

private:
    double beta_;
    RadialGrid grid_;
    std::vector<double> w_;
    CurvatureFn curvature_;
    std::string label_;
};

/// u0(r_i) = w(r_i) + beta ln r_i nodewise.
inline ConeSample sample_cone(const ConeData& cone) {
    ConeSample s{cone.grid(), std::vector<double>(cone.grid().size())};
    for (std::size_t i = 0; i < s.u.size(); ++i) s.u[i] = cone.value(i);
    return s;
}

}  // namespace cone_ricci
