#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "error.hpp"

namespace cone_ricci {

/// Uniform discretization of the radial coordinate r = |z| on [r_min, r_max].
///
/// r_min = 0 gives a disc chart whose first node is the origin; r_min > 0
/// gives an annulus. Nodes are computed on demand (r_min + i*h, with the last
/// node pinned to r_max) so grids are cheap to copy and compare.
class RadialGrid {
public:
    static constexpr std::size_t kMinNodes = 16;

    RadialGrid(double r_min, double r_max, std::size_t n) : r_min_(r_min), r_max_(r_max), n_(n) {
        if (!std::isfinite(r_min) || !std::isfinite(r_max) || r_min < 0.0 || !(r_max > r_min)) {
            std::ostringstream os;
            os << "grid requires 0 <= r_min < r_max, got [" << r_min << ", " << r_max << "]";
            throw ParameterError(os.str());
        }
        if (n < kMinNodes) {
            std::ostringstream os;
            os << "grid requires n >= " << kMinNodes << ", got " << n;
            throw ParameterError(os.str());
        }
        h_ = (r_max - r_min) / static_cast<double>(n - 1);
    }

    /// Disc [0, r_max] with n nodes.
    static RadialGrid disc(std::size_t n, double r_max = 1.0) { return RadialGrid(0.0, r_max, n); }

    double r_min() const noexcept { return r_min_; }
    double r_max() const noexcept { return r_max_; }
    std::size_t size() const noexcept { return n_; }
    double spacing() const noexcept { return h_; }
    bool contains_origin() const noexcept { return r_min_ == 0.0; }

    double node(std::size_t i) const noexcept {
        return i + 1 == n_ ? r_max_ : r_min_ + static_cast<double>(i) * h_;
    }
    double operator[](std::size_t i) const noexcept { return node(i); }

    std::vector<double> nodes() const {
        std::vector<double> r(n_);
        for (std::size_t i = 0; i < n_; ++i) r[i] = node(i);
        return r;
    }

    /// First and one-past-last index of nodes where the curvature stencil is
    /// defined: the origin (symmetric stencil) is included on a disc, the
    /// outer node and the inner node of an annulus are not.
    std::size_t interior_begin() const noexcept { return contains_origin() ? 0 : 1; }
    std::size_t interior_end() const noexcept { return n_ - 1; }

    /// Index i with node(i) <= r < node(i+1); r must lie in [r_min, r_max].
    std::size_t locate(double r) const {
        if (!(r >= r_min_ && r <= r_max_)) {
            std::ostringstream os;
            os << "radius " << r << " outside grid [" << r_min_ << ", " << r_max_ << "]";
            throw DomainError(os.str());
        }
        auto i = static_cast<std::size_t>((r - r_min_) / h_);
        if (i >= n_ - 1) i = n_ - 2;
        return i;
    }

    friend bool operator==(const RadialGrid& a, const RadialGrid& b) noexcept {
        return a.r_min_ == b.r_min_ && a.r_max_ == b.r_max_ && a.n_ == b.n_;
    }

private:
    double r_min_;
    double r_max_;
    std::size_t n_;
    double h_ = 0.0;
};

}  // namespace cone_ricci
