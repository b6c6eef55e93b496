#include <gtest/gtest.h>

#include <cmath>

#include <cone_ricci/truncation.hpp>

using namespace cone_ricci;

TEST(Psi, BranchesAndValues) {
    EXPECT_EQ(psi(-2.0), -2.0);
    EXPECT_EQ(psi(2.0), 0.0);
    EXPECT_NEAR(psi(0.0), -0.5 + 1.0 / kPi, 1e-15);
    EXPECT_NEAR(psi(0.0), -0.181690, 1e-6);
}

TEST(Psi, MatchesQuadratureOfDerivative) {
    // psi(s) = -1 + \int_{-1}^{s} psi'(x) dx, Simpson on a fine grid.
    const int m = 2000;
    const double a = -1.0, b = 0.0, h = (b - a) / m;
    double sum = psi_d1(a) + psi_d1(b);
    for (int i = 1; i < m; ++i) sum += (i % 2 ? 4.0 : 2.0) * psi_d1(a + i * h);
    EXPECT_NEAR(-1.0 + sum * h / 3.0, psi(0.0), 1e-12);
}

TEST(Psi, MonotoneConcaveAndC2) {
    for (int i = 0; i <= 4000; ++i) {
        const double s = -2.0 + 4.0 * i / 4000.0;
        EXPECT_GE(psi_d1(s), 0.0);
        EXPECT_LE(psi_d1(s), 1.0);
        EXPECT_LE(psi_d2(s), 0.0);
    }
    for (double s : {-1.0, 1.0}) {
        const double e = 1e-9;
        EXPECT_NEAR(psi(s - e), psi(s + e), 1e-8);
        EXPECT_NEAR(psi_d1(s - e), psi_d1(s + e), 1e-8);
        EXPECT_NEAR(psi_d2(s - e), psi_d2(s + e), 1e-8);
    }
}

TEST(SmoothedMin, Zones) {
    const double k = 4.0;
    EXPECT_EQ(smoothed_min(k - 1.5, k), k - 1.5);
    EXPECT_EQ(smoothed_min(k + 3.0, k), k);
    EXPECT_NEAR(smoothed_min(k, k), k - 0.181690, 1e-6);
    EXPECT_EQ(smoothed_min(kInf, k), k);
}

TEST(Truncate, SandwichAndExactness) {
    for (double beta : {-0.25, -0.5, -0.75}) {
        const ConeData cone = ConeData::flat(beta, RadialGrid::disc(512));
        const ConeSample u0 = sample_cone(cone);
        for (double k : {1.0, 2.5, 4.0}) {
            const Profile uk = truncate(u0, k);
            for (std::size_t i = 0; i < uk.size(); ++i) {
                const double m = std::min(u0.u[i], k);
                EXPECT_LE(uk[i], m);
                EXPECT_GE(uk[i], m - 1.0);
                if (u0.u[i] <= k - 1.0) {
                    EXPECT_EQ(uk[i], u0.u[i]);
                }
                if (u0.u[i] >= k + 1.0) {
                    EXPECT_EQ(uk[i], k);
                }
            }
        }
    }
}

TEST(Truncate, MonotoneInLevel) {
    const ConeData cone = ConeData::hyperbolic(-0.5, RadialGrid::disc(512, 0.9));
    Profile prev = truncate(cone, 0.5);
    for (double k = 0.75; k <= 8.0; k += 0.25) {
        const Profile next = truncate(cone, k);
        for (std::size_t i = 0; i < next.size(); ++i) EXPECT_LE(prev[i], next[i]);
        prev = next;
    }
}

TEST(CurvatureBound, FlatConeNonnegative) {
    for (double beta : {-0.25, -0.5, -0.75})
        for (double k : {2.0, 4.0, 6.0}) {
            const auto rep = curvature_bound_check(ConeData::flat(beta, RadialGrid::disc(2048)), k);
            EXPECT_TRUE(rep.pass) << beta << " " << k << " margin " << rep.min_margin;
        }
}

TEST(CurvatureBound, HyperbolicConeAboveEsquaredFloor) {
    const auto cone = ConeData::hyperbolic(-0.5, RadialGrid::disc(2048, 0.9));
    for (double k : {1.0, 3.0, 5.0}) {
        const auto rep = curvature_bound_check(cone, k);
        EXPECT_TRUE(rep.pass) << k;
        ASSERT_TRUE(rep.analytic_min_margin.has_value());
    }
}

TEST(CurvatureBound, CapRegionIsFlat) {
    const auto cone = ConeData::flat(-0.5, RadialGrid::disc(4096));
    const double k = 2.0;
    const Profile uk = truncate(cone, k);
    const auto K = gauss_curvature(uk);
    const ConeSample u0 = sample_cone(cone);
    for (std::size_t j = 0; j < K.K.size(); ++j) {
        const std::size_t i = K.first + j;
        const bool inside = u0.u[i] >= k + 1 && u0.u[i + 1] >= k + 1 && (i == 0 || u0.u[i - 1] >= k + 1);
        if (inside) {
            EXPECT_EQ(K.K[j], 0.0);
        }
    }
}

TEST(CurvatureBound, CustomConeHasNoClosedForm) {
    const RadialGrid g = RadialGrid::disc(256, 0.9);
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 5.0 * std::sin(20.0 * g.node(i));
    const ConeData wiggly(-0.5, g, w);
    EXPECT_FALSE(curvature_bound_check(wiggly, 1.0, 0.0).analytic_min_margin.has_value());
}

TEST(BuildSequence, LevelsAndSupport) {
    const RadialGrid g = RadialGrid::disc(4096);
    const ConeData cone(-0.5, g, std::vector<double>(g.size(), 0.0));
    EXPECT_NEAR(cap_level_for_radius_index(cone, 4), 0.5 * std::log(4.0) + 1.0, 1e-14);
    const TruncationSequence seq = build_sequence(cone, 6);
    ASSERT_EQ(seq.profiles.size(), 6u);
    const ConeSample u0 = sample_cone(cone);
    double prev_inf = -kInf;
    for (std::size_t j = 0; j < seq.levels.size(); ++j) {
        const double bound = 1.0 / static_cast<double>(j + 1);
        EXPECT_LE(seq.support_radii[j], bound);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.node(i) > bound) {
                EXPECT_EQ(seq.profiles[j][i], u0.u[i]);
            }
            if (j + 1 < seq.levels.size()) {
                EXPECT_LE(seq.profiles[j][i], seq.profiles[j + 1][i]);
            }
        }
        const double inf = inf_over_disc(seq.profiles[j], bound);
        EXPECT_GT(inf, prev_inf);
        prev_inf = inf;
        if (j > 0) {
            EXPECT_LT(seq.support_radii[j], seq.support_radii[j - 1]);
        }
    }
    EXPECT_FALSE(seq.degenerate);
}

TEST(BuildSequence, SmoothPointIsDegenerate) {
    const TruncationSequence seq = build_sequence(ConeData::flat(0.0, RadialGrid::disc(128)), 3);
    EXPECT_TRUE(seq.degenerate);
    for (std::size_t j = 1; j < seq.levels.size(); ++j) EXPECT_GT(seq.levels[j], seq.levels[j - 1]);
}

TEST(BuildSequence, RejectsBadInput) {
    const ConeData cone = ConeData::flat(-0.5, RadialGrid::disc(64));
    EXPECT_THROW(build_sequence(cone, 1), ParameterError);
    EXPECT_THROW(build_sequence_from_levels(cone, {3.0, 2.0}), ParameterError);
    EXPECT_THROW(truncate(cone, kInf), ParameterError);
}
