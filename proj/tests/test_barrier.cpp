#include <gtest/gtest.h>

#include <cmath>

#include <cone_ricci/barrier.hpp>
#include <cone_ricci/truncation.hpp>

using namespace cone_ricci;

namespace {

// e^{-2S} (S'' + S'/r) from central differences, Richardson-combined over d and d/2.
double fd_curvature_term(double r, double lam, double beta, double C, double d) {
    auto S = [&](double x) { return blunt_cap(x, lam, beta, C); };
    auto lap = [&](double e) {
        const double s0 = S(r), sp = S(r + e), sm = S(r - e);
        return (sp - 2.0 * s0 + sm) / (e * e) + (sp - sm) / (2.0 * e * r);
    };
    const double rich = (4.0 * lap(0.5 * d) - lap(d)) / 3.0;
    return std::exp(-2.0 * S(r)) * rich;
}

}  // namespace

TEST(LambdaBar, Examples) {
    for (double t : {1e-4, 3e-3, 0.5}) EXPECT_NEAR(lambda_bar(t, -0.5, 0.0), t, 1e-15 * std::max(1.0, t));
    EXPECT_NEAR(lambda_bar(0.01, -0.5, 1.0), 0.01 * std::exp(-2.0), 1e-17);
    EXPECT_NEAR(lambda_bar(0.01, -0.5, 1.0), 1.3534e-3, 1e-7);
    for (double beta : {-0.25, -0.5, -0.75})
        for (double t = 1e-5; t < 1e-2; t *= 1.7) EXPECT_GT(lambda_bar(2.0 * t, beta, 1.0), lambda_bar(t, beta, 1.0));
}

TEST(LambdaBar, PowerIsLinearInTime) {
    const double beta = -0.25, C = 0.5;
    const double slope = -std::exp(-2.0 * C) / (4.0 * beta * (beta + 1.0));
    for (double t : {1e-4, 1e-3, 1e-2})
        EXPECT_NEAR(std::pow(lambda_bar(t, beta, C), 2.0 * (beta + 1.0)), slope * t, 1e-14 * slope * t);
}

TEST(LambdaBar, Errors) {
    EXPECT_THROW(lambda_bar(0.0, -0.5, 0.0), DomainError);
    EXPECT_THROW(lambda_bar(-1.0, -0.5, 0.0), DomainError);
    EXPECT_THROW(lambda_bar(2.0, -0.5, 0.0), DomainError);
    try {
        lambda_bar(2.0, -0.5, 0.0);
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("barrier window exceeded"), std::string::npos);
    }
    EXPECT_THROW(lambda_bar(0.1, 0.0, 0.0), ParameterError);
    EXPECT_THROW(make_barrier_spec(0.0, 1.0, 1e-4, 1e-2), ParameterError);
}

TEST(BluntCone, BranchesMeetAtCapRadius) {
    const BarrierSpec spec = make_barrier_spec(-0.5, 1.0, 1e-4, 1e-2);
    for (double t : {1e-4, 1e-3, 1e-2}) {
        const double lam = lambda_bar(t, spec.beta, spec.C);
        const double v = eval_hyperbolic_cone(spec.beta, lam) + spec.C;
        EXPECT_NEAR(blunt_cone(lam, t, spec), v, 1e-14);
        for (double eps : {1e-4, 1e-6, 1e-8}) {
            const double jump = std::abs(blunt_cone(lam * (1 - eps), t, spec) - blunt_cone(lam * (1 + eps), t, spec));
            EXPECT_LE(jump, 10.0 * eps * std::abs(spec.beta)) << t << " " << eps;
        }
        EXPECT_NEAR(blunt_cone(0.0, t, spec), std::log(2.0) + v, 1e-14);
        EXPECT_GE(blunt_cone(0.0, t, spec), blunt_cone(0.5 * lam, t, spec));
    }
    EXPECT_THROW(blunt_cone(1.0, 1e-3, spec), DomainError);
}

TEST(BluntCone, ApexValueSample) {
    BarrierSpec spec;
    spec.beta = -0.5;
    spec.C = 0.0;
    const double expected = std::log(2.0) + eval_hyperbolic_cone(-0.5, 0.01);
    EXPECT_NEAR(blunt_cone(0.0, 0.01, spec), expected, 1e-14);
    // ln 2 - (1/2) ln 0.01 - ln(1 - 0.01)
    EXPECT_NEAR(blunt_cone(0.0, 0.01, spec), 3.005782, 1e-6);
}

TEST(BarrierPde, PassesForLargeOffset) {
    const BarrierSpec spec = make_barrier_spec(-0.5, 2.0, 1e-4, 1e-2);
    const BarrierPdeReport rep = check_barrier_pde(spec, 1e-4, 1e-2);
    EXPECT_TRUE(rep.pass);
    EXPECT_GT(rep.min_margin, 0.0);
    EXPECT_TRUE(rep.lower_bound_holds);
    EXPECT_EQ(rep.samples, 64u * 64u);
}

TEST(BarrierPde, CalibrationForAllExponents) {
    for (double beta : {-0.25, -0.5, -0.75}) {
        const BarrierSpec spec = calibrate_barrier(beta, 0.0, 1e-4, 1e-2);
        EXPECT_TRUE(spec.verified);
        const BarrierPdeReport rep = check_barrier_pde(spec, 1e-4, 1e-2, 128);
        EXPECT_TRUE(rep.pass) << beta;
        EXPECT_GT(rep.min_margin, 0.0);
        EXPECT_GE(rep.min_relative_margin, 0.1 - 1e-3);
        EXPECT_TRUE(rep.lower_bound_holds);
    }
}

TEST(BarrierPde, CurvatureTermMatchesFiniteDifferences) {
    for (double beta : {-0.25, -0.5, -0.75}) {
        const double C = 1.0;
        for (double t : {1e-4, 1e-3, 1e-2}) {
            const double lam = lambda_bar(t, beta, C);
            const double exact = barrier_curvature_term(lam, beta, C);
            for (double frac : {0.2, 0.5, 0.9}) {
                const double r = frac * lam;
                const double fd = fd_curvature_term(r, lam, beta, C, 1e-2 * r);
                EXPECT_NEAR(fd, exact, 1e-6 * std::abs(exact)) << beta << " " << t << " " << frac;
            }
        }
    }
}

TEST(BarrierPde, TimeDerivativeMatchesFiniteDifferences) {
    const double beta = -0.75, C = 0.7;
    for (double t : {2e-4, 2e-3}) {
        const double r = 0.3 * lambda_bar(t, beta, C);
        const double dt = 1e-4 * t;
        const double fd = (blunt_cap(r, lambda_bar(t + dt, beta, C), beta, C) -
                           blunt_cap(r, lambda_bar(t - dt, beta, C), beta, C)) /
                          (2.0 * dt);
        EXPECT_NEAR(barrier_time_derivative(r, t, beta, C), fd, 1e-6 * std::abs(fd));
    }
}

TEST(SupBound, SlopeAndMajorant) {
    const BarrierSpec spec = make_barrier_spec(-0.5, 1.0, 1e-4, 1e-2);
    EXPECT_DOUBLE_EQ(spec.slope(), -0.5);
    BarrierSpec near_smooth = spec;
    near_smooth.beta = -1e-9;
    EXPECT_NEAR(near_smooth.slope(), 0.0, 1e-8);
    // Off the calibration samples the cap value stays under the majorant.
    for (double t = 1.1e-4; t < 1e-2; t *= 1.3) {
        const SupBound b = sup_bound(t, spec);
        EXPECT_LE(b.cap_value, b.majorant + 1e-9) << t;
        EXPECT_NEAR(b.majorant, spec.B - 0.5 * std::log(t), 1e-14);
    }
    EXPECT_THROW(sup_bound(0.0, spec), DomainError);
}

TEST(FlowUnderBarrier, TruncatedFlatConeStaysBelow) {
    const double beta = -0.5, A = 0.0, t_lo = 1e-4, t_hi = 1e-2;
    const ConeData cone = ConeData::flat(beta, RadialGrid::disc(2049));
    const BarrierSpec spec = match_barrier(beta, A, t_lo, t_hi);
    EXPECT_TRUE(spec.verified);
    SolverParams p;
    p.scheme = Scheme::semi_implicit;
    p.max_du = 0.01;
    p.t_end = t_hi;
    p.store_every = 1e-3;
    p.store_times = {1e-4, 3e-4};
    const FlowResult f = evolve(truncate(cone, 4.0), p);
    ASSERT_TRUE(f.completed());
    const BarrierFlowReport rep = verify_flow_under_barrier(f, spec, A);
    EXPECT_TRUE(rep.pass) << rep.worst_violation << " " << rep.sup_bound_excess;
    EXPECT_EQ(rep.checked_times, f.size() - 1);
    EXPECT_LE(rep.sup_bound_excess, rep.tolerance);

    // The same run lifted by 3 satisfies the initial bound with A = 3 but
    // starts above a barrier built for A = 0.
    FlowResult lifted = f;
    for (Profile& q : lifted.profiles) q = q.shifted(3.0);
    EXPECT_FALSE(verify_flow_under_barrier(lifted, spec, 3.0).pass);
    EXPECT_THROW(verify_flow_under_barrier(lifted, spec, A), ParameterError);
}
