#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "invwave/pde.hpp"

using namespace invwave;

namespace {

SimConfig small_config() {
    SimConfig cfg;
    cfg.x_max = 100.0;
    cfg.t_end = 20.0;
    return cfg;
}

}  // namespace

TEST(Step, ZeroStateUnchanged) {
    const ModelParams p = ModelParams::make(0.2, 1.0);
    const SimConfig cfg = small_config();
    SimState s;
    s.u.assign(cfg.nodes(), 0.0);
    s.v.assign(cfg.nodes(), 0.3);
    const SimState t = step(s, cfg, p);
    for (int i = 0; i < cfg.nodes(); ++i) {
        ASSERT_EQ(t.u[i], 0.0);
        ASSERT_EQ(t.v[i], 0.3);
    }
    EXPECT_DOUBLE_EQ(t.t, cfg.dt);
}

TEST(Step, EquilibriumUnchanged) {
    const ModelParams p = ModelParams::make(0.2, 2.0);
    const SimConfig cfg = small_config();
    SimState s;
    s.u.assign(cfg.nodes(), 1.0);
    s.v.assign(cfg.nodes(), 0.5);
    const SimState t = step(s, cfg, p);
    for (int i = 0; i < cfg.nodes(); ++i) {
        ASSERT_NEAR(t.u[i], 1.0, 1e-14);
        ASSERT_NEAR(t.v[i], 0.5, 1e-15);
    }
}

TEST(Step, MassGrowsFromStep) {
    const ModelParams p = ModelParams::make(0.2, 1.0);
    const SimConfig cfg = small_config();
    const SimState s = initial_state(cfg);
    const SimState t = step(s, cfg, p);
    const double m0 = std::accumulate(s.u.begin(), s.u.end(), 0.0);
    const double m1 = std::accumulate(t.u.begin(), t.u.end(), 0.0);
    EXPECT_GT(m1, m0);
}

TEST(Step, ReactionCflGate) {
    const ModelParams p = ModelParams::make(0.2, 1.0);
    SimConfig cfg = small_config();
    cfg.dt = 1.0;
    EXPECT_THROW(step(initial_state(cfg), cfg, p), StabilityError);
    EXPECT_THROW(run(cfg, p), StabilityError);
}

TEST(Step, RangeViolationIsAnError) {
    const ModelParams p = ModelParams::make(0.2, 1.0);
    const SimConfig cfg = small_config();
    SimState s = initial_state(cfg);
    s.u[3] = 1.5;  // outside the invariant region
    EXPECT_THROW(step(s, cfg, p), StabilityError);
}

TEST(Run, InvariantRegionAndMonotoneFront) {
    const ModelParams p = ModelParams::make(0.19, 1.0);
    SimConfig cfg;
    cfg.x_max = 200.0;
    cfg.t_end = 40.0;
    cfg.snapshot_every = 10.0;
    const SimResult r = run(cfg, p);
    for (const SimState& s : r.snapshots) {
        for (int i = 0; i < cfg.nodes(); ++i) {
            ASSERT_GE(s.u[i], 0.0);
            ASSERT_LE(s.u[i], 1.0 + 1e-8);
            ASSERT_GE(s.v[i], 0.0);
            ASSERT_LE(s.v[i], 1.0 / p.K);
        }
    }
    // Behind the front the profile rises toward 1 away from the front.
    const SimState& last = r.final_state;
    const double xf = *front_position(last, cfg.dx, 0.5);
    for (int i = 0; (i + 1) * cfg.dx < xf; ++i) ASSERT_GE(last.u[i] - last.u[i + 1], -1e-3) << i;
    // Positions are nondecreasing after the transient.
    for (std::size_t k = 1; k < r.trace.times.size(); ++k) {
        if (r.trace.times[k] > 5.0) {
            ASSERT_GE(r.trace.positions[k], r.trace.positions[k - 1]);
        }
    }
}

TEST(Run, ZeroInitialDataHasNoFront) {
    const ModelParams p = ModelParams::make(0.2, 1.0);
    SimConfig cfg = small_config();
    cfg.ic = InitialCondition::zero;
    const SimResult r = run(cfg, p);
    EXPECT_TRUE(r.trace.empty_front);
    EXPECT_TRUE(r.trace.times.empty());
    EXPECT_TRUE(std::isnan(r.trace.c_emp));
}

TEST(Run, LambdaMustBeBelowOne) {
    EXPECT_THROW(run(small_config(), ModelParams::make(1.0, 1.0)), ParameterError);
}

TEST(Run, SpeedSelection) {
    for (double lam : {0.19, 0.75}) {
        const ModelParams p = ModelParams::make(lam, 1.0);
        const SimResult r = run(SimConfig{}, p);
        const double cs = min_speed(p);
        EXPECT_LE(std::abs(r.trace.c_emp - cs) / cs, 0.05) << lam;
        EXPECT_GE(r.trace.c_emp - cs, -0.05 * cs);
        EXPECT_LE(r.trace.c_emp - cs, 0.10 * cs);
        EXPECT_GT(r.trace.c_emp, 0.0);
        EXPECT_NEAR(r.trace.fit_t1, 150.0, 1e-9);
    }
}

TEST(FrontPosition, Step) {
    Vec u(201, 0.0);
    for (int i = 0; i <= 100; ++i) u[i] = 1.0;
    const auto x = front_position(u, 0.1, 0.5);
    ASSERT_TRUE(x.has_value());
    EXPECT_NEAR(*x, 10.0, 0.1);
}

TEST(FrontPosition, Logistic) {
    Vec u(401);
    for (int i = 0; i <= 400; ++i) u[i] = 1.0 / (1.0 + std::exp(i * 0.1 - 20.0));
    EXPECT_NEAR(*front_position(u, 0.1, 0.5), 20.0, 0.05);
}

TEST(FrontPosition, AbsentBelowLevel) {
    EXPECT_FALSE(front_position(Vec(50, 0.2), 0.1, 0.5).has_value());
}

TEST(FrontPosition, RightmostCrossing) {
    Vec u(100, 0.0);
    for (int i = 10; i < 20; ++i) u[i] = 1.0;
    for (int i = 60; i < 70; ++i) u[i] = 1.0;
    EXPECT_NEAR(*front_position(u, 1.0, 0.5), 69.5, 1e-12);
}

TEST(EstimateSpeed, ExactLine) {
    FrontTrace tr;
    for (int k = 0; k < 100; ++k) {
        tr.times.push_back(k * 0.5);
        tr.positions.push_back(3.0 + 1.8 * k * 0.5);
    }
    estimate_speed(tr);
    EXPECT_NEAR(tr.c_emp, 1.8, 1e-12);
    EXPECT_NEAR(tr.fit_residual, 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(tr.fit_t0, 25.0);
}

TEST(EstimateSpeed, BoundedNoise) {
    const double dx = 0.1;
    FrontTrace tr;
    for (int k = 0; k < 300; ++k) {
        const double t = k * 0.5;
        tr.times.push_back(t);
        tr.positions.push_back(1.8 * t + ((k * 7919) % 3 - 1) * dx / 2);
    }
    estimate_speed(tr, 0.5);
    EXPECT_LE(std::abs(tr.c_emp - 1.8), dx / (tr.fit_t1 - tr.fit_t0));
}

TEST(EstimateSpeed, ConstantAndTooFew) {
    FrontTrace tr;
    for (int k = 0; k < 40; ++k) {
        tr.times.push_back(k);
        tr.positions.push_back(7.0);
    }
    estimate_speed(tr);
    EXPECT_NEAR(tr.c_emp, 0.0, 1e-14);
    FrontTrace few;
    for (int k = 0; k < 15; ++k) {
        few.times.push_back(k);
        few.positions.push_back(k);
    }
    EXPECT_THROW(estimate_speed(few, 0.5), PreconditionError);
}
