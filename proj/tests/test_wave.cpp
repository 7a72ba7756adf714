#include <gtest/gtest.h>

#include <cmath>

#include "invwave/wave.hpp"

using namespace invwave;

namespace {

const ModelParams kP{0.2, 1.0, 0.0, 0.08};

// Every other node of a profile on 2n cells, as a profile on n cells.
WaveProfile subsample(const WaveProfile& w) {
    WaveProfile s;
    s.grid = Grid{w.grid.L, w.grid.n / 2};
    s.c = w.c;
    for (int i = 0; i <= w.grid.n; i += 2) {
        s.u.push_back(w.u[i]);
        s.v.push_back(w.v[i]);
    }
    return s;
}

}  // namespace

TEST(SolveWave, ConvergesAtSpeedTwo) {
    const WaveSolution s = solve_wave(kP, 2.0, Grid::make(60, 2400));
    const IterationTrace& t = s.trace;
    EXPECT_TRUE(t.converged);
    EXPECT_LE(t.steps, 200);
    EXPECT_LE(t.sup_change.back(), 1e-10);
    for (double m : t.order_margin) EXPECT_GE(m, -1e-12);
    for (double m : t.bracket_margin) EXPECT_GE(m, -1e-10);
    const WaveProfile& w = s.profile;
    EXPECT_LE(w.residual_u, 1e-4);
    EXPECT_LE(w.residual_v, 1e-4);
    for (int i = 0; i < w.grid.n; ++i) {
        ASSERT_GE(w.u[i + 1], w.u[i]);
        ASSERT_GE(w.v[i + 1], w.v[i]);
        ASSERT_GE(w.u[i], 0.0);
        ASSERT_LT(w.v[i], 1.0 / kP.K);
    }
    EXPECT_LE(sup_diff(w.v, v_from_u(w.grid, w.u, w.c, kP, s.bracket.left_rate).v), 1e-10);
    EXPECT_NEAR(w.u.back(), 1.0, 1e-3);
    EXPECT_LE(w.u.front(), 1e-6);
}

TEST(SolveWave, ResidualsAreRecomputedFromArrays) {
    const WaveSolution s = solve_wave(kP, 2.0, Grid::make(60, 2400));
    const auto [ru, rv] = wave_residuals(s.profile.grid, s.profile.u, s.profile.v, 2.0, kP);
    EXPECT_EQ(ru, s.profile.residual_u);
    EXPECT_EQ(rv, s.profile.residual_v);
}

TEST(SolveWave, CriticalSpeed) {
    const double cs = min_speed(kP);
    const WaveSolution s = solve_wave(kP, cs, Grid::make(100, 4000));
    EXPECT_TRUE(s.trace.converged);
    EXPECT_LE(s.profile.residual_u, 1e-4);
}

TEST(SolveWave, SubcriticalRefused) {
    EXPECT_THROW(solve_wave(kP, 1.0, Grid::make(60, 2400)), PreconditionError);
}

TEST(SolveWave, GateFailureRefusedUnlessGateFree) {
    const ModelParams p = ModelParams::make(0.5, 4.0);
    EXPECT_THROW(solve_wave(p, 2.0, Grid::make(60, 2400)), PreconditionError);
    IterationConfig cfg;
    cfg.enforce_gates = false;
    EXPECT_TRUE(solve_wave(p, 2.0, Grid::make(60, 2400), cfg).trace.converged);
}

TEST(SolveWave, NuMustVanish) {
    ModelParams p = kP;
    p.nu = 0.5;
    EXPECT_THROW(solve_wave(p, 2.0, Grid::make(60, 2400)), PreconditionError);
}

TEST(SolveWave, FromAboveIsNonincreasing) {
    IterationConfig cfg;
    cfg.seed = Seed::upper;
    const WaveSolution s = solve_wave(kP, 2.0, Grid::make(60, 2400), cfg);
    EXPECT_TRUE(s.trace.converged);
    for (double m : s.trace.order_margin) EXPECT_GE(m, -1e-12);
}

TEST(SolveWave, NonConvergenceCarriesTrace) {
    IterationConfig cfg;
    cfg.max_iter = 2;
    cfg.accelerate = false;
    try {
        solve_wave(kP, 2.0, Grid::make(60, 2400), cfg);
        FAIL() << "expected non-convergence";
    } catch (const NonConvergenceError& e) {
        EXPECT_EQ(e.trace().steps, 2);
        EXPECT_FALSE(e.trace().converged);
        EXPECT_GT(e.last_residual(), 1e-10);
    }
}

TEST(SolveWave, CoarseGridIsFlagged) {
    const WaveSolution s = solve_wave(kP, 2.0, Grid::make(60, 40));
    EXPECT_TRUE(s.trace.converged);
    EXPECT_TRUE(s.profile.coarse);
    EXPECT_GT(s.profile.residual_u, 1e-4);
}

TEST(SolveWave, SecondOrderResiduals) {
    const WaveSolution a = solve_wave(kP, 2.0, Grid::make(60, 2400));
    const WaveSolution b = solve_wave(kP, 2.0, Grid::make(60, 4800));
    const double ratio = a.profile.residual_u / b.profile.residual_u;
    EXPECT_GE(ratio, 3.0);
    EXPECT_LE(ratio, 5.0);
}

TEST(IterateOnce, FixedPointIsStationary) {
    const WaveSolution s = solve_wave(kP, 2.0, Grid::make(60, 2400));
    const WaveProfile next = iterate_once(s.profile, s.bracket, kP);
    EXPECT_LE(sup_diff(next.u, s.profile.u), 1e-12);
}

TEST(IterateOnce, OrderPreservingFromSeeds) {
    const WaveBracket b = make_bracket(kP, 2.0, Grid::make(60, 2400), {});
    WaveProfile lo, up;
    lo.grid = up.grid = b.grid;
    lo.c = up.c = 2.0;
    lo.u = b.u_lower;
    lo.v = b.v_lower;
    up.u = b.u_upper;
    up.v = b.v_upper;
    const WaveProfile nl = iterate_once(lo, b, kP);
    const WaveProfile nu = iterate_once(up, b, kP);
    for (int i = 0; i <= b.grid.n; ++i) {
        ASSERT_GE(nl.u[i] - lo.u[i], -1e-12);
        ASSERT_LE(nu.u[i] - up.u[i], 1e-12);
    }
}

TEST(Bilateral, GapBelowMicro) {
    const BilateralResult r = bilateral_solve(kP, 2.0, Grid::make(60, 2400));
    EXPECT_LE(r.gap, 1e-6);
    EXPECT_LE(r.gap, 10.0 * IterationConfig{}.tol);
}

TEST(Bilateral, IdenticalSeedsGiveZeroGap) {
    const WaveSolution a = solve_wave(kP, 2.0, Grid::make(60, 2400));
    const WaveSolution b = solve_wave(kP, 2.0, Grid::make(60, 2400));
    const AlignmentReport al = translation_align(a.profile, b.profile);
    EXPECT_EQ(al.sup_gap, 0.0);
    EXPECT_EQ(al.theta, 0.0);
}

TEST(Bilateral, GridRefinementGapShrinksFourfold) {
    const WaveSolution a = solve_wave(kP, 2.0, Grid::make(60, 1200));
    const WaveSolution b = solve_wave(kP, 2.0, Grid::make(60, 2400));
    const WaveSolution c = solve_wave(kP, 2.0, Grid::make(60, 4800));
    const double g1 = translation_align(a.profile, subsample(b.profile)).gap_u;
    const double g2 = translation_align(b.profile, subsample(c.profile)).gap_u;
    const double ratio = g1 / g2;
    EXPECT_GE(ratio, 3.0) << g1 << " " << g2;
    EXPECT_LE(ratio, 5.0) << g1 << " " << g2;
}

TEST(DerivativeCheck, StrictPositivity) {
    const WaveSolution s = solve_wave(kP, 2.0, Grid::make(60, 2400));
    const DerivativeProfile d = derivative_check(s.profile, kP);
    EXPECT_FALSE(d.degenerate);
    EXPECT_GT(d.min_w1, 0.0);
    EXPECT_GT(d.min_w2, 0.0);
    const double h = s.profile.grid.h();
    EXPECT_LE(d.v_identity_gap, 10.0 * h * h);
    EXPECT_LE(d.system_residual_1, 10.0 * h);
    EXPECT_LE(d.system_residual_2, 10.0 * h);
}

TEST(DerivativeCheck, ConstantProfileIsDegenerate) {
    WaveProfile w;
    w.grid = Grid::make(10, 100);
    w.c = 2.0;
    w.u.assign(101, 0.0);
    w.v.assign(101, 0.0);
    const DerivativeProfile d = derivative_check(w, kP);
    EXPECT_TRUE(d.degenerate);
    EXPECT_TRUE(d.pass());
}
