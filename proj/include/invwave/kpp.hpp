#pragma once

// Scalar logistic KPP fronts  w'' - c w' + abar w (1 - w/b) = 0,  w(-inf) = 0, w(+inf) = b.

#include <cmath>
#include <limits>
#include <string>

#include "grid.hpp"
#include "model.hpp"

namespace invwave {

struct KppProblem {
    double abar = 0.8;  // f'(0)
    double b = 1.0;     // right equilibrium
    double b1 = 0.8;    // -f'(b); equals abar for the logistic family
    double c = 2.0;

    static KppProblem logistic(double abar, double b, double c) { return {abar, b, abar, c}; }

    double critical_speed() const { return 2.0 * std::sqrt(abar); }
    bool critical() const { return std::abs(c - critical_speed()) <= 1e-12 * critical_speed(); }

    void validate() const {
        if (!(abar > 0.0)) throw PreconditionError("kpp: abar must be > 0");
        if (!(b > 0.0 && b <= 1.0)) throw PreconditionError("kpp: b must lie in (0, 1]");
        if (!(b1 > 0.0)) throw PreconditionError("kpp: b1 must be > 0");
        if (c < critical_speed() * (1.0 - 1e-12)) {
            throw PreconditionError("kpp: c = " + std::to_string(c) + " below 2 sqrt(abar) = " +
                                    std::to_string(critical_speed()));
        }
    }
};

struct KppRates {
    double mu_minus = 0.0;  // growth exponent at -inf
    double mu_plus = 0.0;   // exponent of (b - w) at +inf, negative
    bool critical = false;
    bool prefactor_linear = false;  // w ~ d xi e^{sqrt(abar) xi} at -inf when critical
};

inline KppRates kpp_rates(const KppProblem& pb) {
    pb.validate();
    KppRates r;
    r.critical = pb.critical();
    r.prefactor_linear = r.critical;
    if (r.critical) {
        r.mu_minus = std::sqrt(pb.abar);
    } else {
        r.mu_minus = (pb.c - std::sqrt(pb.c * pb.c - 4.0 * pb.abar)) / 2.0;
    }
    r.mu_plus = (pb.c - std::sqrt(pb.c * pb.c + 4.0 * pb.b1)) / 2.0;
    return r;
}

/// Effective exponential rate of the left tail beyond -L, used to close integrals and
/// extrapolations. The critical tail |xi| e^{mu xi} integrates like e^{(mu - 1/L) xi}.
inline double left_tail_rate(const KppRates& r, double L) {
    return r.critical ? r.mu_minus - 1.0 / L : r.mu_minus;
}

struct KppWave {
    KppProblem problem;
    Grid grid;
    Vec omega;
    double pin_level = 0.0;
    int pin_node = 0;
    double residual_sup = 0.0;
    int newton_steps = 0;
    bool monotone = true;  // only ever false on under-resolved grids, where it is reported instead of thrown

    const Vec& values() const { return omega; }

    /// w at arbitrary xi: linear interpolation inside the grid, tail asymptotics outside.
    double at(double x) const {
        const KppRates r = kpp_rates(problem);
        const double L = grid.L;
        if (x <= -L) {
            const double w0 = omega.front();
            if (r.critical) return w0 * (std::abs(x) / L) * std::exp(r.mu_minus * (x + L));
            return w0 * std::exp(r.mu_minus * (x + L));
        }
        if (x >= L) {
            return problem.b - (problem.b - omega.back()) * std::exp(r.mu_plus * (x - L));
        }
        const double s = (x + L) / grid.h();
        int i = static_cast<int>(std::floor(s));
        if (i >= grid.n) i = grid.n - 1;
        const double t = s - i;
        return (1.0 - t) * omega[i] + t * omega[i + 1];
    }
};

namespace detail {

inline double kpp_reaction(const KppProblem& pb, double w) { return pb.abar * w * (1.0 - w / pb.b); }

// Interior residuals plus the right Robin row  (w_n - w_{n-1})/h - mu_plus (avg - b) = 0.
inline Vec kpp_rows(const KppProblem& pb, const Grid& g, const Stencil& st, double mu_plus, const Vec& w) {
    const int n = g.n;
    const double h = g.h();
    Vec r(n + 1, 0.0);
    for (int i = 1; i < n; ++i) r[i] = st.apply(w, i) + kpp_reaction(pb, w[i]);
    r[n] = (w[n] - w[n - 1]) / h - mu_plus * (0.5 * (w[n] + w[n - 1]) - pb.b);
    return r;
}

}  // namespace detail

/// Sup over interior nodes of |D2 w - c D1 w + abar w (1 - w/b)|.
inline double kpp_residual(const KppWave& w) {
    if (w.grid.n < 4) throw PreconditionError("kpp_residual: need n >= 4");
    const Stencil st = Stencil::make(w.grid.h(), w.problem.c);
    double m = 0.0;
    for (int i = 1; i < w.grid.n; ++i) {
        m = std::max(m, std::abs(st.apply(w.omega, i) + detail::kpp_reaction(w.problem, w.omega[i])));
    }
    return m;
}

struct KppSolveOptions {
    double tol = 1e-10;
    int max_newton = 50;
    int max_halvings = 30;
};

/// Damped Newton on the truncated problem. The pin w(0) = pin_level takes the place of a
/// left boundary condition: w(-L) is an extra unknown, so the left tail is whatever the
/// equation produces. The right end carries the asymptotic Robin condition on b - w.
inline KppWave solve_kpp(const KppProblem& pb, const Grid& g,
                         double pin_level = std::numeric_limits<double>::quiet_NaN(),
                         const KppSolveOptions& opt = {}) {
    pb.validate();
    g.validate();
    if (std::isnan(pin_level)) pin_level = 0.5 * pb.b;
    if (!(pin_level > 0.05 * pb.b && pin_level < 0.95 * pb.b)) {
        throw PreconditionError("solve_kpp: pin_level must lie in (0.05 b, 0.95 b)");
    }
    const KppRates rates = kpp_rates(pb);
    if (rates.mu_minus * g.L < 8.0) {
        throw PreconditionError("solve_kpp: left tail unresolved, need mu_minus * L >= 8 (have " +
                                std::to_string(rates.mu_minus * g.L) + ")");
    }

    const int n = g.n;
    const int i0 = g.mid();
    const double h = g.h();
    const Stencil st = Stencil::make(h, pb.c);

    Vec w(n + 1);
    for (int i = 0; i <= n; ++i) w[i] = pb.b / (1.0 + std::exp(-rates.mu_minus * g.xi(i)));
    // Shift the ansatz so that it already honours the pin.
    {
        const double s = std::log(pb.b / pin_level - 1.0) / rates.mu_minus;
        for (int i = 0; i <= n; ++i) w[i] = pb.b / (1.0 + std::exp(-rates.mu_minus * (g.xi(i) + s)));
    }

    auto merit = [&](const Vec& x) {
        return std::max(sup_norm(detail::kpp_rows(pb, g, st, rates.mu_plus, x)), std::abs(x[i0] - pin_level));
    };

    double m = merit(w);
    int steps = 0;
    while (m > opt.tol) {
        if (steps >= opt.max_newton) {
            throw SolverError("solve_kpp: Newton did not converge in " + std::to_string(opt.max_newton) + " steps",
                              m);
        }
        const Vec r = detail::kpp_rows(pb, g, st, rates.mu_plus, w);
        Tridiag J(n + 1);
        J.di[0] = 1.0;  // w_0 - g = 0 with g free
        for (int i = 1; i < n; ++i) {
            J.lo[i] = st.lo;
            J.di[i] = st.di + pb.abar * (1.0 - 2.0 * w[i] / pb.b);
            J.up[i] = st.up;
        }
        J.lo[n] = -1.0 / h - 0.5 * rates.mu_plus;
        J.di[n] = 1.0 / h - 0.5 * rates.mu_plus;
        Vec rhs(n + 1);
        for (int i = 0; i <= n; ++i) rhs[i] = -r[i];
        rhs[0] = 0.0;
        const Vec a = J.solve(rhs);
        Vec e0(n + 1, 0.0);
        e0[0] = 1.0;
        const Vec e = J.solve(e0);
        if (e[i0] == 0.0) throw SolverError("solve_kpp: pin decoupled from left value", m);
        const double dg = (pin_level - w[i0] - a[i0]) / e[i0];

        double theta = 1.0;
        bool accepted = false;
        Vec trial(n + 1);
        for (int k = 0; k <= opt.max_halvings; ++k) {
            for (int i = 0; i <= n; ++i) trial[i] = w[i] + theta * (a[i] + dg * e[i]);
            const double mt = merit(trial);
            if (std::isfinite(mt) && mt < m) {
                w.swap(trial);
                m = mt;
                accepted = true;
                break;
            }
            theta *= 0.5;
        }
        ++steps;
        if (!accepted) {
            // Stagnation at the rounding level of the stencil counts as convergence.
            const double floor = 100.0 * std::numeric_limits<double>::epsilon() *
                                 (std::abs(st.lo) + std::abs(st.di) + std::abs(st.up) + pb.abar) * pb.b;
            if (m <= std::max(opt.tol, floor)) break;
            throw SolverError("solve_kpp: line search failed", m);
        }
    }

    KppWave out;
    out.problem = pb;
    out.grid = g;
    out.omega = std::move(w);
    out.pin_level = pin_level;
    out.pin_node = i0;
    out.newton_steps = steps;
    out.residual_sup = kpp_residual(out);

    const double slack = 1e-12 * pb.b;
    const bool coarse = g.coarse() || !st.central;
    for (int i = 0; i < n && out.monotone; ++i) {
        if (out.omega[i + 1] < out.omega[i] - slack) {
            if (!coarse) {
                throw PostconditionError("solve_kpp: profile not monotone at node " + std::to_string(i));
            }
            out.monotone = false;
        }
    }
    if (!coarse) {
        for (double x : out.omega) {
            if (x < -slack || x > pb.b + slack) throw PostconditionError("solve_kpp: profile left [0, b]");
        }
    }
    return out;
}

/// The two KPP instances of the sandwich: b = 1 for the upper generator and
/// b = (1 - lambda)/(1 - lambda + l) for the lower one, both with abar = 1 - lambda.
inline KppProblem upper_kpp_problem(const ModelParams& p, double c) {
    return KppProblem::logistic(1.0 - p.lambda, 1.0, c);
}

inline KppProblem lower_kpp_problem(const ModelParams& p, double c, double l) {
    const double a = 1.0 - p.lambda;
    return KppProblem::logistic(a, a / (a + l), c);
}

/// Pointwise scaling of the lower generator by (1 - lambda + l)/(1 - lambda), which turns a
/// solution of the lower instance into a solution of the upper one.
inline KppWave scale_lower_to_upper(const KppWave& breve, const ModelParams& p) {
    const double a = 1.0 - p.lambda;
    const double expected_b = a / (a + p.l);
    if (std::abs(breve.problem.abar - a) > 1e-12 * a || std::abs(breve.problem.b - expected_b) > 1e-12) {
        throw PreconditionError("scale_lower_to_upper: wave does not solve the lower instance for these parameters");
    }
    if (breve.omega.empty() || sup_norm(breve.omega) == 0.0) {
        throw PreconditionError("scale_lower_to_upper: degenerate profile is not a wave");
    }
    const double s = (a + p.l) / a;
    KppWave out = breve;
    out.problem = KppProblem::logistic(a, 1.0, breve.problem.c);
    for (double& x : out.omega) x *= s;
    out.pin_level = breve.pin_level * s;
    out.residual_sup = kpp_residual(out);
    return out;
}

}  // namespace invwave
