#pragma once

// Ordered upper/lower pairs built from the two KPP generators, the closed-form v-quadrature
//   v(xi) = (1/K) (1 - exp(-(lambda K / c) * int_{-inf}^{xi} u)),
// shift searches for the comparison inequalities, and residual verification of the pair.

#include <cmath>
#include <string>

#include "grid.hpp"
#include "kpp.hpp"
#include "model.hpp"

namespace invwave {

struct VProfile {
    Grid grid;
    Vec v;
    double c = 0.0;
    double K = 1.0;
    double left_integral = 0.0;  // analytic tail correction added to the trapezoid sum
};

/// Largest value v may take: strictly below the saturation level 1/K.
inline double v_cap(double K) { return 1.0 / K - 1e-15 * std::max(1.0, 1.0 / K); }

/// Tail rate used to close int_{-inf}^{-L} u for a wave of speed c in the model.
inline double model_left_rate(const ModelParams& p, double c, const Grid& g) {
    return left_tail_rate(kpp_rates(KppProblem::logistic(1.0 - p.lambda, 1.0, c)), g.L);
}

/// Cumulative integral with the left tail closed by u(-L)/left_rate.
inline Vec cumulative_integral(const Grid& g, const Vec& u, double left_rate) {
    const double h = g.h();
    Vec I(g.size());
    I[0] = left_rate > 0.0 ? u[0] / left_rate : 0.0;
    for (int i = 1; i <= g.n; ++i) I[i] = I[i - 1] + 0.5 * h * (u[i - 1] + u[i]);
    return I;
}

inline VProfile v_from_u(const Grid& g, const Vec& u, double c, const ModelParams& p, double left_rate) {
    if (!(c > 0.0)) throw PreconditionError("v_from_u: c must be > 0");
    if (static_cast<int>(u.size()) != g.size()) throw PreconditionError("v_from_u: size mismatch");
    for (double x : u) {
        if (x < -1e-12) throw PreconditionError("v_from_u: u has negative entries");
    }
    VProfile out{g, Vec(g.size()), c, p.K, 0.0};
    const Vec I = cumulative_integral(g, u, left_rate);
    out.left_integral = I[0];
    const double k = p.lambda * p.K / c;
    const double cap = v_cap(p.K);
    for (int i = 0; i <= g.n; ++i) out.v[i] = std::min(-std::expm1(-k * I[i]) / p.K, cap);
    return out;
}

inline VProfile v_from_u(const Grid& g, const Vec& u, double c, const ModelParams& p) {
    return v_from_u(g, u, c, p, model_left_rate(p, c, g));
}

inline VProfile v_from_u(const KppWave& w, const ModelParams& p) {
    return v_from_u(w.grid, w.omega, w.problem.c, p, left_tail_rate(kpp_rates(w.problem), w.grid.L));
}

struct ShiftResult {
    double zeta = 0.0;
    int cells = 0;
    Vec u;  // shifted profile on the grid
};

namespace detail {

inline void require_upper_gates(const ModelParams& p, double c) {
    if (!lambda_gate(p).ok) {
        throw PreconditionError("upper comparison needs lambda <= " + std::to_string(lambda_gate(p).value));
    }
    if (!decay_ordering_gate(c, p).ok) {
        throw PreconditionError("decay-ordering gate fails at c = " + std::to_string(c));
    }
}

inline Vec shifted(const KppWave& w, int cells) {
    const Grid& g = w.grid;
    Vec out(g.size());
    for (int i = 0; i <= g.n; ++i) {
        const int j = i + cells;
        out[i] = (j >= 0 && j <= g.n) ? w.omega[j] : w.at(g.xi(i) + cells * g.h());
    }
    return out;
}

// Smallest k in [0, kmax] with ok(k), assuming ok is monotone in k.
template <class Pred>
inline int smallest_feasible(int kmax, Pred ok) {
    if (ok(0)) return 0;
    if (!ok(kmax)) return -1;
    int lo = 0, hi = kmax;
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        (ok(mid) ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace detail

/// Smallest grid-multiple zeta >= 0 with (1/K) u~(xi + zeta) >= v_bar(xi) at every node.
inline ShiftResult find_upper_shift(const KppWave& tilde, const ModelParams& p, double c) {
    detail::require_upper_gates(p, c);
    if (sup_norm(tilde.omega) == 0.0) throw PreconditionError("find_upper_shift: degenerate profile");
    const Grid& g = tilde.grid;
    const Vec vbar = v_from_u(tilde, p).v;
    const double slack = 1e-14 / p.K;
    auto ok = [&](int k) {
        for (int i = 0; i <= g.n; ++i) {
            const int j = i + k;
            const double u = j <= g.n ? tilde.omega[j] : tilde.at(g.xi(i) + k * g.h());
            if (u / p.K < vbar[i] - slack) return false;
        }
        return true;
    };
    const int kmax = static_cast<int>(std::ceil(4.0 * g.L / g.h()));
    const int k = detail::smallest_feasible(kmax, ok);
    if (k < 0) throw ConstructionError("find_upper_shift: no shift up to 4L satisfies (1/K) u >= v");
    return {k * g.h(), k, detail::shifted(tilde, k)};
}

/// Smallest grid-multiple zeta >= 0 with (1/K) u_(xi - zeta) <= v_(xi) at every node.
inline ShiftResult find_lower_shift(const KppWave& breve, const ModelParams& p, double c) {
    (void)c;
    if (sup_norm(breve.omega) == 0.0) throw PreconditionError("find_lower_shift: degenerate profile");
    const Grid& g = breve.grid;
    const Vec vlow = v_from_u(breve, p).v;
    const double slack = 1e-14 / p.K;
    auto ok = [&](int k) {
        for (int i = 0; i <= g.n; ++i) {
            const int j = i - k;
            const double u = j >= 0 ? breve.omega[j] : breve.at(g.xi(i) - k * g.h());
            if (u / p.K > vlow[i] + slack) return false;
        }
        return true;
    };
    const int kmax = static_cast<int>(std::ceil(4.0 * g.L / g.h()));
    const int k = detail::smallest_feasible(kmax, ok);
    if (k < 0) throw ConstructionError("find_lower_shift: no shift up to 4L satisfies (1/K) u <= v");
    return {k * g.h(), k, detail::shifted(breve, -k)};
}

struct InequalityCheck {
    std::string name;
    double worst = 0.0;  // signed worst-case residual over interior nodes
    double bound = 0.0;  // tolerance applied
    bool pass = false;
};

struct SandwichReport {
    double eps_num = 0.0;
    InequalityCheck upper_u;         // <= eps
    InequalityCheck lower_u;         // >= -eps
    InequalityCheck upper_v;         // |.| <= eps, unshifted generator
    InequalityCheck lower_v;         // |.| <= eps, unshifted generator
    double upper_u_identity_gap = 0.0;  // |residual - (-lambda K u (u/K - v))|, max over nodes
    double lower_u_identity_gap = 0.0;  // |residual - u ((l - lambda) u + lambda K v)|
    double upper_v_shifted = 0.0;  // informational: -c v' + lambda u_bar (1 - K v) with the shifted u
    double lower_v_shifted = 0.0;
    double ordering_u = 0.0;  // min (u_upper - u_lower)
    double ordering_v = 0.0;  // min (v_upper - v_lower)
    double upper_comparison = 0.0;  // min ((1/K) u_upper - v_upper)
    double lower_comparison = 0.0;  // min (v_lower - (1/K) u_lower)
    bool ordering_ok = false;
    bool comparison_ok = false;
    bool boundary_ok = false;
    bool pass() const {
        return upper_u.pass && lower_u.pass && upper_v.pass && lower_v.pass && ordering_ok && comparison_ok &&
               boundary_ok;
    }
};

struct SandwichPair {
    Grid grid;
    double c = 0.0;
    double l = 0.0;
    KppWave tilde;  // upper generator (unshifted)
    KppWave breve;  // lower generator (unshifted)
    Vec u_upper, v_upper, u_lower, v_lower;
    double zeta_upper = 0.0;
    double zeta_lower = 0.0;
    SandwichReport report;
};

namespace detail {

inline double central_d1(const Vec& w, int i, double h) { return (w[i + 1] - w[i - 1]) / (2.0 * h); }

}  // namespace detail

/// Signed residual checks of the differential inequalities of an upper/lower pair.
inline SandwichReport verify_pair(const SandwichPair& s, const ModelParams& p, double c) {
    const Grid& g = s.grid;
    const int n = g.n;
    const double h = g.h();
    const Stencil st = Stencil::make(h, c);
    SandwichReport r;
    const double scale = std::max({sup_norm(s.u_upper), p.K * sup_norm(s.v_upper), 1e-300});
    r.eps_num = 10.0 * h * h * scale;
    const double lk = p.lambda * p.K;

    double up_u = -1e300, lo_u = 1e300, up_v = 0.0, lo_v = 0.0, up_vs = -1e300, lo_vs = 1e300;
    const bool has_generators = !s.tilde.omega.empty() && !s.breve.omega.empty();
    for (int i = 1; i < n; ++i) {
        const double uu = s.u_upper[i], vu = s.v_upper[i];
        const double ul = s.u_lower[i], vl = s.v_lower[i];
        const double ru = st.apply(s.u_upper, i) + reaction(uu, vu, p).u;
        const double rl = st.apply(s.u_lower, i) + reaction(ul, vl, p).u;
        up_u = std::max(up_u, ru);
        lo_u = std::min(lo_u, rl);
        r.upper_u_identity_gap = std::max(r.upper_u_identity_gap, std::abs(ru - (-lk * uu * (uu / p.K - vu))));
        const double lgap = ul * ((s.l - p.lambda) * ul + lk * vl);
        r.lower_u_identity_gap = std::max(r.lower_u_identity_gap, std::abs(rl - lgap));

        const double dvu = detail::central_d1(s.v_upper, i, h);
        const double dvl = detail::central_d1(s.v_lower, i, h);
        const double gu = has_generators ? s.tilde.omega[i] : uu;
        const double gl = has_generators ? s.breve.omega[i] : ul;
        const double rvu = -c * dvu + p.lambda * gu * (1.0 - p.K * vu);
        const double rvl = -c * dvl + p.lambda * gl * (1.0 - p.K * vl);
        if (std::abs(rvu) > std::abs(up_v)) up_v = rvu;
        if (std::abs(rvl) > std::abs(lo_v)) lo_v = rvl;
        up_vs = std::max(up_vs, -c * dvu + p.lambda * uu * (1.0 - p.K * vu));
        lo_vs = std::min(lo_vs, -c * dvl + p.lambda * ul * (1.0 - p.K * vl));
    }
    r.upper_u = {"upper_u", up_u, r.eps_num, up_u <= r.eps_num};
    r.lower_u = {"lower_u", lo_u, r.eps_num, lo_u >= -r.eps_num};
    r.upper_v = {"upper_v", up_v, r.eps_num, std::abs(up_v) <= r.eps_num};
    r.lower_v = {"lower_v", lo_v, r.eps_num, std::abs(lo_v) <= r.eps_num};
    r.upper_v_shifted = up_vs;
    r.lower_v_shifted = lo_vs;

    r.ordering_u = r.ordering_v = r.upper_comparison = r.lower_comparison = 1e300;
    for (int i = 0; i <= n; ++i) {
        r.ordering_u = std::min(r.ordering_u, s.u_upper[i] - s.u_lower[i]);
        r.ordering_v = std::min(r.ordering_v, s.v_upper[i] - s.v_lower[i]);
        r.upper_comparison = std::min(r.upper_comparison, s.u_upper[i] / p.K - s.v_upper[i]);
        r.lower_comparison = std::min(r.lower_comparison, s.v_lower[i] - s.u_lower[i] / p.K);
    }
    r.ordering_ok = r.ordering_u >= -1e-12 && r.ordering_v >= -1e-12;
    r.comparison_ok = r.upper_comparison >= -1e-12 && r.lower_comparison >= -1e-12;

    // Boundary limits: both components vanish at -L; at +L u sits near its level and v is
    // still rising toward 1/K (the approach is only exponential at rate lambda K / c).
    const double tail = 1e-6;
    const bool left = s.u_upper[0] <= tail && s.u_lower[0] <= tail && p.K * s.v_upper[0] <= tail &&
                      p.K * s.v_lower[0] <= tail;
    const double bl = has_generators ? s.breve.problem.b : s.u_lower[n];
    const bool right = std::abs(s.u_upper[n] - 1.0) <= 1e-3 && std::abs(s.u_lower[n] - bl) <= 1e-3 &&
                       s.v_upper[n] < 1.0 / p.K && s.v_upper[n] >= s.v_upper[n - 1] &&
                       s.v_lower[n] >= s.v_lower[n - 1] && p.K * s.v_upper[n] >= 0.95 &&
                       p.K * s.v_lower[n] >= 0.9;
    r.boundary_ok = left && right;
    return r;
}

/// Assembles the upper pair (u~ shifted right, v_bar) and the lower pair (u_ shifted left, v_)
/// from one lower KPP solve and its exact rescaling.
inline SandwichPair build_sandwich(const ModelParams& p, double c, const Grid& g,
                                   const KppSolveOptions& opt = {}) {
    validate(p);
    g.validate();
    if (!speed_admissible(c, p)) {
        throw PreconditionError("build_sandwich: c = " + std::to_string(c) + " below c* = " +
                                std::to_string(min_speed(p)));
    }
    detail::require_upper_gates(p, c);

    SandwichPair s;
    s.grid = g;
    s.c = c;
    s.l = p.l;
    s.breve = solve_kpp(lower_kpp_problem(p, c, p.l), g, std::numeric_limits<double>::quiet_NaN(), opt);
    s.tilde = scale_lower_to_upper(s.breve, p);

    const ShiftResult up = find_upper_shift(s.tilde, p, c);
    const ShiftResult lo = find_lower_shift(s.breve, p, c);
    s.zeta_upper = up.zeta;
    s.zeta_lower = lo.zeta;
    s.u_upper = up.u;
    s.u_lower = lo.u;
    s.v_upper = v_from_u(s.tilde, p).v;
    s.v_lower = v_from_u(s.breve, p).v;
    s.report = verify_pair(s, p, c);
    if (!s.report.ordering_ok) throw ConstructionError("build_sandwich: ordering violated");
    return s;
}

}  // namespace invwave
