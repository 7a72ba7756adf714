#pragma once

// Coupled front of the reduced system by monotone iteration between ordered seeds.
// The u-equation is swept with a penalized linear solve; v is always the exact quadrature of u.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "align.hpp"
#include "kpp.hpp"
#include "model.hpp"
#include "profile.hpp"
#include "sandwich.hpp"

namespace invwave {

enum class Seed { lower, upper };

inline const char* to_string(Seed s) { return s == Seed::lower ? "lower" : "upper"; }

struct IterationConfig {
    double penalty = std::numeric_limits<double>::quiet_NaN();  // NaN: tight bound from the seeds
    double tol = 1e-10;
    int max_iter = 200;
    Seed seed = Seed::lower;
    bool accelerate = true;
    bool enforce_gates = true;  // refuse parameters outside the sandwich hypotheses
    double certify_eta = 1e-12;
};

struct IterationTrace {
    Seed seed = Seed::lower;
    double penalty = 0.0;
    Vec sup_change;     // plain-sweep change per step
    Vec order_margin;   // min over nodes of sgn * (u_next - u), sgn = +1 from below
    Vec bracket_margin; // min distance to the opposite seed (negative = escaped)
    std::vector<int> accelerated;
    bool converged = false;
    int steps = 0;
};

class NonConvergenceError : public SolverError {
public:
    NonConvergenceError(const std::string& what, double last, IterationTrace trace)
        : SolverError(what, last), trace_(std::move(trace)) {}
    const IterationTrace& trace() const noexcept { return trace_; }

private:
    IterationTrace trace_;
};

/// Ordered seeds and boundary data shared by every sweep.
struct WaveBracket {
    Grid grid;
    double c = 0.0;
    double l_seed = 0.0;
    Vec u_lower, v_lower, u_upper, v_upper;
    bool upper_is_equilibrium = false;
    double left_value = 0.0;  // Dirichlet value at -L
    double robin_rate = 0.0;  // right-end approach rate of u to 1
    double left_rate = 0.0;   // closes the v-quadrature at -L
    double penalty = 0.0;
    double lower_certificate = 0.0;  // min of the extended residual of the lower seed
    double upper_certificate = 0.0;  // max of the extended residual of the upper seed
};

namespace detail {

inline Vec quadrature(const WaveBracket& b, const Vec& u, const ModelParams& p) {
    return v_from_u(b.grid, u, b.c, p, b.left_rate).v;
}

// Interior residuals of u'' - c u' + F(u, v) and, at index n, the Robin defect
// r (1 - avg) - (u_n - u_{n-1})/h. Sub-solutions are >= 0, super-solutions <= 0.
inline Vec extended_residual(const WaveBracket& b, const Stencil& st, const Vec& u, const Vec& v,
                             const ModelParams& p) {
    const int n = b.grid.n;
    const double h = b.grid.h();
    Vec r(n + 1, 0.0);
    for (int i = 1; i < n; ++i) r[i] = st.apply(u, i) + reaction(u[i], v[i], p).u;
    r[n] = b.robin_rate * (1.0 - 0.5 * (u[n] + u[n - 1])) - (u[n] - u[n - 1]) / h;
    return r;
}

inline void set_robin_row(Tridiag& A, const WaveBracket& b) {
    const int n = b.grid.n;
    const double h = b.grid.h();
    A.lo[n] = -1.0 / h + 0.5 * b.robin_rate;
    A.di[n] = 1.0 / h + 0.5 * b.robin_rate;
}

}  // namespace detail

inline void validate_wave_inputs(const ModelParams& p, double c, const Grid& g, bool enforce_gates) {
    validate(p);
    g.validate();
    if (p.nu != 0.0) throw PreconditionError("wave solver handles nu = 0 only");
    if (!speed_admissible(c, p)) {
        throw PreconditionError("no monotone wave for c = " + std::to_string(c) + " < c* = " +
                                std::to_string(min_speed(p)));
    }
    if (enforce_gates) {
        const GateReport gr = check_gates(c, p);
        if (!gr.lambda_gate.ok) {
            throw PreconditionError("lambda gate fails: lambda > " + std::to_string(gr.lambda_gate.value));
        }
        if (!gr.decay_gate.ok) throw PreconditionError("decay-ordering gate fails at c = " + std::to_string(c));
    }
}

/// Seeds of the iteration. Lower: the lower KPP generator, unshifted, at the smallest tried
/// depression l_seed in [l, max(l, lambda)] that certifies as a sub-solution. Upper:
/// its rescaling with the matching quadrature when that certifies as a super-solution,
/// otherwise the equilibrium (1, 1/K).
inline WaveBracket make_bracket(const ModelParams& p, double c, const Grid& g, const IterationConfig& cfg) {
    validate_wave_inputs(p, c, g, cfg.enforce_gates);
    WaveBracket b;
    b.grid = g;
    b.c = c;
    // u approaches 1 at the slower of the v-driven rate lambda K / c and the rate of the
    // linearization at the equilibrium, (sqrt(c^2 + 4) - c)/2.
    b.robin_rate = std::min(p.lambda * p.K / c, 0.5 * (std::sqrt(c * c + 4.0) - c));
    b.left_rate = model_left_rate(p, c, g);
    const Stencil st = Stencil::make(g.h(), c);

    KppSolveOptions kopt;
    kopt.tol = 1e-12;
    // The smallest depression l_seed >= l whose generator certifies; l_seed = lambda always does
    // because the residual is then u lambda K V(u) >= 0.
    ModelParams ps = p;
    KppWave breve;
    bool certified = false;
    for (int k = 0; k <= 8 && !certified; ++k) {
        ps.l = p.l >= p.lambda ? p.l : p.l + (p.lambda - p.l) * k / 8.0;
        breve = solve_kpp(lower_kpp_problem(ps, c, ps.l), g, std::nan(""), kopt);
        // max(sub, 0) is again a sub-solution; only matters on coarse grids where the
        // discrete tail can dip below zero.
        for (double& x : breve.omega) x = std::max(x, 0.0);
        Vec vl = detail::quadrature(b, breve.omega, p);
        const Vec r = detail::extended_residual(b, st, breve.omega, vl, p);
        double m = 1e300;
        for (int i = 1; i <= g.n; ++i) m = std::min(m, r[i]);
        if (m >= -cfg.certify_eta) {
            certified = true;
            b.lower_certificate = m;
            b.u_lower = breve.omega;
            b.v_lower = std::move(vl);
        }
        if (p.l >= p.lambda) break;
    }
    if (!certified) throw ConstructionError("lower seed failed to certify as a sub-solution");
    b.l_seed = ps.l;
    b.left_value = b.u_lower[0];

    const KppWave tilde = scale_lower_to_upper(breve, ps);
    Vec vt = detail::quadrature(b, tilde.omega, p);
    const Vec rt = detail::extended_residual(b, st, tilde.omega, vt, p);
    double mt = -1e300;
    for (int i = 1; i <= g.n; ++i) mt = std::max(mt, rt[i]);
    if (mt <= cfg.certify_eta) {
        b.u_upper = tilde.omega;
        b.v_upper = std::move(vt);
        b.upper_certificate = mt;
    } else {
        b.upper_is_equilibrium = true;
        b.u_upper.assign(g.size(), 1.0);
        b.v_upper.assign(g.size(), 1.0 / p.K);
        b.upper_certificate = 0.0;
    }

    if (std::isnan(cfg.penalty)) {
        // F(u, v) + P u is nondecreasing in u on the order interval once
        // P >= -(1 - lambda - 2u + lambda K v) there.
        double P = 0.0;
        for (int i = 0; i <= g.n; ++i) {
            P = std::max(P, 2.0 * b.u_upper[i] - (1.0 - p.lambda) - p.lambda * p.K * b.v_lower[i]);
        }
        b.penalty = P;
    } else {
        if (!(cfg.penalty >= 0.0)) throw PreconditionError("penalty must be >= 0");
        b.penalty = cfg.penalty;
    }
    return b;
}

/// One penalized sweep: (D2 - c D1 - P) u_next = -(P u + F(u, v)), u_next(-L) fixed,
/// Robin condition at +L; v_next is the quadrature of u_next.
inline WaveProfile iterate_once(const WaveProfile& cur, const WaveBracket& b, const ModelParams& p) {
    const Grid& g = b.grid;
    const int n = g.n;
    const Stencil st = Stencil::make(g.h(), b.c);
    Tridiag A(n + 1);
    Vec rhs(n + 1);
    A.di[0] = 1.0;
    rhs[0] = b.left_value;
    for (int i = 1; i < n; ++i) {
        A.lo[i] = st.lo;
        A.di[i] = st.di - b.penalty;
        A.up[i] = st.up;
        rhs[i] = -(b.penalty * cur.u[i] + reaction(cur.u[i], cur.v[i], p).u);
    }
    detail::set_robin_row(A, b);
    rhs[n] = b.robin_rate;
    WaveProfile next = cur;
    next.u = A.solve(rhs);
    next.v = detail::quadrature(b, next.u, p);
    return next;
}

namespace detail {

// Newton step for the extended residual, including the dependence of v = V(u) on u through
// the cumulative integral s = int u. Unknowns are interleaved (d_i, s_i) so the Jacobian is
// banded.
inline bool newton_direction(const WaveBracket& b, const Stencil& st, const Vec& u, const Vec& v,
                             const ModelParams& p, Vec& dir) {
    const int n = b.grid.n;
    const double h = b.grid.h();
    const Vec r = extended_residual(b, st, u, v, p);
    const double lk = p.lambda * p.K;
    BandMatrix J(2 * (n + 1), 3, 2);
    Vec rhs(2 * (n + 1), 0.0);
    J(0, 0) = 1.0;
    J(1, 1) = 1.0;
    J(1, 0) = -1.0 / b.left_rate;
    for (int i = 1; i <= n; ++i) {
        const int d = 2 * i, q = 2 * i + 1;
        if (i < n) {
            J(d, d - 2) = st.lo;
            J(d, d) = st.di + (1.0 - p.lambda - 2.0 * u[i] + lk * v[i]);
            J(d, d + 2) = st.up;
            J(d, q) = lk * u[i] * (p.lambda / b.c) * (1.0 - p.K * v[i]);
            rhs[d] = -r[i];
        } else {
            // Robin defect linearizes to -(1/h + r/2) d_n + (1/h - r/2) d_{n-1}.
            J(d, d) = 1.0 / h + 0.5 * b.robin_rate;
            J(d, d - 2) = -1.0 / h + 0.5 * b.robin_rate;
            rhs[d] = r[n];
        }
        J(q, q) = 1.0;
        J(q, q - 2) = -1.0;
        J(q, d) = -0.5 * h;
        J(q, d - 2) = -0.5 * h;
    }
    if (!J.solve(rhs)) return false;
    dir.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        dir[i] = rhs[2 * i];
        if (!std::isfinite(dir[i])) return false;
    }
    return true;
}

// Accepts cand as the next iterate when it moves in the monotone direction, stays inside the
// order interval and is itself a sub-solution (sgn = +1) or super-solution (sgn = -1).
inline bool certify(const WaveBracket& b, const Stencil& st, const Vec& from, const Vec& cand, double sgn,
                    double eta, const ModelParams& p, Vec& cv) {
    const int n = b.grid.n;
    const double slack = 1e-13;
    for (int i = 0; i <= n; ++i) {
        if (!std::isfinite(cand[i])) return false;
        if (sgn * (cand[i] - from[i]) < -slack) return false;
        if (cand[i] > b.u_upper[i] + slack || cand[i] < b.u_lower[i] - slack) return false;
    }
    cv = quadrature(b, cand, p);
    const Vec r = extended_residual(b, st, cand, cv, p);
    for (int i = 1; i <= n; ++i) {
        if (sgn * r[i] < -eta) return false;
    }
    return true;
}

// Damped Newton on the discrete fixed-point equations starting from u0.
inline bool newton_solve(const WaveBracket& b, const Stencil& st, const Vec& u0, const ModelParams& p, Vec& out) {
    Vec u = u0, dir, trial;
    Vec v = quadrature(b, u, p);
    double m = sup_norm(extended_residual(b, st, u, v, p));
    const double target = 1e-13;
    for (int it = 0; it < 40 && m > target; ++it) {
        if (!newton_direction(b, st, u, v, p, dir)) return false;
        double theta = 1.0;
        bool moved = false;
        for (int k = 0; k < 20; ++k, theta *= 0.5) {
            trial = u;
            for (std::size_t i = 0; i < u.size(); ++i) trial[i] += theta * dir[i];
            bool neg = false;
            for (double x : trial) neg = neg || x < -1e-13;
            if (neg) continue;
            Vec tv = quadrature(b, trial, p);
            const double mt = sup_norm(extended_residual(b, st, trial, tv, p));
            if (mt < m) {
                u.swap(trial);
                v.swap(tv);
                m = mt;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    out = std::move(u);
    return m <= 1e-10;
}

}  // namespace detail

struct WaveSolution {
    WaveProfile profile;
    IterationTrace trace;
    WaveBracket bracket;
};

/// Sup-norms of the u and v residuals recomputed from the arrays with fourth-order central
/// differences on nodes 2..n-2. On a second-order solution this measures truncation error.
inline std::pair<double, double> wave_residuals(const Grid& g, const Vec& u, const Vec& v, double c,
                                                const ModelParams& p) {
    const double h = g.h();
    double ru = 0.0, rv = 0.0;
    for (int i = 2; i <= g.n - 2; ++i) {
        const double d1u = (-u[i + 2] + 8.0 * u[i + 1] - 8.0 * u[i - 1] + u[i - 2]) / (12.0 * h);
        const double d2u = (-u[i + 2] + 16.0 * u[i + 1] - 30.0 * u[i] + 16.0 * u[i - 1] - u[i - 2]) / (12.0 * h * h);
        const double d1v = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
        const Point2 f = reaction(u[i], v[i], p);
        ru = std::max(ru, std::abs(d2u - c * d1u + f.u));
        rv = std::max(rv, std::abs(-c * d1v + f.v));
    }
    return {ru, rv};
}

inline void finalize_profile(WaveProfile& w, const ModelParams& p) {
    const auto [ru, rv] = wave_residuals(w.grid, w.u, w.v, w.c, p);
    w.residual_u = ru;
    w.residual_v = rv;
    w.coarse = w.grid.coarse() || !Stencil::make(w.grid.h(), w.c).central;
    const double x = level_crossing(w.grid, w.u, 0.5);
    int k = w.grid.mid();
    if (!std::isnan(x)) k = std::clamp(static_cast<int>(std::lround((x + w.grid.L) / w.grid.h())), 0, w.grid.n);
    w.pin_node = k;
    w.pin_level = w.u[k];
}

inline WaveSolution solve_wave_from(const WaveBracket& b, const ModelParams& p, const IterationConfig& cfg) {
    const Grid& g = b.grid;
    const int n = g.n;
    const Stencil st = Stencil::make(g.h(), b.c);
    const double sgn = cfg.seed == Seed::lower ? 1.0 : -1.0;

    WaveProfile cur;
    cur.grid = g;
    cur.c = b.c;
    cur.u = cfg.seed == Seed::lower ? b.u_lower : b.u_upper;
    cur.v = detail::quadrature(b, cur.u, p);

    IterationTrace tr;
    tr.seed = cfg.seed;
    tr.penalty = b.penalty;
    const double bracket_tol = 1e-10;
    double last_change = std::numeric_limits<double>::infinity();

    Vec dir;
    int next_polish = 1, polish_gap = 1;
    for (int it = 0; it < cfg.max_iter; ++it) {
        WaveProfile next = iterate_once(cur, b, p);
        const double ch = std::max(sup_diff(next.u, cur.u), p.K * sup_diff(next.v, cur.v));
        last_change = ch;
        tr.sup_change.push_back(ch);
        int acc = 0;
        if (ch > cfg.tol && cfg.accelerate) {
            Vec cand, cv;
            // First choice: the discrete fixed point itself, reached by an uncertified Newton
            // solve and admitted only if it certifies. Attempts back off after failures.
            if (it >= next_polish) {
                if (detail::newton_solve(b, st, next.u, p, cand) &&
                    detail::certify(b, st, next.u, cand, sgn, cfg.certify_eta, p, cv)) {
                    acc = 2;
                } else {
                    polish_gap *= 2;
                    next_polish = it + polish_gap;
                }
            }
            if (acc == 0 && detail::newton_direction(b, st, next.u, next.v, p, dir)) {
                double theta = 1.0;
                cand.resize(n + 1);
                for (int k = 0; k < 12 && acc == 0; ++k, theta *= 0.5) {
                    for (int i = 0; i <= n; ++i) cand[i] = next.u[i] + theta * dir[i];
                    if (detail::certify(b, st, next.u, cand, sgn, cfg.certify_eta, p, cv)) acc = 1;
                }
            }
            if (acc != 0) {
                next.u = std::move(cand);
                next.v = std::move(cv);
            }
        }
        tr.accelerated.push_back(acc);

        double margin = 1e300, bm = 1e300;
        for (int i = 0; i <= n; ++i) {
            margin = std::min(margin, sgn * (next.u[i] - cur.u[i]));
            bm = std::min({bm, b.u_upper[i] - next.u[i], next.u[i] - b.u_lower[i]});
        }
        tr.order_margin.push_back(margin);
        tr.bracket_margin.push_back(bm);
        tr.steps = it + 1;
        cur = std::move(next);
        if (bm < -bracket_tol) {
            throw InternalError("monotone iteration left the order interval (margin " + std::to_string(bm) + ")");
        }
        if (ch <= cfg.tol) {
            tr.converged = true;
            break;
        }
    }
    if (!tr.converged) {
        throw NonConvergenceError("monotone iteration did not reach tol in " + std::to_string(cfg.max_iter) +
                                      " sweeps",
                                  last_change, tr);
    }

    WaveSolution out;
    cur.v = detail::quadrature(b, cur.u, p);
    finalize_profile(cur, p);
    for (int i = 0; i < n; ++i) {
        if (cur.u[i + 1] < cur.u[i] - 1e-12 || cur.v[i + 1] < cur.v[i] - 1e-12) {
            if (!cur.coarse) {
                throw PostconditionError("converged wave is not monotone at node " + std::to_string(i));
            }
            cur.monotone = false;
            break;
        }
    }
    out.profile = std::move(cur);
    out.trace = std::move(tr);
    out.bracket = b;
    return out;
}

inline WaveSolution solve_wave(const ModelParams& p, double c, const Grid& g, const IterationConfig& cfg = {}) {
    return solve_wave_from(make_bracket(p, c, g, cfg), p, cfg);
}

struct BilateralResult {
    WaveSolution from_below;
    WaveSolution from_above;
    AlignmentReport alignment;
    double gap = 0.0;
};

/// Runs the iteration from both seeds and measures the aligned distance of the limits.
inline BilateralResult bilateral_solve(const ModelParams& p, double c, const Grid& g, IterationConfig cfg = {}) {
    const WaveBracket b = make_bracket(p, c, g, cfg);
    BilateralResult r;
    cfg.seed = Seed::lower;
    r.from_below = solve_wave_from(b, p, cfg);
    cfg.seed = Seed::upper;
    r.from_above = solve_wave_from(b, p, cfg);
    r.alignment = translation_align(r.from_below.profile, r.from_above.profile);
    r.gap = r.alignment.sup_gap;
    return r;
}

struct DerivativeProfile {
    Vec w1, w2;
    double min_w1 = 0.0;  // over the interior set u in (1e-5, 1 - 1e-5)
    double min_w2 = 0.0;
    int interior_nodes = 0;
    bool degenerate = false;
    double system_residual_1 = 0.0;  // linearized u-equation applied to (w1, w2)
    double system_residual_2 = 0.0;  // linearized v-equation
    double v_identity_gap = 0.0;     // |w2 - (lambda/c) u (1 - K v)|
    bool pass() const { return degenerate || (min_w1 > 0.0 && min_w2 > 0.0); }
};

/// Central-difference derivatives of a wave and the residual of the derivative system
///   w1'' - c w1' + F_u w1 + lambda K u w2 = 0,   -c w2' + lambda (1 - K v) w1 - lambda K u w2 = 0.
inline DerivativeProfile derivative_check(const WaveProfile& w, const ModelParams& p) {
    const Grid& g = w.grid;
    const int n = g.n;
    const double h = g.h();
    DerivativeProfile d;
    d.w1.assign(n + 1, 0.0);
    d.w2.assign(n + 1, 0.0);
    for (int i = 1; i < n; ++i) {
        d.w1[i] = (w.u[i + 1] - w.u[i - 1]) / (2.0 * h);
        d.w2[i] = (w.v[i + 1] - w.v[i - 1]) / (2.0 * h);
    }
    d.w1[0] = (w.u[1] - w.u[0]) / h;
    d.w2[0] = (w.v[1] - w.v[0]) / h;
    d.w1[n] = (w.u[n] - w.u[n - 1]) / h;
    d.w2[n] = (w.v[n] - w.v[n - 1]) / h;

    d.min_w1 = d.min_w2 = std::numeric_limits<double>::infinity();
    for (int i = 1; i < n; ++i) {
        if (w.u[i] > 1e-5 && w.u[i] < 1.0 - 1e-5) {
            ++d.interior_nodes;
            d.min_w1 = std::min(d.min_w1, d.w1[i]);
            d.min_w2 = std::min(d.min_w2, d.w2[i]);
        }
        d.v_identity_gap =
            std::max(d.v_identity_gap, std::abs(d.w2[i] - p.lambda / w.c * w.u[i] * (1.0 - p.K * w.v[i])));
    }
    d.degenerate = d.interior_nodes == 0;
    if (d.degenerate) d.min_w1 = d.min_w2 = 0.0;

    const double lk = p.lambda * p.K;
    for (int i = 2; i < n - 1; ++i) {
        const double w1pp = (d.w1[i + 1] - 2.0 * d.w1[i] + d.w1[i - 1]) / (h * h);
        const double w1p = (d.w1[i + 1] - d.w1[i - 1]) / (2.0 * h);
        const double w2p = (d.w2[i + 1] - d.w2[i - 1]) / (2.0 * h);
        const double fu = 1.0 - p.lambda - 2.0 * w.u[i] + lk * w.v[i];
        d.system_residual_1 = std::max(d.system_residual_1, std::abs(w1pp - w.c * w1p + fu * d.w1[i] + lk * w.u[i] * d.w2[i]));
        d.system_residual_2 = std::max(
            d.system_residual_2, std::abs(-w.c * w2p + p.lambda * (1.0 - p.K * w.v[i]) * d.w1[i] - lk * w.u[i] * d.w2[i]));
    }
    return d;
}

}  // namespace invwave
