#pragma once

// Time integration of  u_t = u_xx + u (1 - lambda - u + lambda K v),  v_t = lambda u (1 - K v)
// on [0, x_max] with Neumann ends, and front tracking.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "grid.hpp"
#include "model.hpp"
#include "profile.hpp"

namespace invwave {

enum class InitialCondition { step, gaussian, zero };

struct SimConfig {
    double x_max = 400.0;
    double dx = 0.1;
    double dt = 0.002;
    double t_end = 150.0;
    InitialCondition ic = InitialCondition::step;
    double ic_amplitude = 0.5;
    double ic_width = 5.0;
    double record_every = 0.5;     // time between front samples
    double snapshot_every = 0.0;   // time between stored states; 0 keeps only the final one
    double level = 0.5;
    double fit_window = 0.5;       // trailing fraction of samples used by the speed fit

    int nodes() const { return static_cast<int>(std::lround(x_max / dx)) + 1; }

    void validate(const ModelParams& p) const {
        if (!(x_max > 0.0 && dx > 0.0 && dt > 0.0 && t_end > 0.0)) {
            throw PreconditionError("simulation: x_max, dx, dt, t_end must be > 0");
        }
        if (nodes() < 8) throw PreconditionError("simulation: fewer than 8 nodes");
        if (!(record_every > 0.0)) throw PreconditionError("simulation: record_every must be > 0");
        if (!(level > 0.0 && level < 1.0)) throw PreconditionError("simulation: level must lie in (0, 1)");
        // Explicit reaction: dt times the reaction Lipschitz bound on the invariant region.
        const double lip = 1.0 + p.lambda + p.lambda * p.K;
        if (dt * lip > 0.5) {
            throw StabilityError("simulation: dt * (1 + lambda + lambda K) = " + std::to_string(dt * lip) +
                                 " exceeds 0.5; reduce dt");
        }
    }
};

struct SimState {
    double t = 0.0;
    Vec u, v;
};

struct FrontTrace {
    Vec times, positions;
    double c_emp = std::numeric_limits<double>::quiet_NaN();
    double fit_t0 = 0.0, fit_t1 = 0.0;
    double fit_residual = 0.0;
    bool empty_front = false;
};

inline SimState initial_state(const SimConfig& cfg) {
    const int m = cfg.nodes();
    SimState s;
    s.u.assign(m, 0.0);
    s.v.assign(m, 0.0);
    for (int i = 0; i < m; ++i) {
        const double x = i * cfg.dx;
        switch (cfg.ic) {
            case InitialCondition::step:
                s.u[i] = x <= cfg.ic_width + 1e-12 ? cfg.ic_amplitude : 0.0;
                break;
            case InitialCondition::gaussian:
                s.u[i] = cfg.ic_amplitude * std::exp(-(x * x) / (cfg.ic_width * cfg.ic_width));
                break;
            case InitialCondition::zero:
                break;
        }
    }
    return s;
}

/// Lie splitting: backward-Euler diffusion, explicit reaction for u, exact relaxation for v
/// with u frozen:  v+ = 1/K + (v - 1/K) exp(-lambda K u dt).
class Stepper {
public:
    Stepper(const SimConfig& cfg, const ModelParams& p) : cfg_(cfg), p_(p) {
        const int m = cfg.nodes();
        const double r = cfg.dt / (cfg.dx * cfg.dx);
        Tridiag t(m);
        for (int i = 0; i < m; ++i) {
            t.lo[i] = -r;
            t.up[i] = -r;
            t.di[i] = 1.0 + 2.0 * r;
        }
        // Neumann ends via mirrored ghost nodes.
        t.up[0] = -2.0 * r;
        t.lo[m - 1] = -2.0 * r;
        t.lo[0] = 0.0;
        t.up[m - 1] = 0.0;
        diffusion_ = FactoredTridiag(t);
    }

    void step(SimState& s) const {
        diffusion_.solve_in_place(s.u);
        const double dt = cfg_.dt;
        const double lk = p_.lambda * p_.K;
        const double vK = 1.0 / p_.K;
        for (std::size_t i = 0; i < s.u.size(); ++i) {
            const double u = s.u[i];
            const double un = u + dt * reaction(u, s.v[i], p_).u;
            if (!(un >= -1e-8 && un <= 1.0 + 1e-8)) {
                throw StabilityError("simulation: u = " + std::to_string(un) + " left [0, 1] at t = " +
                                     std::to_string(s.t + dt) + "; reduce dt");
            }
            s.u[i] = un;
            s.v[i] += (vK - s.v[i]) * -std::expm1(-lk * un * dt);
        }
        s.t += dt;
    }

private:
    SimConfig cfg_;
    ModelParams p_;
    FactoredTridiag diffusion_;
};

inline SimState step(const SimState& s, const SimConfig& cfg, const ModelParams& p) {
    cfg.validate(p);
    SimState out = s;
    Stepper(cfg, p).step(out);
    return out;
}

/// Rightmost crossing of `level` by u on the uniform grid x_i = i dx, linearly interpolated.
inline std::optional<double> front_position(const Vec& u, double dx, double level) {
    for (int i = static_cast<int>(u.size()) - 2; i >= 0; --i) {
        const double a = u[i] - level, b = u[i + 1] - level;
        if ((a >= 0.0) != (b >= 0.0)) return (i + a / (a - b)) * dx;
    }
    return std::nullopt;
}

inline std::optional<double> front_position(const SimState& s, double dx, double level) {
    return front_position(s.u, dx, level);
}

/// Least-squares slope of position against time over the trailing `window` fraction.
inline void estimate_speed(FrontTrace& tr, double window = 0.5) {
    const int m = static_cast<int>(tr.times.size());
    const int first = static_cast<int>(std::floor(m * (1.0 - window)));
    const int k = m - first;
    if (k < 10) {
        throw PreconditionError("estimate_speed: need >= 10 samples in the window, have " + std::to_string(k));
    }
    double st = 0, sx = 0, stt = 0, stx = 0;
    for (int i = first; i < m; ++i) {
        st += tr.times[i];
        sx += tr.positions[i];
        stt += tr.times[i] * tr.times[i];
        stx += tr.times[i] * tr.positions[i];
    }
    const double slope = (k * stx - st * sx) / (k * stt - st * st);
    const double icpt = (sx - slope * st) / k;
    double ss = 0.0;
    for (int i = first; i < m; ++i) {
        const double e = tr.positions[i] - (icpt + slope * tr.times[i]);
        ss += e * e;
    }
    tr.c_emp = slope;
    tr.fit_t0 = tr.times[first];
    tr.fit_t1 = tr.times[m - 1];
    tr.fit_residual = std::sqrt(ss / k);
}

struct SimResult {
    FrontTrace trace;
    std::vector<SimState> snapshots;
    SimState final_state;
};

inline SimResult run(const SimConfig& cfg, const ModelParams& p) {
    require_lambda_below_one(p);
    if (!(p.lambda > 0.0) || !(p.K > 0.0)) throw ParameterError("simulation: need lambda > 0 and K > 0");
    cfg.validate(p);
    SimResult res;
    SimState s = initial_state(cfg);
    const Stepper stepper(cfg, p);
    const long total = std::lround(cfg.t_end / cfg.dt);
    const long rec = std::max(1L, std::lround(cfg.record_every / cfg.dt));
    const long snap = cfg.snapshot_every > 0.0 ? std::max(1L, std::lround(cfg.snapshot_every / cfg.dt)) : 0;
    auto record = [&](long k) {
        if (k % rec == 0) {
            if (const auto x = front_position(s, cfg.dx, cfg.level)) {
                res.trace.times.push_back(s.t);
                res.trace.positions.push_back(*x);
            }
        }
        if (snap > 0 && k % snap == 0) res.snapshots.push_back(s);
    };
    record(0);
    for (long k = 1; k <= total; ++k) {
        stepper.step(s);
        s.t = k * cfg.dt;  // no drift from summing dt
        record(k);
    }
    res.final_state = s;
    if (res.trace.times.empty()) {
        res.trace.empty_front = true;
    } else if (static_cast<int>(res.trace.times.size()) * cfg.fit_window >= 10) {
        estimate_speed(res.trace, cfg.fit_window);
    }
    return res;
}

struct ShapeComparison {
    double sup_distance = 0.0;
    double front = 0.0;       // PDE front position
    double wave_pin = 0.0;    // xi where the wave crosses the level
    int compared_nodes = 0;
};

/// Compares a late-time PDE profile with a travelling wave U(xi), xi = x + c t. The PDE front
/// moves toward +x, so u(x) ~ U(wave_pin + front - x) once both are pinned at `level`.
/// The sup runs over the middle `fraction` of the wave grid.
inline ShapeComparison compare_shape(const SimState& s, double dx, const WaveProfile& w, double level = 0.5,
                                     double fraction = 0.8) {
    const auto xf = front_position(s, dx, level);
    if (!xf) throw PreconditionError("compare_shape: PDE state has no front");
    const double xw = level_crossing(w.grid, w.u, level);
    if (std::isnan(xw)) throw PreconditionError("compare_shape: wave does not cross the level");
    ShapeComparison r;
    r.front = *xf;
    r.wave_pin = xw;
    const double half = fraction * w.grid.L;
    const double xmax = dx * (static_cast<double>(s.u.size()) - 1);
    for (int i = 0; i <= w.grid.n; ++i) {
        const double xi = w.grid.xi(i);
        if (std::abs(xi) > half) continue;
        const double x = *xf - (xi - xw);
        if (x < 0.0 || x > xmax) continue;
        const double fi = x / dx;
        const int k = std::min(static_cast<int>(fi), static_cast<int>(s.u.size()) - 2);
        const double t = fi - k;
        const double up = (1.0 - t) * s.u[k] + t * s.u[k + 1];
        r.sup_distance = std::max(r.sup_distance, std::abs(up - w.u[i]));
        ++r.compared_nodes;
    }
    return r;
}

}  // namespace invwave
