#pragma once

// Tail-rate fitting, monotonicity audits and the sub-critical oscillation witness.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "align.hpp"
#include "model.hpp"
#include "profile.hpp"
#include "sandwich.hpp"

namespace invwave {

enum class Side { minus, plus };

inline const char* to_string(Side s) { return s == Side::minus ? "minus" : "plus"; }

struct RateReport {
    std::string quantity;
    Side side = Side::minus;
    bool critical_mode = false;
    double fitted_rate = 0.0;
    double theoretical_rate = 0.0;
    double rel_error = 0.0;
    double tolerance = 0.0;
    double lo = 0.0, hi = 0.0;  // value window of |profile - limit|
    bool window_adapted = false;
    int nodes = 0;
    double amplitude = 0.0;  // fitted prefactor at xi = 0
    bool pass = false;
};

struct FitWindow {
    double lo = 1e-6;
    double hi = 1e-3;
};

/// Least-squares slope of log|profile - limit| against xi over nodes whose deviation lies in
/// [lo, hi]. In critical mode the deviation is divided by |xi| first. The returned rate is a
/// positive decay exponent toward the named side.
inline RateReport fit_tail_rate(const Vec& xi, const Vec& profile, Side side, double limit, FitWindow w,
                                bool critical_mode = false) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    double dmin = 1e300, dmax = 0.0;
    for (std::size_t i = 0; i < xi.size(); ++i) {
        const double d = std::abs(profile[i] - limit);
        if (d > 0.0) {
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
        if (!(d >= w.lo && d <= w.hi)) continue;
        if (critical_mode && xi[i] == 0.0) continue;
        const double y = critical_mode ? std::log(d / std::abs(xi[i])) : std::log(d);
        sx += xi[i];
        sy += y;
        sxx += xi[i] * xi[i];
        sxy += xi[i] * y;
        ++m;
    }
    if (m < 12) {
        throw PreconditionError("fit_tail_rate: only " + std::to_string(m) + " nodes in window [" +
                                std::to_string(w.lo) + ", " + std::to_string(w.hi) + "]; resolved deviations span [" +
                                std::to_string(dmin) + ", " + std::to_string(dmax) + "]");
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / m;
    RateReport r;
    r.side = side;
    r.critical_mode = critical_mode;
    r.fitted_rate = side == Side::minus ? slope : -slope;
    r.lo = w.lo;
    r.hi = w.hi;
    r.nodes = m;
    r.amplitude = std::exp(icpt);
    return r;
}

inline void grade(RateReport& r, double theory, double tol) {
    r.theoretical_rate = theory;
    r.rel_error = std::abs(r.fitted_rate - theory) / std::abs(theory);
    r.tolerance = tol;
    r.pass = r.rel_error <= tol;
}

/// The deviation window actually used: the requested one if it holds enough nodes on the
/// named tail, otherwise the most resolved factor-of-five band next to the truncation point.
inline FitWindow resolved_window(const Grid& g, const Vec& profile, Side side, double limit, FitWindow want) {
    int inside = 0;
    for (double x : profile) {
        const double d = std::abs(x - limit);
        if (d >= want.lo && d <= want.hi) ++inside;
    }
    if (inside >= 12) return want;
    const int edge = side == Side::minus ? 1 : g.n - 1;  // skip the boundary node itself
    const double d0 = std::abs(profile[edge] - limit);
    return {d0 * 1.0001, d0 * 5.0};
}

struct WaveRateOptions {
    FitWindow minus{1e-6, 1e-3};
    FitWindow plus{1e-6, 1e-3};
    double tol = 0.05;
    double tol_critical = 0.10;
    double shared_tol = 0.02;
};

struct WaveRates {
    std::vector<RateReport> reports;  // u-, v-, u+, v+
    double shared_minus_gap = 0.0;    // relative gap between the u and v rates at -inf
    bool shared_ok = false;
    bool critical = false;
    double u_plus_linear_rate = 0.0;  // min(lambda K / c, (sqrt(c^2+4) - c)/2)
};

/// Fits all four tails of a computed wave against the closed-form exponents:
/// -inf: (c - sqrt(c^2 - 4(1 - lambda)))/2 (sqrt(1 - lambda) with a linear prefactor at c*),
/// +inf: lambda K / c.
inline WaveRates check_wave_rates(const WaveProfile& w, const ModelParams& p, const WaveRateOptions& o = {}) {
    WaveRates out;
    const Vec xi = w.grid.nodes();
    out.critical = is_critical(w.c, p);
    const double tol = out.critical ? o.tol_critical : o.tol;
    const double a = 1.0 - p.lambda;
    const double mu_minus = out.critical ? std::sqrt(a) : (w.c - std::sqrt(w.c * w.c - 4.0 * a)) / 2.0;
    const double plus_rate = p.lambda * p.K / w.c;
    out.u_plus_linear_rate = std::min(plus_rate, 0.5 * (std::sqrt(w.c * w.c + 4.0) - w.c));

    auto one = [&](const std::string& q, const Vec& prof, Side side, double limit, double theory, double scale) {
        const FitWindow want = side == Side::minus ? o.minus : o.plus;
        const FitWindow win =
            resolved_window(w.grid, prof, side, limit, {want.lo * scale, want.hi * scale});
        RateReport r = fit_tail_rate(xi, prof, side, limit, win, side == Side::minus && out.critical);
        r.quantity = q;
        r.window_adapted = win.lo != want.lo * scale || win.hi != want.hi * scale;
        grade(r, theory, tol);
        return r;
    };
    const double vs = 1.0 / p.K;
    out.reports.push_back(one("u", w.u, Side::minus, 0.0, mu_minus, 1.0));
    out.reports.push_back(one("v", w.v, Side::minus, 0.0, mu_minus, vs));
    out.reports.push_back(one("u", w.u, Side::plus, 1.0, plus_rate, 1.0));
    out.reports.push_back(one("v", w.v, Side::plus, 1.0 / p.K, plus_rate, vs));
    const double ru = out.reports[0].fitted_rate, rv = out.reports[1].fitted_rate;
    out.shared_minus_gap = std::abs(ru - rv) / std::abs(ru);
    out.shared_ok = out.shared_minus_gap <= o.shared_tol;
    return out;
}

struct MonotonicityAudit {
    double min_du = 0.0;  // min forward difference of u over the interior set
    double min_dv = 0.0;
    int interior_nodes = 0;
    std::vector<int> flat_u;  // node indices where u fails to increase strictly
    std::vector<int> flat_v;
    double identity_gap = 0.0;  // sup |v - V(u)|
    bool identity_checked = false;
    bool pass() const {
        return flat_u.empty() && flat_v.empty() && (!identity_checked || identity_gap <= 1e-8);
    }
};

/// Strict increase of u (and v when given) where u lies in (1e-5, 1 - 1e-5), plus the
/// integral identity v = V(u) when a model and speed are supplied.
inline MonotonicityAudit strict_monotonicity_audit(const Grid& g, const Vec& u, const Vec& v, double c,
                                                   const ModelParams* p, double top = 1.0) {
    MonotonicityAudit a;
    a.min_du = a.min_dv = 1e300;
    for (int i = 0; i < g.n; ++i) {
        if (!(u[i] > 1e-5 && u[i] < top - 1e-5)) continue;
        ++a.interior_nodes;
        const double du = u[i + 1] - u[i];
        a.min_du = std::min(a.min_du, du);
        if (du <= 0.0) a.flat_u.push_back(i);
        if (!v.empty()) {
            const double dv = v[i + 1] - v[i];
            a.min_dv = std::min(a.min_dv, dv);
            if (dv <= 0.0) a.flat_v.push_back(i);
        }
    }
    if (a.interior_nodes == 0) a.min_du = a.min_dv = 0.0;
    if (v.empty()) a.min_dv = 0.0;
    if (p != nullptr && !v.empty()) {
        const Vec vv = v_from_u(g, u, c, *p).v;
        a.identity_gap = sup_diff(v, vv);
        a.identity_checked = true;
    }
    return a;
}

inline MonotonicityAudit strict_monotonicity_audit(const WaveProfile& w, const ModelParams& p) {
    return strict_monotonicity_audit(w.grid, w.u, w.v, w.c, &p);
}

struct SubcriticalReport {
    OriginClassification origin;
    double quasi_period = 0.0;  // 2 pi / Im(mu)
    bool sign_change = false;
    double sign_change_at = 0.0;        // xi of the first sign change
    double distance_from_seed = 0.0;    // how far the linear solution travelled before changing sign
};

/// Witness of non-existence below c*: integrates u'' - c u' + (1 - lambda) u = 0 with RK4 from
/// a small positive tail seed growing at Re(mu) and reports the first sign change.
inline SubcriticalReport subcritical_diagnostic(const ModelParams& p, double c, const Grid& g) {
    require_lambda_below_one(p);
    if (!(c > 0.0)) throw PreconditionError("subcritical_diagnostic: c must be > 0");
    if (speed_admissible(c, p)) {
        throw PreconditionError("subcritical_diagnostic: c = " + std::to_string(c) + " is not below c* = " +
                                std::to_string(min_speed(p)));
    }
    SubcriticalReport r;
    r.origin = classify_origin(c, p);
    const double im = std::abs(r.origin.mu_minus.imag());
    r.quasi_period = im > 0.0 ? 2.0 * std::numbers::pi / im : std::numeric_limits<double>::infinity();
    const double a = 1.0 - p.lambda;
    const double h = std::min(g.h(), 0.05);
    double u = 1e-8, du = r.origin.mu_minus.real() * u;
    auto f = [&](double y, double dy) { return std::pair<double, double>{dy, c * dy - a * y}; };
    const double x0 = -g.L;
    const int steps = static_cast<int>(std::ceil(2.0 * g.L / h));
    for (int k = 0; k < steps; ++k) {
        const auto [k1a, k1b] = f(u, du);
        const auto [k2a, k2b] = f(u + 0.5 * h * k1a, du + 0.5 * h * k1b);
        const auto [k3a, k3b] = f(u + 0.5 * h * k2a, du + 0.5 * h * k2b);
        const auto [k4a, k4b] = f(u + h * k3a, du + h * k3b);
        const double un = u + h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
        const double dun = du + h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
        if (un <= 0.0) {
            const double t = u / (u - un);
            r.sign_change = true;
            r.sign_change_at = x0 + (k + t) * h;
            r.distance_from_seed = (k + t) * h;
            break;
        }
        u = un;
        du = dun;
    }
    return r;
}

}  // namespace invwave
