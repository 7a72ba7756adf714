#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "profile.hpp"

namespace invwave {

/// w1(xi) ~ w2(xi + theta) at the optimum.
struct AlignmentReport {
    double theta = 0.0;
    double sup_gap = 0.0;  // max of the u and v gaps at theta
    double gap_u = 0.0;
    double gap_v = 0.0;
    int overlap_nodes = 0;
};

namespace detail {

struct ShiftGap {
    double u = 0.0, v = 0.0;
    int nodes = 0;
};

inline ShiftGap shift_gap(const WaveProfile& a, const WaveProfile& b, double theta) {
    ShiftGap r;
    const bool with_v = !a.v.empty() && !b.v.empty();
    for (int i = 0; i <= a.grid.n; ++i) {
        const double x = a.grid.xi(i) + theta;
        const double ub = interp_cubic(b.grid, b.u, x);
        if (std::isnan(ub)) continue;
        ++r.nodes;
        r.u = std::max(r.u, std::abs(a.u[i] - ub));
        if (with_v) r.v = std::max(r.v, std::abs(a.v[i] - interp_cubic(b.grid, b.v, x)));
    }
    return r;
}

// Whole-cell shift on identical grids: plain index offset, no interpolation rounding.
inline ShiftGap shift_gap_cells(const WaveProfile& a, const WaveProfile& b, int k) {
    ShiftGap r;
    const bool with_v = !a.v.empty() && !b.v.empty();
    for (int i = std::max(0, -k); i <= std::min(a.grid.n, b.grid.n - k); ++i) {
        ++r.nodes;
        r.u = std::max(r.u, std::abs(a.u[i] - b.u[i + k]));
        if (with_v) r.v = std::max(r.v, std::abs(a.v[i] - b.v[i + k]));
    }
    return r;
}

}  // namespace detail

/// Optimal translation between two fronts: integer-cell scan around the shift that matches
/// a common level crossing, then golden-section refinement on the cubic interpolant.
inline AlignmentReport translation_align(const WaveProfile& w1, const WaveProfile& w2) {
    const double h = w1.grid.h();
    if (std::abs(w2.grid.h() - h) > 1e-12 * h) throw PreconditionError("translation_align: grid spacings differ");
    const auto [min1, max1] = std::minmax_element(w1.u.begin(), w1.u.end());
    const auto [min2, max2] = std::minmax_element(w2.u.begin(), w2.u.end());
    const double lo = std::max(*min1, *min2), hi = std::min(*max1, *max2);
    if (!(lo < hi)) throw PreconditionError("translation_align: profiles have disjoint value ranges");
    const double level = 0.5 * (lo + hi);
    const double x1 = level_crossing(w1.grid, w1.u, level);
    const double x2 = level_crossing(w2.grid, w2.u, level);
    if (std::isnan(x1) || std::isnan(x2)) throw PreconditionError("translation_align: no common level crossing");

    const bool same_grid = w1.grid.L == w2.grid.L && w1.grid.n == w2.grid.n;
    auto cells = [&](int k) {
        return same_grid ? detail::shift_gap_cells(w1, w2, k) : detail::shift_gap(w1, w2, k * h);
    };
    const int k0 = static_cast<int>(std::lround((x2 - x1) / h));
    int best_k = k0;
    double best = 1e300;
    for (int k = k0 - 10; k <= k0 + 10; ++k) {
        const double gk = cells(k).u;
        if (gk < best) {
            best = gk;
            best_k = k;
        }
    }

    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = (best_k - 1) * h, b = (best_k + 1) * h;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = detail::shift_gap(w1, w2, c).u, fd = detail::shift_gap(w1, w2, d).u;
    for (int it = 0; it < 80 && (b - a) > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = detail::shift_gap(w1, w2, c).u;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = detail::shift_gap(w1, w2, d).u;
        }
    }
    double theta = 0.5 * (a + b);
    detail::ShiftGap g = detail::shift_gap(w1, w2, theta);
    // The grid-multiple candidate is exact for shifted copies; keep it when it is no worse.
    if (best <= g.u) {
        theta = best_k * h;
        g = cells(best_k);
    }

    AlignmentReport r;
    r.theta = theta;
    r.gap_u = g.u;
    r.gap_v = g.v;
    r.sup_gap = std::max(g.u, g.v);
    r.overlap_nodes = g.nodes;
    return r;
}

}  // namespace invwave
