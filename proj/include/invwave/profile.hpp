#pragma once

#include <algorithm>
#include <cmath>

#include "grid.hpp"

namespace invwave {

/// Coupled (u, v) front at speed c sampled on a grid.
struct WaveProfile {
    Grid grid;
    double c = 0.0;
    Vec u, v;
    double residual_u = 0.0;
    double residual_v = 0.0;
    int pin_node = 0;
    double pin_level = 0.0;
    bool coarse = false;  // grid too coarse for the residual contract; results are flagged
    bool monotone = true;
};

/// Catmull-Rom cubic interpolation of nodal data at xi (linear in the end cells); NaN outside [-L, L].
inline double interp_cubic(const Grid& g, const Vec& w, double x) {
    const double h = g.h();
    const double s = (x + g.L) / h;
    if (s < -1e-12 || s > g.n + 1e-12) return std::nan("");
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, g.n - 1);
    const double t = s - i;
    if (i == 0 || i + 2 > g.n) return (1.0 - t) * w[i] + t * w[i + 1];
    const double a = w[i - 1], b = w[i], c = w[i + 1], d = w[i + 2];
    return b + 0.5 * t * (c - a + t * (2.0 * a - 5.0 * b + 4.0 * c - d + t * (3.0 * (b - c) + d - a)));
}

/// Rightmost interpolated crossing of `level` by nodal data; NaN when there is none.
inline double level_crossing(const Grid& g, const Vec& w, double level) {
    for (int i = g.n - 1; i >= 0; --i) {
        const double a = w[i] - level, b = w[i + 1] - level;
        if ((a >= 0.0) != (b >= 0.0)) return g.xi(i) + g.h() * a / (a - b);
    }
    return std::nan("");
}

}  // namespace invwave
