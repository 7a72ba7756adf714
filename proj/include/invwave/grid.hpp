#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"

namespace invwave {

using Vec = std::vector<double>;

/// Uniform truncation of the real line: nodes xi_i = -L + i h, h = 2L/n.
struct Grid {
    double L = 60.0;
    int n = 2400;

    static Grid make(double L, int n) {
        Grid g{L, n};
        g.validate();
        return g;
    }

    void validate() const {
        if (!(L > 0.0) || !std::isfinite(L)) throw PreconditionError("grid: L must be > 0");
        if (n < 8 || n % 2 != 0) {
            throw PreconditionError("grid: n must be even and >= 8 (got " + std::to_string(n) + ")");
        }
    }

    double h() const { return 2.0 * L / n; }
    double xi(int i) const { return -L + i * h(); }
    int size() const { return n + 1; }
    int mid() const { return n / 2; }

    /// Below this the stencil stops resolving the profile; results are flagged, not refused.
    bool coarse() const { return n < 64; }

    Vec nodes() const {
        Vec x(size());
        for (int i = 0; i <= n; ++i) x[i] = xi(i);
        return x;
    }
};

/// Three-point stencil of w'' - c w' at interior nodes.
/// Central differences when the cell Peclet number c h / 2 stays below one; otherwise the
/// first-derivative term falls back to a backward difference so the operator keeps
/// nonnegative off-diagonals (required by the monotone iteration).
struct Stencil {
    double lo = 0.0;  // coefficient of w_{i-1}
    double di = 0.0;  // coefficient of w_i
    double up = 0.0;  // coefficient of w_{i+1}
    bool central = true;

    static Stencil make(double h, double c) {
        Stencil s;
        const double h2 = h * h;
        if (c * h <= 2.0) {
            s.lo = 1.0 / h2 + c / (2.0 * h);
            s.di = -2.0 / h2;
            s.up = 1.0 / h2 - c / (2.0 * h);
        } else {
            s.central = false;
            s.lo = 1.0 / h2 + c / h;
            s.di = -2.0 / h2 - c / h;
            s.up = 1.0 / h2;
        }
        return s;
    }

    double apply(const Vec& w, int i) const { return lo * w[i - 1] + di * w[i] + up * w[i + 1]; }
};

/// Tridiagonal system  lo[i] x[i-1] + di[i] x[i] + up[i] x[i+1] = rhs[i].
struct Tridiag {
    Vec lo, di, up;

    explicit Tridiag(int size = 0) : lo(size, 0.0), di(size, 0.0), up(size, 0.0) {}

    int size() const { return static_cast<int>(di.size()); }

    /// Thomas algorithm without pivoting.
    Vec solve(const Vec& rhs) const {
        const int m = size();
        Vec cp(m), dp(m), x(m);
        double piv = di[0];
        if (piv == 0.0 || !std::isfinite(piv)) throw InternalError("tridiagonal solve: zero pivot at row 0");
        cp[0] = up[0] / piv;
        dp[0] = rhs[0] / piv;
        for (int i = 1; i < m; ++i) {
            piv = di[i] - lo[i] * cp[i - 1];
            if (piv == 0.0 || !std::isfinite(piv)) {
                throw InternalError("tridiagonal solve: zero pivot at row " + std::to_string(i));
            }
            cp[i] = up[i] / piv;
            dp[i] = (rhs[i] - lo[i] * dp[i - 1]) / piv;
        }
        x[m - 1] = dp[m - 1];
        for (int i = m - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
        return x;
    }
};

/// Tridiagonal system factored once and solved many times (constant-coefficient time stepping).
class FactoredTridiag {
public:
    FactoredTridiag() = default;

    explicit FactoredTridiag(const Tridiag& t) : lo_(t.lo), cp_(t.size()), inv_(t.size()) {
        const int m = t.size();
        double piv = t.di[0];
        if (piv == 0.0) throw InternalError("factored tridiagonal: zero pivot");
        inv_[0] = 1.0 / piv;
        cp_[0] = t.up[0] * inv_[0];
        for (int i = 1; i < m; ++i) {
            piv = t.di[i] - t.lo[i] * cp_[i - 1];
            if (piv == 0.0) throw InternalError("factored tridiagonal: zero pivot");
            inv_[i] = 1.0 / piv;
            cp_[i] = t.up[i] * inv_[i];
        }
    }

    void solve_in_place(Vec& x) const {
        const int m = static_cast<int>(x.size());
        x[0] *= inv_[0];
        for (int i = 1; i < m; ++i) x[i] = (x[i] - lo_[i] * x[i - 1]) * inv_[i];
        for (int i = m - 2; i >= 0; --i) x[i] -= cp_[i] * x[i + 1];
    }

private:
    Vec lo_, cp_, inv_;
};

/// Banded system with kl sub- and ku super-diagonals, solved by Gaussian elimination with
/// partial pivoting (fill-in widens the upper band to kl + ku).
class BandMatrix {
public:
    BandMatrix(int size, int kl, int ku) : m_(size), kl_(kl), ku_(ku), w_(2 * kl + ku + 1), a_(size * w_, 0.0) {}

    int size() const { return m_; }

    /// Entry (i, j) with |i - j| inside the band.
    double& operator()(int i, int j) { return a_[i * w_ + (j - i + kl_)]; }

    /// Destroys the stored matrix.
    bool solve(Vec& b) {
        const int ku2 = kl_ + ku_;
        for (int k = 0; k < m_; ++k) {
            const int last = std::min(m_ - 1, k + kl_);
            int piv = k;
            double best = std::abs(at(k, k));
            for (int i = k + 1; i <= last; ++i) {
                if (std::abs(at(i, k)) > best) {
                    best = std::abs(at(i, k));
                    piv = i;
                }
            }
            if (best == 0.0 || !std::isfinite(best)) return false;
            const int jend = std::min(m_ - 1, k + ku2);
            if (piv != k) {
                for (int j = k; j <= jend; ++j) std::swap(at(k, j), at(piv, j));
                std::swap(b[k], b[piv]);
            }
            const double inv = 1.0 / at(k, k);
            for (int i = k + 1; i <= last; ++i) {
                const double f = at(i, k) * inv;
                if (f == 0.0) continue;
                at(i, k) = 0.0;
                for (int j = k + 1; j <= jend; ++j) at(i, j) -= f * at(k, j);
                b[i] -= f * b[k];
            }
        }
        for (int k = m_ - 1; k >= 0; --k) {
            double s = b[k];
            const int jend = std::min(m_ - 1, k + ku2);
            for (int j = k + 1; j <= jend; ++j) s -= at(k, j) * b[j];
            b[k] = s / at(k, k);
        }
        return true;
    }

private:
    // Row-major storage of columns j in [i - kl, i + kl + ku].
    double& at(int i, int j) { return a_[i * w_ + (j - i + kl_)]; }

    int m_, kl_, ku_, w_;
    Vec a_;
};

inline double sup_norm(const Vec& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

inline double sup_diff(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace invwave
