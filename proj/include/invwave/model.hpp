#pragma once

// Model parameters, reaction terms and closed-form parameter gates for the
// reduced precursor/differentiated-cell invasion system
//
//   u'' - c u' + u (1 - lambda - u + lambda K v) = 0
//   -c v' + lambda u (1 - K v) = 0,      (u, v)(-inf) = (0, 0), (u, v)(+inf) = (1, 1/K).

#include <cmath>
#include <complex>
#include <string>
#include <utility>

#include "errors.hpp"

namespace invwave {

/// Dimensional parameters of the original cell model.
struct DimensionalParams {
    double d = 1.0;      // diffusion rate of u
    double alpha = 1.0;  // proliferation rate
    double beta = 0.5;   // maximal differentiation rate
    double k1 = 1.0;     // carrying capacity of u
    double k2 = 1.0;     // carrying capacity of v
    double nu = 0.0;     // contribution of v to the carrying capacity of u
};

/// Nondimensional parameters. `l` is the depression parameter of the lower KPP wave.
struct ModelParams {
    double lambda = 0.2;
    double K = 1.0;
    double nu = 0.0;
    double l = 0.08;

    /// Default depression parameter 0.1 (1 - lambda).
    static double default_l(double lambda) { return 0.1 * (1.0 - lambda); }

    static ModelParams make(double lambda, double K, double nu = 0.0) {
        return ModelParams{lambda, K, nu, default_l(lambda)};
    }
};

struct Point2 {
    double u = 0.0;
    double v = 0.0;
};

struct Equilibria {
    Point2 A;           // (0, 0)
    Point2 B_original;  // (1 - nu/K, 1/K) in the once-scaled coordinates
    Point2 B_reduced;   // (1, 1/K) after rescaling u
};

struct OriginClassification {
    double discriminant = 0.0;  // c^2 - 4 (1 - lambda)
    std::complex<double> mu_minus;
    std::complex<double> mu_plus;
    bool oscillatory = false;
};

struct GateResult {
    double value = 0.0;  // bound or margin-carrying quantity
    bool ok = false;
};

inline void require_lambda_below_one(const ModelParams& p) {
    if (!(p.lambda < 1.0)) {
        throw ParameterError("lambda must be < 1 (got " + std::to_string(p.lambda) + ")");
    }
}

/// Checks the ModelParams invariants used by the wave pipeline (0 < lambda < 1, K > 0, l > 0).
inline void validate(const ModelParams& p) {
    if (!(p.lambda > 0.0)) throw ParameterError("lambda must be > 0");
    require_lambda_below_one(p);
    if (!(p.K > 0.0)) throw ParameterError("K must be > 0");
    if (!(p.l > 0.0)) throw ParameterError("l must be > 0");
    if (!(p.nu >= 0.0)) throw ParameterError("nu must be >= 0");
}

inline ModelParams nondimensionalize(const DimensionalParams& p) {
    if (p.alpha == 0.0) throw ParameterError("alpha = 0: lambda = beta/alpha undefined");
    if (p.k2 == 0.0) throw ParameterError("k2 = 0: K = k1/k2 undefined");
    if (!(p.d > 0.0) || !(p.alpha > 0.0) || !(p.beta > 0.0) || !(p.k1 > 0.0) || !(p.k2 > 0.0)) {
        throw ParameterError("d, alpha, beta, k1, k2 must be strictly positive");
    }
    if (!(p.nu >= 0.0)) throw ParameterError("nu must be >= 0");
    ModelParams out;
    out.lambda = p.beta / p.alpha;
    out.K = p.k1 / p.k2;
    out.nu = p.nu;
    out.l = ModelParams::default_l(out.lambda);
    return out;
}

inline Equilibria equilibria(const ModelParams& p) {
    Equilibria e;
    e.B_original = {1.0 - p.nu / p.K, 1.0 / p.K};
    e.B_reduced = {1.0, 1.0 / p.K};
    return e;
}

/// Reaction terms (f_u, f_v) of the reduced system. Defined for all real u, v.
inline Point2 reaction(double u, double v, const ModelParams& p) {
    return {u * (1.0 - p.lambda - u + p.lambda * p.K * v), p.lambda * u * (1.0 - p.K * v)};
}

/// Minimal wave speed c* = 2 sqrt(1 - lambda).
inline double min_speed(const ModelParams& p) {
    require_lambda_below_one(p);
    return 2.0 * std::sqrt(1.0 - p.lambda);
}

/// True when c is at or above c* up to a relative rounding slack.
inline bool speed_admissible(double c, const ModelParams& p) {
    const double cs = min_speed(p);
    return c >= cs * (1.0 - 1e-12);
}

/// True when c equals c* up to rounding; the critical branch of every closed form.
inline bool is_critical(double c, const ModelParams& p) {
    const double cs = min_speed(p);
    return std::abs(c - cs) <= 1e-12 * cs;
}

/// Upper-comparison hypothesis: 0 < lambda <= 2 / (2 + K (1 + sqrt 2)).
inline GateResult lambda_gate(const ModelParams& p) {
    if (!(p.K > 0.0)) throw ParameterError("K must be > 0");
    const double bound = 2.0 / (2.0 + p.K * (1.0 + std::sqrt(2.0)));
    return {bound, p.lambda > 0.0 && p.lambda <= bound};
}

/// g(c) = 2 c (1 - lambda) / (c + sqrt(c^2 + 4 (1 - lambda))); ok iff g >= lambda K.
/// The value returned is g itself; the margin is g - lambda K.
inline GateResult decay_ordering_gate(double c, const ModelParams& p) {
    if (!speed_admissible(c, p)) {
        throw PreconditionError("decay_ordering_gate: c = " + std::to_string(c) + " below c* = " +
                                std::to_string(min_speed(p)));
    }
    const double a = 1.0 - p.lambda;
    const double g = 2.0 * c * a / (c + std::sqrt(c * c + 4.0 * a));
    // The equality case of the gate sits exactly on the bound; allow rounding there.
    const double lk = p.lambda * p.K;
    return {g, g >= lk - 1e-14 * std::max(1.0, lk)};
}

/// Roots of mu^2 - c mu + (1 - lambda) = 0 (linearization of the u-equation at the origin).
inline OriginClassification classify_origin(double c, const ModelParams& p) {
    if (!(c > 0.0)) throw PreconditionError("classify_origin: c must be > 0");
    OriginClassification oc;
    oc.discriminant = c * c - 4.0 * (1.0 - p.lambda);
    if (p.lambda < 1.0 && is_critical(c, p)) oc.discriminant = 0.0;  // c* itself, up to rounding
    const std::complex<double> root = std::sqrt(std::complex<double>(oc.discriminant, 0.0));
    oc.mu_minus = (c - root) / 2.0;
    oc.mu_plus = (c + root) / 2.0;
    oc.oscillatory = oc.discriminant < 0.0;
    return oc;
}

/// Both sandwich gates at once; used by the wave pipeline and the CLI.
struct GateReport {
    double c_star = 0.0;
    GateResult lambda_gate;
    GateResult decay_gate;  // evaluated at the requested speed
    bool speed_ok = false;
    bool all_ok() const { return lambda_gate.ok && decay_gate.ok && speed_ok; }
};

inline GateReport check_gates(double c, const ModelParams& p) {
    GateReport r;
    r.c_star = min_speed(p);
    r.lambda_gate = lambda_gate(p);
    r.speed_ok = speed_admissible(c, p);
    if (r.speed_ok) r.decay_gate = decay_ordering_gate(c, p);
    return r;
}

}  // namespace invwave
