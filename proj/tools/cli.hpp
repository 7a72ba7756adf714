#pragma once

// The invwave command-line front end. Kept in a header so the test suite can drive it in-process.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "invwave/invwave.hpp"

namespace invwave::cli {

namespace fs = std::filesystem;
using io::Json;

enum Exit : int { ok = 0, usage = 1, gate = 2, numerical = 3, partial = 4 };

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Common {
    double lambda = 0.2;
    double K = 1.0;
    double nu = 0.0;
    double c = kNaN;  // NaN: c*
    double l = kNaN;  // NaN: 0.1 (1 - lambda)
    double L = 60.0;
    int n = 2400;
    double tol = 1e-10;
    std::string out = ".";
};

inline void add_common(CLI::App& sub, Common& o, bool grid = true) {
    sub.add_option("--lambda", o.lambda, "differentiation/proliferation ratio, 0 < lambda < 1");
    sub.add_option("--K", o.K, "capacity ratio k1/k2");
    sub.add_option("--nu", o.nu, "contribution of v to the capacity of u (waves need 0)");
    sub.add_option("--c", o.c, "wave speed (default: c* = 2 sqrt(1 - lambda))");
    sub.add_option("--l", o.l, "lower-solution depression (default 0.1 (1 - lambda))");
    if (grid) {
        sub.add_option("--L", o.L, "half-width of the computational interval [-L, L]");
        sub.add_option("--n", o.n, "number of grid cells (even)");
        sub.add_option("--tol", o.tol, "iteration tolerance");
    }
    sub.add_option("--out", o.out, "output directory (INVWAVE_OUT overrides)");
    sub.fallthrough();  // --config belongs to the top-level app
}

/// Reads a flat key=value file and files every unsectioned key under the subcommand that was
/// invoked, so one file format serves all subcommands.
class FlatConfig : public CLI::ConfigINI {
public:
    explicit FlatConfig(const CLI::App* app) : app_(app) {}

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        std::vector<CLI::ConfigItem> items = CLI::ConfigINI::from_config(in);
        const auto subs = app_->get_subcommands();
        if (subs.empty()) return items;
        for (CLI::ConfigItem& it : items) {
            if (it.parents.empty()) it.parents.push_back(subs.front()->get_name());
        }
        return items;
    }

private:
    const CLI::App* app_;
};

inline fs::path out_dir(const Common& o) {
    const char* env = std::getenv("INVWAVE_OUT");
    fs::path d = (env != nullptr && *env != '\0') ? fs::path(env) : fs::path(o.out);
    fs::create_directories(d);
    return d;
}

inline ModelParams params(const Common& o) {
    if (!std::isfinite(o.lambda) || !std::isfinite(o.K) || !std::isfinite(o.nu)) {
        throw ParameterError("lambda, K and nu must be finite");
    }
    ModelParams p{o.lambda, o.K, o.nu, std::isnan(o.l) ? ModelParams::default_l(o.lambda) : o.l};
    validate(p);
    return p;
}

inline double speed(const Common& o, const ModelParams& p) {
    if (std::isnan(o.c)) return min_speed(p);
    if (!std::isfinite(o.c) || !(o.c > 0.0)) throw ParameterError("c must be a positive number");
    return o.c;
}

inline Grid grid(const Common& o) {
    if (!(o.L > 0.0) || o.n < 8 || o.n % 2 != 0) {
        throw ParameterError("grid needs L > 0 and an even n >= 8");
    }
    if (!(o.tol > 0.0)) throw ParameterError("tol must be > 0");
    return Grid{o.L, o.n};
}

inline Json config_json(const std::string& cmd, const Common& o, const ModelParams& p, double c,
                        const fs::path& dir) {
    Json j;
    j["command"] = cmd;
    j["lambda"] = p.lambda;
    j["K"] = p.K;
    j["nu"] = p.nu;
    j["c"] = io::num(c);
    j["l"] = p.l;
    j["L"] = o.L;
    j["n"] = o.n;
    j["tol"] = o.tol;
    j["out"] = dir.string();
    return j;
}

inline Json gate_json(const ModelParams& p, double c) {
    Json j;
    const GateResult lg = lambda_gate(p);
    j["c_star"] = min_speed(p);
    j["lambda_gate"] = {{"bound", lg.value}, {"margin", lg.value - p.lambda}, {"ok", lg.ok}};
    const bool sp = speed_admissible(c, p);
    j["speed_ok"] = sp;
    if (sp) {
        const GateResult dg = decay_ordering_gate(c, p);
        j["decay_gate"] = {{"g", dg.value}, {"lambda_K", p.lambda * p.K}, {"margin", dg.value - p.lambda * p.K},
                           {"ok", dg.ok}};
    } else {
        j["decay_gate"] = nullptr;
    }
    const OriginClassification oc = classify_origin(c, p);
    j["origin"] = {{"discriminant", oc.discriminant},
                   {"mu_minus", {oc.mu_minus.real(), oc.mu_minus.imag()}},
                   {"mu_plus", {oc.mu_plus.real(), oc.mu_plus.imag()}},
                   {"oscillatory", oc.oscillatory}};
    j["nu_ok"] = p.nu == 0.0;
    return j;
}

inline Json trace_json(const IterationTrace& t) {
    Json j;
    j["seed"] = to_string(t.seed);
    j["penalty"] = t.penalty;
    j["converged"] = t.converged;
    j["steps"] = t.steps;
    j["sup_change"] = io::array(t.sup_change);
    j["order_margin"] = io::array(t.order_margin);
    j["bracket_margin"] = io::array(t.bracket_margin);
    j["accelerated"] = t.accelerated;
    return j;
}

inline Json rate_json(const RateReport& r) {
    return {{"quantity", r.quantity},        {"side", to_string(r.side)},
            {"critical_mode", r.critical_mode}, {"fitted_rate", r.fitted_rate},
            {"theoretical_rate", r.theoretical_rate}, {"rel_error", r.rel_error},
            {"tolerance", r.tolerance},      {"window", {r.lo, r.hi}},
            {"window_adapted", r.window_adapted}, {"nodes", r.nodes},
            {"amplitude", r.amplitude},      {"pass", r.pass}};
}

inline Json check_json(const InequalityCheck& c) {
    return {{"name", c.name}, {"worst", c.worst}, {"bound", c.bound}, {"pass", c.pass}};
}

inline Json sandwich_json(const SandwichPair& s) {
    const SandwichReport& r = s.report;
    Json j;
    j["zeta_upper"] = s.zeta_upper;
    j["zeta_lower"] = s.zeta_lower;
    j["eps_num"] = r.eps_num;
    j["checks"] = {check_json(r.upper_u), check_json(r.lower_u), check_json(r.upper_v), check_json(r.lower_v)};
    j["upper_u_identity_gap"] = r.upper_u_identity_gap;
    j["lower_u_identity_gap"] = r.lower_u_identity_gap;
    j["upper_v_shifted"] = r.upper_v_shifted;
    j["lower_v_shifted"] = r.lower_v_shifted;
    j["ordering_u"] = r.ordering_u;
    j["ordering_v"] = r.ordering_v;
    j["upper_comparison"] = r.upper_comparison;
    j["lower_comparison"] = r.lower_comparison;
    j["ordering_ok"] = r.ordering_ok;
    j["comparison_ok"] = r.comparison_ok;
    j["boundary_ok"] = r.boundary_ok;
    j["pass"] = r.pass();
    return j;
}

inline void write_sandwich_csv(const fs::path& path, const SandwichPair& s) {
    const Vec xi = s.grid.nodes();
    io::write_csv(path, {"xi", "u_upper", "v_upper", "u_lower", "v_lower"},
                  {&xi, &s.u_upper, &s.v_upper, &s.u_lower, &s.v_lower});
}

inline std::string wave_plot_script(bool with_sandwich) {
    std::string s =
        "set datafile separator ','\n"
        "set xlabel 'xi'\n"
        "set key left top\n";
    if (with_sandwich) s += "set multiplot layout 2,1\n";
    s += "plot 'profile.csv' using 1:2 skip 1 with lines title 'u', \\\n"
         "     'profile.csv' using 1:3 skip 1 with lines title 'v'\n";
    if (with_sandwich) {
        s += "plot 'sandwich.csv' using 1:2 skip 1 with lines title 'u upper', \\\n"
             "     'sandwich.csv' using 1:4 skip 1 with lines title 'u lower', \\\n"
             "     'sandwich.csv' using 1:3 skip 1 with lines title 'v upper', \\\n"
             "     'sandwich.csv' using 1:5 skip 1 with lines title 'v lower'\n"
             "unset multiplot\n";
    }
    return s;
}

// ---------------------------------------------------------------------------------------------

inline int cmd_check_params(const Common& o, bool speed_given, std::ostream& out) {
    const ModelParams p = params(o);
    const double c = speed(o, p);
    Json j;
    Json cfg = {{"command", "check-params"}, {"lambda", p.lambda}, {"K", p.K}, {"nu", p.nu}};
    cfg["c"] = speed_given ? Json(c) : Json(nullptr);
    j["config"] = cfg;
    j["c_evaluated"] = c;
    const Json g = gate_json(p, c);
    for (auto it = g.begin(); it != g.end(); ++it) j[it.key()] = it.value();
    const bool ok = g["lambda_gate"]["ok"].get<bool>() && g["speed_ok"].get<bool>() &&
                    !g["decay_gate"].is_null() && g["decay_gate"]["ok"].get<bool>() && g["nu_ok"].get<bool>();
    j["all_ok"] = ok;
    out << j.dump(2) << '\n';
    return ok ? Exit::ok : Exit::gate;
}

inline int cmd_solve_kpp(const Common& o, const std::string& which, double pin, std::ostream& out) {
    const ModelParams p = params(o);
    const double c = speed(o, p);
    const Grid g = grid(o);
    KppProblem pb;
    if (which == "upper") {
        pb = upper_kpp_problem(p, c);
    } else if (which == "lower") {
        pb = lower_kpp_problem(p, c, p.l);
    } else {
        throw ParameterError("--which must be upper or lower");
    }
    KppSolveOptions opt;
    opt.tol = o.tol;
    const KppWave w = solve_kpp(pb, g, std::isnan(pin) ? 0.5 * pb.b : pin, opt);
    const fs::path dir = out_dir(o);
    const Vec xi = g.nodes();
    io::write_csv(dir / "kpp.csv", {"xi", "omega"}, {&xi, &w.omega});
    const KppRates r = kpp_rates(pb);
    Json j;
    j["config"] = config_json("solve-kpp", o, p, c, dir);
    j["config"]["which"] = which;
    j["config"]["pin_level"] = w.pin_level;
    j["problem"] = {{"abar", pb.abar}, {"b", pb.b}, {"c", pb.c}, {"critical", r.critical}};
    j["rates"] = {{"mu_minus", r.mu_minus}, {"mu_plus", r.mu_plus}, {"prefactor_linear", r.prefactor_linear}};
    j["residual_sup"] = w.residual_sup;
    j["newton_steps"] = w.newton_steps;
    j["monotone"] = w.monotone;
    io::write_json(dir / "kpp.json", j);
    out << "kpp: residual " << io::fmt(w.residual_sup) << " after " << w.newton_steps << " Newton steps\n";
    return Exit::ok;
}

inline int cmd_build_sandwich(const Common& o, std::ostream& out) {
    const ModelParams p = params(o);
    const double c = speed(o, p);
    const Grid g = grid(o);
    if (p.nu != 0.0) throw PreconditionError("the sandwich is built for nu = 0 only");
    const SandwichPair s = build_sandwich(p, c, g);
    const fs::path dir = out_dir(o);
    write_sandwich_csv(dir / "sandwich.csv", s);
    Json j;
    j["config"] = config_json("build-sandwich", o, p, c, dir);
    j["report"] = sandwich_json(s);
    io::write_json(dir / "sandwich.json", j);
    out << "sandwich: " << (s.report.pass() ? "PASS" : "FAIL") << '\n';
    return s.report.pass() ? Exit::ok : Exit::numerical;
}

struct WaveFlags {
    bool gate_free = false;
    std::string seed = "lower";
    int max_iter = 200;
};

/// Rates, audits and warnings of a wave, as written to rates.json. Returns whether all pass.
inline bool analyze_wave(const WaveProfile& w, const ModelParams& p, Json& j) {
    bool pass = true;
    Json warnings = Json::array();
    try {
        const WaveRates wr = check_wave_rates(w, p);
        Json reps = Json::array();
        for (const RateReport& r : wr.reports) {
            reps.push_back(rate_json(r));
            pass = pass && r.pass;
        }
        j["rates"] = reps;
        j["shared_minus_gap"] = wr.shared_minus_gap;
        j["shared_minus_ok"] = wr.shared_ok;
        j["critical"] = wr.critical;
        j["u_plus_linear_rate"] = wr.u_plus_linear_rate;
        pass = pass && wr.shared_ok;
    } catch (const PreconditionError& e) {
        j["rates"] = nullptr;
        j["rates_error"] = e.what();
        warnings.push_back(std::string("rate fit impossible: ") + e.what());
        pass = false;
    }
    const MonotonicityAudit a = strict_monotonicity_audit(w, p);
    j["monotonicity"] = {{"min_du", a.min_du},
                         {"min_dv", a.min_dv},
                         {"interior_nodes", a.interior_nodes},
                         {"flat_u", a.flat_u},
                         {"flat_v", a.flat_v},
                         {"identity_gap", a.identity_gap},
                         {"pass", a.pass()}};
    pass = pass && a.pass();
    const DerivativeProfile d = derivative_check(w, p);
    j["derivatives"] = {{"min_w1", d.min_w1},
                        {"min_w2", d.min_w2},
                        {"system_residual_1", d.system_residual_1},
                        {"system_residual_2", d.system_residual_2},
                        {"pass", d.pass()}};
    pass = pass && d.pass();
    j["residual_u"] = w.residual_u;
    j["residual_v"] = w.residual_v;
    constexpr double kResidualWarn = 1e-4;
    if (w.coarse || w.residual_u > kResidualWarn || w.residual_v > kResidualWarn) {
        warnings.push_back("residual warning: grid under-resolved (h = " + io::fmt(w.grid.h()) +
                           ", residual_u = " + io::fmt(w.residual_u) + ", residual_v = " + io::fmt(w.residual_v) +
                           "); refine n");
    }
    j["warnings"] = warnings;
    j["pass"] = pass;
    return pass;
}

inline int cmd_solve_wave(const Common& o, const WaveFlags& f, std::ostream& out, std::ostream& err) {
    const ModelParams p = params(o);
    const double c = speed(o, p);
    const Grid g = grid(o);
    IterationConfig cfg;
    cfg.tol = o.tol;
    cfg.max_iter = f.max_iter;
    cfg.enforce_gates = !f.gate_free;
    if (f.seed == "lower") {
        cfg.seed = Seed::lower;
    } else if (f.seed == "upper") {
        cfg.seed = Seed::upper;
    } else {
        throw ParameterError("--seed must be lower or upper");
    }
    if (f.max_iter < 1) throw ParameterError("--max-iter must be >= 1");
    validate_wave_inputs(p, c, g, cfg.enforce_gates);  // refuses before any computation

    const fs::path dir = out_dir(o);
    Json conf = config_json("solve-wave", o, p, c, dir);
    conf["gate_free"] = f.gate_free;
    conf["seed"] = f.seed;
    conf["max_iter"] = f.max_iter;

    Json sandwich;
    bool sandwich_ok = true;
    bool have_sandwich = false;
    try {
        const SandwichPair s = build_sandwich(p, c, g);
        write_sandwich_csv(dir / "sandwich.csv", s);
        sandwich = sandwich_json(s);
        sandwich_ok = s.report.pass();
        have_sandwich = true;
    } catch (const Error& e) {
        // Gates were checked above, so a failure here is numerical (typically a coarse grid).
        sandwich = {{"error", e.what()}};
        sandwich_ok = f.gate_free;  // outside the gates no sandwich is promised
    }

    WaveSolution sol;
    Json trace;
    trace["config"] = conf;
    try {
        sol = solve_wave(p, c, g, cfg);
    } catch (const NonConvergenceError& e) {
        trace["trace"] = trace_json(e.trace());
        trace["error"] = e.what();
        io::write_json(dir / "trace.json", trace);
        throw;
    }
    trace["trace"] = trace_json(sol.trace);
    trace["bracket"] = {{"l_seed", sol.bracket.l_seed},
                        {"upper_is_equilibrium", sol.bracket.upper_is_equilibrium},
                        {"left_value", sol.bracket.left_value},
                        {"robin_rate", sol.bracket.robin_rate},
                        {"penalty", sol.bracket.penalty}};
    io::write_json(dir / "trace.json", trace);

    const WaveProfile& w = sol.profile;
    const Vec xi = g.nodes();
    io::write_csv(dir / "profile.csv", {"xi", "u", "v"}, {&xi, &w.u, &w.v});

    Json rates;
    rates["config"] = conf;
    rates["sandwich"] = sandwich;
    const bool checks = analyze_wave(w, p, rates);
    const bool pass = checks && sandwich_ok;
    rates["pass"] = pass;
    io::write_json(dir / "rates.json", rates);
    io::write_text(dir / "plot.gp", wave_plot_script(have_sandwich));

    for (const auto& wmsg : rates["warnings"]) err << "warning: " << wmsg.get<std::string>() << '\n';
    out << "solve-wave: converged in " << sol.trace.steps << " sweeps, residual_u " << io::fmt(w.residual_u)
        << ", checks " << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? Exit::ok : Exit::partial;
}

struct SimFlags {
    double x_max = 400.0;
    double dx = 0.1;
    double dt = 0.002;
    double t_end = 150.0;
    std::string ic = "step";
    double amplitude = 0.5;
    double width = 5.0;
    double record_every = 0.5;
    double snapshot_every = 25.0;
    double level = 0.5;
    double window = 0.5;
    double tolerance = 0.1;
};

inline int cmd_simulate(const Common& o, const SimFlags& f, std::ostream& out) {
    const ModelParams p = params(o);
    SimConfig cfg;
    cfg.x_max = f.x_max;
    cfg.dx = f.dx;
    cfg.dt = f.dt;
    cfg.t_end = f.t_end;
    if (f.ic == "step") {
        cfg.ic = InitialCondition::step;
    } else if (f.ic == "gaussian") {
        cfg.ic = InitialCondition::gaussian;
    } else if (f.ic == "zero") {
        cfg.ic = InitialCondition::zero;
    } else {
        throw ParameterError("--ic must be step, gaussian or zero");
    }
    cfg.ic_amplitude = f.amplitude;
    cfg.ic_width = f.width;
    cfg.record_every = f.record_every;
    cfg.snapshot_every = f.snapshot_every;
    cfg.level = f.level;
    cfg.fit_window = f.window;
    if (!(f.window > 0.0 && f.window <= 1.0)) throw ParameterError("--window must lie in (0, 1]");
    if (!(f.tolerance > 0.0)) throw ParameterError("--tolerance must be > 0");
    if (!(f.amplitude > 0.0 && f.amplitude <= 1.0) || !(f.width > 0.0)) {
        throw ParameterError("--amplitude must lie in (0, 1] and --width must be > 0");
    }
    if (f.snapshot_every < 0.0) throw ParameterError("--snapshot-every must be >= 0");

    const fs::path dir = out_dir(o);
    const SimResult r = run(cfg, p);
    const double cs = min_speed(p);

    io::write_csv(dir / "fronts.csv", {"t", "x_front"}, {&r.trace.times, &r.trace.positions});
    Vec x(cfg.nodes());
    for (int i = 0; i < cfg.nodes(); ++i) x[i] = i * cfg.dx;
    std::vector<SimState> snaps = r.snapshots;
    if (snaps.empty() || std::abs(snaps.back().t - r.final_state.t) > 0.5 * cfg.dt) snaps.push_back(r.final_state);
    Json snap_list = Json::array();
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof name, "snapshot_%03zu.csv", k);
        io::write_csv(dir / "snapshots" / name, {"x", "u", "v"}, {&x, &snaps[k].u, &snaps[k].v});
        snap_list.push_back({{"file", std::string("snapshots/") + name}, {"t", snaps[k].t}});
    }

    Json j;
    Json conf = config_json("simulate", o, p, kNaN, dir);
    conf.erase("c");
    conf.erase("L");
    conf.erase("n");
    conf.erase("tol");
    conf["x_max"] = cfg.x_max;
    conf["dx"] = cfg.dx;
    conf["dt"] = cfg.dt;
    conf["t_end"] = cfg.t_end;
    conf["ic"] = f.ic;
    conf["amplitude"] = cfg.ic_amplitude;
    conf["width"] = cfg.ic_width;
    conf["record_every"] = cfg.record_every;
    conf["snapshot_every"] = cfg.snapshot_every;
    conf["level"] = cfg.level;
    conf["window"] = cfg.fit_window;
    conf["tolerance"] = f.tolerance;
    j["config"] = conf;
    j["c_star"] = cs;
    j["samples"] = r.trace.times.size();
    j["empty_front"] = r.trace.empty_front;
    j["c_emp"] = io::num(r.trace.c_emp);
    const double rel = std::abs(r.trace.c_emp - cs) / cs;
    j["rel_error"] = io::num(rel);
    j["fit_window"] = {r.trace.fit_t0, r.trace.fit_t1};
    j["fit_residual"] = r.trace.fit_residual;
    j["snapshots"] = snap_list;
    const bool pass = !r.trace.empty_front && std::isfinite(rel) && rel <= f.tolerance;
    j["pass"] = pass;
    io::write_json(dir / "summary.json", j);
    io::write_text(dir / "plot.gp",
                   "set datafile separator ','\n"
                   "set xlabel 't'\n"
                   "set ylabel 'front position'\n"
                   "plot 'fronts.csv' using 1:2 skip 1 with lines title 'x_front(t)'\n");

    if (r.trace.empty_front) {
        out << "simulate: no front (u never crosses the level)\n";
        return Exit::gate;
    }
    if (std::isnan(r.trace.c_emp)) {
        out << "simulate: too few front samples for a speed fit\n";
        return Exit::numerical;
    }
    out << "simulate: c_emp " << io::fmt(r.trace.c_emp) << ", c* " << io::fmt(cs) << ", rel " << io::fmt(rel)
        << '\n';
    return pass ? Exit::ok : Exit::partial;
}

inline int cmd_analyze(const Common& o, const std::string& profile_path, std::ostream& out) {
    const ModelParams p = params(o);
    const double c = speed(o, p);
    const fs::path dir = out_dir(o);
    Json j;
    Json conf = config_json("analyze", o, p, c, dir);
    conf["profile"] = profile_path;

    if (profile_path.empty()) {
        if (speed_admissible(c, p)) {
            throw ParameterError("analyze: give --profile, or a speed below c* for the oscillation diagnostic");
        }
        const Grid g = grid(o);
        const SubcriticalReport r = subcritical_diagnostic(p, c, g);
        j["config"] = conf;
        j["origin"] = {{"discriminant", r.origin.discriminant},
                       {"mu_minus", {r.origin.mu_minus.real(), r.origin.mu_minus.imag()}},
                       {"mu_plus", {r.origin.mu_plus.real(), r.origin.mu_plus.imag()}},
                       {"oscillatory", r.origin.oscillatory}};
        j["quasi_period"] = io::num(r.quasi_period);
        j["sign_change"] = r.sign_change;
        j["sign_change_at"] = r.sign_change_at;
        j["distance_from_seed"] = r.distance_from_seed;
        io::write_json(dir / "analysis.json", j);
        out << "analyze: c below c*, oscillatory " << (r.origin.oscillatory ? "yes" : "no") << ", sign change "
            << (r.sign_change ? "found" : "not found") << '\n';
        return r.origin.oscillatory && r.sign_change ? Exit::ok : Exit::partial;
    }

    const io::CsvTable t = io::read_csv(profile_path);
    const Vec& xi = t.col("xi");
    if (xi.size() < 9) throw ParameterError("analyze: profile needs at least 9 rows");
    const int n = static_cast<int>(xi.size()) - 1;
    const double L = -xi.front();
    if (!(L > 0.0) || std::abs(xi.back() - L) > 1e-9 * L || n % 2 != 0) {
        throw ParameterError("analyze: profile must sit on a symmetric grid [-L, L] with an even cell count");
    }
    WaveProfile w;
    w.grid = Grid{L, n};
    for (int i = 0; i <= n; ++i) {
        if (std::abs(xi[i] - w.grid.xi(i)) > 1e-9 * L) throw ParameterError("analyze: profile grid is not uniform");
    }
    w.c = c;
    w.u = t.col("u");
    w.v = t.col("v");
    validate_wave_inputs(p, c, w.grid, false);
    finalize_profile(w, p);
    conf["L"] = L;
    conf["n"] = n;
    j["config"] = conf;
    const bool pass = analyze_wave(w, p, j);

    Vec lu(n + 1), lv(n + 1), lu1(n + 1), lv1(n + 1);
    auto lg = [](double d) { return d > 0.0 ? std::log(d) : kNaN; };
    for (int i = 0; i <= n; ++i) {
        lu[i] = lg(std::abs(w.u[i]));
        lv[i] = lg(std::abs(w.v[i]));
        lu1[i] = lg(std::abs(1.0 - w.u[i]));
        lv1[i] = lg(std::abs(1.0 / p.K - w.v[i]));
    }
    io::write_csv(dir / "fit_data.csv", {"xi", "log_u", "log_v", "log_1_minus_u", "log_vK_minus_v"},
                  {&xi, &lu, &lv, &lu1, &lv1});
    io::write_json(dir / "analysis.json", j);
    out << "analyze: " << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? Exit::ok : Exit::partial;
}

struct SweepFlags {
    std::vector<double> lambdas, Ks, cs, c_rel;
    int jobs = 0;
};

struct SweepRow {
    double lambda = 0, K = 0, c = 0, c_rel = kNaN, c_star = 0;
    std::string status;
    int steps = 0;
    double residual_u = kNaN, residual_v = kNaN;
    std::string message;
};

inline int cmd_sweep(const Common& o, const SweepFlags& f, std::ostream& out) {
    if (f.lambdas.empty() || f.Ks.empty() || (f.cs.empty() && f.c_rel.empty())) {
        throw ParameterError("sweep: --lambdas, --Ks and one of --cs/--c-rel must be non-empty");
    }
    if (!f.cs.empty() && !f.c_rel.empty()) throw ParameterError("sweep: give --cs or --c-rel, not both");
    const Grid g = grid(o);
    std::vector<SweepRow> rows;
    std::vector<ModelParams> ps;
    for (double lam : f.lambdas) {
        for (double K : f.Ks) {
            Common oc = o;
            oc.lambda = lam;
            oc.K = K;
            const ModelParams p = params(oc);  // malformed entries are usage errors
            const double cs = min_speed(p);
            const auto& speeds = f.cs.empty() ? f.c_rel : f.cs;
            for (double s : speeds) {
                if (!(s > 0.0) || !std::isfinite(s)) throw ParameterError("sweep: speeds must be positive");
                SweepRow r;
                r.lambda = lam;
                r.K = K;
                r.c_star = cs;
                r.c_rel = f.cs.empty() ? s : kNaN;
                r.c = f.cs.empty() ? s * cs : s;
                rows.push_back(r);
                ps.push_back(p);
            }
        }
    }

    IterationConfig cfg;
    cfg.tol = o.tol;
    auto work = [&](std::size_t k) {
        SweepRow& r = rows[k];
        try {
            validate_wave_inputs(ps[k], r.c, g, true);
        } catch (const PreconditionError& e) {
            r.status = "SKIPPED-GATE";
            r.message = e.what();
            return;
        }
        try {
            const WaveSolution s = solve_wave(ps[k], r.c, g, cfg);
            r.status = "CONVERGED";
            r.steps = s.trace.steps;
            r.residual_u = s.profile.residual_u;
            r.residual_v = s.profile.residual_v;
        } catch (const NonConvergenceError& e) {
            r.status = "NOT-CONVERGED";
            r.steps = e.trace().steps;
            r.message = e.what();
        } catch (const std::exception& e) {
            r.status = "FAILED";
            r.message = e.what();
        }
    };
    // Cells are independent; workers pull indices and write only their own row.
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t nthreads = std::min<std::size_t>(f.jobs > 0 ? f.jobs : hw, rows.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < rows.size(); k = next++) work(k);
        });
    }
    for (auto& th : pool) th.join();

    const fs::path dir = out_dir(o);
    std::string csv = "lambda,K,c,c_rel,c_star,status,steps,residual_u,residual_v\n";
    Json jr = Json::array();
    bool all = true;
    for (const SweepRow& r : rows) {
        csv += io::fmt(r.lambda) + "," + io::fmt(r.K) + "," + io::fmt(r.c) + "," + io::fmt(r.c_rel) + "," +
               io::fmt(r.c_star) + "," + r.status + "," + std::to_string(r.steps) + "," + io::fmt(r.residual_u) +
               "," + io::fmt(r.residual_v) + "\n";
        jr.push_back({{"lambda", r.lambda}, {"K", r.K}, {"c", r.c}, {"c_rel", io::num(r.c_rel)},
                      {"c_star", r.c_star}, {"status", r.status}, {"steps", r.steps},
                      {"residual_u", io::num(r.residual_u)}, {"residual_v", io::num(r.residual_v)},
                      {"message", r.message}});
        all = all && r.status == "CONVERGED";
    }
    io::write_text(dir / "sweep.csv", csv);
    Json j;
    Json conf = config_json("sweep", o, ModelParams::make(f.lambdas.front(), f.Ks.front()), kNaN, dir);
    conf.erase("lambda");
    conf.erase("K");
    conf.erase("c");
    conf.erase("l");
    conf["lambdas"] = f.lambdas;
    conf["Ks"] = f.Ks;
    conf["cs"] = f.cs;
    conf["c_rel"] = f.c_rel;
    conf["l"] = std::isnan(o.l) ? Json("default") : Json(o.l);
    j["config"] = conf;
    j["rows"] = jr;
    j["all_converged"] = all;
    io::write_json(dir / "sweep.json", j);
    out << "sweep: " << rows.size() << " cells, " << (all ? "all converged" : "partial") << '\n';
    return all ? Exit::ok : Exit::partial;
}

// ---------------------------------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Travelling waves of the precursor/differentiated-cell invasion system", "invwave"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value file; flags given on the command line win");
    app.config_formatter(std::make_shared<FlatConfig>(&app));
    app.allow_config_extras(CLI::config_extras_mode::error);

    Common o;
    bool speed_given = false;
    std::string which = "upper";
    double pin = kNaN;
    WaveFlags wf;
    SimFlags sf;
    std::string profile;
    SweepFlags swf;

    auto* check = app.add_subcommand("check-params", "evaluate the parameter gates and c*");
    add_common(*check, o, false);
    auto* kpp = app.add_subcommand("solve-kpp", "solve one logistic KPP generator");
    add_common(*kpp, o);
    kpp->add_option("--which", which, "upper or lower generator");
    kpp->add_option("--pin", pin, "pinning level at xi = 0 (default b/2)");
    auto* sand = app.add_subcommand("build-sandwich", "construct and verify the ordered upper/lower pair");
    add_common(*sand, o);
    auto* wave = app.add_subcommand("solve-wave", "monotone iteration for the travelling wave, plus analysis");
    add_common(*wave, o);
    wave->add_flag("--gate-free", wf.gate_free, "solve outside the sandwich gates (no sandwich guarantee)");
    wave->add_option("--seed", wf.seed, "iteration seed: lower or upper");
    wave->add_option("--max-iter", wf.max_iter, "sweep limit");
    auto* sim = app.add_subcommand("simulate", "time-integrate the PDE and estimate the front speed");
    add_common(*sim, o, false);
    sim->add_option("--x-max", sf.x_max, "domain length");
    sim->add_option("--dx", sf.dx, "spacing");
    sim->add_option("--dt", sf.dt, "time step");
    sim->add_option("--t-end", sf.t_end, "final time");
    sim->add_option("--ic", sf.ic, "initial condition: step, gaussian or zero");
    sim->add_option("--amplitude", sf.amplitude, "initial amplitude");
    sim->add_option("--width", sf.width, "initial support width");
    sim->add_option("--record-every", sf.record_every, "time between front samples");
    sim->add_option("--snapshot-every", sf.snapshot_every, "time between stored snapshots (0: final only)");
    sim->add_option("--level", sf.level, "front-tracking level");
    sim->add_option("--window", sf.window, "trailing fraction of samples in the speed fit");
    sim->add_option("--tolerance", sf.tolerance, "accepted relative speed error");
    auto* an = app.add_subcommand("analyze", "rates and audits of a stored profile, or the sub-critical witness");
    add_common(*an, o);
    an->add_option("--profile", profile, "CSV with columns xi,u,v");
    auto* sw = app.add_subcommand("sweep", "Cartesian sweep over lambda, K and c");
    add_common(*sw, o);
    sw->add_option("--lambdas", swf.lambdas, "comma-separated lambda values")->delimiter(',');
    sw->add_option("--Ks", swf.Ks, "comma-separated K values")->delimiter(',');
    sw->add_option("--cs", swf.cs, "comma-separated speeds")->delimiter(',');
    sw->add_option("--c-rel", swf.c_rel, "comma-separated multiples of c*")->delimiter(',');
    sw->add_option("--jobs", swf.jobs, "worker threads (default: hardware concurrency)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Exit::ok : Exit::usage;
    }

    try {
        if (check->parsed()) {
            speed_given = check->count("--c") > 0;
            return cmd_check_params(o, speed_given, out);
        }
        if (kpp->parsed()) return cmd_solve_kpp(o, which, pin, out);
        if (sand->parsed()) return cmd_build_sandwich(o, out);
        if (wave->parsed()) return cmd_solve_wave(o, wf, out, err);
        if (sim->parsed()) return cmd_simulate(o, sf, out);
        if (an->parsed()) return cmd_analyze(o, profile, out);
        if (sw->parsed()) return cmd_sweep(o, swf, out);
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return Exit::usage;
    } catch (const PreconditionError& e) {
        err << "refused: " << e.what() << '\n';
        return Exit::gate;
    } catch (const std::exception& e) {
        err << "failed: " << e.what() << '\n';
        return Exit::numerical;
    }
    return Exit::usage;
}

}  // namespace invwave::cli
