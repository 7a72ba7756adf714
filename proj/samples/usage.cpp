// Minimal library tour: gates, a wave at c = 2, its tail rates, and a short PDE run.

#include <cstdio>

#include "invwave/invwave.hpp"

int main() {
    using namespace invwave;
    const ModelParams p = ModelParams::make(0.2, 1.0);
    const double cs = min_speed(p);
    const GateReport gates = check_gates(2.0, p);
    std::printf("c* = %.6f, lambda bound = %.6f, gates %s\n", cs, gates.lambda_gate.value,
                gates.all_ok() ? "ok" : "fail");

    const WaveSolution w = solve_wave(p, 2.0, Grid::make(60, 2400));
    std::printf("wave: %d sweeps, residuals %.2e / %.2e\n", w.trace.steps, w.profile.residual_u,
                w.profile.residual_v);
    for (const RateReport& r : check_wave_rates(w.profile, p).reports) {
        std::printf("  %s %-5s rate %.5f (theory %.5f) %s\n", r.quantity.c_str(), to_string(r.side), r.fitted_rate,
                    r.theoretical_rate, r.pass ? "ok" : "off");
    }

    SimConfig sim;
    sim.x_max = 200.0;
    sim.t_end = 60.0;
    const SimResult r = run(sim, p);
    std::printf("pde: front speed %.4f after t = %.0f (c* = %.4f)\n", r.trace.c_emp, sim.t_end, cs);
}
