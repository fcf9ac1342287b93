// Timing harness for the data-parallel kernels: runs each one under the
// serial reference policy and the OpenMP policy, reports the speedup, and
// checks that the two produce bitwise identical results.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "twz/chain.hpp"
#include "twz/constants.hpp"
#include "twz/dynamics.hpp"
#include "twz/fock.hpp"
#include "twz/noise.hpp"
#include "twz/synth.hpp"

namespace c = twz::constants;
using twz::Execution;

namespace {

template <typename F>
double time_run(F&& body, Execution exec) {
  const auto start = std::chrono::steady_clock::now();
  body(exec);
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

template <typename F>
void report(const char* name, F&& body, bool identical) {
  const double ts = time_run(body, Execution::serial);
  const double tp = time_run(body, Execution::parallel);
  std::printf("%-28s serial %8.1f ms   parallel %8.1f ms   x%.2f   %s\n",
              name, ts * 1e3, tp * 1e3, ts / tp,
              identical ? "bitwise-identical" : "MISMATCH");
}

twz::chain::ChainConfig ladder(int n_controls) {
  twz::chain::ChainConfig cfg;
  cfg.n_ions = n_controls + 2;
  cfg.ion_mass = c::ca40_mass_amu * c::atomic_mass_unit;
  cfg.axial_freq = c::angular(211.0e3);
  cfg.tweezer_flags.assign(static_cast<std::size_t>(cfg.n_ions), 1);
  cfg.tweezer_flags.front() = 0;
  cfg.tweezer_flags.back() = 0;
  cfg.light_shift = c::angular(20.0e6);
  cfg.beam_waist = 1e-6;
  cfg.qubit_offsets.assign(static_cast<std::size_t>(cfg.n_ions), 0.0);
  return cfg;
}

} // namespace

int main() {
  std::printf("kernel benchmarks (wall time, one warm run each)\n\n");

  // Conditional-spectrum subset enumeration on a 12-ion chain.
  {
    const auto cfg = ladder(10);
    auto body = [&](Execution exec) {
      (void)twz::chain::conditional_spectrum(cfg, 0, 4096, exec);
    };
    const auto a = twz::chain::conditional_spectrum(cfg, 0, 4096,
                                                    Execution::serial);
    const auto b = twz::chain::conditional_spectrum(cfg, 0, 4096,
                                                    Execution::parallel);
    bool same = a.per_shift == b.per_shift &&
                a.max_subset_spread == b.max_subset_spread &&
                a.freqs == b.freqs;
    report("conditional_spectrum n=12", body, same);
  }

  // Number-basis oracle on the two-loop single-tone gate.
  {
    twz::dynamics::GateContext ctx;
    const double nu = c::angular(866.994e3);
    const double d0 = c::angular(4.0e3);
    ctx.mode_freq = nu;
    ctx.eta = {0.0425, 0.0425};
    ctx.nbar = 0.1;
    twz::dynamics::DriveSpec drive;
    drive.tones = {{nu - d0, d0 / (2.0 * 0.0425), 0.0}};
    drive.duration = 4.0 * std::numbers::pi / d0;
    std::vector<double> grid(65);
    for (int i = 0; i < 65; ++i) grid[i] = drive.duration * i / 64.0;
    auto body = [&](Execution exec) {
      (void)twz::fock::fock_oracle(ctx, drive, 24, grid, {}, exec);
    };
    const auto a = twz::fock::fock_oracle(ctx, drive, 24, grid, {},
                                          Execution::serial);
    const auto b = twz::fock::fock_oracle(ctx, drive, 24, grid, {},
                                          Execution::parallel);
    bool same = a.final_state.p_ss == b.final_state.p_ss &&
                a.final_state.p_dd == b.final_state.p_dd &&
                a.trace.p_ss == b.trace.p_ss;
    report("fock_oracle cutoff=24", body, same);
  }

  // Multi-tone synthesis for a 6-control collective gate.
  {
    const auto cfg = ladder(6);
    twz::synth::NcmsOptions opts;
    auto solve = [&](Execution exec) {
      twz::synth::NcmsOptions o = opts;
      o.exec = exec;
      return twz::synth::n_controlled_ms(6, c::angular(211.0e3),
                                         c::angular(4.0e3),
                                         std::numbers::pi / 2.0, cfg, o);
    };
    auto body = [&](Execution exec) { (void)solve(exec); };
    const auto a = solve(Execution::serial);
    const auto b = solve(Execution::parallel);
    bool same = a.solution.total_rabi == b.solution.total_rabi &&
                a.solution.achieved_duration == b.solution.achieved_duration;
    report("n_controlled_ms n=6", body, same);
  }

  // Monte-Carlo fidelity and coherence sweeps.
  {
    twz::dynamics::GateContext ctx;
    const double nu = c::angular(866.994e3);
    const double d0 = c::angular(4.0e3);
    ctx.mode_freq = nu;
    ctx.eta = {0.0425, 0.0425};
    ctx.nbar = 0.05;
    twz::noise::GateParams params;
    params.context = ctx;
    params.drive.tones = {{nu - d0, d0 / (2.0 * 0.0425), 0.0}};
    params.drive.duration = 4.0 * std::numbers::pi / d0;
    params.mode_trap_ratio = std::sqrt(5.8);
    params.conditional_shift = d0;
    std::vector<twz::noise::NoiseModel> models(2);
    models[0].target = twz::noise::NoiseTarget::drive_intensity;
    models[0].amplitude = 0.03;
    models[1].target = twz::noise::NoiseTarget::trap_freq;
    models[1].amplitude = c::angular(100.0);
    models[1].seed = 11;
    auto body = [&](Execution exec) {
      (void)twz::noise::gate_fidelity_mc(params, models, 200000, 42, exec);
    };
    const auto a = twz::noise::gate_fidelity_mc(params, models, 200000, 42,
                                                Execution::serial);
    const auto b = twz::noise::gate_fidelity_mc(params, models, 200000, 42,
                                                Execution::parallel);
    bool same = a.mean == b.mean && a.stddev == b.stddev && a.p50 == b.p50;
    report("gate_fidelity_mc 2e5 shots", body, same);
  }
  {
    twz::noise::NoiseModel model;
    model.kind = twz::noise::NoiseKind::ornstein_uhlenbeck;
    model.target = twz::noise::NoiseTarget::tweezer_intensity;
    model.amplitude = 5e-4;
    model.correlation_time = 10e-3;
    auto body = [&](Execution exec) {
      (void)twz::noise::coherence_sweep(model, c::angular(10.4e6), 500e-6,
                                        {1, 2, 4, 8, 16}, 20000, 21, exec);
    };
    const auto a = twz::noise::coherence_sweep(model, c::angular(10.4e6),
                                               500e-6, {1, 2, 4, 8, 16}, 20000,
                                               21, Execution::serial);
    const auto b = twz::noise::coherence_sweep(model, c::angular(10.4e6),
                                               500e-6, {1, 2, 4, 8, 16}, 20000,
                                               21, Execution::parallel);
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i)
      same = same && a[i].witness == b[i].witness &&
             a[i].witness_se == b[i].witness_se;
    report("coherence_sweep 2e4 trials", body, same);
  }

  return 0;
}
