#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>

#include "twz/constants.hpp"
#include "twz/dynamics.hpp"
#include "twz/fock.hpp"

using namespace twz;
using namespace twz::dynamics;
using namespace twz::fock;
namespace c = twz::constants;

namespace {

const double kMode = c::angular(866.99e3);

DriveSpec below_mode(double delta, double rabi, double duration) {
  DriveSpec d;
  d.tones = {{kMode - delta, rabi, 0.0}};
  d.duration = duration;
  return d;
}

GateContext context(double nbar = 0.0, double eta = 0.0425) {
  GateContext ctx;
  ctx.mode_freq = kMode;
  ctx.eta = {eta, eta};
  ctx.nbar = nbar;
  return ctx;
}

double max_trace_gap(const PopulationTrace& a, const PopulationTrace& b) {
  double worst = 0.0;
  for (size_t k = 0; k < a.times.size(); ++k) {
    worst = std::max(worst, std::abs(a.p_ss[k] - b.p_ss[k]));
    worst = std::max(worst, std::abs(a.p_mixed[k] - b.p_mixed[k]));
    worst = std::max(worst, std::abs(a.p_dd[k] - b.p_dd[k]));
  }
  return worst;
}

} // namespace

TEST_CASE("integrated populations match the closed form at zero temperature") {
  GateContext ctx = context(0.0);
  DriveSpec d = below_mode(c::angular(4.05e3), c::angular(47.4e3), 500e-6);
  std::vector<double> grid = uniform_grid(500e-6, 65);

  FockResult oracle = fock_oracle(ctx, d, 24, grid);
  PopulationTrace closed = ms_populations(ctx, d, grid);

  CHECK(oracle.converged);
  CHECK(max_trace_gap(oracle.trace, closed) < 1e-3);
}

TEST_CASE("integrated populations match the closed form for a warm mode") {
  GateContext ctx = context(0.5);
  DriveSpec d = below_mode(c::angular(8.2e3), c::angular(47.4e3), 500e-6);
  std::vector<double> grid = uniform_grid(500e-6, 49);

  FockResult oracle = fock_oracle(ctx, d, 24, grid);
  PopulationTrace closed = ms_populations(ctx, d, grid);
  CHECK(oracle.converged);
  CHECK(max_trace_gap(oracle.trace, closed) < 1e-3);

  FinalState ref = final_state(ctx, d);
  CHECK(std::abs(oracle.final_state.coherence - ref.coherence) < 1e-3);
  CHECK(oracle.final_state.p_dd == doctest::Approx(ref.p_dd).epsilon(1e-4));
}

TEST_CASE("zero drive leaves the populations frozen") {
  GateContext ctx = context(0.2);
  DriveSpec d = below_mode(c::angular(4e3), 0.0, 200e-6);
  std::vector<double> grid = uniform_grid(200e-6, 9);
  FockResult r = fock_oracle(ctx, d, 12, grid);
  for (size_t k = 0; k < grid.size(); ++k) {
    CHECK(r.trace.p_ss[k] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.trace.p_dd[k] == doctest::Approx(0.0));
  }
}

TEST_CASE("motional state returns to the start after one closed loop") {
  double delta = c::angular(5e3);
  DriveSpec d = below_mode(delta, c::angular(30e3), c::two_pi / delta);
  std::vector<double> grid = uniform_grid(d.duration, 33);
  for (double nbar : {0.0, 0.3}) {
    CAPTURE(nbar);
    FockResult r = fock_oracle(context(nbar), d, 20, grid);
    CHECK(r.motional_return >= 1.0 - 1e-4);
  }
}

TEST_CASE("the vacuum amplitude carries the accumulated gate phase") {
  double eta = 0.0425;
  double delta0 = c::angular(4e3);
  double rabi = delta0 / (2.0 * eta);
  DriveSpec d = below_mode(2.0 * delta0, rabi, 500e-6);
  GateContext ctx = context(0.0, eta);
  std::vector<double> grid = uniform_grid(500e-6, 33);

  FockResult r = fock_oracle(ctx, d, 20, grid);
  double phi_closed = entanglement_phase(d, kMode, eta, 500e-6);
  CHECK(phi_closed == doctest::Approx(-c::pi / 2.0).epsilon(1e-12));
  std::complex<double> gap =
      std::polar(1.0, r.phase_estimate) - std::polar(1.0, phi_closed);
  CHECK(std::abs(gap) < 1e-5);
}

TEST_CASE("undersized basis is reported as unconverged") {
  GateContext ctx = context(0.0, 0.05);
  DriveSpec d = below_mode(c::angular(4e3), c::angular(150e3), 250e-6);
  std::vector<double> grid = uniform_grid(250e-6, 17);
  FockResult r = fock_oracle(ctx, d, 10, grid);
  CHECK_FALSE(r.converged);
  CHECK(r.max_population_change > 1e-4);
}

TEST_CASE("thermal mixture gives identical bits in serial and parallel") {
  GateContext ctx = context(0.8);
  DriveSpec d;
  d.tones = {{kMode - c::angular(6e3), c::angular(25e3), 0.4},
             {kMode + c::angular(11e3), c::angular(14e3), -0.2}};
  d.duration = 300e-6;
  std::vector<double> grid = uniform_grid(300e-6, 17);

  FockResult a = fock_oracle(ctx, d, 16, grid, {}, Execution::serial);
  FockResult b = fock_oracle(ctx, d, 16, grid, {}, Execution::parallel);
  for (size_t k = 0; k < grid.size(); ++k) {
    CHECK(a.trace.p_ss[k] == b.trace.p_ss[k]);
    CHECK(a.trace.p_mixed[k] == b.trace.p_mixed[k]);
    CHECK(a.trace.p_dd[k] == b.trace.p_dd[k]);
  }
  CHECK(a.final_state.coherence == b.final_state.coherence);
  CHECK(a.motional_return == b.motional_return);
}

TEST_CASE("keeping the counter-rotating term perturbs but does not break") {
  GateContext ctx;
  ctx.mode_freq = c::angular(150e3);
  ctx.eta = {0.05, 0.05};
  ctx.nbar = 0.0;
  double delta = c::angular(5e3);
  DriveSpec d;
  d.tones = {{ctx.mode_freq - delta, c::angular(40e3), 0.0}};
  d.duration = 100e-6;
  std::vector<double> grid = uniform_grid(100e-6, 9);

  FockResult rwa = fock_oracle(ctx, d, 12, grid);
  OracleOptions opts;
  opts.keep_counter_rotating = true;
  FockResult full = fock_oracle(ctx, d, 12, grid, opts);

  double gap = max_trace_gap(rwa.trace, full.trace);
  CHECK(gap > 1e-6);
  CHECK(gap < 0.05);
  for (size_t k = 0; k < grid.size(); ++k) {
    double sum = full.trace.p_ss[k] + full.trace.p_mixed[k] + full.trace.p_dd[k];
    CHECK(std::abs(sum - 1.0) < 1e-6);
  }
}

TEST_CASE("oracle input validation") {
  GateContext ctx = context();
  DriveSpec d = below_mode(c::angular(4e3), c::angular(40e3), 100e-6);
  std::vector<double> grid = uniform_grid(100e-6, 9);
  CHECK_THROWS_AS(fock_oracle(ctx, d, 9, grid), std::invalid_argument);
  std::vector<double> bad = {1e-5, 2e-5};
  CHECK_THROWS_AS(fock_oracle(ctx, d, 12, bad), std::invalid_argument);
  std::vector<double> unsorted = {0.0, 2e-5, 1e-5};
  CHECK_THROWS_AS(fock_oracle(ctx, d, 12, unsorted), std::invalid_argument);
}
