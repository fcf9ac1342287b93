#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>

#include "twz/constants.hpp"
#include "twz/dynamics.hpp"
#include "twz/errors.hpp"

using namespace twz;
using namespace twz::dynamics;
namespace c = twz::constants;
using std::complex;

namespace {

const double kMode = c::angular(1e6); // stand-in gate mode

DriveSpec single_tone(double beta, double rabi, double duration,
                      double phase = 0.0) {
  DriveSpec d;
  d.tones = {{kMode - beta, rabi, phase}};
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

} // namespace

TEST_CASE("single-tone displacement magnitude at quarter gate time") {
  // beta = -delta (drive above the mode), delta*t = pi -> |E| = 2/delta
  DriveSpec d = single_tone(-c::angular(4e3), c::angular(47.4e3), 500e-6);
  complex<double> a = displacement(d, kMode, 0.0422, 125e-6);
  CHECK(std::abs(a) == doctest::Approx(0.500070000000).epsilon(1e-9));
}

TEST_CASE("trajectory starts at the origin and zero drive stays there") {
  DriveSpec d = single_tone(c::angular(4e3), c::angular(47.4e3), 500e-6);
  CHECK(std::abs(displacement(d, kMode, 0.0425, 0.0)) == 0.0);
  CHECK(entanglement_phase(d, kMode, 0.0425, 0.0) == 0.0);

  DriveSpec off = single_tone(c::angular(4e3), 0.0, 500e-6);
  for (double t : {1e-5, 2e-4, 5e-4})
    CHECK(std::abs(displacement(off, kMode, 0.0425, t)) == 0.0);
}

TEST_CASE("resonant tone grows linearly instead of dividing by zero") {
  DriveSpec d = single_tone(0.0, c::angular(10e3), 100e-6);
  complex<double> a = displacement(d, kMode, 0.05, 60e-6);
  CHECK(a.real() == doctest::Approx(0.5 * 0.05 * c::angular(10e3) * 60e-6)
                        .epsilon(1e-13));
  CHECK(a.imag() == doctest::Approx(0.0));
}

TEST_CASE("loops close and the phase matches the single-tone law") {
  double eta = 0.0425;
  double rabi = c::angular(47.4e3);
  for (double delta_hz : {4e3, 8.2e3, 2.37e3}) {
    for (int loops : {1, 2, 5}) {
      CAPTURE(delta_hz);
      CAPTURE(loops);
      double delta = c::angular(delta_hz);
      double t_close = c::two_pi * loops / delta;
      DriveSpec d = single_tone(-delta, rabi, t_close);
      CHECK(std::abs(displacement(d, kMode, eta, t_close)) <= 1e-12);
      double phi = entanglement_phase(d, kMode, eta, t_close);
      double expected = eta * eta * rabi * rabi * t_close / delta;
      CHECK(phi == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("single-tone phase accumulates monotonically") {
  DriveSpec d = single_tone(-c::angular(4e3), c::angular(47.4e3), 500e-6);
  TrajectoryResult r = trajectory(d, kMode, 0.0425, uniform_grid(500e-6, 257));
  for (size_t k = 0; k + 1 < r.phi.size(); ++k)
    CHECK(r.phi[k + 1] >= r.phi[k] - 1e-15);
}

TEST_CASE("two-tone phase and displacement match the quadrature record") {
  DriveSpec d;
  d.tones = {{kMode + c::angular(4e3), c::angular(20e3), 0.3},
             {kMode - c::angular(9e3), c::angular(31e3), -1.1}};
  d.duration = 437e-6;
  double phi = entanglement_phase(d, kMode, 0.05, 437e-6);
  CHECK(phi == doctest::Approx(-0.065464128195).epsilon(1e-8));
  complex<double> a = displacement(d, kMode, 0.05, 437e-6);
  CHECK(a.real() == doctest::Approx(-0.1794738414532).epsilon(1e-9));
  CHECK(a.imag() == doctest::Approx(-0.1119312111534).epsilon(1e-9));
}

TEST_CASE("populations conserve probability and start in SS") {
  GateContext ctx = context(0.5);
  DriveSpec d;
  d.tones = {{kMode + c::angular(5e3), c::angular(30e3), 0.2},
             {kMode - c::angular(7e3), c::angular(18e3), 0.0}};
  d.duration = 500e-6;
  PopulationTrace tr = ms_populations(ctx, d, uniform_grid(500e-6, 301));
  CHECK(tr.p_ss[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tr.p_mixed[0] == doctest::Approx(0.0));
  for (size_t k = 0; k < tr.times.size(); ++k) {
    double sum = tr.p_ss[k] + tr.p_mixed[k] + tr.p_dd[k];
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK(tr.p_ss[k] >= -1e-12);
    CHECK(tr.p_mixed[k] >= -1e-12);
    CHECK(tr.p_dd[k] >= -1e-12);
  }
}

TEST_CASE("closed drive below the mode flips both ions") {
  // delta_eff = 4 kHz, rabi = delta/(2 eta), T = 4 pi / delta: two loops,
  // full population transfer regardless of temperature
  double eta = 0.0425;
  double delta = c::angular(4e3);
  double rabi = delta / (2.0 * eta);
  DriveSpec d = single_tone(delta, rabi, 500e-6);
  for (double nbar : {0.0, 0.2, 5.0}) {
    CAPTURE(nbar);
    FinalState s = final_state(context(nbar, eta), d);
    CHECK(s.p_dd == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.p_mixed == doctest::Approx(0.0));
    CHECK(std::abs(s.coherence) < 1e-12);
  }
}

TEST_CASE("half phase makes the balanced entangled state") {
  double eta = 0.0425;
  double delta0 = c::angular(4e3);
  double rabi = delta0 / (2.0 * eta);
  DriveSpec d = single_tone(2.0 * delta0, rabi, 500e-6);
  FinalState s = final_state(context(0.0, eta), d);
  CHECK(s.p_ss == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.p_dd == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.p_mixed == doctest::Approx(0.0));
  CHECK(std::abs(s.coherence) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("shifting the mode equals shifting the drive") {
  double delta0 = c::angular(4e3);
  double dnu = c::angular(4.058e3);
  double rabi = c::angular(47.4e3);
  std::vector<double> grid = uniform_grid(500e-6, 128);

  // tone at kMode - delta0 with the mode raised by dnu ...
  GateContext shifted = context(0.1);
  shifted.mode_freq = kMode + dnu;
  DriveSpec d = single_tone(delta0, rabi, 500e-6);

  // ... is the same gate as the bare mode with the tone lowered by dnu
  GateContext base = context(0.1);
  DriveSpec d2;
  d2.tones = {{kMode - delta0 - dnu, rabi, 0.0}};
  d2.duration = 500e-6;

  PopulationTrace a = ms_populations(shifted, d, grid);
  PopulationTrace b = ms_populations(base, d2, grid);
  for (size_t k = 0; k < grid.size(); ++k) {
    CHECK(std::abs(a.p_ss[k] - b.p_ss[k]) < 1e-12);
    CHECK(std::abs(a.p_mixed[k] - b.p_mixed[k]) < 1e-12);
    CHECK(std::abs(a.p_dd[k] - b.p_dd[k]) < 1e-12);
  }
}

TEST_CASE("parity amplitude decreases with temperature") {
  double eta = 0.0425;
  DriveSpec d = single_tone(c::angular(5e3), c::angular(40e3), 500e-6);
  std::vector<double> phis = uniform_grid(c::pi, 32);
  double prev = 2.0;
  for (double nbar : {0.0, 0.2, 1.0, 5.0}) {
    CAPTURE(nbar);
    // mid-evolution point where the loop is open and attenuation acts
    FinalState s = final_state(context(nbar, eta), d, 180e-6);
    ParityScan scan = parity_scan(s, phis);
    CHECK(scan.amplitude <= prev + 1e-12);
    prev = scan.amplitude;
  }
}

TEST_CASE("parity fringe of reference states") {
  // one full fringe period without a duplicated endpoint
  std::vector<double> phis(48);
  for (int k = 0; k < 48; ++k) phis[k] = c::pi * k / 48.0;

  FinalState ideal{0.5, 0.0, 0.5, {0.0, 0.5}};
  ParityScan s1 = parity_scan(ideal, phis);
  CHECK(s1.amplitude == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s1.residual < 1e-12);
  CHECK_FALSE(s1.degenerate);

  FinalState partial{0.5, 0.0, 0.5, {0.0, 0.355}};
  ParityScan s2 = parity_scan(partial, phis);
  CHECK(s2.amplitude == doctest::Approx(0.71).epsilon(1e-12));

  FinalState mixed{0.25, 0.5, 0.25, {0.0, 0.0}};
  ParityScan s3 = parity_scan(mixed, phis);
  CHECK(s3.amplitude == 0.0);
  CHECK(s3.degenerate);

  // rotated coherence shows up in the fitted fringe phase
  double theta = 0.7;
  FinalState rot{0.5, 0.0, 0.5,
                 {0.4 * std::cos(theta), 0.4 * std::sin(theta)}};
  ParityScan s4 = parity_scan(rot, phis);
  CHECK(s4.amplitude == doctest::Approx(0.8).epsilon(1e-12));
  double expected_offset = std::remainder(theta + c::pi / 2.0, c::two_pi);
  CHECK(std::remainder(s4.offset_phase - expected_offset, c::two_pi) ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("fidelity bookkeeping") {
  CHECK(state_fidelity(0.495, 0.495, 0.71, Control::S) ==
        doctest::Approx(0.850).epsilon(1e-12));
  CHECK(state_fidelity(0.0, 1.0, 0.0, Control::D) == 1.0);
  CHECK(state_fidelity(0.5, 0.5, 1.0, Control::S) == doctest::Approx(1.0));
  CHECK_THROWS_AS(state_fidelity(0.9, 0.9, 0.0, Control::D),
                  std::invalid_argument);
}

TEST_CASE("controlled-gate blocks") {
  CmsUnitary u = cms_unitary(c::pi, c::pi / 2.0);
  CHECK(u.canonical);
  CHECK_FALSE(u.control_independent);
  // block at pi is -XX
  Eigen::Matrix4cd xx = Eigen::Matrix4cd::Zero();
  xx(0, 3) = xx(1, 2) = xx(2, 1) = xx(3, 0) = 1.0;
  CHECK((u.control_d + xx).cwiseAbs().maxCoeff() < 1e-12);
  // blocks are unitary
  CHECK((u.control_d * u.control_d.adjoint() - Eigen::Matrix4cd::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK((u.control_s * u.control_s.adjoint() - Eigen::Matrix4cd::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  CmsUnitary id = cms_unitary(0.0, 0.0);
  CHECK((id.control_d - Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK(id.control_independent);
  CHECK_FALSE(id.canonical);

  CmsUnitary same = cms_unitary(c::pi, c::pi);
  CHECK(same.control_independent);
}

TEST_CASE("detuning fit recovers the generating parameters") {
  double eta = 0.0425;
  double rabi = c::angular(47.4e3);
  GateContext ctx = context(0.0, eta);
  for (double truth_hz : {4.05e3, 8.20e3}) {
    CAPTURE(truth_hz);
    double truth = c::angular(truth_hz);
    DriveSpec gen = single_tone(truth, rabi, 500e-6);
    PopulationTrace obs = ms_populations(ctx, gen, uniform_grid(500e-6, 512));
    DriveSpec nominal = single_tone(c::angular(4e3), rabi, 500e-6);
    FitResult fit =
        fit_detuning(ctx, nominal, obs, c::angular(truth_hz * 0.96));
    CHECK(fit.converged);
    CHECK(std::abs(fit.detuning - truth) / truth < 1e-3);
  }
}

TEST_CASE("joint detuning and rabi fit") {
  double eta = 0.0425;
  GateContext ctx = context(0.0, eta);
  double truth = c::angular(8.2e3);
  double rabi_truth = c::angular(47.4e3);
  DriveSpec gen = single_tone(truth, rabi_truth, 500e-6);
  PopulationTrace obs = ms_populations(ctx, gen, uniform_grid(500e-6, 512));
  DriveSpec nominal = single_tone(c::angular(8e3), 0.97 * rabi_truth, 500e-6);
  FitResult fit =
      fit_detuning(ctx, nominal, obs, c::angular(8e3), /*fit_rabi=*/true);
  CHECK(fit.converged);
  CHECK(std::abs(fit.detuning - truth) / truth < 1e-3);
  CHECK(std::abs(fit.rabi - rabi_truth) / rabi_truth < 1e-3);
}

TEST_CASE("flat traces cannot be fitted") {
  GateContext ctx = context();
  DriveSpec off = single_tone(c::angular(4e3), 0.0, 500e-6);
  PopulationTrace obs = ms_populations(ctx, off, uniform_grid(500e-6, 64));
  CHECK_THROWS_AS(fit_detuning(ctx, off, obs, c::angular(4e3)), NumericError);
}

TEST_CASE("input validation") {
  DriveSpec empty;
  empty.duration = 1e-4;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);

  DriveSpec bad = single_tone(c::angular(4e3), -1.0, 1e-4);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  GateContext ctx = context();
  ctx.eta = {0.04, 0.05};
  CHECK_THROWS_AS(ctx.validate(), std::invalid_argument);
  ctx = context();
  ctx.eta = {0.04};
  CHECK_THROWS_AS(ctx.validate(), std::invalid_argument);
  ctx = context();
  ctx.nbar = -0.1;
  CHECK_THROWS_AS(ctx.validate(), std::invalid_argument);

  CHECK_THROWS_AS(uniform_grid(0.0, 16), std::invalid_argument);
  CHECK_THROWS_AS(uniform_grid(1.0, 1), std::invalid_argument);

  std::vector<double> grid = uniform_grid(1e-3, 5);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1e-3);
}
