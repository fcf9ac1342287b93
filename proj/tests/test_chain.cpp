#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "twz/chain.hpp"
#include "twz/constants.hpp"
#include "twz/errors.hpp"

using namespace twz;
using namespace twz::chain;
namespace c = twz::constants;

namespace {

const double kCaMass = c::ca40_mass_amu * c::atomic_mass_unit;
const double kNu360 = c::angular(360e3);

ChainConfig paper_chain(double light_shift = c::angular(10.4e6)) {
  ChainConfig cfg;
  cfg.n_ions = 3;
  cfg.ion_mass = kCaMass;
  cfg.axial_freq = kNu360;
  cfg.tweezer_flags = {0, 1, 0};
  cfg.light_shift = light_shift;
  cfg.beam_waist = 1e-6;
  return cfg;
}

ChainConfig untweezed_chain(int n) {
  ChainConfig cfg;
  cfg.n_ions = n;
  cfg.ion_mass = kCaMass;
  cfg.axial_freq = kNu360;
  cfg.tweezer_flags.assign(n, 0);
  cfg.light_shift = 0.0;
  cfg.beam_waist = 1e-6;
  return cfg;
}

} // namespace

TEST_CASE("length scale matches closed-form evaluation") {
  double l = length_scale(kNu360, kCaMass);
  CHECK(l == doctest::Approx(8.791539005196775e-06).epsilon(1e-12));
  // quoted inter-ion spacing is 8.8 um; the scale itself is within 10%
  CHECK(std::abs(l - 8.8e-6) / 8.8e-6 < 0.10);
}

TEST_CASE("length scale follows nu^(-2/3)") {
  double l1 = length_scale(kNu360, kCaMass);
  double l8 = length_scale(8.0 * kNu360, kCaMass);
  CHECK(l8 == doctest::Approx(l1 / 4.0).epsilon(1e-13));
}

TEST_CASE("length scale rejects non-positive inputs") {
  CHECK_THROWS_AS(length_scale(0.0, kCaMass), std::domain_error);
  CHECK_THROWS_AS(length_scale(kNu360, -1.0), std::domain_error);
}

TEST_CASE("two- and three-ion equilibria match closed forms") {
  Eigen::VectorXd u1 = equilibrium_positions(1);
  CHECK(u1(0) == 0.0);

  Eigen::VectorXd u2 = equilibrium_positions(2);
  double r2 = std::cbrt(0.25);
  CHECK(u2(0) == doctest::Approx(-r2).epsilon(1e-12));
  CHECK(u2(1) == doctest::Approx(r2).epsilon(1e-12));

  Eigen::VectorXd u3 = equilibrium_positions(3);
  double r3 = std::cbrt(1.25);
  CHECK(u3(0) == doctest::Approx(-r3).epsilon(1e-10));
  CHECK(std::abs(u3(1)) < 1e-9);
  CHECK(u3(2) == doctest::Approx(r3).epsilon(1e-10));
}

TEST_CASE("equilibria are stationary, ordered, and mirror-symmetric") {
  for (int n : {2, 3, 5, 8, 12, 20}) {
    CAPTURE(n);
    Eigen::VectorXd u = equilibrium_positions(n);
    CHECK(potential_gradient(u).lpNorm<Eigen::Infinity>() <= 1e-12);
    for (int i = 0; i + 1 < n; ++i) CHECK(u(i) < u(i + 1));
    for (int i = 0; i < n; ++i)
      CHECK(u(i) == doctest::Approx(-u(n - 1 - i)).epsilon(1e-10));
  }
}

TEST_CASE("equilibrium solver rejects empty chains") {
  CHECK_THROWS_AS(equilibrium_positions(0), std::invalid_argument);
}

TEST_CASE("three-ion secular eigenvalues are (1, 3, 29/5)") {
  ModeSpectrum s = mode_spectrum(untweezed_chain(3));
  Eigen::Vector3d lambda;
  for (int m = 0; m < 3; ++m) {
    double ratio = s.frequencies(m) / kNu360;
    lambda(m) = ratio * ratio;
  }
  CHECK(std::abs(lambda(0) - 1.0) < 1e-10);
  CHECK(std::abs(lambda(1) - 3.0) < 1e-10);
  CHECK(std::abs(lambda(2) - 5.8) < 1e-10);
  CHECK(c::hz(s.frequencies(1)) == doctest::Approx(623538.29).epsilon(1e-6));
  CHECK(c::hz(s.frequencies(2)) == doctest::Approx(866994.81).epsilon(1e-6));
  // quoted values 624 kHz / 866 kHz, 1 kHz tolerance
  CHECK(std::abs(c::hz(s.frequencies(1)) - 624e3) < 1e3);
  CHECK(std::abs(c::hz(s.frequencies(2)) - 866e3) < 1e3);
}

TEST_CASE("lowest mode is uniform at the trap frequency, second eigenvalue 3") {
  for (int n : {2, 3, 5, 8}) {
    CAPTURE(n);
    ModeSpectrum s = mode_spectrum(untweezed_chain(n));
    CHECK(std::abs(s.frequencies(0) / kNu360 - 1.0) < 1e-10);
    double uniform = 1.0 / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i)
      CHECK(s.mode_matrix(0, i) == doctest::Approx(uniform).epsilon(1e-10));
    double lam2 = s.frequencies(1) / kNu360;
    lam2 *= lam2;
    CHECK(std::abs(lam2 - 3.0) < 1e-8);
  }
}

TEST_CASE("mode matrix rows are orthonormal and satisfy the eigenproblem") {
  ChainConfig cfg = paper_chain();
  ModeSpectrum s = mode_spectrum(cfg);
  Eigen::MatrixXd gram = s.mode_matrix * s.mode_matrix.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);

  double w_op = optical_confinement(cfg.light_shift, cfg.beam_waist, cfg.ion_mass);
  Eigen::MatrixXd a =
      secular_matrix(s.equilibria, cfg.tweezer_flags, w_op, cfg.axial_freq);
  for (int m = 0; m < 3; ++m) {
    double lam = s.frequencies(m) / cfg.axial_freq;
    lam *= lam;
    Eigen::VectorXd v = s.mode_matrix.row(m).transpose();
    CHECK((a * v - lam * v).norm() < 1e-10);
  }
}

TEST_CASE("optical confinement strength") {
  double w_op = optical_confinement(c::angular(10.4e6), 1e-6, kCaMass);
  CHECK(w_op == doctest::Approx(6.445005809164e+05).epsilon(1e-9));
  CHECK(std::abs(c::hz(w_op) - 103e3) < 1e3);
  double pin = (w_op / kNu360) * (w_op / kNu360);
  CHECK(pin == doctest::Approx(0.081186139007).epsilon(1e-8));

  CHECK(optical_confinement(0.0, 1e-6, kCaMass) == 0.0);
  CHECK(optical_confinement(4.0 * c::angular(10.4e6), 1e-6, kCaMass) ==
        doctest::Approx(2.0 * w_op).epsilon(1e-12));
  CHECK_THROWS_AS(optical_confinement(-1.0, 1e-6, kCaMass), std::domain_error);
  CHECK_THROWS_AS(optical_confinement(1.0, 0.0, kCaMass), std::domain_error);
}

TEST_CASE("center-ion tweezer shifts the third mode by about 4 kHz") {
  ModeSpectrum base = mode_spectrum(untweezed_chain(3));
  ModeSpectrum tw = mode_spectrum(paper_chain());

  double shift3 = c::hz(tw.frequencies(2) - base.frequencies(2));
  CHECK(shift3 == doctest::Approx(4058.463875).epsilon(1e-6));
  CHECK(std::abs(shift3 - 4000.0) / 4000.0 < 0.05);

  // the center ion does not participate in the second mode: exactly unshifted
  double shift2 = c::hz(tw.frequencies(1) - base.frequencies(1));
  CHECK(std::abs(shift2) < 1e-6);
  CHECK(std::abs(tw.mode_matrix(1, 1)) < 1e-10);

  // exact eigenvalue shift vs first-order pin * b_center^2 (b^2 = 2/3): 2%
  double lam3 = tw.frequencies(2) / kNu360;
  lam3 *= lam3;
  double dlam = lam3 - 5.8;
  CHECK(dlam == doctest::Approx(0.054427510491).epsilon(1e-6));
  double first_order = 0.081186139007 * (2.0 / 3.0);
  CHECK(std::abs(dlam - first_order) / dlam < 0.02);
}

TEST_CASE("weak-pinning shift matches first-order perturbation to 1%") {
  // pick the light shift that gives (w_op/nu)^2 = 0.01
  double r = 0.01;
  double wls = r * kCaMass * 1e-12 * kNu360 * kNu360 / (4.0 * c::hbar);
  ChainConfig cfg = paper_chain(wls);
  ModeSpectrum base = mode_spectrum(untweezed_chain(3));
  ModeSpectrum tw = mode_spectrum(cfg);
  for (int m = 0; m < 3; ++m) {
    double lam_t = tw.frequencies(m) / kNu360;
    double lam_b = base.frequencies(m) / kNu360;
    double exact = lam_t * lam_t - lam_b * lam_b;
    double b_c = base.mode_matrix(m, 1);
    double fo = r * b_c * b_c;
    if (fo < 1e-12) {
      CHECK(std::abs(exact) < 1e-10);
    } else {
      CHECK(std::abs(exact - fo) / fo < 0.01);
    }
  }
}

TEST_CASE("every mode frequency is nondecreasing in the light shift") {
  ChainConfig cfg = untweezed_chain(5);
  cfg.tweezer_flags = {0, 1, 1, 1, 0};
  Eigen::VectorXd prev;
  for (double ls_hz : {0.0, 1e6, 5e6, 10.4e6}) {
    cfg.light_shift = c::angular(ls_hz);
    ModeSpectrum s = mode_spectrum(cfg);
    if (prev.size() > 0)
      for (int m = 0; m < 5; ++m) CHECK(s.frequencies(m) >= prev(m) - 1e-9);
    prev = s.frequencies;
  }
}

TEST_CASE("mirror-symmetric tweezer patterns give mirror-symmetric modes") {
  ChainConfig cfg = untweezed_chain(5);
  cfg.tweezer_flags = {0, 1, 0, 1, 0};
  cfg.light_shift = c::angular(10.4e6);
  ModeSpectrum s = mode_spectrum(cfg);
  for (int m = 0; m < 5; ++m) {
    Eigen::VectorXd v = s.mode_matrix.row(m).transpose();
    Eigen::VectorXd rev = v.reverse();
    double same = (rev - v).lpNorm<Eigen::Infinity>();
    double flip = (rev + v).lpNorm<Eigen::Infinity>();
    CHECK(std::min(same, flip) < 1e-9);
  }
}

TEST_CASE("secular matrix input validation") {
  Eigen::VectorXd u(2);
  u << 0.0, 0.0;
  CHECK_THROWS_AS(secular_matrix(u, {0, 0}, 0.0, kNu360), std::domain_error);
  Eigen::VectorXd ok(2);
  ok << -0.63, 0.63;
  CHECK_THROWS_AS(secular_matrix(ok, {0}, 0.0, kNu360), std::invalid_argument);
}

TEST_CASE("single free ion has a unit secular matrix") {
  Eigen::VectorXd u(1);
  u << 0.0;
  Eigen::MatrixXd a = secular_matrix(u, {0}, 0.0, kNu360);
  CHECK(a(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gate-mode coupling strength for the outer ions") {
  ModeSpectrum tw = mode_spectrum(paper_chain());
  // sign convention: first significant component positive
  CHECK(tw.mode_matrix(2, 0) == doctest::Approx(0.40365835).epsilon(1e-6));
  CHECK(tw.mode_matrix(2, 1) == doctest::Approx(-0.82104803).epsilon(1e-6));
  CHECK(tw.lamb_dicke(2, 0) == doctest::Approx(0.04192043).epsilon(1e-5));
  CHECK(tw.lamb_dicke(2, 1) == doctest::Approx(-0.08526687).epsilon(1e-5));

  ModeSpectrum base = mode_spectrum(untweezed_chain(3));
  CHECK(base.lamb_dicke(2, 0) == doctest::Approx(0.0424962147).epsilon(1e-6));

  // drive at half the sideband splitting: Rabi within 2% of 47.4 kHz
  double delta0 = c::angular(4e3);
  double rabi = delta0 / (2.0 * tw.lamb_dicke(2, 0));
  CHECK(std::abs(c::hz(rabi) - 47.4e3) / 47.4e3 < 0.02);
}

TEST_CASE("coupling scales as the inverse root of the mode frequency") {
  ModeSpectrum s = mode_spectrum(untweezed_chain(3));
  Eigen::MatrixXd eta1 = lamb_dicke(s.mode_matrix, s.frequencies, 729e-9, 1.0, kCaMass);
  Eigen::MatrixXd eta4 =
      lamb_dicke(s.mode_matrix, 4.0 * s.frequencies, 729e-9, 1.0, kCaMass);
  CHECK((eta4 - 0.5 * eta1).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::MatrixXd eta0 = lamb_dicke(s.mode_matrix, s.frequencies, 729e-9, 0.0, kCaMass);
  CHECK(eta0.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("conditional spectrum of the demonstrated three-ion gate") {
  ConditionalSpectrum cs = conditional_spectrum(paper_chain(), 2);
  REQUIRE(cs.freqs.size() == 2);
  CHECK(c::hz(cs.freqs[0]) == doctest::Approx(866994.81).epsilon(1e-6));
  CHECK(c::hz(cs.freqs[1] - cs.freqs[0]) == doctest::Approx(4058.463875).epsilon(1e-6));
  CHECK(cs.per_shift == doctest::Approx(cs.freqs[1] - cs.freqs[0]).epsilon(1e-12));
  CHECK(cs.all_subsets_checked);
}

TEST_CASE("zero light shift leaves the conditional spectrum flat") {
  ChainConfig cfg = paper_chain(0.0);
  ConditionalSpectrum cs = conditional_spectrum(cfg, 2);
  CHECK(cs.freqs[0] == doctest::Approx(cs.freqs[1]).epsilon(1e-14));
  CHECK(std::abs(cs.per_shift) < 1e-9);
}

TEST_CASE("conditional frequencies are nondecreasing in the tweezed count") {
  ChainConfig cfg = untweezed_chain(6);
  cfg.tweezer_flags = {0, 1, 1, 1, 1, 0};
  cfg.light_shift = c::angular(10.4e6);
  ConditionalSpectrum cs = conditional_spectrum(cfg, 0);
  REQUIRE(cs.freqs.size() == 5);
  for (size_t k = 0; k + 1 < cs.freqs.size(); ++k)
    CHECK(cs.freqs[k + 1] >= cs.freqs[k]);
}

TEST_CASE("lowest-mode shift depends only on the number of pinned ions at weak pinning") {
  // (w_op/nu)^2 = 0.01 keeps the subset spread in the first-order regime
  double r = 0.01;
  double wls = r * kCaMass * 1e-12 * kNu360 * kNu360 / (4.0 * c::hbar);
  ChainConfig cfg = untweezed_chain(5);
  cfg.tweezer_flags = {0, 1, 1, 1, 0};
  cfg.light_shift = wls;
  ConditionalSpectrum cs = conditional_spectrum(cfg, 0);
  CHECK(cs.all_subsets_checked);
  CHECK(cs.max_subset_spread / cs.freqs[0] < 1e-6);
}

TEST_CASE("ten-control chain: lowest-mode ladder is linear to 2%") {
  ChainConfig cfg;
  cfg.n_ions = 12;
  cfg.ion_mass = kCaMass;
  cfg.axial_freq = c::angular(211e3);
  cfg.tweezer_flags = {0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0};
  cfg.light_shift = c::angular(20e6);
  cfg.beam_waist = 1e-6;
  ConditionalSpectrum cs = conditional_spectrum(cfg, 0);
  REQUIRE(cs.freqs.size() == 11);
  CHECK(c::hz(cs.per_shift) == doctest::Approx(3630.870).epsilon(1e-4));

  // least-squares line over k; max deviation relative to span
  double n = 11.0, sk = 0.0, sk2 = 0.0, sf = 0.0, skf = 0.0;
  for (int k = 0; k <= 10; ++k) {
    sk += k;
    sk2 += double(k) * k;
    sf += cs.freqs[k];
    skf += k * cs.freqs[k];
  }
  double slope = (n * skf - sk * sf) / (n * sk2 - sk * sk);
  double icept = (sf - slope * sk) / n;
  double dev = 0.0;
  for (int k = 0; k <= 10; ++k)
    dev = std::max(dev, std::abs(cs.freqs[k] - (icept + slope * k)));
  double span = cs.freqs[10] - cs.freqs[0];
  CHECK(dev / span < 0.02);
}

TEST_CASE("conditional spectrum is identical in serial and parallel runs") {
  ChainConfig cfg = untweezed_chain(6);
  cfg.tweezer_flags = {0, 1, 1, 1, 1, 0};
  cfg.light_shift = c::angular(10.4e6);
  ConditionalSpectrum a = conditional_spectrum(cfg, 0, 4096, Execution::serial);
  ConditionalSpectrum b = conditional_spectrum(cfg, 0, 4096, Execution::parallel);
  REQUIRE(a.freqs.size() == b.freqs.size());
  for (size_t k = 0; k < a.freqs.size(); ++k) CHECK(a.freqs[k] == b.freqs[k]);
  CHECK(a.max_subset_spread == b.max_subset_spread);
  CHECK(a.per_shift == b.per_shift);
}

TEST_CASE("subset enumeration cap is honored") {
  ChainConfig cfg = untweezed_chain(12);
  cfg.tweezer_flags.assign(12, 1);
  cfg.tweezer_flags[0] = 0;
  cfg.tweezer_flags[11] = 0;
  cfg.light_shift = c::angular(1e6);
  ConditionalSpectrum cs = conditional_spectrum(cfg, 0, /*max_subsets=*/8);
  CHECK_FALSE(cs.all_subsets_checked);
  REQUIRE(cs.freqs.size() == 11);
}

TEST_CASE("chain config validation") {
  ChainConfig cfg = paper_chain();
  cfg.tweezer_flags = {1, 0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = paper_chain();
  cfg.axial_freq = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = paper_chain();
  cfg.light_shift = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
  cfg = paper_chain();
  cfg.qubit_offsets = {0.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
