#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "bsv/constants.hpp"
#include "bsv/design.hpp"
#include "bsv/dispersion.hpp"
#include "bsv/observables.hpp"
#include "bsv/propagator.hpp"

using namespace bsv;
using std::complex;

namespace {

// Same two-mode squeezer fixture as the propagator tests: one node per band,
// unit spacing, so spectral densities and plain moments coincide.
struct Toy {
  double omega0 = 1e15;
  double k0 = 1e7;
  double length = 0.01;
  PhaseMismatchTable table;
  PumpSpectrum pump;
  PolingPattern poling;

  Toy()
      : table{FrequencyGrid{FrequencyAxis{1e15, 1.0, 1}, FrequencyAxis{1e15, 1.0, 1}},
              Eigen::VectorXd::Constant(1, 1e7), Eigen::VectorXd::Constant(1, 1e7),
              Eigen::VectorXd::Constant(1, 2e7), Eigen::MatrixXd::Zero(1, 1)},
        poling(uniform_poling(0.01)) {
    pump.samples = Eigen::VectorXcd::Ones(1);
    pump.l1_norm = 1.0;
  }

  GainSpec gain(double kappa) const {
    const double n_ref = speed_of_light * k0 / omega0;
    return make_gain(kappa, omega0, n_ref, length);
  }
};

struct SmallRun {
  CrystalSpec crystal;
  PhaseMatchedPair pair;
  FrequencyGrid grid;
  PhaseMismatchTable table;
  PolingPattern poling;
  PumpSpectrum pump;

  explicit SmallRun(int n = 21, double span = 3.2e13)
      : pair(find_phase_matched_pair(crystal, 791e-9)),
        grid{FrequencyAxis{pair.omega_idler, span, n}, FrequencyAxis{pair.omega_signal, span, n}},
        table(PhaseMismatchTable::build(crystal.sellmeier, crystal.axes, grid)),
        poling(periodic_poling(crystal.poling_period, crystal.length)),
        pump(gaussian_pump(grid, 791e-9, 2e-9)) {}

  TransferFunctions run(double kappa) const {
    const auto gain = make_gain(kappa, pair.omega_idler, crystal.sellmeier, crystal.axes.idler,
                                crystal.length, GainSpec::Normalization::pump_l1);
    return propagate_all(table, poling, pump, gain);
  }

  Window full_window(const FrequencyAxis& axis) const {
    return {axis.at(0), axis.at(axis.n - 1)};
  }
};

double pearson(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const Eigen::ArrayXXd dx = x.array() - x.mean();
  const Eigen::ArrayXXd dy = y.array() - y.mean();
  return (dx * dy).sum() / std::sqrt(dx.square().sum() * dy.square().sum());
}

}  // namespace

TEST_CASE("toy closed forms") {
  const Toy toy;
  const double kappa = 1.0;
  const auto tf = propagate_all(toy.table, toy.poling, toy.pump, toy.gain(kappa));
  const double ch = std::cosh(kappa);
  const double sh = std::sinh(kappa);

  const auto corr = correlations(tf);

  SUBCASE("occupation and anomalous correlation") {
    // Unit spacing: G1 = sinh^2, Q = i cosh sinh (zero mismatch keeps the
    // squeeze axis pinned on the imaginary side).
    CHECK(corr.g1_ii(0, 0).real() == doctest::Approx(sh * sh).epsilon(1e-6));
    CHECK(corr.g1_ss(0, 0).real() == doctest::Approx(sh * sh).epsilon(1e-6));
    CHECK(std::abs(corr.g1_ii(0, 0).imag()) < 1e-9);
    CHECK(std::abs(corr.q_is(0, 0)) == doctest::Approx(ch * sh).epsilon(1e-6));
    CHECK(corr.q_is(0, 0).imag() == doctest::Approx(ch * sh).epsilon(1e-6));
    CHECK(std::abs(corr.q_is(0, 0) - corr.q_si(0, 0)) < 1e-9 * ch * sh);
  }

  SUBCASE("coincidence map") {
    const auto map = g2(corr, Band::idler, Band::signal);
    const double expected = sh * sh * sh * sh + ch * ch * sh * sh;
    CHECK(map.value(0, 0) == doctest::Approx(expected).epsilon(1e-6));
    CHECK(map.normalized(0, 0) == 1.0);
    CHECK_THROWS_AS(g2(corr, Band::idler, Band::idler), std::invalid_argument);
  }

  SUBCASE("perfect twin beams cancel the number difference") {
    const Window w{toy.omega0 - 0.5, toy.omega0 + 0.5};
    CHECK(std::abs(nrf(corr, w, w)) < 1e-6);
  }

  SUBCASE("covariance of the two-mode squeezed state") {
    const BinSet bins = make_bins(toy.table.grid, {{Band::idler, toy.omega0, 1.0},
                                                   {Band::signal, toy.omega0, 1.0}});
    const auto cov = covariance(tf, bins);
    REQUIRE(cov.sigma.rows() == 4);

    CHECK(cov.sigma(0, 0).real() == doctest::Approx(1 + 2 * sh * sh).epsilon(1e-6));
    CHECK(cov.sigma(1, 1).real() == doctest::Approx(1 + 2 * sh * sh).epsilon(1e-6));
    CHECK(std::abs(cov.sigma(0, 1)) < 1e-9);                  // <a_i^dag a_s> never enters
    CHECK(std::abs(cov.sigma(0, 3) - complex<double>(0, 2 * ch * sh)) < 1e-6 * ch * sh);
    CHECK(std::abs(cov.sigma(0, 2)) == 0.0);                  // <a_i a_i> never enters

    // Pure Gaussian state: det(sigma) = 1 and the uncertainty bound is tight.
    CHECK(wigner_value(cov, Eigen::VectorXcd::Zero(2)) ==
          doctest::Approx(std::pow(pi, -2)).epsilon(1e-5));
    const double floor = covariance_physicality(cov);
    CHECK(floor > -1e-8);
    CHECK(floor < 1e-5);
  }
}

TEST_CASE("zero gain stays vacuum") {
  const SmallRun run;
  const auto tf = run.run(0.0);
  const auto corr = correlations(tf);

  CHECK(corr.g1_ii.cwiseAbs().maxCoeff() == 0.0);
  CHECK(corr.g1_ss.cwiseAbs().maxCoeff() == 0.0);
  CHECK(corr.q_is.cwiseAbs().maxCoeff() == 0.0);
  CHECK(corr.q_si.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(nrf(corr, run.full_window(run.grid.idler), run.full_window(run.grid.signal)),
                  std::domain_error);

  const double dw = run.grid.spacing();
  const BinSet bins = make_bins(run.grid, {{Band::idler, run.pair.omega_idler, 4 * dw},
                                           {Band::signal, run.pair.omega_signal, 4 * dw}});
  const auto cov = covariance(tf, bins);
  CHECK((cov.sigma - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(covariance_physicality(cov)) < 1e-12);

  // Vacuum Wigner values in closed form.
  CHECK(wigner_value(cov, Eigen::VectorXcd::Zero(2)) ==
        doctest::Approx(std::pow(pi, -2)).epsilon(1e-12));
  Eigen::VectorXcd alpha(2);
  alpha << complex<double>(1.0, 0.0), complex<double>(0.0, 0.0);
  CHECK(wigner_value(cov, alpha) ==
        doctest::Approx(std::exp(-2.0) * std::pow(pi, -2)).epsilon(1e-12));
}

TEST_CASE("low gain coincidence map tracks the design") {
  const SmallRun run;
  const auto corr = correlations(run.run(0.05));
  const auto map = g2(corr, Band::idler, Band::signal);

  const auto phi = phase_matching_function(run.poling, run.table);
  const Eigen::MatrixXd intensity = jsi(run.pump, phi, run.grid);

  CHECK(map.normalized.maxCoeff() == 1.0);
  CHECK(pearson(map.normalized, intensity) >= 0.99);
}

TEST_CASE("correlation matrix structure at high gain") {
  const SmallRun run;
  const auto corr = correlations(run.run(0.8));
  const double dw = run.grid.spacing();

  SUBCASE("G1 is Hermitian positive semidefinite") {
    const double scale = corr.g1_ii.cwiseAbs().maxCoeff();
    CHECK((corr.g1_ii - corr.g1_ii.adjoint()).cwiseAbs().maxCoeff() < 1e-13 * scale);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(corr.g1_ii);
    REQUIRE(eig.info() == Eigen::Success);
    CHECK(eig.eigenvalues().minCoeff() > -1e-8 * eig.eigenvalues().maxCoeff());
  }

  SUBCASE("anomalous correlation obeys bosonic exchange symmetry") {
    const double scale = corr.q_is.cwiseAbs().maxCoeff();
    CHECK(scale > 0.0);
    CHECK((corr.q_is - corr.q_si.transpose()).cwiseAbs().maxCoeff() < 1e-9 * scale);
  }

  SUBCASE("coincidence map inherits the exchange symmetry") {
    const auto is = g2(corr, Band::idler, Band::signal);
    const auto si = g2(corr, Band::signal, Band::idler);
    const double scale = is.value.maxCoeff();
    CHECK((is.value - si.value.transpose()).cwiseAbs().maxCoeff() < 1e-9 * scale);
  }

  SUBCASE("band photon numbers balance") {
    const double ni = dw * corr.g1_ii.diagonal().real().sum();
    const double ns = dw * corr.g1_ss.diagonal().real().sum();
    CHECK(ni > 0.0);
    CHECK(std::abs(ni - ns) < 1e-6 * std::max(ni, ns));
  }
}

TEST_CASE("noise reduction factor") {
  const SmallRun run;
  const double dw = run.grid.spacing();
  const double ci = run.pair.omega_idler;
  const double cs = run.pair.omega_signal;
  const Window wi = run.full_window(run.grid.idler);
  const Window ws = run.full_window(run.grid.signal);

  const auto corr_half = correlations(run.run(0.5));
  const auto corr_mid = correlations(run.run(2.0));
  const auto corr_high = correlations(run.run(8.0));

  SUBCASE("full-band windows cancel the difference noise exactly") {
    // The discrete kernel only couples modes on the grid, so every twin is
    // counted and the photon-number difference carries no noise at any gain.
    CHECK(std::abs(nrf(corr_half, wi, ws)) < 1e-6);
    CHECK(std::abs(nrf(corr_mid, wi, ws)) < 1e-6);
    CHECK(std::abs(nrf(corr_high, wi, ws)) < 1e-6);
  }

  SUBCASE("matched central windows stay deeply below shot noise") {
    const Window wi3{ci - 3 * dw, ci + 3 * dw};
    const Window ws3{cs - 3 * dw, cs + 3 * dw};
    for (const auto* corr : {&corr_half, &corr_mid, &corr_high}) {
      const double value = nrf(*corr, wi3, ws3);
      CHECK(value > 1e-4);  // edge nodes leak a few twins out of the window
      CHECK(value < 0.1);
    }
  }

  SUBCASE("windows offset to the same side see excess noise at high gain") {
    // Both windows sit above their band centers, so the mirrored twins
    // produced by the pump band land outside. The leftover unpaired thermal
    // population pushes the difference noise past shot noise once the gain
    // is strong.
    const Window hi_i{ci + 1.5 * dw, ci + 10 * dw};
    const Window hi_s{cs + 1.5 * dw, cs + 10 * dw};
    CHECK(nrf(corr_high, hi_i, hi_s) > 1.05);
  }

  SUBCASE("window validation") {
    CHECK_THROWS_AS(nrf(corr_mid, Window{wi.hi, wi.lo}, ws), std::invalid_argument);
    CHECK_THROWS_AS(nrf(corr_mid, Window{wi.hi + 1e14, wi.hi + 2e14}, ws),
                    std::invalid_argument);
  }
}

TEST_CASE("spectral bins") {
  const SmallRun run;
  const double dw = run.grid.spacing();
  const double ci = run.pair.omega_idler;
  const double cs = run.pair.omega_signal;

  SUBCASE("disjoint top-hat bins are orthonormal") {
    const BinSet bins = make_bins(run.grid, {{Band::idler, ci - 5 * dw, 4 * dw},
                                             {Band::idler, ci + 5 * dw, 4 * dw},
                                             {Band::signal, cs, 4 * dw, 0.7}});
    for (int j = 0; j < bins.size(); ++j) {
      for (int k = 0; k < bins.size(); ++k) {
        if (bins.bins[j].field != bins.bins[k].field) continue;
        const complex<double> overlap =
            dw * bin_mode_function(bins, j).dot(bin_mode_function(bins, k));
        const double expected = j == k ? 1.0 : 0.0;
        CHECK(std::abs(overlap - expected) < 1e-10);
      }
    }
    // The phase rides on the mode function.
    const Eigen::VectorXcd u = bin_mode_function(bins, 2);
    CHECK(std::arg(u(10)) == doctest::Approx(0.7).epsilon(1e-12));
  }

  SUBCASE("membership validation") {
    CHECK_THROWS_AS(make_bins(run.grid, {{Band::idler, ci, 4 * dw},
                                         {Band::idler, ci + 2 * dw, 4 * dw}}),
                    std::invalid_argument);  // overlap
    CHECK_THROWS_AS(make_bins(run.grid, {{Band::idler, ci + 0.5 * dw, 0.1 * dw}}),
                    std::invalid_argument);  // covers no node
    CHECK_THROWS_AS(make_bins(run.grid, {{Band::idler, ci, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(make_bins(run.grid, {}), std::invalid_argument);
  }
}

TEST_CASE("covariance structure at high gain") {
  const SmallRun run;
  const auto tf = run.run(2.0);
  const double dw = run.grid.spacing();
  const double ci = run.pair.omega_idler;
  const double cs = run.pair.omega_signal;

  // Two offset bins per band exercise the full block layout. The pump band
  // correlates mirrored detunings while the phase-mismatch stripe correlates
  // equal detunings, so off-center bins pick up a mix of both; the strong
  // anomalous signal lives on the bright core and is pinned separately below.
  const BinSet bins = make_bins(run.grid, {{Band::idler, ci - 5 * dw, 4 * dw},
                                           {Band::idler, ci + 5 * dw, 4 * dw},
                                           {Band::signal, cs - 5 * dw, 4 * dw},
                                           {Band::signal, cs + 5 * dw, 4 * dw}});
  const auto cov = covariance(tf, bins);
  const int n = bins.size();
  REQUIRE(cov.sigma.rows() == 2 * n);

  SUBCASE("structural zeros stay exactly zero") {
    // Same-band anomalous entries and cross-band occupations never enter.
    CHECK(std::abs(cov.sigma(0, n + 1)) == 0.0);  // <a_i0 a_i1>
    CHECK(std::abs(cov.sigma(2, n + 3)) == 0.0);  // <a_s0 a_s1>
    CHECK(std::abs(cov.sigma(0, 2)) == 0.0);      // <a_i0^dag a_s0>
    CHECK(std::abs(cov.sigma(1, 3)) == 0.0);
  }

  SUBCASE("hermitian, physical, and above vacuum occupation") {
    CHECK((cov.sigma - cov.sigma.adjoint()).cwiseAbs().maxCoeff() <
          1e-13 * cov.sigma.cwiseAbs().maxCoeff());
    CHECK(covariance_physicality(cov) > -1e-8);
    for (int j = 0; j < 2 * n; ++j) CHECK(cov.sigma(j, j).real() >= 1.0);
  }

  SUBCASE("central bins capture strong twin correlations") {
    const BinSet core =
        make_bins(run.grid, {{Band::idler, ci, 2 * dw}, {Band::signal, cs, 2 * dw}});
    const auto reduced = covariance(tf, core);
    const double occupation = 0.5 * (reduced.sigma(0, 0).real() - 1.0);
    CHECK(occupation > 0.1);
    CHECK(occupation < 0.5);
    const complex<double> anomalous = 0.5 * reduced.sigma(0, 3);  // <a_i a_s>
    CHECK(std::abs(anomalous) > 0.25);
    // Positivity caps the anomalous block: |<a_i a_s>|^2 <= n_i (n_s + 1).
    CHECK(std::norm(anomalous) <= occupation * (occupation + 1.0) + 1e-12);
  }

  SUBCASE("wigner function normalizes on the reduced single-bin state") {
    const BinSet lone = make_bins(run.grid, {{Band::idler, ci, 3.3e13}});
    const auto reduced = covariance(tf, lone);
    const double var = reduced.sigma(0, 0).real();  // <q^2> of the thermal bin
    const double half_range = 8.0 * std::sqrt(var);
    const int npts = 501;
    const double step = 2 * half_range / (npts - 1);
    double total = 0.0;
    for (int iq = 0; iq < npts; ++iq) {
      for (int ip = 0; ip < npts; ++ip) {
        const double q = -half_range + iq * step;
        const double p = -half_range + ip * step;
        Eigen::VectorXcd alpha(1);
        alpha << complex<double>(q, p) / std::sqrt(2.0);
        total += wigner_value(reduced, alpha) * step * step;
      }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
  }

  SUBCASE("wigner input validation") {
    CHECK_THROWS_AS(wigner_value(cov, Eigen::VectorXcd::Zero(3)), std::invalid_argument);
    CovarianceMatrix degenerate{bins, Eigen::MatrixXcd::Zero(2 * n, 2 * n)};
    CHECK_THROWS_AS(wigner_value(degenerate, Eigen::VectorXcd::Zero(n)), std::domain_error);
  }
}
