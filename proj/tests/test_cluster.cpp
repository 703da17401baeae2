#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "bsv/cluster.hpp"
#include "bsv/constants.hpp"
#include "bsv/design.hpp"
#include "bsv/dispersion.hpp"
#include "bsv/observables.hpp"
#include "bsv/propagator.hpp"

using namespace bsv;
using std::complex;

namespace {

// Same two-mode squeezer fixture as the propagator and observables tests:
// one node per band, unit spacing, zero mismatch, so the binned covariance
// is exactly the two-mode squeezed state with anomalous moment i cosh sinh.
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

  BinSet bins() const {
    return make_bins(table.grid, {{Band::idler, omega0, 1.0}, {Band::signal, omega0, 1.0}});
  }
};

// Three-lobe hologram plus three-peak pump around the matched pair. Bins a
// half comb spacing off center see two pump peaks each, so the four bins at
// +-delta/2 close into a square: every bin couples to both opposite-band
// bins, with one edge sign-flipped by the negative hologram amplitude.
struct SquareDesign {
  CrystalSpec crystal;
  PhaseMatchedPair pair;
  FrequencyGrid grid;
  PhaseMismatchTable table;
  double dw;
  double delta;
  Eigen::MatrixXcd phi;
  PumpSpectrum pump;

  SquareDesign()
      : pair(find_phase_matched_pair(crystal, 791e-9)),
        grid{FrequencyAxis{pair.omega_idler, 3.2e13, 41},
             FrequencyAxis{pair.omega_signal, 3.2e13, 41}},
        table(PhaseMismatchTable::build(crystal.sellmeier, crystal.axes, grid)) {
    dw = grid.spacing();
    delta = 12 * dw;
    const auto slopes = pair_group_slopes(crystal.sellmeier, crystal.axes, pair);
    const double dk_split = (slopes.u - slopes.v) * delta / 2;
    const double carrier =
        -delta_k(crystal.sellmeier, crystal.axes, pair.omega_idler, pair.omega_signal);
    const double envelope = 6.262e-3;
    const auto holo = multipeak_hologram({{carrier - dk_split, {-1, 0}, envelope},
                                          {carrier, {1, 0}, envelope},
                                          {carrier + dk_split, {1, 0}, envelope}},
                                         crystal.length, false);
    phi = phase_matching_function(holo, table);
    const double sum0 = pair.omega_idler + pair.omega_signal;
    const auto lambda = [](double w) { return two_pi * speed_of_light / w; };
    pump = multi_gaussian_pump(grid, {{lambda(sum0 - delta), 0.7e-9, {1, 0}},
                                      {lambda(sum0), 0.7e-9, {1, 0}},
                                      {lambda(sum0 + delta), 0.7e-9, {1, 0}}});
  }

  BinSet square_bins() const {
    const double ci = pair.omega_idler, cs = pair.omega_signal;
    return make_bins(grid, {{Band::idler, ci - delta / 2, dw},
                            {Band::idler, ci + delta / 2, dw},
                            {Band::signal, cs - delta / 2, dw},
                            {Band::signal, cs + delta / 2, dw}});
  }

  // The square bins plus the six on-comb bins the same design also drives.
  BinSet lattice_bins() const {
    const double ci = pair.omega_idler, cs = pair.omega_signal;
    return make_bins(grid, {{Band::idler, ci - delta / 2, dw},
                            {Band::idler, ci + delta / 2, dw},
                            {Band::idler, ci - delta, dw},
                            {Band::idler, ci, dw},
                            {Band::idler, ci + delta, dw},
                            {Band::signal, cs - delta / 2, dw},
                            {Band::signal, cs + delta / 2, dw},
                            {Band::signal, cs - delta, dw},
                            {Band::signal, cs, dw},
                            {Band::signal, cs + delta, dw}});
  }
};

Eigen::MatrixXd square_pattern() {
  Eigen::MatrixXd g(4, 4);
  g << 0, 0, 1, 1, 0, 0, -1, 1, 1, -1, 0, 0, 1, 1, 0, 0;
  return g / std::sqrt(2.0);
}

// Mode sign flips g -> s g s are unobservable, so compare adjacencies over
// every diagonal sign gauge.
double gauge_min_deviation(const Eigen::MatrixXd& g, const Eigen::MatrixXd& want) {
  const int n = static_cast<int>(g.rows());
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << n); ++mask) {
    Eigen::VectorXd s(n);
    for (int j = 0; j < n; ++j) s(j) = (mask >> j) & 1 ? -1.0 : 1.0;
    const Eigen::MatrixXd flipped = s.asDiagonal() * g * s.asDiagonal();
    best = std::min(best, (flipped - want).cwiseAbs().maxCoeff());
  }
  return best;
}

// Synthetic sampling fixture: 3-node bands with unit spacing, flat pump, and
// a hand-written joint amplitude so every fitted weight has a closed form.
struct Sampled {
  FrequencyGrid grid{FrequencyAxis{1e15, 2.0, 3}, FrequencyAxis{1e15, 2.0, 3}};
  PumpSpectrum pump;

  Sampled() {
    pump.samples = Eigen::VectorXcd::Ones(grid.n_pump());
    pump.l1_norm = static_cast<double>(grid.n_pump());
  }

  BinSet corner_bins() const {
    return make_bins(grid, {{Band::idler, 1e15 - 1, 1.0},
                            {Band::idler, 1e15 + 1, 1.0},
                            {Band::signal, 1e15 - 1, 1.0},
                            {Band::signal, 1e15 + 1, 1.0}});
  }
};

}  // namespace

TEST_CASE("designed hologram samples to a square cluster graph") {
  const SquareDesign d;
  const auto bins = d.square_bins();
  const auto g = hgraph_from_design(d.pump, d.phi, bins);

  REQUIRE(g.g.rows() == 4);
  REQUIRE(g.modes.size() == 4);

  SUBCASE("modes mirror the bin set") {
    for (int j = 0; j < 4; ++j) CHECK(g.modes[j].bin == j);
    CHECK(g.modes[0].field == Band::idler);
    CHECK(g.modes[1].field == Band::idler);
    CHECK(g.modes[2].field == Band::signal);
    CHECK(g.modes[3].field == Band::signal);
    CHECK(g.dim_modes.empty());
    CHECK_FALSE(g.off_lattice);
  }

  SUBCASE("adjacency is symmetric, bipartite, and row-normalized") {
    CHECK((g.g - g.g.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.g.topLeftCorner(2, 2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.g.bottomRightCorner(2, 2).cwiseAbs().maxCoeff() == 0.0);
    double row_max = 0;
    for (int j = 0; j < 4; ++j) row_max = std::max(row_max, g.g.row(j).norm());
    CHECK(row_max == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.scale > 0);
  }

  SUBCASE("weights are real and match the target square") {
    // Midplane-referenced carriers leave the sampled product real up to
    // per-mode phases, so the residual is rounding noise.
    CHECK(g.phase_residual < 1e-10);
    CHECK(gauge_min_deviation(g.g, square_pattern()) < 0.01);
    // The single sign flip is a gauge invariant: the four-edge loop product
    // stays negative under any diagonal sign change.
    CHECK(g.g(0, 2) * g.g(0, 3) * g.g(1, 2) * g.g(1, 3) < 0);
  }

  SUBCASE("sampled weights are close to but not exactly self-inverse") {
    CHECK_THROWS_AS(cluster_matrix(g), UnsupportedGraphError);
  }

  SUBCASE("snapping restores the exact self-inverse adjacency") {
    const auto snapped = snap_adjacency(g);
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) {
        const double scaled = std::sqrt(2.0) * snapped.g(j, k);
        CHECK(std::abs(scaled - std::round(scaled)) < 1e-12);
        CHECK(std::abs(scaled) <= 1.0 + 1e-12);
      }
    CHECK((snapped.g * snapped.g - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK(gauge_min_deviation(snapped.g, square_pattern()) < 1e-12);

    const Eigen::MatrixXd v = cluster_matrix(snapped);
    CHECK((v - snapped.g).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("snap threshold must leave room on both sides") {
    CHECK_THROWS_AS(snap_adjacency(g, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(snap_adjacency(g, 1.0), std::invalid_argument);
  }
}

TEST_CASE("the same design drives a second lattice that partitions off") {
  const SquareDesign d;
  const auto all = d.lattice_bins();
  const auto g = hgraph_from_design(d.pump, d.phi, all);

  // Envelope tails leak a little weight between the two lattices, so the raw
  // graph is one connected blob; quantizing drops the leakage.
  CHECK(partition_lattices(g).size() == 1);

  const auto parts = partition_lattices(snap_adjacency(g));
  REQUIRE(parts.size() == 2);
  REQUIRE(parts[0].modes.size() == 4);
  REQUIRE(parts[1].modes.size() == 6);

  SUBCASE("modes keep their original bin identities") {
    const std::vector<int> square_ids{0, 1, 5, 6};
    const std::vector<int> comb_ids{2, 3, 4, 7, 8, 9};
    for (size_t a = 0; a < square_ids.size(); ++a)
      CHECK(parts[0].modes[a].bin == square_ids[a]);
    for (size_t a = 0; a < comb_ids.size(); ++a) CHECK(parts[1].modes[a].bin == comb_ids[a]);
    CHECK(parts[0].modes[0].field == Band::idler);
    CHECK(parts[0].modes[2].field == Band::signal);
  }

  SUBCASE("the square component is the four-mode cluster") {
    CHECK(gauge_min_deviation(parts[0].g, square_pattern()) < 1e-12);
    CHECK_NOTHROW(cluster_matrix(parts[0]));
  }

  SUBCASE("the comb component is ladder-shaped and singular") {
    // Modes (i-, i0, i+, s-, s0, s+): the outer idler bins couple only to the
    // central signal bin (and vice versa), so the two outer rows are
    // proportional and the adjacency cannot be inverted.
    const double outer = 0.5 * (1.0 + 1.0 / std::sqrt(3.0));
    const double inner = 1.0 / std::sqrt(3.0);
    Eigen::MatrixXd want = Eigen::MatrixXd::Zero(6, 6);
    want(0, 4) = outer;
    want(1, 3) = -outer;
    want(1, 4) = inner;
    want(1, 5) = outer;
    want(2, 4) = -outer;
    want += Eigen::MatrixXd(want.transpose());
    CHECK(gauge_min_deviation(parts[1].g, want) < 1e-12);
    CHECK_THROWS_AS(cluster_matrix(parts[1]), std::domain_error);
  }
}

TEST_CASE("toy twin beams follow the two-mode nullifier closed forms") {
  const Toy toy;
  const double kappa = 1.0;
  const auto tf = propagate_all(toy.table, toy.poling, toy.pump, toy.gain(kappa));
  const auto cov = covariance(tf, toy.bins());
  const double ch = std::cosh(kappa);
  const double sh = std::sinh(kappa);

  Eigen::MatrixXd v(2, 2);
  v << 0, 1, 1, 0;
  const auto ns = nullifier_variances(cov, v);

  SUBCASE("sweep layout") {
    REQUIRE(ns.phi.size() == 721);
    REQUIRE(ns.variances.rows() == 721);
    REQUIRE(ns.variances.cols() == 2);
    CHECK(ns.phi(0) == 0.0);
    CHECK(ns.phi(1) == doctest::Approx(pi / 721).epsilon(1e-12));
    CHECK(ns.reference(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ns.reference(1) == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("variance traces the cos(2 phi) sinusoid") {
    // Var = 2 (1 + 2 sinh^2) - 4 cosh sinh cos(2 phi): the anomalous moment
    // i cosh sinh puts the squeezed quadrature at phi = 0.
    double worst = 0;
    for (int t = 0; t < ns.phi.size(); ++t) {
      const double expected = 2 * (1 + 2 * sh * sh) - 4 * ch * sh * std::cos(2 * ns.phi(t));
      worst = std::max(worst, std::abs(ns.variances(t, 0) - expected));
    }
    CHECK(worst < 1e-6 * 2 * (1 + 2 * sh * sh));
    CHECK((ns.variances.col(0) - ns.variances.col(1)).cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("minimum sits on the first sample at twice the squeezing") {
    const double expected_min = 2 * std::exp(-2 * kappa);
    for (int j = 0; j < 2; ++j) {
      CHECK(ns.min_variance(j) == doctest::Approx(expected_min).epsilon(1e-6));
      CHECK(ns.argmin_phi(j) == 0.0);
      CHECK(ns.squeezing_db(j) ==
            doctest::Approx(10 * std::log10(std::exp(-2 * kappa))).epsilon(1e-6));
    }
    CHECK(ns.simultaneous_index == 0);
    CHECK(ns.simultaneous_phi == 0.0);
    CHECK(ns.variances_at_simultaneous(0) == doctest::Approx(expected_min).epsilon(1e-6));
  }
}

TEST_CASE("vacuum input pins every nullifier at its reference") {
  const Toy toy;

  SUBCASE("two modes") {
    Eigen::MatrixXd v(2, 2);
    v << 0, 1, 1, 0;
    const CovarianceMatrix cov{toy.bins(), Eigen::MatrixXcd::Identity(4, 4)};
    const auto ns = nullifier_variances(cov, v);
    CHECK((ns.variances.array() - 2.0).abs().maxCoeff() < 1e-12);
    CHECK(std::abs(ns.squeezing_db(0)) < 1e-12);
  }

  SUBCASE("four modes") {
    const SquareDesign d;
    const CovarianceMatrix cov{d.square_bins(), Eigen::MatrixXcd::Identity(8, 8)};
    const auto ns = nullifier_variances(cov, square_pattern());
    CHECK((ns.variances.array() - 2.0).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("a global pairing phase only shifts the squeeze quadrature") {
  const Toy toy;
  const double r = 0.7;
  const double ch = std::cosh(r);
  const double sh = std::sinh(r);
  const double chi = 2 * pi * 100 / 721;  // argmin lands exactly on sample 100

  const complex<double> m = complex<double>(0, 1) * ch * sh * std::exp(complex<double>(0, chi));
  Eigen::MatrixXcd sigma = Eigen::MatrixXcd::Identity(4, 4) * (1 + 2 * sh * sh);
  sigma(0, 3) = 2.0 * m;
  sigma(1, 2) = 2.0 * m;
  sigma(3, 0) = 2.0 * std::conj(m);
  sigma(2, 1) = 2.0 * std::conj(m);

  Eigen::MatrixXd v(2, 2);
  v << 0, 1, 1, 0;
  const auto ns = nullifier_variances(CovarianceMatrix{toy.bins(), sigma}, v);

  double worst = 0;
  for (int t = 0; t < ns.phi.size(); ++t) {
    const double expected = 2 * (1 + 2 * sh * sh) - 4 * ch * sh * std::cos(2 * ns.phi(t) - chi);
    worst = std::max(worst, std::abs(ns.variances(t, 0) - expected));
  }
  CHECK(worst < 1e-12 * 2 * (1 + 2 * sh * sh));
  CHECK(ns.min_variance(0) == doctest::Approx(2 * std::exp(-2 * r)).epsilon(1e-12));
  CHECK(ns.argmin_phi(0) == doctest::Approx(chi / 2).epsilon(1e-12));
  CHECK(ns.simultaneous_index == 100);
}

TEST_CASE("separable sampling phases are factored into mode rotations") {
  const Sampled s;
  const auto bins = s.corner_bins();

  SUBCASE("phases attached to individual modes vanish from the weights") {
    const double w = 1 / std::sqrt(2.0);
    const double theta[2] = {0.3, -0.7};
    const double psi[2] = {1.1, 0.4};
    const double target[2][2] = {{w, w}, {-w, w}};
    Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(3, 3);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        phi(2 * a, 2 * b) = target[a][b] * std::exp(complex<double>(0, theta[a] + psi[b]));

    const auto g = hgraph_from_design(s.pump, phi, bins);
    CHECK(g.phase_residual < 1e-12);
    CHECK(g.scale == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gauge_min_deviation(g.g, square_pattern()) < 1e-12);
  }

  SUBCASE("a loop phase defect cannot be rotated away and is reported") {
    // One edge carries exp(i pi/3) relative to the other three; the best
    // separable rotation spreads it into +-pi/12 on the loop, leaving
    // sin(pi/12) of the weight imaginary.
    Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(3, 3);
    phi(0, 0) = 1;
    phi(0, 2) = 1;
    phi(2, 0) = 1;
    phi(2, 2) = std::exp(complex<double>(0, pi / 3));
    const auto g = hgraph_from_design(s.pump, phi, bins);
    CHECK(g.phase_residual > 0.2);
    CHECK(g.phase_residual == doctest::Approx(std::sin(pi / 12)).epsilon(1e-3));
  }
}

TEST_CASE("off-lattice bins and dark bins are flagged") {
  const Sampled s;

  SUBCASE("bin centers between grid nodes raise the flag") {
    const BinSet bins = make_bins(s.grid, {{Band::idler, 1e15 - 1 + 0.3, 1.0},
                                           {Band::idler, 1e15 + 1, 1.0},
                                           {Band::signal, 1e15 - 1, 1.0},
                                           {Band::signal, 1e15 + 1, 1.0}});
    Eigen::MatrixXcd phi = Eigen::MatrixXcd::Ones(3, 3);
    const auto g = hgraph_from_design(s.pump, phi, bins);
    CHECK(g.off_lattice);
  }

  SUBCASE("a bin the design never lights is listed and isolated") {
    const BinSet bins = make_bins(s.grid, {{Band::idler, 1e15 - 1, 1.0},
                                           {Band::idler, 1e15, 1.0},
                                           {Band::idler, 1e15 + 1, 1.0},
                                           {Band::signal, 1e15 - 1, 1.0},
                                           {Band::signal, 1e15 + 1, 1.0}});
    Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(3, 3);
    phi(0, 0) = 1;
    phi(0, 2) = 1;
    phi(2, 0) = -1;
    phi(2, 2) = 1;
    const auto g = hgraph_from_design(s.pump, phi, bins);
    REQUIRE(g.dim_modes.size() == 1);
    CHECK(g.dim_modes[0] == 1);

    const auto parts = partition_lattices(g);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].modes.size() == 4);
    REQUIRE(parts[1].modes.size() == 1);
    CHECK(parts[1].modes[0].bin == 1);
    CHECK(parts[1].dim_modes == std::vector<int>{1});
    CHECK_THROWS_AS(cluster_matrix(parts[1]), std::domain_error);
  }
}

TEST_CASE("graph and nullifier input validation") {
  const Sampled s;
  const auto bins = s.corner_bins();
  const Eigen::MatrixXcd phi = Eigen::MatrixXcd::Ones(3, 3);

  SUBCASE("sampling dimensions must match the grid") {
    CHECK_THROWS_AS(hgraph_from_design(s.pump, Eigen::MatrixXcd::Ones(3, 4), bins),
                    std::invalid_argument);
    PumpSpectrum bad;
    bad.samples = Eigen::VectorXcd::Ones(4);
    CHECK_THROWS_AS(hgraph_from_design(bad, phi, bins), std::invalid_argument);
  }

  SUBCASE("bins must cover both fields") {
    const BinSet idler_only =
        make_bins(s.grid, {{Band::idler, 1e15 - 1, 1.0}, {Band::idler, 1e15 + 1, 1.0}});
    CHECK_THROWS_AS(hgraph_from_design(s.pump, phi, idler_only), std::invalid_argument);
  }

  SUBCASE("an entirely dark design is an error") {
    PumpSpectrum dark;
    dark.samples = Eigen::VectorXcd::Zero(s.grid.n_pump());
    CHECK_THROWS_AS(hgraph_from_design(dark, phi, bins), std::domain_error);
  }

  SUBCASE("scaled self-inverse graphs are rejected, not rescaled") {
    GraphAdjacency g;
    g.g = 2.0 * square_pattern();
    CHECK_THROWS_AS(cluster_matrix(g), UnsupportedGraphError);
    GraphAdjacency empty;
    empty.g.resize(0, 0);
    CHECK_THROWS_AS(cluster_matrix(empty), std::invalid_argument);
  }

  SUBCASE("nullifier sweep rejects mismatched inputs") {
    const Toy toy;
    const CovarianceMatrix cov{toy.bins(), Eigen::MatrixXcd::Identity(4, 4)};
    CHECK_THROWS_AS(nullifier_variances(cov, Eigen::MatrixXd::Zero(3, 3)),
                    std::invalid_argument);
    CHECK_THROWS_AS(nullifier_variances(cov, Eigen::MatrixXd::Zero(2, 2), 1),
                    std::invalid_argument);
    const CovarianceMatrix bad{toy.bins(), Eigen::MatrixXcd::Identity(3, 3)};
    CHECK_THROWS_AS(nullifier_variances(bad, Eigen::MatrixXd::Zero(2, 2)),
                    std::invalid_argument);
  }
}
