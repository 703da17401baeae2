#pragma once

#include <vector>

#include <Eigen/Dense>

#include "bsv/dispersion.hpp"
#include "bsv/propagator.hpp"

namespace bsv {

// Stationary-field correlations on the simulation grid. Frequency integrals
// are discretized as sums weighted by the grid spacing, so entries carry the
// spectral-density scale of the transfer functions (1/spacing at vacuum
// occupation 1). Cross-field G1 vanishes identically for a two-band squeezer
// and is not stored; the anomalous correlations q_is, q_si are kept for both
// orderings.
struct CorrelationSet {
  FrequencyGrid grid;
  Eigen::MatrixXcd g1_ii;  // <a_i^dag(w) a_i(w')>, Hermitian PSD
  Eigen::MatrixXcd g1_ss;  // <a_s^dag(w) a_s(w')>, Hermitian PSD
  Eigen::MatrixXcd q_is;   // <a_i(w) a_s(w')>
  Eigen::MatrixXcd q_si;   // <a_s(w) a_i(w')>
};

// Single-field G1 = sum_seeds spacing * conj(V) V^T for the requested band.
Eigen::MatrixXcd g1(const TransferFunctions& tf, Band field);

// Both anomalous correlation matrices.
struct QCorrelations {
  Eigen::MatrixXcd is;  // n_idler x n_signal
  Eigen::MatrixXcd si;  // n_signal x n_idler
};
QCorrelations q_corr(const TransferFunctions& tf);

CorrelationSet correlations(const TransferFunctions& tf);

// Cross-band frequency-resolved coincidence map
//   G2_ab(w, w') = G1_aa(w, w) G1_bb(w', w') + |Q_ab(w, w')|^2.
// The cross G1 term is identically zero and never materializes. `normalized`
// is the same map scaled to unit peak (all-zero maps stay zero).
struct G2Result {
  Eigen::MatrixXd value;
  Eigen::MatrixXd normalized;
};
G2Result g2(const CorrelationSet& corr, Band a, Band b);

// Total photon number over the full band, spacing * trace G1.
double total_photons(const CorrelationSet& corr, Band field);

// Closed frequency window [lo, hi] on one band's axis, in rad/s.
struct Window {
  double lo = 0.0;
  double hi = 0.0;
};

// Grid indices covered by the window. Throws std::invalid_argument for an
// empty or inverted window.
std::vector<int> window_indices(const FrequencyAxis& axis, const Window& window);

// Noise reduction factor Var(N_i - N_s) / (N_i + N_s) for photon numbers
// integrated over the two windows. Gaussian-state moments reduce the variance
// to window-restricted double sums of |G1|^2 and |Q|^2. Throws
// std::domain_error when both windows hold zero photons.
double nrf(const CorrelationSet& corr, const Window& idler_window,
           const Window& signal_window);

// Top-hat spectral bin on one band. The mode function is
// exp(i phase) / sqrt(width_covered) on the covered nodes, zero elsewhere, so
// bins on one band are orthonormal as long as they are disjoint.
struct FrequencyBin {
  Band field = Band::idler;
  double center = 0.0;  // rad/s
  double width = 0.0;   // rad/s
  double phase = 0.0;   // rad, rotates the bin operator a_j -> e^{-i phase} a_j
};

struct BinSet {
  FrequencyGrid grid;
  std::vector<FrequencyBin> bins;
  std::vector<std::vector<int>> members;  // node indices per bin on its band's axis
  int size() const { return static_cast<int>(bins.size()); }
};

// Resolves bin membership and validates: every bin covers at least one node
// and same-band bins are disjoint. Throws std::invalid_argument otherwise.
BinSet make_bins(const FrequencyGrid& grid, const std::vector<FrequencyBin>& bins);

// Mode function of bin j sampled on its band's axis (length n_idler or
// n_signal depending on the bin's field).
Eigen::VectorXcd bin_mode_function(const BinSet& bins, int j);

// Symmetric-ordered covariance of the binned ladder operators, ordering
// (a_1..a_N, a_1^dag..a_N^dag):
//   sigma_mn = <xi_m xi_n^dag + xi_n^dag xi_m>,  vacuum -> identity.
struct CovarianceMatrix {
  BinSet bins;
  Eigen::MatrixXcd sigma;  // 2N x 2N Hermitian
};
CovarianceMatrix covariance(const TransferFunctions& tf, const BinSet& bins);

// Minimum eigenvalue of sigma + diag(I, -I), the uncertainty-relation matrix
// in ladder ordering. Physical states give a nonnegative value up to rounding.
double covariance_physicality(const CovarianceMatrix& cov);

// Gaussian Wigner function at complex displacement alpha (length N, one entry
// per bin), evaluated as
//   W = pi^-N det(sigma)^-1/2 exp(-xi^dag sigma^-1 xi),  xi = (alpha, conj alpha).
// Normalized to 1 under the quadrature measure prod dq_j dp_j with
// alpha = (q + i p) / sqrt(2). Throws std::domain_error for singular sigma.
double wigner_value(const CovarianceMatrix& cov, const Eigen::VectorXcd& alpha);

}  // namespace bsv
