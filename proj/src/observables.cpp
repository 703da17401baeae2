#include "bsv/observables.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "bsv/constants.hpp"

namespace bsv {

namespace {

using complexd = std::complex<double>;

const Eigen::MatrixXcd& v_of(const TransferFunctions& tf, Band field) {
  return field == Band::idler ? tf.v_idler : tf.v_signal;
}

}  // namespace

Eigen::MatrixXcd g1(const TransferFunctions& tf, Band field) {
  // The band's output field is seeded only by the twin band's vacuum, so the
  // seed sum runs over the V block alone; the U block pairs with orthogonal
  // seeds and drops out.
  const Eigen::MatrixXcd& v = v_of(tf, field);
  return tf.grid.spacing() * (v.conjugate() * v.transpose());
}

QCorrelations q_corr(const TransferFunctions& tf) {
  // <a_i a_s> pairs amplitudes that grew from the same seed family: the
  // idler-band vacuum component against the signal-band output (and the
  // mirrored product for the opposite ordering). No conjugation: the
  // correlation is anomalous.
  const double dw = tf.grid.spacing();
  QCorrelations q;
  q.is = dw * (tf.u_idler * tf.v_signal.transpose());
  q.si = dw * (tf.u_signal * tf.v_idler.transpose());
  return q;
}

CorrelationSet correlations(const TransferFunctions& tf) {
  QCorrelations q = q_corr(tf);
  return CorrelationSet{tf.grid, g1(tf, Band::idler), g1(tf, Band::signal),
                        std::move(q.is), std::move(q.si)};
}

G2Result g2(const CorrelationSet& corr, Band a, Band b) {
  if (a == b) {
    throw std::invalid_argument("g2: bands must differ (cross-band map only)");
  }
  const Eigen::MatrixXcd& g1_aa = a == Band::idler ? corr.g1_ii : corr.g1_ss;
  const Eigen::MatrixXcd& g1_bb = b == Band::idler ? corr.g1_ii : corr.g1_ss;
  const Eigen::MatrixXcd& q_ab = a == Band::idler ? corr.q_is : corr.q_si;

  const Eigen::VectorXd diag_a = g1_aa.diagonal().real();
  const Eigen::VectorXd diag_b = g1_bb.diagonal().real();

  G2Result out;
  out.value = diag_a * diag_b.transpose() + q_ab.cwiseAbs2();
  const double peak = out.value.maxCoeff();
  out.normalized = peak > 0.0 ? Eigen::MatrixXd(out.value / peak) : out.value;
  return out;
}

double total_photons(const CorrelationSet& corr, Band field) {
  const Eigen::MatrixXcd& g1_ff = field == Band::idler ? corr.g1_ii : corr.g1_ss;
  return corr.grid.spacing() * g1_ff.diagonal().real().sum();
}

std::vector<int> window_indices(const FrequencyAxis& axis, const Window& window) {
  if (!(window.lo < window.hi)) {
    throw std::invalid_argument("window: lo must be below hi");
  }
  std::vector<int> idx;
  for (int m = 0; m < axis.n; ++m) {
    const double w = axis.at(m);
    if (w >= window.lo && w <= window.hi) idx.push_back(m);
  }
  if (idx.empty()) {
    throw std::invalid_argument("window: no grid nodes inside [lo, hi]");
  }
  return idx;
}

double nrf(const CorrelationSet& corr, const Window& idler_window,
           const Window& signal_window) {
  const std::vector<int> wi = window_indices(corr.grid.idler, idler_window);
  const std::vector<int> ws = window_indices(corr.grid.signal, signal_window);
  const double dw = corr.grid.spacing();
  const double dw2 = dw * dw;

  double n_i = 0.0, n_s = 0.0;
  for (int m : wi) n_i += dw * corr.g1_ii(m, m).real();
  for (int n : ws) n_s += dw * corr.g1_ss(n, n).real();
  const double total = n_i + n_s;
  if (!(total > 0.0)) {
    throw std::domain_error("nrf: undefined for zero photon number in the windows");
  }

  // Wick expansion of Var(N_i - N_s) for a zero-mean Gaussian state: the
  // shot-noise term N_i + N_s plus double sums of |G1|^2 within each window
  // and -|Q|^2 across the windows.
  double g1_i2 = 0.0, g1_s2 = 0.0, q2 = 0.0;
  for (int m : wi)
    for (int m2 : wi) g1_i2 += dw2 * std::norm(corr.g1_ii(m, m2));
  for (int n : ws)
    for (int n2 : ws) g1_s2 += dw2 * std::norm(corr.g1_ss(n, n2));
  for (int m : wi)
    for (int n : ws)
      q2 += dw2 * (std::norm(corr.q_is(m, n)) + std::norm(corr.q_si(n, m)));

  return 1.0 + (g1_i2 + g1_s2 - q2) / total;
}

BinSet make_bins(const FrequencyGrid& grid, const std::vector<FrequencyBin>& bins) {
  if (bins.empty()) throw std::invalid_argument("make_bins: no bins given");
  BinSet out{grid, bins, {}};
  out.members.resize(bins.size());

  const double edge_tol = 1e-9 * grid.spacing();
  for (std::size_t j = 0; j < bins.size(); ++j) {
    const FrequencyBin& b = bins[j];
    if (!(b.width > 0.0)) {
      throw std::invalid_argument("make_bins: bin width must be positive");
    }
    const FrequencyAxis& axis = b.field == Band::idler ? grid.idler : grid.signal;
    for (int m = 0; m < axis.n; ++m) {
      if (std::abs(axis.at(m) - b.center) <= 0.5 * b.width + edge_tol) {
        out.members[j].push_back(m);
      }
    }
    if (out.members[j].empty()) {
      throw std::invalid_argument("make_bins: bin covers no grid nodes");
    }
  }

  for (std::size_t j = 0; j < bins.size(); ++j) {
    for (std::size_t k = j + 1; k < bins.size(); ++k) {
      if (bins[j].field != bins[k].field) continue;
      for (int m : out.members[j]) {
        if (std::find(out.members[k].begin(), out.members[k].end(), m) !=
            out.members[k].end()) {
          throw std::invalid_argument("make_bins: same-band bins overlap");
        }
      }
    }
  }
  return out;
}

Eigen::VectorXcd bin_mode_function(const BinSet& bins, int j) {
  if (j < 0 || j >= bins.size()) {
    throw std::invalid_argument("bin_mode_function: bin index out of range");
  }
  const FrequencyBin& b = bins.bins[j];
  const FrequencyAxis& axis =
      b.field == Band::idler ? bins.grid.idler : bins.grid.signal;
  const double covered =
      static_cast<double>(bins.members[j].size()) * bins.grid.spacing();
  const complexd value =
      std::exp(complexd(0.0, b.phase)) / std::sqrt(covered);
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(axis.n);
  for (int m : bins.members[j]) u(m) = value;
  return u;
}

CovarianceMatrix covariance(const TransferFunctions& tf, const BinSet& bins) {
  const CorrelationSet corr = correlations(tf);
  const double dw = tf.grid.spacing();
  const int n = bins.size();

  // Bin operator a_j = sum_m c_j a(w_m) over the bin's nodes, with flat
  // coefficient c_j = e^{-i phase} / sqrt(n_nodes) on unit-commutator grid
  // modes. Equal-band correlations feed <a^dag a>, cross-band ones <a a>;
  // the remaining pairings are structural zeros and never enter.
  std::vector<complexd> coeff(n);
  for (int j = 0; j < n; ++j) {
    coeff[j] = std::exp(complexd(0.0, -bins.bins[j].phase)) /
               std::sqrt(static_cast<double>(bins.members[j].size()));
  }

  Eigen::MatrixXcd n_occ = Eigen::MatrixXcd::Zero(n, n);  // <a_j^dag a_k>
  Eigen::MatrixXcd m_anom = Eigen::MatrixXcd::Zero(n, n);  // <a_j a_k>
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      const Band fj = bins.bins[j].field;
      const Band fk = bins.bins[k].field;
      complexd sum = 0.0;
      if (fj == fk) {
        const Eigen::MatrixXcd& g = fj == Band::idler ? corr.g1_ii : corr.g1_ss;
        for (int m : bins.members[j])
          for (int m2 : bins.members[k]) sum += g(m, m2);
        n_occ(j, k) = std::conj(coeff[j]) * coeff[k] * dw * sum;
      } else {
        const Eigen::MatrixXcd& q = fj == Band::idler ? corr.q_is : corr.q_si;
        for (int m : bins.members[j])
          for (int m2 : bins.members[k]) sum += q(m, m2);
        m_anom(j, k) = coeff[j] * coeff[k] * dw * sum;
      }
    }
  }

  Eigen::MatrixXcd sigma = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  const Eigen::MatrixXcd ident = Eigen::MatrixXcd::Identity(n, n);
  sigma.topLeftCorner(n, n) = ident + 2.0 * n_occ.transpose();
  sigma.topRightCorner(n, n) = 2.0 * m_anom;
  sigma.bottomLeftCorner(n, n) = 2.0 * m_anom.adjoint();
  sigma.bottomRightCorner(n, n) = ident + 2.0 * n_occ;
  return CovarianceMatrix{bins, std::move(sigma)};
}

double covariance_physicality(const CovarianceMatrix& cov) {
  const int n = cov.bins.size();
  Eigen::MatrixXcd m = cov.sigma;
  for (int j = 0; j < n; ++j) {
    m(j, j) += 1.0;
    m(n + j, n + j) -= 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("covariance_physicality: eigensolver failed");
  }
  return solver.eigenvalues().minCoeff();
}

double wigner_value(const CovarianceMatrix& cov, const Eigen::VectorXcd& alpha) {
  const int n = cov.bins.size();
  if (alpha.size() != n) {
    throw std::invalid_argument("wigner_value: alpha must have one entry per bin");
  }
  Eigen::VectorXcd xi(2 * n);
  xi.head(n) = alpha;
  xi.tail(n) = alpha.conjugate();

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(cov.sigma);
  const complexd det = lu.determinant();
  if (std::abs(det) < 1e-12) {
    throw std::domain_error("wigner_value: singular covariance matrix");
  }
  const complexd quad = xi.dot(lu.solve(xi));  // xi^dag sigma^-1 xi
  // det^{-1/2} is the Gaussian normalization under the dq dp measure; the
  // exponent of a 2N x 2N ladder-ordered sigma covers each real direction once.
  const double norm = std::pow(pi, -n) / std::sqrt(std::abs(det));
  return norm * std::exp(-quad.real());
}

}  // namespace bsv
