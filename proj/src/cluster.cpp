#include "bsv/cluster.hpp"

#include <cmath>
#include <complex>
#include <deque>
#include <limits>
#include <stdexcept>

#include "bsv/constants.hpp"

namespace bsv {

namespace {

using std::complex;

int node_index(const FrequencyAxis& axis, double center, bool& off_lattice) {
  const double spacing = axis.n > 1 ? (axis.at(1) - axis.at(0)) : 1.0;
  int idx = static_cast<int>(std::lround((center - axis.at(0)) / spacing));
  idx = std::max(0, std::min(axis.n - 1, idx));
  if (std::abs(axis.at(idx) - center) > 1e-6 * spacing) off_lattice = true;
  return idx;
}

}  // namespace

GraphAdjacency hgraph_from_design(const PumpSpectrum& pump, const Eigen::MatrixXcd& phi,
                                  const BinSet& bins) {
  const FrequencyGrid& grid = bins.grid;
  if (phi.rows() != grid.n_idler() || phi.cols() != grid.n_signal())
    throw std::invalid_argument("phase-matching matrix does not match the bin grid");
  if (pump.samples.size() != grid.n_pump())
    throw std::invalid_argument("pump samples do not match the bin grid");

  std::vector<int> idler_bins, signal_bins;
  for (int j = 0; j < bins.size(); ++j)
    (bins.bins[j].field == Band::idler ? idler_bins : signal_bins).push_back(j);
  if (idler_bins.empty() || signal_bins.empty())
    throw std::invalid_argument("graph needs bins in both fields");

  GraphAdjacency out;
  out.modes.reserve(bins.size());
  for (int j = 0; j < bins.size(); ++j) out.modes.push_back({bins.bins[j].field, j});

  // Sample the joint amplitude at every bin-center pair.
  const int na = static_cast<int>(idler_bins.size());
  const int nb = static_cast<int>(signal_bins.size());
  Eigen::MatrixXcd f(na, nb);
  for (int a = 0; a < na; ++a) {
    const int m = node_index(grid.idler, bins.bins[idler_bins[a]].center, out.off_lattice);
    for (int b = 0; b < nb; ++b) {
      const int n = node_index(grid.signal, bins.bins[signal_bins[b]].center, out.off_lattice);
      f(a, b) = pump.samples(m + n) * phi(m, n);
    }
  }

  const double fmax = f.cwiseAbs().maxCoeff();
  if (!(fmax > 0)) throw std::domain_error("design leaves every bin pair dark");

  // Factor out per-mode phases: fit phase(f)^2 with a rank-1 product so the
  // half-angle branch cuts cannot scatter signs, then rotate them away.
  Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(na, nb);
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < nb; ++b)
      if (std::abs(f(a, b)) > 1e-9 * fmax) {
        const complex<double> u = f(a, b) / std::abs(f(a, b));
        z(a, b) = u * u;
      }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::MatrixXd r(na, nb);
  double imag_max = 0;
  for (int a = 0; a < na; ++a) {
    const complex<double> ua = svd.matrixU()(a, 0);
    const double theta = std::abs(ua) > 0 ? std::arg(ua) / 2 : 0.0;
    for (int b = 0; b < nb; ++b) {
      const complex<double> vb = svd.matrixV()(b, 0);
      const double psi = std::abs(vb) > 0 ? -std::arg(vb) / 2 : 0.0;
      const complex<double> rotated =
          f(a, b) * std::exp(complex<double>(0, -(theta + psi)));
      r(a, b) = rotated.real();
      imag_max = std::max(imag_max, std::abs(rotated.imag()));
    }
  }
  out.phase_residual = imag_max / fmax;
  // Canonical overall sign: the strongest edge is positive.
  int amax = 0, bmax = 0;
  r.cwiseAbs().maxCoeff(&amax, &bmax);
  if (r(amax, bmax) < 0) r = -r;

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(bins.size(), bins.size());
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < nb; ++b) {
      g(idler_bins[a], signal_bins[b]) = r(a, b);
      g(signal_bins[b], idler_bins[a]) = r(a, b);
    }

  for (int j = 0; j < bins.size(); ++j)
    if (g.row(j).cwiseAbs().maxCoeff() < 1e-9 * fmax) out.dim_modes.push_back(j);

  double row_max = 0;
  for (int j = 0; j < bins.size(); ++j) row_max = std::max(row_max, g.row(j).norm());
  out.scale = row_max;
  out.g = g / row_max;
  return out;
}

GraphAdjacency snap_adjacency(const GraphAdjacency& g, double threshold) {
  if (!(threshold > 0 && threshold < 1))
    throw std::invalid_argument("snap threshold must sit in (0, 1)");
  const int n = static_cast<int>(g.g.rows());
  const double gmax = g.g.cwiseAbs().maxCoeff();
  Eigen::MatrixXd snapped = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXi degree = Eigen::VectorXi::Zero(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (std::abs(g.g(j, k)) >= threshold * gmax) ++degree(j);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (std::abs(g.g(j, k)) >= threshold * gmax)
        snapped(j, k) = (g.g(j, k) > 0 ? 1.0 : -1.0) / std::sqrt(double(degree(j)));
  // Exact for biregular patterns; averaging keeps irregular ones symmetric.
  GraphAdjacency out = g;
  out.g = 0.5 * (snapped + snapped.transpose());
  return out;
}

std::vector<GraphAdjacency> partition_lattices(const GraphAdjacency& g) {
  const int n = static_cast<int>(g.g.rows());
  std::vector<int> component(n, -1);
  int n_components = 0;
  for (int seed = 0; seed < n; ++seed) {
    if (component[seed] >= 0) continue;
    const int c = n_components++;
    std::deque<int> queue{seed};
    component[seed] = c;
    while (!queue.empty()) {
      const int j = queue.front();
      queue.pop_front();
      for (int k = 0; k < n; ++k)
        if (component[k] < 0 && std::abs(g.g(j, k)) > 0) {
          component[k] = c;
          queue.push_back(k);
        }
    }
  }

  std::vector<GraphAdjacency> parts(n_components);
  std::vector<std::vector<int>> members(n_components);
  for (int j = 0; j < n; ++j) members[component[j]].push_back(j);
  for (int c = 0; c < n_components; ++c) {
    GraphAdjacency& part = parts[c];
    const auto& m = members[c];
    part.scale = g.scale;
    part.phase_residual = g.phase_residual;
    part.off_lattice = g.off_lattice;
    part.g.resize(m.size(), m.size());
    for (size_t a = 0; a < m.size(); ++a) {
      part.modes.push_back(g.modes[m[a]]);
      for (size_t b = 0; b < m.size(); ++b) part.g(a, b) = g.g(m[a], m[b]);
    }
    for (int dim : g.dim_modes)
      if (component[dim] == c) part.dim_modes.push_back(dim);
  }
  return parts;
}

Eigen::MatrixXd cluster_matrix(const GraphAdjacency& g) {
  const int n = static_cast<int>(g.g.rows());
  if (n == 0) throw std::invalid_argument("empty graph");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(g.g);
  if (!lu.isInvertible()) throw std::domain_error("graph adjacency is singular");
  const double defect =
      (g.g * g.g - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (defect >= 1e-6)
    throw UnsupportedGraphError("graph is not self-inverse (|G*G - I| = " +
                                std::to_string(defect) + "); conversion not supported");
  return g.g;
}

NullifierSet nullifier_variances(const CovarianceMatrix& cov, const Eigen::MatrixXd& v,
                                 int n_phi) {
  const int n = static_cast<int>(cov.bins.size());
  if (v.rows() != n || v.cols() != n)
    throw std::invalid_argument("cluster matrix does not match the covariance modes");
  if (cov.sigma.rows() != 2 * n || cov.sigma.cols() != 2 * n)
    throw std::invalid_argument("covariance matrix has the wrong size");
  if (n_phi < 2) throw std::invalid_argument("phase sweep needs at least two samples");

  // Nullifier row j at phase phi: p_j(phi) - sum_k V_jk q_k(phi), with
  // q(phi) = a e^{-i phi} + a^dag e^{i phi} and p(phi) = q(phi + pi/2). As a
  // coefficient vector over (a, a^dag) this is e^{-i phi} A + e^{i phi} B, so
  // each variance is a pure cos(2 phi) sinusoid; the sweep samples it.
  const complex<double> i_unit(0, 1);
  Eigen::MatrixXcd a_block(n, 2 * n), b_block(n, 2 * n);
  a_block.setZero();
  b_block.setZero();
  for (int j = 0; j < n; ++j) {
    a_block(j, j) = -i_unit;
    b_block(j, n + j) = i_unit;
    for (int k = 0; k < n; ++k) {
      a_block(j, k) -= v(j, k);
      b_block(j, n + k) -= v(j, k);
    }
  }
  const Eigen::MatrixXcd aa = a_block * cov.sigma * a_block.adjoint();
  const Eigen::MatrixXcd bb = b_block * cov.sigma * b_block.adjoint();
  const Eigen::MatrixXcd ab = a_block * cov.sigma * b_block.adjoint();

  NullifierSet out;
  out.phi.resize(n_phi);
  out.variances.resize(n_phi, n);
  out.reference.resize(n);
  for (int j = 0; j < n; ++j) out.reference(j) = 1.0 + v.row(j).squaredNorm();

  for (int t = 0; t < n_phi; ++t) {
    const double phi = pi * t / n_phi;
    out.phi(t) = phi;
    const complex<double> w = std::exp(complex<double>(0, -2 * phi));
    for (int j = 0; j < n; ++j)
      out.variances(t, j) =
          0.5 * (aa(j, j).real() + bb(j, j).real()) + (w * ab(j, j)).real();
  }

  out.min_variance.resize(n);
  out.argmin_phi.resize(n);
  out.squeezing_db.resize(n);
  for (int j = 0; j < n; ++j) {
    int t_min = 0;
    out.min_variance(j) = out.variances.col(j).minCoeff(&t_min);
    out.argmin_phi(j) = out.phi(t_min);
    out.squeezing_db(j) = 10.0 * std::log10(out.min_variance(j) / out.reference(j));
  }

  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < n_phi; ++t) {
    double worst = 0;
    for (int j = 0; j < n; ++j)
      worst = std::max(worst, out.variances(t, j) / out.reference(j));
    if (worst < best) {
      best = worst;
      out.simultaneous_index = t;
    }
  }
  out.simultaneous_phi = out.phi(out.simultaneous_index);
  out.variances_at_simultaneous = out.variances.row(out.simultaneous_index);
  return out;
}

}  // namespace bsv
