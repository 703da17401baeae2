#include "bsv/design.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bsv/constants.hpp"

namespace bsv {

namespace {

using std::complex;
constexpr complex<double> I{0.0, 1.0};

// 8-point Gauss-Legendre on [-1, 1].
constexpr double gl_x[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                            -0.1834346424956498, 0.1834346424956498, 0.5255324099163290,
                            0.7966664774136267, 0.9602898564975363};
constexpr double gl_w[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                            0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                            0.2223810344533745, 0.1012285362903763};

double gaussian_envelope(double z, double center, double fwhm) {
  if (fwhm <= 0) return 1.0;
  const double t = (z - center) / fwhm;
  return std::exp(-4.0 * std::numbers::ln2_v<double> * t * t);
}

void fill_samples(PolingPattern& p) {
  p.samples.resize(p.n_samples);
  const double h = p.length / (p.n_samples - 1);
  for (int j = 0; j < p.n_samples; ++j) p.samples[j] = p.value_at(j * h);
}

int wall_count_before(const std::vector<double>& walls, double z) {
  return static_cast<int>(std::upper_bound(walls.begin(), walls.end(), z) - walls.begin());
}

double multipeak_sum(const PolingPattern& p, double z) {
  // Carriers are referenced to the crystal midplane, matching the kernel's
  // mismatch phase, so real peak amplitudes give real +- transform lobes.
  complex<double> acc = 0;
  for (const auto& pk : p.peaks)
    acc += pk.amplitude * gaussian_envelope(z, p.length / 2, pk.envelope_fwhm) *
           std::exp(I * pk.carrier * (z - p.length / 2));
  return acc.real();
}

// Walls of sign(cos(2 pi (z - length/2) / period)) inside (0, length).
std::vector<double> centered_square_walls(double period, double length) {
  std::vector<double> walls;
  const double half = period / 2;
  const int m0 = static_cast<int>(std::floor(-length / period - 0.5));
  for (int m = m0;; ++m) {
    const double w = length / 2 + (m + 0.5) * half;
    if (w <= 0) continue;
    if (w >= length) break;
    walls.push_back(w);
  }
  return walls;
}

double centered_square_start(double period, double length) {
  return std::cos(pi * length / period) >= 0 ? 1.0 : -1.0;
}

}  // namespace

double PolingPattern::value_at(double z) const {
  switch (kind) {
    case Kind::uniform:
      return 1.0;
    case Kind::periodic:
      return first_value * (wall_count_before(walls, z) % 2 == 0 ? 1.0 : -1.0);
    case Kind::apodized:
      if (binarized) return first_value * (wall_count_before(walls, z) % 2 == 0 ? 1.0 : -1.0);
      return (std::cos(two_pi * (z - length / 2) / period) >= 0 ? 1.0 : -1.0) *
             gaussian_envelope(z, length / 2, envelope_fwhm);
    case Kind::multipeak:
      if (binarized) return first_value * (wall_count_before(walls, z) % 2 == 0 ? 1.0 : -1.0);
      return amplitude_scale * multipeak_sum(*this, z);
  }
  throw std::logic_error("bad poling kind");
}

PolingPattern uniform_poling(double length, int n_samples) {
  if (!(length > 0)) throw std::invalid_argument("crystal length must be positive");
  if (n_samples < 2) throw std::invalid_argument("need at least two poling samples");
  PolingPattern p;
  p.kind = PolingPattern::Kind::uniform;
  p.length = length;
  p.period = length;
  p.binarized = false;
  p.n_samples = n_samples;
  fill_samples(p);
  return p;
}

PolingPattern periodic_poling(double period, double length, int n_samples) {
  if (!(period > 0) || !(length > 0)) throw std::invalid_argument("poling period and length must be positive");
  if (period > length) throw std::invalid_argument("poling period exceeds crystal length (fewer than one period)");
  if (n_samples < 2) throw std::invalid_argument("need at least two poling samples");

  PolingPattern p;
  p.kind = PolingPattern::Kind::periodic;
  p.length = length;
  p.period = period;
  p.binarized = true;
  // Grating even about the midplane: domains of sign(cos(2 pi (z-L/2)/period)).
  p.first_value = centered_square_start(period, length);
  p.n_samples = n_samples;
  p.walls = centered_square_walls(period, length);
  fill_samples(p);
  return p;
}

PolingPattern apodized_poling(double period, double length, double envelope_fwhm,
                              bool binarized, int n_samples) {
  if (!(envelope_fwhm > 0)) throw std::invalid_argument("apodization envelope width must be positive");
  PolingPattern p = periodic_poling(period, length, n_samples);
  p.kind = PolingPattern::Kind::apodized;
  p.envelope_fwhm = envelope_fwhm;
  p.binarized = binarized;
  p.walls.clear();

  if (binarized) {
    // Duty-cycle modulation: a +1 sub-domain of width duty*period centered on the
    // positive carrier lobe gives first-order Fourier amplitude (2/pi) sin(pi*duty),
    // so duty = asin(env)/pi makes that amplitude track the envelope exactly.
    // Positive lobes of the midplane-referenced carrier sit at L/2 + m*period.
    p.first_value = -1.0;
    const int m_span = static_cast<int>(std::ceil(length / period)) + 1;
    for (int m = -m_span; m <= m_span; ++m) {
      const double c = length / 2 + m * period;
      const double env = std::min(1.0, gaussian_envelope(c, length / 2, envelope_fwhm));
      const double duty = std::asin(env) / pi;
      if (duty <= 0) continue;
      const double lo = c - duty * period / 2;
      const double hi = c + duty * period / 2;
      if (hi <= 0 || lo >= length) continue;
      if (lo > 0) p.walls.push_back(lo);
      if (hi < length) p.walls.push_back(hi);
      if (lo <= 0) p.first_value = 1.0;  // island clipped by the input facet
    }
  }
  fill_samples(p);
  return p;
}

PolingPattern multipeak_hologram(const std::vector<HologramPeak>& peaks, double length,
                                 bool binarized, int n_samples) {
  if (peaks.empty()) throw std::invalid_argument("hologram needs at least one peak");
  if (!(length > 0)) throw std::invalid_argument("crystal length must be positive");
  for (const auto& pk : peaks)
    if (pk.envelope_fwhm < 0) throw std::invalid_argument("hologram envelope width must be non-negative");

  PolingPattern p;
  p.kind = PolingPattern::Kind::multipeak;
  p.length = length;
  p.binarized = binarized;
  p.n_samples = n_samples;
  p.peaks = peaks;
  double k_max = 0;
  for (const auto& pk : peaks) k_max = std::max(k_max, std::abs(pk.carrier));
  p.period = k_max > 0 ? two_pi / k_max : length;

  // Normalize the continuous profile to unit peak modulus: dense scan, then
  // ternary refinement of every near-maximal bracket so the result does not
  // move with the sample count.
  const int n_scan = std::max(n_samples, k_max > 0 ? static_cast<int>(16 * length * k_max / two_pi) : 64);
  const double h = length / n_scan;
  std::vector<double> scan(n_scan + 1);
  double coarse = 0;
  for (int j = 0; j <= n_scan; ++j) {
    scan[j] = std::abs(multipeak_sum(p, j * h));
    coarse = std::max(coarse, scan[j]);
  }
  if (coarse <= 0) throw std::invalid_argument("hologram profile is identically zero");
  double peak = coarse;
  for (int j = 0; j <= n_scan; ++j) {
    if (scan[j] < 0.98 * coarse) continue;
    double lo = std::max(0.0, (j - 1) * h), hi = std::min(length, (j + 1) * h);
    for (int it = 0; it < 200; ++it) {
      const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
      if (std::abs(multipeak_sum(p, m1)) < std::abs(multipeak_sum(p, m2)))
        lo = m1;
      else
        hi = m2;
    }
    peak = std::max(peak, std::abs(multipeak_sum(p, 0.5 * (lo + hi))));
  }
  p.amplitude_scale = 1.0 / peak;

  if (binarized) {
    p.first_value = multipeak_sum(p, 0.0) >= 0 ? 1.0 : -1.0;
    double prev = multipeak_sum(p, 0.0);
    for (int j = 1; j <= n_scan; ++j) {
      double cur = multipeak_sum(p, j * h);
      if ((cur >= 0) != (prev >= 0)) {
        double lo = (j - 1) * h, hi = j * h;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          if ((multipeak_sum(p, mid) >= 0) == (prev >= 0))
            lo = mid;
          else
            hi = mid;
        }
        p.walls.push_back(0.5 * (lo + hi));
      }
      prev = cur;
    }
  }
  fill_samples(p);
  return p;
}

namespace {

// Exact integral of exp(i q z) over [z0, z1].
complex<double> segment_phase_integral(double q, double z0, double z1) {
  if (std::abs(q) * (z1 - z0) < 1e-9) {
    const double zm = 0.5 * (z0 + z1);
    return (z1 - z0) * std::exp(I * q * zm);
  }
  return (std::exp(I * q * z1) - std::exp(I * q * z0)) / (I * q);
}

// Integral of env(z) exp(i q z) over [z0, z1] with 8-point Gauss-Legendre.
complex<double> segment_envelope_integral(double q, double z0, double z1,
                                          double env_center, double env_fwhm) {
  const double half = 0.5 * (z1 - z0), mid = 0.5 * (z0 + z1);
  complex<double> acc = 0;
  for (int i = 0; i < 8; ++i) {
    const double z = mid + half * gl_x[i];
    acc += gl_w[i] * gaussian_envelope(z, env_center, env_fwhm) * std::exp(I * q * z);
  }
  return half * acc;
}

// Integral of env(z) exp(i q z) over [0, L], with panel count tracking the
// oscillation so the quadrature stays resolved at any q.
complex<double> envelope_transform(double q, double length, double env_fwhm) {
  if (env_fwhm <= 0) return segment_phase_integral(q, 0.0, length);
  const double sigma = env_fwhm * fwhm_to_sigma;
  if (std::abs(q) * sigma > 40.0) return 0.0;  // suppressed below 1e-300
  const int panels = std::max(12, static_cast<int>(std::ceil(std::abs(q) * length / pi)));
  complex<double> acc = 0;
  for (int j = 0; j < panels; ++j)
    acc += segment_envelope_integral(q, length * j / panels, length * (j + 1) / panels,
                                     length / 2, env_fwhm);
  return acc;
}

complex<double> phi_piecewise(const PolingPattern& p, double dk) {
  double z_prev = 0;
  double value = p.first_value;
  complex<double> acc = 0;
  if (p.kind == PolingPattern::Kind::apodized && !p.binarized) {
    // Signed carrier with a smooth envelope: resolve each constant-sign stretch.
    value = centered_square_start(p.period, p.length);
    for (double w : centered_square_walls(p.period, p.length)) {
      acc += value * segment_envelope_integral(dk, z_prev, w, p.length / 2, p.envelope_fwhm);
      value = -value;
      z_prev = w;
    }
    acc += value * segment_envelope_integral(dk, z_prev, p.length, p.length / 2, p.envelope_fwhm);
    return acc;
  }
  for (double w : p.walls) {
    acc += value * segment_phase_integral(dk, z_prev, w);
    value = -value;
    z_prev = w;
  }
  acc += value * segment_phase_integral(dk, z_prev, p.length);
  return acc;
}

complex<double> phi_multipeak_smooth(const PolingPattern& p, double dk) {
  // d = (1/2) sum_k [A_k env_k e^{+iK (z-L/2)} + A_k* env_k e^{-iK (z-L/2)}],
  // scaled to unit peak. envelope_transform carries the phase from z = 0, so
  // each lobe picks up the carrier's midplane offset here.
  complex<double> acc = 0;
  for (const auto& pk : p.peaks) {
    acc += 0.5 * pk.amplitude * std::exp(-I * pk.carrier * (p.length / 2)) *
           envelope_transform(dk + pk.carrier, p.length, pk.envelope_fwhm);
    acc += 0.5 * std::conj(pk.amplitude) * std::exp(I * pk.carrier * (p.length / 2)) *
           envelope_transform(dk - pk.carrier, p.length, pk.envelope_fwhm);
  }
  return p.amplitude_scale * acc;
}

}  // namespace

Eigen::MatrixXcd phase_matching_function(const PolingPattern& poling, const PhaseMismatchTable& table) {
  const int ni = table.grid.n_idler(), ns = table.grid.n_signal();
  Eigen::MatrixXcd phi(ni, ns);
  for (int m = 0; m < ni; ++m) {
    for (int n = 0; n < ns; ++n) {
      const double dk = table.mismatch(m, n);
      switch (poling.kind) {
        case PolingPattern::Kind::uniform:
          phi(m, n) = segment_phase_integral(dk, 0.0, poling.length);
          break;
        case PolingPattern::Kind::multipeak:
          phi(m, n) = poling.binarized ? phi_piecewise(poling, dk) : phi_multipeak_smooth(poling, dk);
          break;
        default:
          phi(m, n) = phi_piecewise(poling, dk);
      }
      // Midplane phase reference, matching the propagation kernel: symmetric
      // designs come out real up to sign instead of carrying exp(i dk L / 2).
      phi(m, n) *= std::exp(complex<double>(0.0, -0.5 * dk * poling.length));
    }
  }
  return phi;
}

PumpSpectrum gaussian_pump(const FrequencyGrid& grid, double lambda_center, double fwhm_lambda) {
  return multi_gaussian_pump(grid, {PumpPeak{lambda_center, fwhm_lambda, {1.0, 0.0}}});
}

PumpSpectrum multi_gaussian_pump(const FrequencyGrid& grid, const std::vector<PumpPeak>& peaks) {
  if (peaks.empty()) throw std::invalid_argument("pump needs at least one peak");
  const int np = grid.n_pump();
  const double axis_lo = grid.pump_at(0), axis_hi = grid.pump_at(np - 1);

  PumpSpectrum pump;
  pump.samples = Eigen::VectorXcd::Zero(np);
  double strongest = 0;  // largest single-peak L1 weight, pre-normalization
  for (const auto& pk : peaks) {
    if (!(pk.fwhm_lambda > 0)) throw std::invalid_argument("pump peak width must be positive");
    const double w0 = lambda_to_omega(pk.lambda_center);
    if (w0 < axis_lo || w0 > axis_hi)
      throw std::invalid_argument("pump peak center " + std::to_string(pk.lambda_center * 1e9) +
                                  " nm falls outside the pump axis");
    const double fwhm_w = lambda_to_omega(pk.lambda_center - pk.fwhm_lambda / 2) -
                          lambda_to_omega(pk.lambda_center + pk.fwhm_lambda / 2);
    const double sigma = fwhm_w * fwhm_to_sigma;
    double l1 = 0;
    for (int p = 0; p < np; ++p) {
      const double d = (grid.pump_at(p) - w0) / sigma;
      const auto value = pk.amplitude * std::exp(-0.5 * d * d);
      pump.samples[p] += value;
      l1 += std::abs(value);
    }
    strongest = std::max(strongest, l1 * grid.spacing());
  }
  const double peak_abs = pump.samples.cwiseAbs().maxCoeff();
  if (peak_abs > 0) pump.samples /= peak_abs;
  pump.l1_norm = peak_abs > 0 ? strongest / peak_abs : 0.0;
  return pump;
}

Eigen::MatrixXd jsi(const PumpSpectrum& pump, const Eigen::MatrixXcd& phi, const FrequencyGrid& grid) {
  if (phi.rows() != grid.n_idler() || phi.cols() != grid.n_signal())
    throw std::invalid_argument("phase-matching matrix does not match the grid");
  if (pump.samples.size() != grid.n_pump())
    throw std::invalid_argument("pump spectrum does not match the grid's pump axis");
  Eigen::MatrixXd out(phi.rows(), phi.cols());
  for (int m = 0; m < phi.rows(); ++m)
    for (int n = 0; n < phi.cols(); ++n)
      out(m, n) = std::norm(pump.samples[m + n] * phi(m, n));
  const double peak = out.maxCoeff();
  if (peak > 0) out /= peak;
  return out;
}

}  // namespace bsv
