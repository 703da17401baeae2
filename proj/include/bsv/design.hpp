#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "bsv/dispersion.hpp"

namespace bsv {

struct HologramPeak {
  double carrier;                         // spatial frequency K, rad/m
  std::complex<double> amplitude{1.0, 0.0};
  double envelope_fwhm = 0;               // m; 0 means no envelope
};

// Spatial modulation d_NL(z) on [0, L]. Binarized patterns additionally carry
// their exact domain walls so downstream integrals can treat each constant
// segment in closed form instead of smearing the sign flips across samples.
struct PolingPattern {
  enum class Kind { uniform, periodic, apodized, multipeak };

  Kind kind = Kind::uniform;
  double length = 0;          // m
  double period = 0;          // m; carrier period for periodic/apodized, shortest carrier period for multipeak
  bool binarized = false;
  int n_samples = 0;
  Eigen::VectorXcd samples;   // d_NL at n_samples uniform nodes spanning [0, L]

  // Binarized representation: value is +1/-1 on [edges[j], edges[j+1]).
  std::vector<double> walls;  // interior sign-flip positions, ascending
  double first_value = 1.0;

  // Smooth generator parameters (apodized / multipeak continuous evaluation).
  double envelope_fwhm = 0;   // m; Gaussian envelope centered at L/2 (0 = none)
  std::vector<HologramPeak> peaks;
  double amplitude_scale = 1.0;

  double value_at(double z) const;  // real part of the modulation
  bool piecewise_constant() const { return binarized; }
};

PolingPattern uniform_poling(double length, int n_samples = 64);

PolingPattern periodic_poling(double period, double length, int n_samples = 4096);

// Continuous mode: sign(cos(2 pi (z - L/2) / period)) * Gaussian envelope
// centered at L/2. Binarized mode: duty-cycle modulated square wave whose
// first-order Fourier amplitude tracks the same envelope (duty = asin(env)/pi).
PolingPattern apodized_poling(double period, double length, double envelope_fwhm,
                              bool binarized, int n_samples = 4096);

// Continuous mode: Re sum_k A_k env_k(z) exp(i K_k (z - L/2)), peak modulus
// normalized to 1. Binarized mode: sign of that sum. Referencing the carriers
// to the midplane keeps multi-carrier designs real at their matched
// mismatches instead of scattering a carrier-dependent phase across lobes.
PolingPattern multipeak_hologram(const std::vector<HologramPeak>& peaks, double length,
                                 bool binarized, int n_samples = 8192);

struct PumpSpectrum {
  Eigen::VectorXcd samples;  // on the grid's pump axis, max |P| = 1
  double l1_norm = 0;        // strongest single peak's sum |P| * spacing, rad/s
};

struct PumpPeak {
  double lambda_center;                   // m
  double fwhm_lambda;                     // m
  std::complex<double> amplitude{1.0, 0.0};
};

PumpSpectrum gaussian_pump(const FrequencyGrid& grid, double lambda_center, double fwhm_lambda);
PumpSpectrum multi_gaussian_pump(const FrequencyGrid& grid, const std::vector<PumpPeak>& peaks);

// Phi(omega_i, omega_s) = integral over z of exp(i Dk z) d_NL(z), units m.
// Piecewise-constant patterns integrate each domain exactly; smooth patterns
// resolve the carrier oscillation with panel quadrature so the result is
// insensitive to the sample count.
Eigen::MatrixXcd phase_matching_function(const PolingPattern& poling, const PhaseMismatchTable& table);

// |P(omega_i + omega_s) * Phi|^2 normalized to unit maximum (all-zero input stays zero).
Eigen::MatrixXd jsi(const PumpSpectrum& pump, const Eigen::MatrixXcd& phi, const FrequencyGrid& grid);

}  // namespace bsv
