#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "bsv/sellmeier.hpp"

namespace bsv {

struct AxisAssignment {
  Axis pump = Axis::y;
  Axis idler = Axis::y;
  Axis signal = Axis::z;
};

struct CrystalSpec {
  AxisAssignment axes;
  double poling_period = 46e-6;  // m
  double length = 13.7e-3;       // m
  SellmeierTable sellmeier = SellmeierTable::ktp();
};

class PhaseMatchingError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// k = n(lambda) * omega / c. Throws std::domain_error outside Sellmeier validity
// and std::invalid_argument for omega <= 0.
double wavenumber(const SellmeierTable& table, Axis axis, double omega);

// dk/domega by central difference (s/m).
double group_slope(const SellmeierTable& table, Axis axis, double omega);

// Delta k = k_p(omega_i + omega_s) - k_i(omega_i) - k_s(omega_s), idler argument first.
double delta_k(const SellmeierTable& table, const AxisAssignment& axes,
               double omega_i, double omega_s);

struct PhaseMatchedPair {
  double lambda_idler;   // m, < lambda_signal
  double lambda_signal;  // m
  double omega_idler;    // rad/s
  double omega_signal;   // rad/s
  double residual;       // |Delta k| - 2 pi / period at the root, rad/m
  int qpm_order;         // sign of Delta k at the root (+1 or -1)
};

// Solves ||Delta k| - 2 pi / period| = 0 on the energy-conservation curve
// omega_i + omega_s = omega_pump with lambda_i < lambda_s, to 1e-3 rad/m.
// Throws PhaseMatchingError when no root exists on the curve.
PhaseMatchedPair find_phase_matched_pair(const CrystalSpec& crystal, double lambda_pump);

struct FrequencyAxis {
  double center = 0;  // rad/s
  double span = 0;    // rad/s (full width); for n == 1 the spacing is defined as span
  int n = 0;

  double spacing() const { return n > 1 ? span / (n - 1) : span; }
  double at(int i) const { return center + (i - 0.5 * (n - 1)) * spacing(); }
  Eigen::VectorXd values() const;
};

struct FrequencyGrid {
  FrequencyAxis idler;
  FrequencyAxis signal;

  // Throws std::invalid_argument unless both axes share one positive spacing.
  FrequencyGrid(FrequencyAxis idler_axis, FrequencyAxis signal_axis);

  double spacing() const { return idler.spacing(); }
  int n_idler() const { return idler.n; }
  int n_signal() const { return signal.n; }
  int n_pump() const { return idler.n + signal.n - 1; }

  // Pump axis node p corresponds to every (m, n) with m + n = p; covers all sums exactly.
  double pump_at(int p) const { return idler.at(0) + signal.at(0) + p * spacing(); }
  Eigen::VectorXd pump_values() const;
};

struct PhaseMismatchTable {
  FrequencyGrid grid;
  Eigen::VectorXd k_idler;   // n_idler
  Eigen::VectorXd k_signal;  // n_signal
  Eigen::VectorXd k_pump;    // n_pump, on the sum axis
  Eigen::MatrixXd mismatch;  // n_idler x n_signal: k_pump(m+n) - k_idler(m) - k_signal(n)

  static PhaseMismatchTable build(const SellmeierTable& table, const AxisAssignment& axes,
                                  const FrequencyGrid& grid);
};

struct GroupSlopes {
  double u;  // k_p'(omega_i + omega_s) - k_i'(omega_i), s/m
  double v;  // k_p'(omega_i + omega_s) - k_s'(omega_s), s/m
};

GroupSlopes pair_group_slopes(const SellmeierTable& table, const AxisAssignment& axes,
                              const PhaseMatchedPair& pair);

}  // namespace bsv
