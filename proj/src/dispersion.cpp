#include "bsv/dispersion.hpp"

#include <cmath>

#include "bsv/constants.hpp"

namespace bsv {

double wavenumber(const SellmeierTable& table, Axis axis, double omega) {
  if (!(omega > 0)) throw std::invalid_argument("wavenumber requires omega > 0");
  const double lambda = omega_to_lambda(omega);
  return refractive_index(table, axis, lambda) * omega / speed_of_light;
}

double group_slope(const SellmeierTable& table, Axis axis, double omega) {
  const double h = omega * 1e-7;
  return (wavenumber(table, axis, omega + h) - wavenumber(table, axis, omega - h)) / (2 * h);
}

double delta_k(const SellmeierTable& table, const AxisAssignment& axes,
               double omega_i, double omega_s) {
  return wavenumber(table, axes.pump, omega_i + omega_s) -
         wavenumber(table, axes.idler, omega_i) -
         wavenumber(table, axes.signal, omega_s);
}

namespace {

// |Delta k| - grating vector along the energy curve, parametrized by omega_i.
double qpm_residual(const CrystalSpec& c, double omega_p, double omega_i) {
  const double dk = delta_k(c.sellmeier, c.axes, omega_i, omega_p - omega_i);
  return std::abs(dk) - two_pi / c.poling_period;
}

}  // namespace

PhaseMatchedPair find_phase_matched_pair(const CrystalSpec& crystal, double lambda_pump) {
  if (!(lambda_pump > 0)) throw std::invalid_argument("pump wavelength must be positive");
  if (!(crystal.poling_period > 0)) throw std::invalid_argument("poling period must be positive");
  const double omega_p = lambda_to_omega(lambda_pump);

  // lambda_i < lambda_s means omega_i > omega_p / 2; both daughters must stay
  // inside the Sellmeier window.
  const double margin = 1e-9;
  const double omega_heavy = lambda_to_omega(crystal.sellmeier.for_axis(crystal.axes.signal).lambda_max_um * 1e-6 * (1 - margin));
  const double lo = std::max(omega_p * 0.5 * (1 + 1e-9),
                             lambda_to_omega(crystal.sellmeier.for_axis(crystal.axes.idler).lambda_max_um * 1e-6 * (1 - margin)));
  const double hi = omega_p - omega_heavy;
  if (!(hi > lo)) throw PhaseMatchingError("empty phase-matching search interval for this pump wavelength");

  const int n_scan = 4000;
  double prev_omega = lo;
  double prev_res = qpm_residual(crystal, omega_p, lo);
  double root_lo = 0, root_hi = 0;
  bool found = false;
  for (int j = 1; j <= n_scan; ++j) {
    const double om = lo + (hi - lo) * j / n_scan;
    const double res = qpm_residual(crystal, omega_p, om);
    if (res == 0.0 || (res > 0) != (prev_res > 0)) {
      root_lo = prev_omega;
      root_hi = om;
      found = true;
      break;
    }
    prev_omega = om;
    prev_res = res;
  }
  if (!found)
    throw PhaseMatchingError("no quasi-phase-matched pair on the energy curve (period " +
                             std::to_string(crystal.poling_period * 1e6) + " um, pump " +
                             std::to_string(lambda_pump * 1e9) + " nm)");

  double flo = qpm_residual(crystal, omega_p, root_lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (root_lo + root_hi);
    const double fm = qpm_residual(crystal, omega_p, mid);
    if (std::abs(fm) < 0.5e-3) {
      root_lo = root_hi = mid;
      break;
    }
    if ((fm > 0) == (flo > 0)) {
      root_lo = mid;
      flo = fm;
    } else {
      root_hi = mid;
    }
  }

  PhaseMatchedPair pair;
  pair.omega_idler = 0.5 * (root_lo + root_hi);
  pair.omega_signal = omega_p - pair.omega_idler;
  pair.lambda_idler = omega_to_lambda(pair.omega_idler);
  pair.lambda_signal = omega_to_lambda(pair.omega_signal);
  const double dk = delta_k(crystal.sellmeier, crystal.axes, pair.omega_idler, pair.omega_signal);
  pair.residual = std::abs(dk) - two_pi / crystal.poling_period;
  pair.qpm_order = dk > 0 ? 1 : -1;
  return pair;
}

Eigen::VectorXd FrequencyAxis::values() const {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = at(i);
  return v;
}

FrequencyGrid::FrequencyGrid(FrequencyAxis idler_axis, FrequencyAxis signal_axis)
    : idler(idler_axis), signal(signal_axis) {
  if (idler.n < 1 || signal.n < 1)
    throw std::invalid_argument("frequency axes need at least one point");
  const double di = idler.spacing(), ds = signal.spacing();
  if (!(di > 0) || !(ds > 0))
    throw std::invalid_argument("frequency axis spacing must be positive");
  if (std::abs(di - ds) > 1e-9 * di)
    throw std::invalid_argument("idler and signal axes must share one grid spacing");
}

Eigen::VectorXd FrequencyGrid::pump_values() const {
  Eigen::VectorXd v(n_pump());
  for (int p = 0; p < n_pump(); ++p) v[p] = pump_at(p);
  return v;
}

PhaseMismatchTable PhaseMismatchTable::build(const SellmeierTable& table, const AxisAssignment& axes,
                                             const FrequencyGrid& grid) {
  PhaseMismatchTable t{grid, {}, {}, {}, {}};
  t.k_idler.resize(grid.n_idler());
  t.k_signal.resize(grid.n_signal());
  t.k_pump.resize(grid.n_pump());
  for (int m = 0; m < grid.n_idler(); ++m) t.k_idler[m] = wavenumber(table, axes.idler, grid.idler.at(m));
  for (int n = 0; n < grid.n_signal(); ++n) t.k_signal[n] = wavenumber(table, axes.signal, grid.signal.at(n));
  for (int p = 0; p < grid.n_pump(); ++p) t.k_pump[p] = wavenumber(table, axes.pump, grid.pump_at(p));
  t.mismatch.resize(grid.n_idler(), grid.n_signal());
  for (int m = 0; m < grid.n_idler(); ++m)
    for (int n = 0; n < grid.n_signal(); ++n)
      t.mismatch(m, n) = t.k_pump[m + n] - t.k_idler[m] - t.k_signal[n];
  return t;
}

GroupSlopes pair_group_slopes(const SellmeierTable& table, const AxisAssignment& axes,
                              const PhaseMatchedPair& pair) {
  const double kp = group_slope(table, axes.pump, pair.omega_idler + pair.omega_signal);
  return {kp - group_slope(table, axes.idler, pair.omega_idler),
          kp - group_slope(table, axes.signal, pair.omega_signal)};
}

}  // namespace bsv
