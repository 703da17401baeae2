#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "bsv/design.hpp"
#include "bsv/dispersion.hpp"

namespace bsv {

// Pump-strength bookkeeping. Only chi2 * e_pump enters the dynamics; kappa is
// the dimensionless handle and e_pump is derived so that
// kappa = omega_ref * chi2 * e_pump * length / (c * n_ref) holds exactly.
struct GainSpec {
  enum class Normalization {
    raw,      // pump spectrum enters with unit peak, as stored
    pump_l1   // pump spectrum enters as a density, divided by its L1 weight
  };

  double kappa = 0;        // dimensionless gain, g(omega_ref) * length
  double omega_ref = 0;    // rad/s
  double chi2 = 1e-12;     // m/V, arbitrary positive scale
  double e_pump = 0;       // derived, see above
  double length = 0;       // m, the crystal length kappa refers to
  Normalization normalization = Normalization::raw;
};

GainSpec make_gain(double kappa, double omega_ref, double n_ref, double length,
                   GainSpec::Normalization normalization = GainSpec::Normalization::raw,
                   double chi2 = 1e-12);
GainSpec make_gain(double kappa, double omega_ref, const SellmeierTable& table, Axis axis,
                   double length,
                   GainSpec::Normalization normalization = GainSpec::Normalization::raw,
                   double chi2 = 1e-12);

// g(omega) = omega^2 chi2 e_pump / (c^2 k(omega)), units 1/m.
// g(omega_ref) * length = kappa on the axis the gain was built with.
double coupling_coefficient(const SellmeierTable& table, Axis axis, double omega,
                            const GainSpec& gain);

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fields of one vacuum-seeded run at height z. Amplitudes carry the discrete
// delta scale: a unit seed is 1/spacing at its node.
struct VacuumModeState {
  Eigen::VectorXcd a_i_out, a_i_vac;  // idler axis
  Eigen::VectorXcd a_s_out, a_s_vac;  // signal axis
  double z = 0;
};

enum class Band { idler, signal };

struct SolverOptions {
  int n_steps = 0;            // 0: automatic, 32 steps per carrier period (2000 for uniform)
  std::string method = "rk4";
};

// Bogoliubov transfer matrices at z = L, rows on the field's axis, columns on
// the seed's axis. U pairs a field with seeds of its own band, V with seeds of
// the twin band; the other out/vac combinations vanish identically and are
// never stored.
struct TransferFunctions {
  FrequencyGrid grid;
  Eigen::MatrixXcd u_idler;   // n_i x n_i: A_i^vac, idler seeds
  Eigen::MatrixXcd v_idler;   // n_i x n_s: A_i^out, signal seeds
  Eigen::MatrixXcd u_signal;  // n_s x n_s: A_s^vac, signal seeds
  Eigen::MatrixXcd v_signal;  // n_s x n_i: A_s^out, idler seeds
  int n_steps = 0;
  std::string method;
  double kappa = 0;
  double pump_scale = 1;      // multiplier applied to the stored pump samples
};

// Derivative of the four coupled field equations at height z.
VacuumModeState rhs(const VacuumModeState& state, double z, const PhaseMismatchTable& table,
                    const PolingPattern& poling, const PumpSpectrum& pump, const GainSpec& gain);

VacuumModeState propagate_mode(Band band, int seed_index, const PhaseMismatchTable& table,
                               const PolingPattern& poling, const PumpSpectrum& pump,
                               const GainSpec& gain, const SolverOptions& options = {});

TransferFunctions propagate_all(const PhaseMismatchTable& table, const PolingPattern& poling,
                                const PumpSpectrum& pump, const GainSpec& gain,
                                const SolverOptions& options = {});

// Max deviation of spacing^2 (U U^dag - V V^dag) from the identity, per band.
struct SymplecticDefect {
  double idler = 0;
  double signal = 0;
  double max() const { return idler > signal ? idler : signal; }
};

SymplecticDefect symplectic_defect(const TransferFunctions& tf);

}  // namespace bsv
