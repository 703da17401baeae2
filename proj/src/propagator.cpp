#include "bsv/propagator.hpp"

#include <cmath>
#include <vector>

#include "bsv/constants.hpp"

namespace bsv {

namespace {

using std::complex;
constexpr complex<double> I{0.0, 1.0};

double pump_multiplier(const PumpSpectrum& pump, const GainSpec& gain) {
  if (gain.normalization == GainSpec::Normalization::raw) return 1.0;
  return pump.l1_norm > 0 ? 1.0 / pump.l1_norm : 0.0;
}

// Discrete coupling kernel K(z), n_i x n_s:
//   K_mn = sqrt(g_i(w_m) g_s(w_n)) * dw * mu * P[m+n] * exp(i Dk_mn (z - L/2)) * d(z).
// The geometric mean of the two per-band couplings is what keeps the flow a
// Bogoliubov map exactly, so idler and signal photon numbers balance; the
// per-band g enter symmetrically. Phases are assembled from the separable
// k_p(m+n) - k_i(m) - k_s(n) structure, four exp evaluations per row/column.
// Referencing the mismatch phase to the crystal midplane keeps symmetric
// designs free of the exp(i Dk L/2) spectral ramp, so flat detection bins
// overlap the squeezed supermodes instead of washing them out; the ramp is a
// pure per-mode phase convention with no effect on intensities.
struct Kernel {
  int ni = 0, ns = 0, np = 0;
  double z_ref = 0.0;
  Eigen::VectorXd sg_i, sg_s;
  Eigen::VectorXcd eta0;
  const Eigen::VectorXd* k_i = nullptr;
  const Eigen::VectorXd* k_s = nullptr;
  const Eigen::VectorXd* k_p = nullptr;
  Eigen::VectorXcd ai, bs, eta;
  Eigen::MatrixXcd K;

  void init(const PhaseMismatchTable& table, const PumpSpectrum& pump, const GainSpec& gain) {
    ni = table.grid.n_idler();
    ns = table.grid.n_signal();
    np = table.grid.n_pump();
    z_ref = 0.5 * gain.length;
    k_i = &table.k_idler;
    k_s = &table.k_signal;
    k_p = &table.k_pump;

    const double cpl = gain.chi2 * gain.e_pump / (speed_of_light * speed_of_light);
    sg_i.resize(ni);
    sg_s.resize(ns);
    for (int m = 0; m < ni; ++m) {
      const double w = table.grid.idler.at(m);
      sg_i[m] = cpl > 0 ? std::sqrt(cpl * w * w / (*k_i)[m]) : 0.0;
    }
    for (int n = 0; n < ns; ++n) {
      const double w = table.grid.signal.at(n);
      sg_s[n] = cpl > 0 ? std::sqrt(cpl * w * w / (*k_s)[n]) : 0.0;
    }
    eta0 = table.grid.spacing() * pump_multiplier(pump, gain) * pump.samples;

    ai.resize(ni);
    bs.resize(ns);
    eta.resize(np);
    K.resize(ni, ns);
  }

  void build(double z, double d) {
    const double zc = z - z_ref;
    for (int m = 0; m < ni; ++m) ai[m] = sg_i[m] * std::exp(-I * ((*k_i)[m] * zc));
    for (int n = 0; n < ns; ++n) bs[n] = sg_s[n] * std::exp(-I * ((*k_s)[n] * zc));
    for (int p = 0; p < np; ++p) eta[p] = d * eta0[p] * std::exp(I * ((*k_p)[p] * zc));
    for (int n = 0; n < ns; ++n)
      for (int m = 0; m < ni; ++m) K(m, n) = ai[m] * eta[m + n] * bs[n];
  }
};

struct Stage {
  double z0, h;
  double d0, dh, d1;  // modulation at the step's three sample heights
};

// 32 steps per carrier period holds the step-halving self-convergence of the
// L-plane fields below 1e-6 relative at kappa = 5.9; 20 per period measures
// 4.9e-6 there, so the denser default is the one that meets the bound.
int automatic_steps(const PolingPattern& poling) {
  if (poling.kind == PolingPattern::Kind::uniform) return 2000;
  return std::max(64, static_cast<int>(std::ceil(32.0 * poling.length / poling.period)));
}

// Steps never straddle a domain wall, so piecewise-constant modulation is seen
// exactly; within a segment the modulation is a constant.
std::vector<Stage> plan_steps(const PolingPattern& poling, int n_target) {
  const double length = poling.length;
  const double h_target = length / n_target;
  std::vector<Stage> plan;
  plan.reserve(n_target + poling.walls.size() + 2);

  if (poling.piecewise_constant()) {
    std::vector<double> edges;
    edges.push_back(0.0);
    for (double w : poling.walls)
      if (w > 0 && w < length) edges.push_back(w);
    edges.push_back(length);
    for (size_t j = 0; j + 1 < edges.size(); ++j) {
      const double a = edges[j], b = edges[j + 1];
      if (!(b > a)) continue;
      const double d = poling.value_at(0.5 * (a + b));
      const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h_target - 1e-12)));
      const double h = (b - a) / n;
      for (int k = 0; k < n; ++k) plan.push_back({a + k * h, h, d, d, d});
    }
  } else {
    const double h = length / n_target;
    for (int j = 0; j < n_target; ++j) {
      const double z0 = j * h;
      const double z1 = std::min(z0 + h, length);
      plan.push_back({z0, h, poling.value_at(z0), poling.value_at(z0 + h / 2), poling.value_at(z1)});
    }
  }
  return plan;
}

void apply(const Eigen::MatrixXcd& K, const Eigen::MatrixXcd& Z, Eigen::MatrixXcd& dZ, int ni,
           int ns) {
  dZ.topRows(ni).noalias() = complex<double>(0, -1) * (K.conjugate() * Z.bottomRows(ns));
  dZ.bottomRows(ns).noalias() = complex<double>(0, 1) * (K.transpose() * Z.topRows(ni));
}

// Fixed-step RK4 over the full plan. Returns a negative value on success,
// otherwise the z where a non-finite amplitude first appeared.
double integrate(Kernel& ker, const std::vector<Stage>& plan, Eigen::MatrixXcd& Z) {
  const int ni = ker.ni, ns = ker.ns;
  const auto rows = Z.rows();
  const auto cols = Z.cols();
  Eigen::MatrixXcd k1(rows, cols), k2(rows, cols), k3(rows, cols), k4(rows, cols),
      tmp(rows, cols);

  for (const Stage& s : plan) {
    ker.build(s.z0, s.d0);
    apply(ker.K, Z, k1, ni, ns);
    ker.build(s.z0 + s.h / 2, s.dh);
    tmp = Z + (s.h / 2) * k1;
    apply(ker.K, tmp, k2, ni, ns);
    tmp = Z + (s.h / 2) * k2;
    apply(ker.K, tmp, k3, ni, ns);
    ker.build(s.z0 + s.h, s.d1);
    tmp = Z + s.h * k3;
    apply(ker.K, tmp, k4, ni, ns);
    Z += (s.h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!Z.allFinite()) return s.z0 + s.h;
  }
  return -1.0;
}

void validate(const PhaseMismatchTable& table, const PolingPattern& poling,
              const PumpSpectrum& pump, const GainSpec& gain, const SolverOptions& options) {
  if (options.method != "rk4")
    throw std::invalid_argument("unsupported integrator '" + options.method + "'");
  if (options.n_steps < 0) throw std::invalid_argument("step count must be non-negative");
  if (!(poling.length > 0)) throw std::invalid_argument("poling pattern has no length");
  if (gain.kappa < 0) throw std::invalid_argument("gain must be non-negative");
  const int ni = table.grid.n_idler(), ns = table.grid.n_signal(), np = table.grid.n_pump();
  if (pump.samples.size() != np)
    throw std::invalid_argument("pump spectrum does not match the grid's pump axis");
  if (table.k_idler.size() != ni || table.k_signal.size() != ns || table.k_pump.size() != np)
    throw std::invalid_argument("phase-mismatch table is inconsistent with its grid");
  if (gain.kappa > 0 && (table.k_idler.minCoeff() <= 0 || table.k_signal.minCoeff() <= 0))
    throw std::invalid_argument("wavenumbers must be positive to form the coupling");
}

int resolve_steps(const SolverOptions& options, const PolingPattern& poling) {
  return options.n_steps > 0 ? options.n_steps : automatic_steps(poling);
}

}  // namespace

GainSpec make_gain(double kappa, double omega_ref, double n_ref, double length,
                   GainSpec::Normalization normalization, double chi2) {
  if (kappa < 0) throw std::invalid_argument("gain must be non-negative");
  if (!(omega_ref > 0)) throw std::invalid_argument("reference frequency must be positive");
  if (!(n_ref > 0)) throw std::invalid_argument("reference index must be positive");
  if (!(length > 0)) throw std::invalid_argument("crystal length must be positive");
  if (!(chi2 > 0)) throw std::invalid_argument("chi2 must be positive");
  GainSpec g;
  g.kappa = kappa;
  g.omega_ref = omega_ref;
  g.chi2 = chi2;
  g.e_pump = kappa * speed_of_light * n_ref / (omega_ref * chi2 * length);
  g.length = length;
  g.normalization = normalization;
  return g;
}

GainSpec make_gain(double kappa, double omega_ref, const SellmeierTable& table, Axis axis,
                   double length, GainSpec::Normalization normalization, double chi2) {
  const double n_ref = speed_of_light * wavenumber(table, axis, omega_ref) / omega_ref;
  return make_gain(kappa, omega_ref, n_ref, length, normalization, chi2);
}

double coupling_coefficient(const SellmeierTable& table, Axis axis, double omega,
                            const GainSpec& gain) {
  const double k = wavenumber(table, axis, omega);
  return omega * omega * gain.chi2 * gain.e_pump / (speed_of_light * speed_of_light * k);
}

VacuumModeState rhs(const VacuumModeState& state, double z, const PhaseMismatchTable& table,
                    const PolingPattern& poling, const PumpSpectrum& pump, const GainSpec& gain) {
  validate(table, poling, pump, gain, SolverOptions{});
  const int ni = table.grid.n_idler(), ns = table.grid.n_signal();
  if (state.a_i_out.size() != ni || state.a_i_vac.size() != ni || state.a_s_out.size() != ns ||
      state.a_s_vac.size() != ns)
    throw std::invalid_argument("state vectors do not match the grid");

  Kernel ker;
  ker.init(table, pump, gain);
  ker.build(z, poling.value_at(z));

  VacuumModeState d;
  d.z = z;
  d.a_i_out = I * (ker.K * state.a_s_vac.conjugate());
  d.a_s_vac = I * (ker.K.transpose() * state.a_i_out.conjugate());
  d.a_s_out = I * (ker.K.transpose() * state.a_i_vac.conjugate());
  d.a_i_vac = I * (ker.K * state.a_s_out.conjugate());
  return d;
}

VacuumModeState propagate_mode(Band band, int seed_index, const PhaseMismatchTable& table,
                               const PolingPattern& poling, const PumpSpectrum& pump,
                               const GainSpec& gain, const SolverOptions& options) {
  validate(table, poling, pump, gain, options);
  const int ni = table.grid.n_idler(), ns = table.grid.n_signal();
  const int limit = band == Band::idler ? ni : ns;
  if (seed_index < 0 || seed_index >= limit)
    throw std::invalid_argument("seed index outside the grid");

  Kernel ker;
  ker.init(table, pump, gain);
  Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(ni + ns, 1);
  const double inv_dw = 1.0 / table.grid.spacing();
  Z(band == Band::idler ? seed_index : ni + seed_index, 0) = inv_dw;

  const auto plan = plan_steps(poling, resolve_steps(options, poling));
  const double z_fail = integrate(ker, plan, Z);
  if (z_fail >= 0) {
    const double omega = band == Band::idler ? table.grid.idler.at(seed_index)
                                                 : table.grid.signal.at(seed_index);
    throw DivergenceError("propagation diverged at z = " + std::to_string(z_fail) +
                          " m for the seed at omega = " + std::to_string(omega) + " rad/s");
  }

  VacuumModeState st;
  st.z = poling.length;
  if (band == Band::idler) {
    st.a_i_vac = Z.topRows(ni).col(0).conjugate();
    st.a_s_out = Z.bottomRows(ns).col(0);
    st.a_i_out = Eigen::VectorXcd::Zero(ni);
    st.a_s_vac = Eigen::VectorXcd::Zero(ns);
  } else {
    st.a_i_out = Z.topRows(ni).col(0).conjugate();
    st.a_s_vac = Z.bottomRows(ns).col(0);
    st.a_i_vac = Eigen::VectorXcd::Zero(ni);
    st.a_s_out = Eigen::VectorXcd::Zero(ns);
  }
  return st;
}

TransferFunctions propagate_all(const PhaseMismatchTable& table, const PolingPattern& poling,
                                const PumpSpectrum& pump, const GainSpec& gain,
                                const SolverOptions& options) {
  validate(table, poling, pump, gain, options);
  const int ni = table.grid.n_idler(), ns = table.grid.n_signal();

  Kernel ker;
  ker.init(table, pump, gain);
  const double inv_dw = 1.0 / table.grid.spacing();
  Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(ni + ns, ni + ns);
  Z.topLeftCorner(ni, ni) = inv_dw * Eigen::MatrixXcd::Identity(ni, ni);
  Z.bottomRightCorner(ns, ns) = inv_dw * Eigen::MatrixXcd::Identity(ns, ns);

  const auto plan = plan_steps(poling, resolve_steps(options, poling));
  const double z_fail = integrate(ker, plan, Z);
  if (z_fail >= 0) {
    for (int col = 0; col < ni + ns; ++col) {
      if (Z.col(col).allFinite()) continue;
      const bool idler_seed = col < ni;
      const double omega =
          idler_seed ? table.grid.idler.at(col) : table.grid.signal.at(col - ni);
      throw DivergenceError("propagation diverged at z = " + std::to_string(z_fail) + " m for the " +
                            (idler_seed ? "idler" : "signal") +
                            " seed at omega = " + std::to_string(omega) + " rad/s");
    }
    throw DivergenceError("propagation diverged at z = " + std::to_string(z_fail) + " m");
  }

  return TransferFunctions{table.grid,
                           Z.topLeftCorner(ni, ni).conjugate(),
                           Z.topRightCorner(ni, ns).conjugate(),
                           Z.bottomRightCorner(ns, ns),
                           Z.bottomLeftCorner(ns, ni),
                           static_cast<int>(plan.size()),
                           options.method,
                           gain.kappa,
                           pump_multiplier(pump, gain)};
}

SymplecticDefect symplectic_defect(const TransferFunctions& tf) {
  const double w2 = tf.grid.spacing() * tf.grid.spacing();
  const int ni = tf.grid.n_idler(), ns = tf.grid.n_signal();
  const Eigen::MatrixXcd di =
      w2 * (tf.u_idler * tf.u_idler.adjoint() - tf.v_idler * tf.v_idler.adjoint()) -
      Eigen::MatrixXcd::Identity(ni, ni);
  const Eigen::MatrixXcd ds =
      w2 * (tf.u_signal * tf.u_signal.adjoint() - tf.v_signal * tf.v_signal.adjoint()) -
      Eigen::MatrixXcd::Identity(ns, ns);
  return SymplecticDefect{di.cwiseAbs().maxCoeff(), ds.cwiseAbs().maxCoeff()};
}

}  // namespace bsv
