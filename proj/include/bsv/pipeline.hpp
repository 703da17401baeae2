#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "bsv/cluster.hpp"
#include "bsv/config.hpp"
#include "bsv/io.hpp"
#include "bsv/observables.hpp"

namespace bsv {

inline constexpr const char* software_version = "1.0.0";

// Everything derived from a config before any propagation: matched pair,
// mismatch table (grid inside), poling pattern, pump spectrum, phase-matching
// function, windows and bins resolved to absolute frequencies.
struct ResolvedSetup {
  ExperimentConfig config;
  CrystalSpec crystal;
  PhaseMatchedPair pair;
  PhaseMismatchTable table;
  PolingPattern poling;
  PumpSpectrum pump;
  Eigen::MatrixXcd phi;
  Window idler_window, signal_window;  // rad/s, absolute
  std::optional<BinSet> bins;
};

// Validates the config, then instantiates it against the crystal's
// dispersion. Dispersion-level failures (no matched pair, frequencies outside
// Sellmeier validity, bins missing every grid node) also surface as
// ConfigError, with the offending field in the message.
ResolvedSetup resolve(const ExperimentConfig& config);

// Gain handle for one kappa, referenced to the matched idler frequency.
GainSpec gain_for(const ResolvedSetup& setup, double kappa);

// Full pipeline: design, propagate at every kappa, analyze, export, manifest.
// Requires an empty output directory (creating it if needed) and holds its
// lockfile for the duration; partial outputs are removed on failure. Returns
// the manifest JSON text. Every produced file is listed in the manifest with
// its SHA-256; timings are zeroed in deterministic mode so reruns are
// bit-identical.
std::string run_experiment(const ExperimentConfig& config, const std::filesystem::path& outdir);

// Design-only fast path: phase-matching function and JSI, no propagation.
std::string write_jsi_only(const ExperimentConfig& config, const std::filesystem::path& outdir);

// Self-convergence at kappas[0]: the configured solver against doubled steps,
// and the configured grid against one coarsened to (n+1)/2 nodes. Reports
// deltas of total photons, NRF, the smallest nullifier variance, and the
// symplectic defect (absolute difference for the defect, which is already a
// relative error; relative difference for the others), flagged at 1e-3.
std::string convergence_report(const ExperimentConfig& config, const std::filesystem::path& outdir);

}  // namespace bsv
