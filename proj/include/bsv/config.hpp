#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsv/design.hpp"
#include "bsv/dispersion.hpp"
#include "bsv/propagator.hpp"

namespace bsv {

// Invalid experiment description; carries one dotted-field-path diagnostic
// per offence so a config file can be fixed in one pass.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct PolingConfig {
  std::string type = "periodic";     // uniform | periodic | apodized | multipeak
  double envelope_fwhm = 0;          // m, apodized only
  bool binarized = true;             // apodized and multipeak
  std::vector<HologramPeak> peaks;   // multipeak only
};

// Bin and window positions are offsets in rad/s from the band's
// phase-matched center, so one config works wherever the pair lands.
struct BinConfig {
  Band field = Band::idler;
  double offset = 0;
  double width = 0;
  double phase = 0;
};

struct WindowConfig {
  double lo_offset = 0;
  double hi_offset = 0;
  bool full() const { return lo_offset == 0 && hi_offset == 0; }
};

struct ExperimentConfig {
  std::string name = "custom";

  // crystal
  double poling_period = 46e-6;  // m
  double length = 13.7e-3;       // m
  PolingConfig poling;

  // pump
  double lambda_pump = 791e-9;      // m, sets the phase-matched grid centers
  std::vector<PumpPeak> pump_peaks;

  // grid
  int n = 201;
  double span = 6.0e13;  // rad/s, full width per band

  // gain
  std::vector<double> kappas;

  // solver
  int n_steps = 0;  // 0: automatic
  bool deterministic = false;
  int workers = 1;

  // analysis
  std::vector<std::string> observables;  // jsi correlations g2 nrf covariance graph nullifiers
  WindowConfig idler_window, signal_window;
  std::vector<BinConfig> bins;
  int phi_samples = 721;
  double snap_threshold = 0.2;

  // output
  std::vector<std::string> formats = {"csv", "binary"};
  bool render = false;

  bool wants(const std::string& observable) const;
  bool wants_format(const std::string& format) const;
};

// Structural validation (ranges, cross-field requirements). Dispersion-level
// checks (wavelength validity, matched pair existence) happen when the
// pipeline resolves the config. Throws ConfigError.
void validate_config(const ExperimentConfig& config);

// JSON parse / canonical echo. parse accepts partial documents (missing keys
// keep their defaults) but rejects unknown keys with their field path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string echo_config(const ExperimentConfig& config);

// Bundled experiment descriptions, geometry derived from the crystal's
// dispersion at construction time.
std::vector<std::string> preset_names();
bool is_preset(const std::string& name);
ExperimentConfig preset_config(const std::string& name);

}  // namespace bsv
