#include "bsv/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bsv/constants.hpp"

namespace bsv {

namespace {

using nlohmann::json;

std::string join_problems(const std::vector<std::string>& problems) {
  std::string msg = "invalid experiment config";
  for (const auto& p : problems) {
    msg += "\n  - ";
    msg += p;
  }
  return msg;
}

// --- parse helpers ---------------------------------------------------------

std::string child(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

std::string element(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

void expect_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed,
                 std::vector<std::string>& problems) {
  for (const auto& item : obj.items()) {
    const bool known =
        std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
    if (!known) problems.push_back(child(path, item.key()) + ": unknown key");
  }
}

const json* member(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

bool read_double(const json& j, const std::string& path, double& out, std::vector<std::string>& problems) {
  if (!j.is_number()) {
    problems.push_back(path + ": expected a number");
    return false;
  }
  out = j.get<double>();
  return true;
}

bool read_int(const json& j, const std::string& path, int& out, std::vector<std::string>& problems) {
  if (!j.is_number_integer()) {
    problems.push_back(path + ": expected an integer");
    return false;
  }
  out = j.get<int>();
  return true;
}

bool read_bool(const json& j, const std::string& path, bool& out, std::vector<std::string>& problems) {
  if (!j.is_boolean()) {
    problems.push_back(path + ": expected a boolean");
    return false;
  }
  out = j.get<bool>();
  return true;
}

bool read_string(const json& j, const std::string& path, std::string& out, std::vector<std::string>& problems) {
  if (!j.is_string()) {
    problems.push_back(path + ": expected a string");
    return false;
  }
  out = j.get<std::string>();
  return true;
}

bool read_complex(const json& j, const std::string& path, std::complex<double>& out,
                  std::vector<std::string>& problems) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    problems.push_back(path + ": expected [re, im]");
    return false;
  }
  out = {j[0].get<double>(), j[1].get<double>()};
  return true;
}

bool read_band(const json& j, const std::string& path, Band& out, std::vector<std::string>& problems) {
  std::string s;
  if (!read_string(j, path, s, problems)) return false;
  if (s == "idler") {
    out = Band::idler;
    return true;
  }
  if (s == "signal") {
    out = Band::signal;
    return true;
  }
  problems.push_back(path + ": expected \"idler\" or \"signal\"");
  return false;
}

void read_string_list(const json& j, const std::string& path, std::vector<std::string>& out,
                      std::vector<std::string>& problems) {
  if (!j.is_array()) {
    problems.push_back(path + ": expected an array of strings");
    return;
  }
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    std::string s;
    if (read_string(j[i], element(path, i), s, problems)) out.push_back(std::move(s));
  }
}

void read_number_list(const json& j, const std::string& path, std::vector<double>& out,
                      std::vector<std::string>& problems) {
  if (!j.is_array()) {
    problems.push_back(path + ": expected an array of numbers");
    return;
  }
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) {
    double v = 0;
    if (read_double(j[i], element(path, i), v, problems)) out.push_back(v);
  }
}

void parse_poling(const json& obj, const std::string& path, PolingConfig& out,
                  std::vector<std::string>& problems) {
  if (!obj.is_object()) {
    problems.push_back(path + ": expected an object");
    return;
  }
  expect_keys(obj, path, {"type", "envelope_fwhm", "binarized", "peaks"}, problems);
  if (auto* j = member(obj, "type")) read_string(*j, child(path, "type"), out.type, problems);
  if (auto* j = member(obj, "envelope_fwhm"))
    read_double(*j, child(path, "envelope_fwhm"), out.envelope_fwhm, problems);
  if (auto* j = member(obj, "binarized")) read_bool(*j, child(path, "binarized"), out.binarized, problems);
  if (auto* j = member(obj, "peaks")) {
    const std::string ppath = child(path, "peaks");
    if (!j->is_array()) {
      problems.push_back(ppath + ": expected an array");
      return;
    }
    out.peaks.clear();
    for (std::size_t i = 0; i < j->size(); ++i) {
      const json& pj = (*j)[i];
      const std::string ipath = element(ppath, i);
      if (!pj.is_object()) {
        problems.push_back(ipath + ": expected an object");
        continue;
      }
      expect_keys(pj, ipath, {"carrier", "amplitude", "envelope_fwhm"}, problems);
      HologramPeak pk{0.0, {1.0, 0.0}, 0.0};
      if (auto* q = member(pj, "carrier"))
        read_double(*q, child(ipath, "carrier"), pk.carrier, problems);
      else
        problems.push_back(child(ipath, "carrier") + ": required");
      if (auto* q = member(pj, "amplitude")) read_complex(*q, child(ipath, "amplitude"), pk.amplitude, problems);
      if (auto* q = member(pj, "envelope_fwhm"))
        read_double(*q, child(ipath, "envelope_fwhm"), pk.envelope_fwhm, problems);
      out.peaks.push_back(pk);
    }
  }
}

void parse_pump_peaks(const json& arr, const std::string& path, std::vector<PumpPeak>& out,
                      std::vector<std::string>& problems) {
  if (!arr.is_array()) {
    problems.push_back(path + ": expected an array");
    return;
  }
  out.clear();
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& pj = arr[i];
    const std::string ipath = element(path, i);
    if (!pj.is_object()) {
      problems.push_back(ipath + ": expected an object");
      continue;
    }
    expect_keys(pj, ipath, {"lambda", "fwhm", "amplitude"}, problems);
    PumpPeak pk{0.0, 0.0, {1.0, 0.0}};
    if (auto* q = member(pj, "lambda"))
      read_double(*q, child(ipath, "lambda"), pk.lambda_center, problems);
    else
      problems.push_back(child(ipath, "lambda") + ": required");
    if (auto* q = member(pj, "fwhm"))
      read_double(*q, child(ipath, "fwhm"), pk.fwhm_lambda, problems);
    else
      problems.push_back(child(ipath, "fwhm") + ": required");
    if (auto* q = member(pj, "amplitude")) read_complex(*q, child(ipath, "amplitude"), pk.amplitude, problems);
    out.push_back(pk);
  }
}

void parse_window(const json& j, const std::string& path, WindowConfig& out,
                  std::vector<std::string>& problems) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    problems.push_back(path + ": expected [lo_offset, hi_offset]");
    return;
  }
  out.lo_offset = j[0].get<double>();
  out.hi_offset = j[1].get<double>();
}

void parse_bins(const json& arr, const std::string& path, std::vector<BinConfig>& out,
                std::vector<std::string>& problems) {
  if (!arr.is_array()) {
    problems.push_back(path + ": expected an array");
    return;
  }
  out.clear();
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& bj = arr[i];
    const std::string ipath = element(path, i);
    if (!bj.is_object()) {
      problems.push_back(ipath + ": expected an object");
      continue;
    }
    expect_keys(bj, ipath, {"field", "offset", "width", "phase"}, problems);
    BinConfig bin;
    if (auto* q = member(bj, "field"))
      read_band(*q, child(ipath, "field"), bin.field, problems);
    else
      problems.push_back(child(ipath, "field") + ": required");
    if (auto* q = member(bj, "offset")) read_double(*q, child(ipath, "offset"), bin.offset, problems);
    if (auto* q = member(bj, "width"))
      read_double(*q, child(ipath, "width"), bin.width, problems);
    else
      problems.push_back(child(ipath, "width") + ": required");
    if (auto* q = member(bj, "phase")) read_double(*q, child(ipath, "phase"), bin.phase, problems);
    out.push_back(bin);
  }
}

// --- validation helpers ------------------------------------------------------

const std::vector<std::string>& known_observables() {
  static const std::vector<std::string> names = {"jsi", "correlations", "g2",   "nrf",
                                                 "covariance", "graph", "nullifiers"};
  return names;
}

bool contains(const std::vector<std::string>& list, const std::string& value) {
  return std::find(list.begin(), list.end(), value) != list.end();
}

// --- preset construction -----------------------------------------------------

struct PairGeometry {
  PhaseMatchedPair pair;
  GroupSlopes slopes;
  double carrier;    // rad/m, hologram carrier matching the pair
  double omega_sum;  // rad/s
};

PairGeometry matched_geometry(double lambda_pump) {
  const CrystalSpec crystal;
  PairGeometry g;
  g.pair = find_phase_matched_pair(crystal, lambda_pump);
  g.slopes = pair_group_slopes(crystal.sellmeier, crystal.axes, g.pair);
  g.carrier = -delta_k(crystal.sellmeier, crystal.axes, g.pair.omega_idler, g.pair.omega_signal);
  g.omega_sum = g.pair.omega_idler + g.pair.omega_signal;
  return g;
}

double sum_to_lambda(double omega_sum) { return two_pi * speed_of_light / omega_sum; }

// Shared fig. 2 geometry: single 2 nm pump, grid wide enough for +-40 nm
// marginals around the matched pair.
ExperimentConfig fig2_base() {
  ExperimentConfig c;
  const PairGeometry g = matched_geometry(c.lambda_pump);
  c.pump_peaks = {PumpPeak{c.lambda_pump, 2e-9, {1.0, 0.0}}};
  c.n = 201;
  c.span = two_pi * speed_of_light * 80e-9 / (g.pair.lambda_idler * g.pair.lambda_signal);
  c.deterministic = true;
  return c;
}

ExperimentConfig fig2_lowgain() {
  ExperimentConfig c = fig2_base();
  c.name = "fig2_lowgain";
  c.kappas = {0.023};
  c.observables = {"jsi", "correlations", "g2", "nrf"};
  return c;
}

ExperimentConfig fig2_highgain() {
  ExperimentConfig c = fig2_base();
  c.name = "fig2_highgain";
  c.kappas = {22.961};
  c.observables = {"jsi", "correlations", "g2", "nrf"};
  return c;
}

// The Gaussian envelope width balances the crystal's phase-matching bandwidth
// against the 2 nm pump so the JSI lobe comes out round: equal intensity
// widths along the two grid diagonals require w = 16 ln2 / (fwhm_pump (u-v)).
ExperimentConfig fig2_apodized() {
  ExperimentConfig c = fig2_base();
  const PairGeometry g = matched_geometry(c.lambda_pump);
  const double pump_fwhm =
      two_pi * speed_of_light * c.pump_peaks[0].fwhm_lambda / (c.lambda_pump * c.lambda_pump);
  c.name = "fig2_apodized";
  c.poling.type = "apodized";
  c.poling.envelope_fwhm = 16.0 * std::log(2.0) / (pump_fwhm * (g.slopes.u - g.slopes.v));
  c.poling.binarized = true;
  c.kappas = {22.961};
  c.observables = {"jsi", "g2"};
  return c;
}

// Fig. 3 lattice JSIs: a comb of hologram carriers crossed with a comb of pump
// peaks. Lobe full width f on each frequency axis; neighbouring lobes sit
// three widths apart along both lattice directions.
ExperimentConfig fig3_base(int n_pump_peaks) {
  ExperimentConfig c;
  const PairGeometry g = matched_geometry(c.lambda_pump);
  const double u = g.slopes.u, v = g.slopes.v;

  const double f = std::sqrt(2.0) * two_pi * speed_of_light * 5e-9 /
                   (g.pair.lambda_idler * g.pair.lambda_signal);
  const double carrier_step = 3.0 * f * (u - v);        // axis separation 3 f
  const double pump_step = 3.0 * f * (u - v) / (-v);    // axis separation 3 f
  const double envelope = 8.0 * std::log(2.0) / (f * (u - v) / 2.0);

  // Continuous modulation: binarizing a multi-carrier sum redistributes
  // weight between the carriers (sign-of-sum distortion), which would break
  // the equal-lobe lattice this preset demonstrates.
  c.poling.type = "multipeak";
  c.poling.binarized = false;
  c.poling.peaks = {HologramPeak{g.carrier - carrier_step, {1.0, 0.0}, envelope},
                    HologramPeak{g.carrier, {1.0, 0.0}, envelope},
                    HologramPeak{g.carrier + carrier_step, {1.0, 0.0}, envelope}};

  c.pump_peaks.clear();
  for (int p = 0; p < n_pump_peaks; ++p) {
    const double offset = (p - (n_pump_peaks - 1) / 2.0) * pump_step;
    c.pump_peaks.push_back(PumpPeak{sum_to_lambda(g.omega_sum + offset), 5e-9, {1.0, 0.0}});
  }

  c.n = 201;
  c.span = n_pump_peaks == 3 ? 8.0e13 : 9.6e13;
  c.kappas = {0.023};
  c.observables = {"jsi"};
  c.deterministic = true;
  return c;
}

ExperimentConfig fig3_grid3() {
  ExperimentConfig c = fig3_base(3);
  c.name = "fig3_grid3";
  return c;
}

ExperimentConfig fig3_grid4() {
  ExperimentConfig c = fig3_base(4);
  c.name = "fig3_grid4";
  return c;
}

// Fig. 5 square cluster: three pump peaks spaced delta on the sum axis against
// a smooth three-lobe hologram split by the matching mismatch step, signs
// - + + so the four corner lobes carry the square's edge signs.
ExperimentConfig fig5_cluster() {
  ExperimentConfig c;
  const PairGeometry g = matched_geometry(c.lambda_pump);
  const double pump_fwhm_lambda = 2e-9;
  const double pump_fwhm =
      two_pi * speed_of_light * pump_fwhm_lambda / (c.lambda_pump * c.lambda_pump);
  const double delta = 2.5 * pump_fwhm * fwhm_to_sigma;          // 2.5 sigma lobe spacing
  const double dk_step = (g.slopes.u - g.slopes.v) * delta / 2.0;
  const double envelope = 8.0 * std::log(2.0) / (pump_fwhm * (g.slopes.u - g.slopes.v) / 2.0);

  c.name = "fig5_cluster";
  c.poling.type = "multipeak";
  c.poling.binarized = false;
  c.poling.peaks = {HologramPeak{g.carrier - dk_step, {-1.0, 0.0}, envelope},
                    HologramPeak{g.carrier, {1.0, 0.0}, envelope},
                    HologramPeak{g.carrier + dk_step, {1.0, 0.0}, envelope}};
  c.pump_peaks = {PumpPeak{sum_to_lambda(g.omega_sum - delta), pump_fwhm_lambda, {1.0, 0.0}},
                  PumpPeak{sum_to_lambda(g.omega_sum), pump_fwhm_lambda, {1.0, 0.0}},
                  PumpPeak{sum_to_lambda(g.omega_sum + delta), pump_fwhm_lambda, {1.0, 0.0}}};

  c.n = 201;
  c.span = 5.0 * delta;  // lobe spacing lands on exactly 40 grid steps
  c.kappas = {0.8, 5.9};
  c.observables = {"jsi", "correlations", "g2", "covariance", "graph", "nullifiers"};
  const double half = delta / 2.0, width = delta / 2.0;
  c.bins = {BinConfig{Band::idler, -half, width, 0.0}, BinConfig{Band::idler, half, width, 0.0},
            BinConfig{Band::signal, -half, width, 0.0}, BinConfig{Band::signal, half, width, 0.0}};
  c.phi_samples = 721;
  c.snap_threshold = 0.2;
  c.deterministic = true;
  return c;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

bool ExperimentConfig::wants(const std::string& observable) const {
  return contains(observables, observable);
}

bool ExperimentConfig::wants_format(const std::string& format) const {
  return contains(formats, format);
}

void validate_config(const ExperimentConfig& config) {
  std::vector<std::string> problems;
  auto flag = [&problems](const std::string& p) { problems.push_back(p); };

  if (config.name.empty()) flag("name: must not be empty");

  if (!(config.poling_period > 0)) flag("crystal.poling_period: must be positive");
  if (!(config.length > 0)) flag("crystal.length: must be positive");

  const std::string& type = config.poling.type;
  if (type != "uniform" && type != "periodic" && type != "apodized" && type != "multipeak")
    flag("crystal.poling.type: expected one of uniform, periodic, apodized, multipeak");
  if (type == "apodized" && !(config.poling.envelope_fwhm > 0))
    flag("crystal.poling.envelope_fwhm: must be positive for apodized poling");
  if (type != "apodized" && config.poling.envelope_fwhm != 0)
    flag("crystal.poling.envelope_fwhm: only used when type is apodized");
  if (type == "multipeak") {
    if (config.poling.peaks.empty()) flag("crystal.poling.peaks: must not be empty for multipeak poling");
    for (std::size_t i = 0; i < config.poling.peaks.size(); ++i) {
      const auto& pk = config.poling.peaks[i];
      const std::string path = element("crystal.poling.peaks", i);
      if (!(pk.carrier > 0)) flag(path + ".carrier: must be positive");
      if (pk.envelope_fwhm < 0) flag(path + ".envelope_fwhm: must not be negative");
    }
  } else if (!config.poling.peaks.empty()) {
    flag("crystal.poling.peaks: only used when type is multipeak");
  }

  if (!(config.lambda_pump > 0)) flag("pump.lambda: must be positive");
  if (config.pump_peaks.empty()) flag("pump.peaks: must not be empty");
  for (std::size_t i = 0; i < config.pump_peaks.size(); ++i) {
    const auto& pk = config.pump_peaks[i];
    const std::string path = element("pump.peaks", i);
    if (!(pk.lambda_center > 0)) flag(path + ".lambda: must be positive");
    if (!(pk.fwhm_lambda > 0)) flag(path + ".fwhm: must be positive");
  }

  if (config.n < 3) flag("grid.n: must be at least 3");
  if (!(config.span > 0)) flag("grid.span: must be positive");

  if (config.kappas.empty()) flag("gain.kappas: must not be empty");
  for (std::size_t i = 0; i < config.kappas.size(); ++i)
    if (!(config.kappas[i] >= 0) || !std::isfinite(config.kappas[i]))
      flag(element("gain.kappas", i) + ": must be a finite non-negative number");

  if (config.n_steps < 0) flag("solver.n_steps: must not be negative");
  if (config.workers < 1) flag("solver.workers: must be at least 1");

  for (std::size_t i = 0; i < config.observables.size(); ++i)
    if (!contains(known_observables(), config.observables[i]))
      flag(element("analysis.observables", i) + ": unknown observable \"" + config.observables[i] + "\"");

  auto check_window = [&](const WindowConfig& w, const std::string& path) {
    if (w.full()) return;
    if (!(w.lo_offset < w.hi_offset)) flag(path + ": lo_offset must be below hi_offset");
    if (w.lo_offset < -config.span / 2 || w.hi_offset > config.span / 2)
      flag(path + ": window extends beyond the band (half-span " + std::to_string(config.span / 2) + ")");
  };
  check_window(config.idler_window, "analysis.windows.idler");
  check_window(config.signal_window, "analysis.windows.signal");

  bool has_idler_bin = false, has_signal_bin = false;
  for (std::size_t i = 0; i < config.bins.size(); ++i) {
    const auto& bin = config.bins[i];
    const std::string path = element("analysis.bins", i);
    if (!(bin.width > 0)) flag(path + ".width: must be positive");
    if (std::abs(bin.offset) + bin.width / 2 > config.span / 2)
      flag(path + ": bin extends beyond the band (half-span " + std::to_string(config.span / 2) + ")");
    (bin.field == Band::idler ? has_idler_bin : has_signal_bin) = true;
  }
  const bool needs_both_fields = config.wants("graph") || config.wants("nullifiers");
  if (needs_both_fields && !(has_idler_bin && has_signal_bin))
    flag("analysis.bins: graph and nullifier observables need bins in both the idler and signal bands");
  if (config.wants("covariance") && config.bins.empty())
    flag("analysis.bins: covariance needs at least one bin");

  if (config.phi_samples < 2) flag("analysis.phi_samples: must be at least 2");
  if (!(config.snap_threshold > 0) || !(config.snap_threshold < 1))
    flag("analysis.snap_threshold: must lie strictly between 0 and 1");

  if (config.formats.empty()) flag("output.formats: must not be empty");
  for (std::size_t i = 0; i < config.formats.size(); ++i)
    if (config.formats[i] != "csv" && config.formats[i] != "binary")
      flag(element("output.formats", i) + ": expected \"csv\" or \"binary\"");

  if (!problems.empty()) throw ConfigError(std::move(problems));
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("invalid JSON: ") + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({"top level: expected an object"});

  std::vector<std::string> problems;
  ExperimentConfig c;

  expect_keys(doc, "", {"name", "crystal", "pump", "grid", "gain", "solver", "analysis", "output"},
              problems);

  if (auto* j = member(doc, "name")) read_string(*j, "name", c.name, problems);

  if (auto* j = member(doc, "crystal")) {
    if (!j->is_object()) {
      problems.push_back("crystal: expected an object");
    } else {
      expect_keys(*j, "crystal", {"poling_period", "length", "poling"}, problems);
      if (auto* q = member(*j, "poling_period"))
        read_double(*q, "crystal.poling_period", c.poling_period, problems);
      if (auto* q = member(*j, "length")) read_double(*q, "crystal.length", c.length, problems);
      if (auto* q = member(*j, "poling")) parse_poling(*q, "crystal.poling", c.poling, problems);
    }
  }

  if (auto* j = member(doc, "pump")) {
    if (!j->is_object()) {
      problems.push_back("pump: expected an object");
    } else {
      expect_keys(*j, "pump", {"lambda", "peaks"}, problems);
      if (auto* q = member(*j, "lambda")) read_double(*q, "pump.lambda", c.lambda_pump, problems);
      if (auto* q = member(*j, "peaks")) parse_pump_peaks(*q, "pump.peaks", c.pump_peaks, problems);
    }
  }

  if (auto* j = member(doc, "grid")) {
    if (!j->is_object()) {
      problems.push_back("grid: expected an object");
    } else {
      expect_keys(*j, "grid", {"n", "span"}, problems);
      if (auto* q = member(*j, "n")) read_int(*q, "grid.n", c.n, problems);
      if (auto* q = member(*j, "span")) read_double(*q, "grid.span", c.span, problems);
    }
  }

  if (auto* j = member(doc, "gain")) {
    if (!j->is_object()) {
      problems.push_back("gain: expected an object");
    } else {
      expect_keys(*j, "gain", {"kappas"}, problems);
      if (auto* q = member(*j, "kappas")) read_number_list(*q, "gain.kappas", c.kappas, problems);
    }
  }

  if (auto* j = member(doc, "solver")) {
    if (!j->is_object()) {
      problems.push_back("solver: expected an object");
    } else {
      expect_keys(*j, "solver", {"n_steps", "deterministic", "workers"}, problems);
      if (auto* q = member(*j, "n_steps")) read_int(*q, "solver.n_steps", c.n_steps, problems);
      if (auto* q = member(*j, "deterministic"))
        read_bool(*q, "solver.deterministic", c.deterministic, problems);
      if (auto* q = member(*j, "workers")) read_int(*q, "solver.workers", c.workers, problems);
    }
  }

  if (auto* j = member(doc, "analysis")) {
    if (!j->is_object()) {
      problems.push_back("analysis: expected an object");
    } else {
      expect_keys(*j, "analysis",
                  {"observables", "windows", "bins", "phi_samples", "snap_threshold"}, problems);
      if (auto* q = member(*j, "observables"))
        read_string_list(*q, "analysis.observables", c.observables, problems);
      if (auto* q = member(*j, "windows")) {
        if (!q->is_object()) {
          problems.push_back("analysis.windows: expected an object");
        } else {
          expect_keys(*q, "analysis.windows", {"idler", "signal"}, problems);
          if (auto* w = member(*q, "idler"))
            parse_window(*w, "analysis.windows.idler", c.idler_window, problems);
          if (auto* w = member(*q, "signal"))
            parse_window(*w, "analysis.windows.signal", c.signal_window, problems);
        }
      }
      if (auto* q = member(*j, "bins")) parse_bins(*q, "analysis.bins", c.bins, problems);
      if (auto* q = member(*j, "phi_samples"))
        read_int(*q, "analysis.phi_samples", c.phi_samples, problems);
      if (auto* q = member(*j, "snap_threshold"))
        read_double(*q, "analysis.snap_threshold", c.snap_threshold, problems);
    }
  }

  if (auto* j = member(doc, "output")) {
    if (!j->is_object()) {
      problems.push_back("output: expected an object");
    } else {
      expect_keys(*j, "output", {"formats", "render"}, problems);
      if (auto* q = member(*j, "formats")) read_string_list(*q, "output.formats", c.formats, problems);
      if (auto* q = member(*j, "render")) read_bool(*q, "output.render", c.render, problems);
    }
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot open config file " + path.string()});
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string echo_config(const ExperimentConfig& c) {
  json doc;
  doc["name"] = c.name;

  doc["crystal"]["poling_period"] = c.poling_period;
  doc["crystal"]["length"] = c.length;
  doc["crystal"]["poling"]["type"] = c.poling.type;
  doc["crystal"]["poling"]["envelope_fwhm"] = c.poling.envelope_fwhm;
  doc["crystal"]["poling"]["binarized"] = c.poling.binarized;
  doc["crystal"]["poling"]["peaks"] = json::array();
  for (const auto& pk : c.poling.peaks)
    doc["crystal"]["poling"]["peaks"].push_back(
        {{"carrier", pk.carrier},
         {"amplitude", {pk.amplitude.real(), pk.amplitude.imag()}},
         {"envelope_fwhm", pk.envelope_fwhm}});

  doc["pump"]["lambda"] = c.lambda_pump;
  doc["pump"]["peaks"] = json::array();
  for (const auto& pk : c.pump_peaks)
    doc["pump"]["peaks"].push_back({{"lambda", pk.lambda_center},
                                    {"fwhm", pk.fwhm_lambda},
                                    {"amplitude", {pk.amplitude.real(), pk.amplitude.imag()}}});

  doc["grid"]["n"] = c.n;
  doc["grid"]["span"] = c.span;
  doc["gain"]["kappas"] = c.kappas;
  doc["solver"]["n_steps"] = c.n_steps;
  doc["solver"]["deterministic"] = c.deterministic;
  doc["solver"]["workers"] = c.workers;

  doc["analysis"]["observables"] = c.observables;
  doc["analysis"]["windows"]["idler"] = {c.idler_window.lo_offset, c.idler_window.hi_offset};
  doc["analysis"]["windows"]["signal"] = {c.signal_window.lo_offset, c.signal_window.hi_offset};
  doc["analysis"]["bins"] = json::array();
  for (const auto& bin : c.bins)
    doc["analysis"]["bins"].push_back({{"field", bin.field == Band::idler ? "idler" : "signal"},
                                       {"offset", bin.offset},
                                       {"width", bin.width},
                                       {"phase", bin.phase}});
  doc["analysis"]["phi_samples"] = c.phi_samples;
  doc["analysis"]["snap_threshold"] = c.snap_threshold;

  doc["output"]["formats"] = c.formats;
  doc["output"]["render"] = c.render;

  return doc.dump(2) + "\n";
}

std::vector<std::string> preset_names() {
  return {"fig2_lowgain", "fig2_highgain", "fig2_apodized", "fig3_grid3", "fig3_grid4", "fig5_cluster"};
}

bool is_preset(const std::string& name) {
  const auto names = preset_names();
  return contains(names, name);
}

ExperimentConfig preset_config(const std::string& name) {
  if (name == "fig2_lowgain") return fig2_lowgain();
  if (name == "fig2_highgain") return fig2_highgain();
  if (name == "fig2_apodized") return fig2_apodized();
  if (name == "fig3_grid3") return fig3_grid3();
  if (name == "fig3_grid4") return fig3_grid4();
  if (name == "fig5_cluster") return fig5_cluster();
  throw ConfigError({"unknown preset \"" + name + "\""});
}

}  // namespace bsv
