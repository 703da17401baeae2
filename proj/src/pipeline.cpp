#include "bsv/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <vector>

#include <json.hpp>

#include "bsv/constants.hpp"
#include "bsv/propagator.hpp"

namespace bsv {

namespace {

using nlohmann::json;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Files are registered before their writer runs, so a failure mid-write still
// leaves the partial file on the cleanup list.
class FileTracker {
 public:
  explicit FileTracker(std::filesystem::path root) : root_(std::move(root)) {}

  std::filesystem::path claim(const std::string& relative) {
    files_.push_back(relative);
    return root_ / relative;
  }

  void claim_dir(const std::string& relative) {
    dirs_.push_back(relative);
    std::filesystem::create_directories(root_ / relative);
  }

  json inventory() const {
    std::vector<std::string> sorted = files_;
    std::sort(sorted.begin(), sorted.end());
    json out = json::array();
    for (const auto& rel : sorted) {
      const auto path = root_ / rel;
      out.push_back({{"path", rel},
                     {"bytes", static_cast<std::uint64_t>(std::filesystem::file_size(path))},
                     {"sha256", sha256_file(path)}});
    }
    return out;
  }

  void discard_all() {
    std::error_code ec;
    for (const auto& rel : files_) std::filesystem::remove(root_ / rel, ec);
    for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it)
      std::filesystem::remove(root_ / *it, ec);  // removes only emptied dirs
  }

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
  std::vector<std::string> dirs_;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::out | std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

// The run refuses a directory with leftovers so the manifest's completeness
// promise (every file present is listed) can hold.
void require_empty(const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);
  if (!std::filesystem::is_empty(outdir))
    throw ConfigError({"output directory " + outdir.string() + " is not empty"});
}

std::string sidecar_context(const ResolvedSetup& s, const double* kappa,
                            const TransferFunctions* tf) {
  json ctx;
  ctx["grid"] = {{"n", s.config.n},
                 {"span", s.config.span},
                 {"spacing", s.table.grid.spacing()},
                 {"idler_center", s.pair.omega_idler},
                 {"signal_center", s.pair.omega_signal}};
  ctx["windows"] = {{"idler", {s.idler_window.lo, s.idler_window.hi}},
                    {"signal", {s.signal_window.lo, s.signal_window.hi}}};
  if (kappa) ctx["gain"] = {{"kappa", *kappa}};
  if (tf)
    ctx["solver"] = {{"method", tf->method}, {"n_steps", tf->n_steps}};
  else
    ctx["solver"] = {{"method", "rk4"}, {"n_steps", s.config.n_steps}};
  return ctx.dump();
}

template <typename Matrix>
void export_matrix(FileTracker& tracker, const ExperimentConfig& config, const std::string& stem,
                   const Matrix& m, const std::string& context) {
  if (config.wants_format("csv")) write_matrix_csv(tracker.claim(stem + ".csv"), m);
  if (config.wants_format("binary")) {
    const auto payload = tracker.claim(stem + ".bin");
    tracker.claim(stem + ".json");
    write_matrix_binary(payload, m, context);
  }
}

void write_edges(const std::filesystem::path& path, const GraphAdjacency& g) {
  std::string text = "mode_a,mode_b,weight,phase\n";
  for (Eigen::Index a = 0; a < g.g.rows(); ++a)
    for (Eigen::Index b = a + 1; b < g.g.cols(); ++b) {
      const double w = g.g(a, b);
      if (w == 0.0) continue;
      text += std::to_string(a) + "," + std::to_string(b) + "," + fmt(std::abs(w)) + "," +
              fmt(w < 0 ? pi : 0.0) + "\n";
    }
  write_text(path, text);
}

void write_graph_modes(const std::filesystem::path& path, const GraphAdjacency& g,
                       const BinSet& bins) {
  std::string text = "mode,field,center,width,phase\n";
  for (std::size_t m = 0; m < g.modes.size(); ++m) {
    const auto& bin = bins.bins[static_cast<std::size_t>(g.modes[m].bin)];
    text += std::to_string(m) + ',' + (g.modes[m].field == Band::idler ? "idler" : "signal") +
            ',' + fmt(bin.center) + ',' + fmt(bin.width) + ',' + fmt(bin.phase) + '\n';
  }
  write_text(path, text);
}

struct GraphArtifacts {
  GraphAdjacency raw;
  GraphAdjacency snapped;
  std::optional<Eigen::MatrixXd> v;  // cluster matrix when the graph is self-inverse
  std::string cluster_status;        // "ok" or the reason V is unavailable
  json summary;
};

GraphArtifacts analyze_graph(const ResolvedSetup& s) {
  GraphArtifacts art;
  art.raw = hgraph_from_design(s.pump, s.phi, *s.bins);
  art.snapped = snap_adjacency(art.raw, s.config.snap_threshold);
  try {
    art.v = cluster_matrix(art.snapped);
    art.cluster_status = "ok";
  } catch (const std::exception& e) {
    art.cluster_status = e.what();
  }

  json components = json::array();
  for (const auto& part : partition_lattices(art.snapped)) {
    json bins_of_part = json::array();
    for (const auto& mode : part.modes) bins_of_part.push_back(mode.bin);
    components.push_back({{"size", part.modes.size()}, {"bins", bins_of_part}});
  }
  art.summary = {{"scale", art.raw.scale},
                 {"phase_residual", art.raw.phase_residual},
                 {"off_lattice", art.raw.off_lattice},
                 {"dim_modes", art.raw.dim_modes},
                 {"snap_threshold", s.config.snap_threshold},
                 {"components", components},
                 {"cluster_matrix", art.cluster_status}};
  return art;
}

void export_graph(FileTracker& tracker, const ResolvedSetup& s, const GraphArtifacts& art) {
  write_graph_modes(tracker.claim("graph_modes.csv"), art.raw, *s.bins);
  write_edges(tracker.claim("graph_edges.csv"), art.raw);
  write_edges(tracker.claim("graph_snapped_edges.csv"), art.snapped);
  if (art.v) write_matrix_csv(tracker.claim("cluster_matrix.csv"), *art.v);
}

void export_jsi(FileTracker& tracker, const ResolvedSetup& s, const std::string& context) {
  const Eigen::MatrixXd map = jsi(s.pump, s.phi, s.table.grid);
  export_matrix(tracker, s.config, "jsi", map, context);
  if (s.config.render) render_heatmap_pgm(tracker.claim("jsi.pgm"), map);
}

double window_photons(const CorrelationSet& corr, Band band, const Window& window) {
  const FrequencyAxis& axis = band == Band::idler ? corr.grid.idler : corr.grid.signal;
  const Eigen::MatrixXcd& g1_ff = band == Band::idler ? corr.g1_ii : corr.g1_ss;
  double sum = 0;
  for (int i : window_indices(axis, window)) sum += g1_ff(i, i).real();
  return corr.grid.spacing() * sum;
}

void write_nullifier_sweep(const std::filesystem::path& path, const NullifierSet& null) {
  const Eigen::Index n_modes = null.variances.cols();
  std::string text = "phi";
  for (Eigen::Index j = 0; j < n_modes; ++j) text += ",var_" + std::to_string(j);
  for (Eigen::Index j = 0; j < n_modes; ++j) text += ",ref_" + std::to_string(j);
  text += '\n';
  for (Eigen::Index t = 0; t < null.phi.size(); ++t) {
    text += fmt(null.phi[t]);
    for (Eigen::Index j = 0; j < n_modes; ++j) text += ',' + fmt(null.variances(t, j));
    for (Eigen::Index j = 0; j < n_modes; ++j) text += ',' + fmt(null.reference[j]);
    text += '\n';
  }
  write_text(path, text);
}

void write_nullifier_summary(const std::filesystem::path& path, const NullifierSet& null) {
  std::string text = "mode,reference,min_variance,argmin_phi,squeezing_db\n";
  for (Eigen::Index j = 0; j < null.min_variance.size(); ++j)
    text += std::to_string(j) + ',' + fmt(null.reference[j]) + ',' + fmt(null.min_variance[j]) +
            ',' + fmt(null.argmin_phi[j]) + ',' + fmt(null.squeezing_db[j]) + '\n';
  write_text(path, text);
}

json nullifier_manifest_block(const NullifierSet& null) {
  json vars = json::array();
  double worst_ratio = 0;
  for (Eigen::Index j = 0; j < null.variances_at_simultaneous.size(); ++j) {
    vars.push_back(null.variances_at_simultaneous[j]);
    worst_ratio = std::max(worst_ratio, null.variances_at_simultaneous[j] / null.reference[j]);
  }
  return {{"simultaneous_phi", null.simultaneous_phi},
          {"simultaneous_index", null.simultaneous_index},
          {"variances_at_simultaneous", vars},
          {"simultaneous_db", 10.0 * std::log10(worst_ratio)}};
}

json pair_block(const PhaseMatchedPair& pair) {
  return {{"lambda_idler", pair.lambda_idler},
          {"lambda_signal", pair.lambda_signal},
          {"omega_idler", pair.omega_idler},
          {"omega_signal", pair.omega_signal}};
}

// Timings are zeroed in deterministic mode so repeated runs of one config
// produce byte-identical manifests.
double elapsed_seconds(const ExperimentConfig& config,
                       std::chrono::steady_clock::time_point since) {
  if (config.deterministic) return 0.0;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string finish_manifest(FileTracker& tracker, json& manifest) {
  manifest["files"] = tracker.inventory();
  const std::string text = manifest.dump(2) + "\n";
  write_text(tracker.claim("manifest.json"), text);
  return text;
}

}  // namespace

ResolvedSetup resolve(const ExperimentConfig& config) {
  validate_config(config);

  CrystalSpec crystal;
  crystal.poling_period = config.poling_period;
  crystal.length = config.length;

  PhaseMatchedPair pair;
  try {
    pair = find_phase_matched_pair(crystal, config.lambda_pump);
  } catch (const std::exception& e) {
    throw ConfigError({std::string("pump.lambda: ") + e.what()});
  }

  const FrequencyGrid grid{FrequencyAxis{pair.omega_idler, config.span, config.n},
                           FrequencyAxis{pair.omega_signal, config.span, config.n}};
  std::optional<PhaseMismatchTable> table;
  try {
    table = PhaseMismatchTable::build(crystal.sellmeier, crystal.axes, grid);
  } catch (const std::exception& e) {
    throw ConfigError({std::string("grid.span: ") + e.what()});
  }

  PolingPattern poling = config.poling.type == "uniform" ? uniform_poling(config.length)
                         : config.poling.type == "periodic"
                             ? periodic_poling(config.poling_period, config.length)
                         : config.poling.type == "apodized"
                             ? apodized_poling(config.poling_period, config.length,
                                               config.poling.envelope_fwhm, config.poling.binarized)
                             : multipeak_hologram(config.poling.peaks, config.length,
                                                  config.poling.binarized);

  PumpSpectrum pump;
  try {
    pump = multi_gaussian_pump(grid, config.pump_peaks);
  } catch (const std::exception& e) {
    throw ConfigError({std::string("pump.peaks: ") + e.what()});
  }

  Eigen::MatrixXcd phi = phase_matching_function(poling, *table);

  auto resolve_window = [](const WindowConfig& w, const FrequencyAxis& axis) {
    if (w.full()) return Window{axis.at(0), axis.at(axis.n - 1)};
    return Window{axis.center + w.lo_offset, axis.center + w.hi_offset};
  };
  const Window idler_window = resolve_window(config.idler_window, grid.idler);
  const Window signal_window = resolve_window(config.signal_window, grid.signal);

  std::optional<BinSet> bins;
  if (!config.bins.empty()) {
    std::vector<FrequencyBin> resolved;
    for (const auto& b : config.bins) {
      const double center =
          (b.field == Band::idler ? pair.omega_idler : pair.omega_signal) + b.offset;
      resolved.push_back(FrequencyBin{b.field, center, b.width, b.phase});
    }
    try {
      bins = make_bins(grid, resolved);
    } catch (const std::invalid_argument& e) {
      throw ConfigError({std::string("analysis.bins: ") + e.what()});
    }
  }

  return ResolvedSetup{config,          crystal,       pair, std::move(*table), std::move(poling),
                       std::move(pump), std::move(phi), idler_window, signal_window,
                       std::move(bins)};
}

GainSpec gain_for(const ResolvedSetup& setup, double kappa) {
  return make_gain(kappa, setup.pair.omega_idler, setup.crystal.sellmeier,
                   setup.crystal.axes.idler, setup.crystal.length,
                   GainSpec::Normalization::pump_l1);
}

std::string run_experiment(const ExperimentConfig& config, const std::filesystem::path& outdir) {
  const ResolvedSetup s = resolve(config);
  require_empty(outdir);
  OutputLock lock(outdir);
  FileTracker tracker(outdir);
  const auto t0 = std::chrono::steady_clock::now();

  try {
    json manifest;
    manifest["version"] = software_version;
    manifest["command"] = "run";
    manifest["config"] = json::parse(echo_config(config));
    manifest["pair"] = pair_block(s.pair);

    if (config.wants("jsi")) export_jsi(tracker, s, sidecar_context(s, nullptr, nullptr));

    std::optional<GraphArtifacts> graph;
    if (config.wants("graph") || config.wants("nullifiers")) {
      graph = analyze_graph(s);
      manifest["graph"] = graph->summary;
      if (config.wants("graph")) export_graph(tracker, s, *graph);
    }

    const bool need_corr =
        config.wants("correlations") || config.wants("g2") || config.wants("nrf");
    const bool need_cov = config.wants("covariance") || config.wants("nullifiers");
    const bool need_propagation = need_corr || need_cov;

    json runs = json::array();
    json defects = json::array();
    json per_run_seconds = json::array();
    std::string nrf_table = "kappa,idler_lo,idler_hi,signal_lo,signal_hi,photons_idler,"
                            "photons_signal,nrf\n";

    for (std::size_t k = 0; need_propagation && k < config.kappas.size(); ++k) {
      const auto run_t0 = std::chrono::steady_clock::now();
      const double kappa = config.kappas[k];
      const std::string dir = "run" + std::to_string(k);
      tracker.claim_dir(dir);

      SolverOptions options;
      options.n_steps = config.n_steps;
      const TransferFunctions tf = propagate_all(s.table, s.poling, s.pump, gain_for(s, kappa),
                                                 options);
      const SymplecticDefect defect = symplectic_defect(tf);
      const std::string context = sidecar_context(s, &kappa, &tf);

      json run_block = {{"dir", dir},
                        {"kappa", kappa},
                        {"n_steps", tf.n_steps},
                        {"symplectic_defect", {{"idler", defect.idler}, {"signal", defect.signal}}}};
      defects.push_back(defect.max());

      if (need_corr) {
        const CorrelationSet corr = correlations(tf);
        run_block["photons"] = {{"idler", total_photons(corr, Band::idler)},
                                {"signal", total_photons(corr, Band::signal)}};
        if (config.wants("correlations")) {
          export_matrix(tracker, config, dir + "/g1_idler",
                        Eigen::MatrixXd(corr.g1_ii.diagonal().real()), context);
          export_matrix(tracker, config, dir + "/g1_signal",
                        Eigen::MatrixXd(corr.g1_ss.diagonal().real()), context);
          export_matrix(tracker, config, dir + "/q", corr.q_is, context);
        }
        if (config.wants("g2")) {
          const G2Result map = g2(corr, Band::idler, Band::signal);
          export_matrix(tracker, config, dir + "/g2", map.value, context);
          export_matrix(tracker, config, dir + "/g2_normalized", map.normalized, context);
          if (config.render) render_heatmap_pgm(tracker.claim(dir + "/g2.pgm"), map.normalized);
        }
        if (config.wants("nrf")) {
          double value = std::numeric_limits<double>::quiet_NaN();
          try {
            value = nrf(corr, s.idler_window, s.signal_window);
          } catch (const std::domain_error&) {
            // zero photons in both windows: the ratio is undefined, recorded as nan
          }
          nrf_table += fmt(kappa) + ',' + fmt(s.idler_window.lo) + ',' + fmt(s.idler_window.hi) +
                       ',' + fmt(s.signal_window.lo) + ',' + fmt(s.signal_window.hi) + ',' +
                       fmt(window_photons(corr, Band::idler, s.idler_window)) + ',' +
                       fmt(window_photons(corr, Band::signal, s.signal_window)) + ',' + fmt(value) +
                       '\n';
        }
      }

      if (need_cov) {
        const CovarianceMatrix cov = covariance(tf, *s.bins);
        if (config.wants("covariance")) {
          export_matrix(tracker, config, dir + "/covariance", cov.sigma, context);
          run_block["covariance_physicality"] = covariance_physicality(cov);
        }
        if (config.wants("nullifiers")) {
          if (graph->v) {
            const NullifierSet null = nullifier_variances(cov, *graph->v, config.phi_samples);
            write_nullifier_sweep(tracker.claim(dir + "/nullifiers.csv"), null);
            write_nullifier_summary(tracker.claim(dir + "/nullifier_summary.csv"), null);
            run_block["nullifiers"] = nullifier_manifest_block(null);
          } else {
            run_block["nullifiers"] = "skipped: " + graph->cluster_status;
          }
        }
      }

      run_block["seconds"] = elapsed_seconds(config, run_t0);
      per_run_seconds.push_back(run_block["seconds"]);
      runs.push_back(std::move(run_block));
    }

    if (config.wants("nrf") && need_propagation) write_text(tracker.claim("nrf.csv"), nrf_table);

    manifest["runs"] = runs;
    manifest["convergence"] = {{"symplectic_defect", defects}};
    manifest["timings"] = {{"total_seconds", elapsed_seconds(config, t0)},
                           {"per_run_seconds", per_run_seconds}};
    return finish_manifest(tracker, manifest);
  } catch (...) {
    tracker.discard_all();
    throw;
  }
}

std::string write_jsi_only(const ExperimentConfig& config, const std::filesystem::path& outdir) {
  const ResolvedSetup s = resolve(config);
  require_empty(outdir);
  OutputLock lock(outdir);
  FileTracker tracker(outdir);
  const auto t0 = std::chrono::steady_clock::now();

  try {
    json manifest;
    manifest["version"] = software_version;
    manifest["command"] = "jsi";
    manifest["config"] = json::parse(echo_config(config));
    manifest["pair"] = pair_block(s.pair);

    const std::string context = sidecar_context(s, nullptr, nullptr);
    export_matrix(tracker, config, "phase_matching", s.phi, context);
    export_jsi(tracker, s, context);

    manifest["timings"] = {{"total_seconds", elapsed_seconds(config, t0)}};
    return finish_manifest(tracker, manifest);
  } catch (...) {
    tracker.discard_all();
    throw;
  }
}

namespace {

struct MetricSample {
  int n_steps = 0;
  double photons = 0;
  double defect = 0;
  std::optional<double> nrf_value;
  std::optional<double> min_null;
};

MetricSample measure(const ResolvedSetup& s, double kappa, const SolverOptions& options) {
  const TransferFunctions tf = propagate_all(s.table, s.poling, s.pump, gain_for(s, kappa),
                                             options);
  MetricSample m;
  m.n_steps = tf.n_steps;
  m.defect = symplectic_defect(tf).max();
  const CorrelationSet corr = correlations(tf);
  m.photons = total_photons(corr, Band::idler);
  try {
    m.nrf_value = nrf(corr, s.idler_window, s.signal_window);
  } catch (const std::domain_error&) {
    // undefined at zero photons; the metric row is skipped
  }
  if (s.bins && (s.config.wants("graph") || s.config.wants("nullifiers"))) {
    const GraphArtifacts art = analyze_graph(s);
    if (art.v) {
      const CovarianceMatrix cov = covariance(tf, *s.bins);
      const NullifierSet null = nullifier_variances(cov, *art.v, s.config.phi_samples);
      m.min_null = null.min_variance.minCoeff();
    }
  }
  return m;
}

struct DeltaRow {
  std::string comparison;
  std::string metric;
  double base = 0;
  double refined = 0;
  double delta = 0;
  bool converged = false;
};

// Relative delta with a unit floor: every reported metric is dimensionless
// with a natural O(1) reference (vacuum NRF = 1, vacuum nullifier variance,
// symplectic identity), so once values sit far below 1 the ratio of two
// roundoff-sized numbers would flag noise; the floor makes the delta absolute
// there while staying relative for large photon numbers.
void append_rows(std::vector<DeltaRow>& rows, const std::string& comparison,
                 const MetricSample& base, const MetricSample& refined) {
  auto relative = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
  };
  auto push = [&](const std::string& metric, double a, double b) {
    const double delta = relative(a, b);
    rows.push_back(DeltaRow{comparison, metric, a, b, delta, delta < 1e-3});
  };
  push("total_photons_idler", base.photons, refined.photons);
  if (base.nrf_value && refined.nrf_value) push("nrf", *base.nrf_value, *refined.nrf_value);
  if (base.min_null && refined.min_null)
    push("min_nullifier_variance", *base.min_null, *refined.min_null);
  push("symplectic_defect", base.defect, refined.defect);
}

}  // namespace

std::string convergence_report(const ExperimentConfig& config,
                               const std::filesystem::path& outdir) {
  const ResolvedSetup s = resolve(config);
  require_empty(outdir);
  OutputLock lock(outdir);
  FileTracker tracker(outdir);
  const auto t0 = std::chrono::steady_clock::now();

  try {
    const double kappa = config.kappas.front();

    SolverOptions base_options;
    base_options.n_steps = config.n_steps;
    const MetricSample base = measure(s, kappa, base_options);

    SolverOptions doubled;
    doubled.n_steps = 2 * base.n_steps;
    const MetricSample refined_steps = measure(s, kappa, doubled);

    std::vector<DeltaRow> rows;
    append_rows(rows, "steps", base, refined_steps);

    const int coarse_n = (config.n + 1) / 2;
    bool grid_compared = false;
    if (coarse_n >= 3) {
      ExperimentConfig coarse_config = config;
      coarse_config.n = coarse_n;
      const ResolvedSetup coarse = resolve(coarse_config);
      const MetricSample coarse_sample = measure(coarse, kappa, base_options);
      append_rows(rows, "grid", coarse_sample, base);
      grid_compared = true;
    }

    std::string table = "comparison,metric,base,refined,delta,converged\n";
    json row_blocks = json::array();
    for (const auto& row : rows) {
      table += row.comparison + ',' + row.metric + ',' + fmt(row.base) + ',' + fmt(row.refined) +
               ',' + fmt(row.delta) + ',' + (row.converged ? "1" : "0") + '\n';
      row_blocks.push_back({{"comparison", row.comparison},
                            {"metric", row.metric},
                            {"base", row.base},
                            {"refined", row.refined},
                            {"delta", row.delta},
                            {"converged", row.converged}});
    }
    write_text(tracker.claim("convergence.csv"), table);

    json manifest;
    manifest["version"] = software_version;
    manifest["command"] = "convergence";
    manifest["config"] = json::parse(echo_config(config));
    manifest["pair"] = pair_block(s.pair);
    manifest["convergence"] = {{"kappa", kappa},
                               {"base_steps", base.n_steps},
                               {"doubled_steps", refined_steps.n_steps},
                               {"coarse_n", grid_compared ? json(coarse_n) : json()},
                               {"rows", row_blocks}};
    manifest["timings"] = {{"total_seconds", elapsed_seconds(config, t0)}};
    return finish_manifest(tracker, manifest);
  } catch (...) {
    tracker.discard_all();
    throw;
  }
}

}  // namespace bsv
