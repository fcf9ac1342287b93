#include "twz/run.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "twz/chain.hpp"
#include "twz/config.hpp"
#include "twz/constants.hpp"
#include "twz/dynamics.hpp"
#include "twz/emit.hpp"
#include "twz/errors.hpp"
#include "twz/noise.hpp"
#include "twz/synth.hpp"

namespace twz::cli {

namespace {

namespace c = twz::constants;

constexpr const char* kTool = "twzgate";
constexpr const char* kVersion = "0.1.0";

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

struct ExperimentResult {
  std::vector<emit::Table> tables;
  std::string summary;
};

chain::ChainConfig without_tweezers(chain::ChainConfig cfg) {
  for (auto& flag : cfg.tweezer_flags) flag = 0;
  return cfg;
}

// Gate geometry shared by the gate and noise experiments: the two outermost
// untweezed ions are driven on one mode of the bare chain; the tweezed ions
// condition that mode's frequency.
struct GateGeometry {
  int mode = 0;            // 0-based index into the spectra
  double bare_freq = 0.0;  // rad/s
  double cond_shift = 0.0; // rad/s, tweezed-chain shift of the gate mode
  double eta = 0.0;        // drive coupling of the driven pair
  double rabi = 0.0;       // rad/s, per-ion
};

GateGeometry resolve_geometry(const RunConfig& cfg) {
  const auto bare = chain::mode_spectrum(without_tweezers(cfg.chain),
                                         cfg.drive.wavelength,
                                         cfg.drive.axis_projection);
  const auto pinned = chain::mode_spectrum(cfg.chain, cfg.drive.wavelength,
                                           cfg.drive.axis_projection);
  GateGeometry g;
  g.mode = cfg.drive.gate_mode == 0 ? cfg.chain.n_ions - 1
                                    : cfg.drive.gate_mode - 1;
  g.bare_freq = bare.frequencies(g.mode);
  g.cond_shift = pinned.frequencies(g.mode) - bare.frequencies(g.mode);

  int first = -1, last = -1;
  for (int i = 0; i < cfg.chain.n_ions; ++i)
    if (!cfg.chain.tweezer_flags[static_cast<std::size_t>(i)]) {
      if (first < 0) first = i;
      last = i;
    }
  if (first < 0 || first == last)
    throw std::invalid_argument(
        "gate experiments need at least two untweezed (driven) ions");
  g.eta = std::abs(bare.lamb_dicke(g.mode, first));
  if (g.eta <= 0.0)
    throw std::invalid_argument(
        "driven ion does not couple to the selected gate mode");
  if (cfg.drive.detuning <= 0.0)
    throw std::invalid_argument("'drive.detuning_hz' must be positive");
  g.rabi = cfg.drive.rabi > 0.0 ? cfg.drive.rabi
                                : cfg.drive.detuning / (2.0 * g.eta);
  return g;
}

dynamics::GateContext make_context(const RunConfig& cfg, const GateGeometry& g,
                                   dynamics::Control control) {
  dynamics::GateContext ctx;
  ctx.mode_freq = control == dynamics::Control::S ? g.bare_freq + g.cond_shift
                                                  : g.bare_freq;
  ctx.eta = {g.eta, g.eta};
  ctx.nbar = cfg.drive.nbar;
  ctx.control = control;
  return ctx;
}

dynamics::DriveSpec make_drive(const RunConfig& cfg, const GateGeometry& g) {
  dynamics::DriveSpec drive;
  drive.tones = {{g.bare_freq - cfg.drive.detuning, g.rabi, 0.0}};
  drive.duration = cfg.drive.duration;
  return drive;
}

ExperimentResult run_modes(const RunConfig& cfg) {
  const auto bare = chain::mode_spectrum(without_tweezers(cfg.chain),
                                         cfg.drive.wavelength,
                                         cfg.drive.axis_projection);
  const auto pinned = chain::mode_spectrum(cfg.chain, cfg.drive.wavelength,
                                           cfg.drive.axis_projection);
  emit::Table table;
  table.name = "data";
  table.columns = {"mode", "freq_hz", "shift_hz"};
  const int n = cfg.chain.n_ions;
  for (int i = 1; i <= n; ++i) table.columns.push_back("b" + std::to_string(i));
  for (int i = 1; i <= n; ++i)
    table.columns.push_back("eta" + std::to_string(i));
  for (int m = 0; m < n; ++m) {
    std::vector<emit::Value> row;
    row.emplace_back(static_cast<long long>(m + 1));
    row.emplace_back(c::hz(bare.frequencies(m)));
    row.emplace_back(c::hz(pinned.frequencies(m) - bare.frequencies(m)));
    for (int i = 0; i < n; ++i) row.emplace_back(bare.mode_matrix(m, i));
    for (int i = 0; i < n; ++i) row.emplace_back(bare.lamb_dicke(m, i));
    table.rows.push_back(std::move(row));
  }
  const double top_shift =
      c::hz(pinned.frequencies(n - 1) - bare.frequencies(n - 1));
  ExperimentResult result;
  result.tables.push_back(std::move(table));
  result.summary = "modes: " + std::to_string(n) + " ions, top-mode shift " +
                   fmt("%.6g", top_shift) + " Hz";
  return result;
}

ExperimentResult run_scan(const RunConfig& cfg) {
  const auto bare = chain::mode_spectrum(without_tweezers(cfg.chain),
                                         cfg.drive.wavelength,
                                         cfg.drive.axis_projection);
  const int n = cfg.chain.n_ions;
  emit::Table table;
  table.name = "data";
  table.columns = {"waist_um", "light_shift_hz"};
  for (int m = 1; m <= n; ++m)
    table.columns.push_back("shift_hz_m" + std::to_string(m));
  for (double waist : cfg.scan.waists) {
    for (int p = 0; p < cfg.scan.light_shift_points; ++p) {
      chain::ChainConfig varied = cfg.chain;
      varied.beam_waist = waist;
      varied.light_shift = cfg.scan.light_shift_max * p /
                           (cfg.scan.light_shift_points - 1);
      const auto pinned = chain::mode_spectrum(varied, cfg.drive.wavelength,
                                               cfg.drive.axis_projection);
      std::vector<emit::Value> row;
      row.emplace_back(waist * 1e6);
      row.emplace_back(c::hz(varied.light_shift));
      for (int m = 0; m < n; ++m)
        row.emplace_back(c::hz(pinned.frequencies(m) - bare.frequencies(m)));
      table.rows.push_back(std::move(row));
    }
  }
  ExperimentResult result;
  result.summary = "scan: " + std::to_string(table.rows.size()) +
                   " points over " + std::to_string(cfg.scan.waists.size()) +
                   " waists";
  result.tables.push_back(std::move(table));
  return result;
}

ExperimentResult run_gate(const RunConfig& cfg) {
  const GateGeometry g = resolve_geometry(cfg);
  const dynamics::DriveSpec drive = make_drive(cfg, g);

  std::vector<double> t_grid(static_cast<std::size_t>(cfg.drive.samples));
  for (int i = 0; i < cfg.drive.samples; ++i)
    t_grid[static_cast<std::size_t>(i)] =
        cfg.drive.duration * i / (cfg.drive.samples - 1);

  emit::Table summary;
  summary.name = "data";
  summary.columns = {"case",       "p_ss",           "p_mixed", "p_dd",
                     "parity_amp", "fidelity"};
  emit::Table trace;
  trace.name = "trace";
  trace.columns = {"case", "t_s", "p_ss", "p_mixed", "p_dd"};

  std::string note;
  for (auto control : {dynamics::Control::D, dynamics::Control::S}) {
    const auto ctx = make_context(cfg, g, control);
    const auto populations = dynamics::ms_populations(ctx, drive, t_grid);
    const auto fs = dynamics::final_state(ctx, drive);
    const double parity_amp = 2.0 * std::abs(fs.coherence);
    const double fidelity =
        dynamics::state_fidelity(fs.p_ss, fs.p_dd, parity_amp, control);
    const std::string name = control == dynamics::Control::D ? "D" : "S";
    summary.rows.push_back({name, fs.p_ss, fs.p_mixed, fs.p_dd, parity_amp,
                            fidelity});
    for (std::size_t i = 0; i < populations.times.size(); ++i)
      trace.rows.push_back({name, populations.times[i], populations.p_ss[i],
                            populations.p_mixed[i], populations.p_dd[i]});
    note += (note.empty() ? "F_" : ", F_") + name + "=" +
            fmt("%.4f", fidelity);
  }

  ExperimentResult result;
  result.tables.push_back(std::move(summary));
  result.tables.push_back(std::move(trace));
  result.summary = "gate: " + note + ", Omega=" +
                   fmt("%.6g", c::hz(g.rabi)) + " Hz";
  return result;
}

ExperimentResult run_synth(const RunConfig& cfg) {
  const int n_controls = cfg.chain.n_tweezed();
  const auto bare = chain::mode_spectrum(without_tweezers(cfg.chain),
                                         cfg.drive.wavelength,
                                         cfg.drive.axis_projection);
  const auto conditional = chain::conditional_spectrum(cfg.chain, 0);

  synth::NcmsOptions options;
  options.duration = cfg.synth.duration;
  options.max_total_rabi = cfg.synth.max_total_rabi;
  options.drive_wavelength = cfg.drive.wavelength;
  options.axis_projection = cfg.drive.axis_projection;
  options.seed = cfg.seed;
  options.n_starts = cfg.synth.n_starts;
  const auto gate =
      synth::n_controlled_ms(n_controls, bare.frequencies(0),
                             conditional.per_shift, cfg.synth.target_phase,
                             cfg.chain, options);
  const auto report = synth::verify_solution(gate.solution, gate.problem);
  if (!report.passed)
    throw NumericError("synthesized pulse failed independent verification");

  emit::Table tones;
  tones.name = "data";
  tones.columns = {"tone", "detuning_hz", "rabi_hz", "sign"};
  for (std::size_t i = 0; i < gate.solution.tones.size(); ++i) {
    const auto& tone = gate.solution.tones[i];
    tones.rows.push_back({static_cast<long long>(i + 1), c::hz(tone.detuning),
                          c::hz(tone.rabi),
                          static_cast<long long>(tone.sign)});
  }
  emit::Table samples;
  samples.name = "samples";
  samples.columns = {"t_s", "re_alpha", "im_alpha", "phi_rad", "config_k"};
  for (const auto& s : report.samples)
    samples.rows.push_back({s.t, s.re_alpha, s.im_alpha, s.phi,
                            static_cast<long long>(s.config)});

  ExperimentResult result;
  result.summary =
      "synth: " + std::to_string(n_controls) + "-controlled, " +
      std::to_string(gate.solution.tones.size()) + " tones, T=" +
      fmt("%.6g", gate.solution.achieved_duration * 1e6) + " us, total Rabi " +
      fmt("%.6g", c::hz(gate.solution.total_rabi)) + " Hz, verified";
  result.tables.push_back(std::move(tones));
  result.tables.push_back(std::move(samples));
  return result;
}

ExperimentResult run_noise(const RunConfig& cfg) {
  const GateGeometry g = resolve_geometry(cfg);

  noise::GateParams params;
  params.drive = make_drive(cfg, g);
  params.mode_trap_ratio = g.bare_freq / cfg.chain.axial_freq;
  params.conditional_shift = g.cond_shift;

  emit::Table stats_table;
  stats_table.name = "data";
  stats_table.columns = {"case", "mean", "stddev", "p5",  "p25",
                         "p50",  "p75",  "p95",    "trials"};
  std::string note;
  for (auto control : {dynamics::Control::D, dynamics::Control::S}) {
    params.context = make_context(cfg, g, control);
    const auto stats = noise::gate_fidelity_mc(params, cfg.noise,
                                               cfg.monte_carlo.trials,
                                               cfg.seed);
    const std::string name = control == dynamics::Control::D ? "D" : "S";
    stats_table.rows.push_back({name, stats.mean, stats.stddev, stats.p5,
                                stats.p25, stats.p50, stats.p75, stats.p95,
                                static_cast<long long>(stats.trials)});
    note += (note.empty() ? "F_" : ", F_") + name + "=" +
            fmt("%.4f", stats.mean);
  }

  ExperimentResult result;
  result.tables.push_back(std::move(stats_table));

  // Control-coherence sweep against the first tweezer-intensity channel.
  for (const auto& model : cfg.noise) {
    if (model.target != noise::NoiseTarget::tweezer_intensity) continue;
    emit::Table sweep;
    sweep.name = "sweep";
    sweep.columns = {"n_stages", "witness", "witness_se"};
    const auto witnesses = noise::coherence_sweep(
        model, cfg.chain.light_shift, cfg.drive.duration,
        cfg.monte_carlo.stage_counts, cfg.monte_carlo.coherence_trials,
        cfg.seed);
    for (std::size_t i = 0; i < witnesses.size(); ++i)
      sweep.rows.push_back(
          {static_cast<long long>(cfg.monte_carlo.stage_counts[i]),
           witnesses[i].witness, witnesses[i].witness_se});
    note += ", W(N=" +
            std::to_string(cfg.monte_carlo.stage_counts.back()) + ")=" +
            fmt("%.4f", witnesses.back().witness);
    result.tables.push_back(std::move(sweep));
    break;
  }

  result.summary = "noise: " + note + " (" +
                   std::to_string(cfg.monte_carlo.trials) + " shots)";
  return result;
}

ExperimentResult dispatch(const RunConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::modes: return run_modes(cfg);
    case Experiment::gate: return run_gate(cfg);
    case Experiment::synth: return run_synth(cfg);
    case Experiment::noise: return run_noise(cfg);
    case Experiment::scan: return run_scan(cfg);
  }
  throw std::invalid_argument("unknown experiment");
}

void print_error(std::ostream& err, int code, const char* type,
                 const std::string& message) {
  nlohmann::ordered_json record;
  record["error"] = {{"exit", code}, {"type", type}, {"message", message}};
  err << record.dump() << "\n";
}

} // namespace

int run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    nlohmann::ordered_json doc = options.config_path.empty()
                                     ? nlohmann::ordered_json::object()
                                     : load_document(options.config_path);
    for (const auto& spec : options.overrides) apply_override(doc, spec);
    if (!options.experiment.empty()) doc["experiment"] = options.experiment;
    if (!options.out_path.empty()) doc["output"]["path"] = options.out_path;
    if (!options.format.empty()) doc["output"]["format"] = options.format;
    if (options.has_seed) doc["seed"] = options.seed;

    const RunConfig cfg = parse_config(doc);
    ExperimentResult result = dispatch(cfg);

    std::string path = cfg.output.path;
    if (path.empty())
      path = std::string(experiment_name(cfg.experiment)) +
             (cfg.output.format == emit::Format::csv ? ".csv" : ".json");
    emit::Metadata meta{kTool, kVersion, cfg.seed, cfg.echo};
    const auto files =
        emit::write_outputs(result.tables, meta, path, cfg.output.format);

    out << result.summary << " ->";
    for (const auto& f : files) out << " " << f;
    out << "\n";
    if (options.verbose)
      for (const auto& table : result.tables)
        out << "  table " << table.name << ": " << table.rows.size()
            << " rows, " << table.columns.size() << " columns\n";
    return 0;
  } catch (const InfeasibleError& e) {
    print_error(err, 4, "infeasible", e.what());
    return 4;
  } catch (const IoError& e) {
    print_error(err, 5, "io", e.what());
    return 5;
  } catch (const NumericError& e) {
    print_error(err, 3, "numeric", e.what());
    return 3;
  } catch (const std::domain_error& e) {
    print_error(err, 3, "numeric", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    print_error(err, 2, "config", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error(err, 3, "numeric", e.what());
    return 3;
  }
}

} // namespace twz::cli
