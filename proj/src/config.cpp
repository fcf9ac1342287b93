#include "twz/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include "twz/constants.hpp"

namespace twz::cli {

namespace {

using json = nlohmann::ordered_json;
namespace c = twz::constants;

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument(message);
}

void require_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail("'" + where + "' must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) fail("unknown key '" + item.key() + "' in " + where);
  }
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) fail("'" + where + "' must be a number");
  return v.get<double>();
}

long long as_integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail("'" + where + "' must be an integer");
  return v.get<long long>();
}

std::uint64_t as_seed(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0)
    return static_cast<std::uint64_t>(v.get<long long>());
  fail("'" + where + "' must be a nonnegative integer");
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) fail("'" + where + "' must be a string");
  return v.get<std::string>();
}

void deep_merge(json& target, const json& patch) {
  for (const auto& item : patch.items()) {
    if (target.contains(item.key()) && target[item.key()].is_object() &&
        item.value().is_object())
      deep_merge(target[item.key()], item.value());
    else
      target[item.key()] = item.value();
  }
}

Experiment parse_experiment(const std::string& name) {
  if (name == "modes") return Experiment::modes;
  if (name == "gate") return Experiment::gate;
  if (name == "synth") return Experiment::synth;
  if (name == "noise") return Experiment::noise;
  if (name == "scan") return Experiment::scan;
  fail("unknown experiment '" + name +
       "' (expected modes, gate, synth, noise, or scan)");
}

noise::NoiseKind parse_kind(const std::string& name) {
  if (name == "quasi_static_gaussian")
    return noise::NoiseKind::quasi_static_gaussian;
  if (name == "ornstein_uhlenbeck") return noise::NoiseKind::ornstein_uhlenbeck;
  if (name == "one_over_f") return noise::NoiseKind::one_over_f;
  fail("unknown noise kind '" + name + "'");
}

noise::NoiseTarget parse_target(const std::string& name) {
  if (name == "drive_intensity") return noise::NoiseTarget::drive_intensity;
  if (name == "trap_freq") return noise::NoiseTarget::trap_freq;
  if (name == "tweezer_intensity") return noise::NoiseTarget::tweezer_intensity;
  fail("unknown noise target '" + name + "'");
}

} // namespace

nlohmann::ordered_json default_document() {
  json doc;
  doc["experiment"] = "modes";
  doc["seed"] = 1;
  doc["chain"] = {{"n_ions", 3},
                  {"ion_mass_amu", c::ca40_mass_amu},
                  {"axial_freq_hz", 360.0e3},
                  {"tweezed", {false, true, false}},
                  {"light_shift_hz", 10.4e6},
                  {"beam_waist_um", 1.0}};
  doc["drive"] = {{"wavelength_nm", 729.0}, {"axis_projection", 1.0},
                  {"gate_mode", 0},         {"detuning_hz", 4.0e3},
                  {"rabi_hz", 0.0},         {"duration_s", 500.0e-6},
                  {"nbar", 0.0},            {"samples", 256}};
  doc["synth"] = {{"target_phase_rad", c::pi / 2.0},
                  {"duration_s", 0.0},
                  {"max_total_rabi_hz", 0.0},
                  {"n_starts", 8}};
  doc["noise"] = json::array();
  doc["monte_carlo"] = {{"trials", 10000},
                        {"coherence_trials", 2000},
                        {"stage_counts", {1, 2, 4, 8}}};
  doc["scan"] = {{"light_shift_max_hz", 25.0e6},
                 {"light_shift_points", 26},
                 {"waists_um", {0.8, 1.0, 1.5}}};
  doc["output"] = {{"path", ""}, {"format", "csv"}};
  return doc;
}

RunConfig parse_config(const nlohmann::ordered_json& document) {
  json doc = default_document();
  if (!document.is_object()) fail("configuration root must be an object");
  deep_merge(doc, document);

  require_keys(doc, "configuration",
               {"experiment", "seed", "chain", "drive", "synth", "noise",
                "monte_carlo", "scan", "output"});

  RunConfig cfg;
  cfg.experiment = parse_experiment(as_string(doc["experiment"], "experiment"));
  cfg.seed = as_seed(doc["seed"], "seed");

  const json& ch = doc["chain"];
  require_keys(ch, "chain",
               {"n_ions", "ion_mass_amu", "axial_freq_hz", "tweezed",
                "light_shift_hz", "beam_waist_um", "qubit_offsets_hz"});
  cfg.chain.n_ions = static_cast<int>(as_integer(ch["n_ions"], "chain.n_ions"));
  cfg.chain.ion_mass =
      as_number(ch["ion_mass_amu"], "chain.ion_mass_amu") * c::atomic_mass_unit;
  cfg.chain.axial_freq =
      c::angular(as_number(ch["axial_freq_hz"], "chain.axial_freq_hz"));
  if (!ch["tweezed"].is_array()) fail("'chain.tweezed' must be an array");
  for (const auto& flag : ch["tweezed"]) {
    if (!flag.is_boolean()) fail("'chain.tweezed' entries must be booleans");
    cfg.chain.tweezer_flags.push_back(flag.get<bool>() ? 1 : 0);
  }
  cfg.chain.light_shift =
      c::angular(as_number(ch["light_shift_hz"], "chain.light_shift_hz"));
  cfg.chain.beam_waist =
      as_number(ch["beam_waist_um"], "chain.beam_waist_um") * 1e-6;
  if (ch.contains("qubit_offsets_hz")) {
    if (!ch["qubit_offsets_hz"].is_array())
      fail("'chain.qubit_offsets_hz' must be an array");
    for (const auto& v : ch["qubit_offsets_hz"])
      cfg.chain.qubit_offsets.push_back(
          c::angular(as_number(v, "chain.qubit_offsets_hz")));
  } else {
    cfg.chain.qubit_offsets.assign(
        static_cast<std::size_t>(std::max(0, cfg.chain.n_ions)), 0.0);
  }
  cfg.chain.validate();

  const json& dr = doc["drive"];
  require_keys(dr, "drive",
               {"wavelength_nm", "axis_projection", "gate_mode", "detuning_hz",
                "rabi_hz", "duration_s", "nbar", "samples"});
  cfg.drive.wavelength =
      as_number(dr["wavelength_nm"], "drive.wavelength_nm") * 1e-9;
  cfg.drive.axis_projection =
      as_number(dr["axis_projection"], "drive.axis_projection");
  cfg.drive.gate_mode =
      static_cast<int>(as_integer(dr["gate_mode"], "drive.gate_mode"));
  cfg.drive.detuning = c::angular(as_number(dr["detuning_hz"], "drive.detuning_hz"));
  cfg.drive.rabi = c::angular(as_number(dr["rabi_hz"], "drive.rabi_hz"));
  cfg.drive.duration = as_number(dr["duration_s"], "drive.duration_s");
  cfg.drive.nbar = as_number(dr["nbar"], "drive.nbar");
  cfg.drive.samples =
      static_cast<int>(as_integer(dr["samples"], "drive.samples"));
  if (cfg.drive.wavelength <= 0.0) fail("'drive.wavelength_nm' must be positive");
  if (cfg.drive.gate_mode < 0 || cfg.drive.gate_mode > cfg.chain.n_ions)
    fail("'drive.gate_mode' must be 0 (top mode) or a 1-based mode index");
  if (cfg.drive.samples < 2) fail("'drive.samples' must be at least 2");

  const json& sy = doc["synth"];
  require_keys(sy, "synth",
               {"target_phase_rad", "duration_s", "max_total_rabi_hz",
                "n_starts"});
  cfg.synth.target_phase = as_number(sy["target_phase_rad"], "synth.target_phase_rad");
  cfg.synth.duration = as_number(sy["duration_s"], "synth.duration_s");
  cfg.synth.max_total_rabi =
      c::angular(as_number(sy["max_total_rabi_hz"], "synth.max_total_rabi_hz"));
  cfg.synth.n_starts =
      static_cast<int>(as_integer(sy["n_starts"], "synth.n_starts"));
  if (cfg.synth.n_starts < 1) fail("'synth.n_starts' must be at least 1");

  if (!doc["noise"].is_array()) fail("'noise' must be an array");
  for (std::size_t i = 0; i < doc["noise"].size(); ++i) {
    const json& nj = doc["noise"][i];
    const std::string where = "noise[" + std::to_string(i) + "]";
    require_keys(nj, where,
                 {"kind", "target", "amplitude", "correlation_time_s", "seed"});
    if (!nj.contains("kind") || !nj.contains("target") ||
        !nj.contains("amplitude"))
      fail(where + " needs kind, target, and amplitude");
    noise::NoiseModel model;
    model.kind = parse_kind(as_string(nj["kind"], where + ".kind"));
    model.target = parse_target(as_string(nj["target"], where + ".target"));
    // Intensity amplitudes are fractional; trap amplitude is a frequency.
    const double amp = as_number(nj["amplitude"], where + ".amplitude");
    model.amplitude =
        model.target == noise::NoiseTarget::trap_freq ? c::angular(amp) : amp;
    model.correlation_time =
        nj.contains("correlation_time_s")
            ? as_number(nj["correlation_time_s"], where + ".correlation_time_s")
            : 0.0;
    model.seed = nj.contains("seed") ? as_seed(nj["seed"], where + ".seed") : 0;
    model.validate();
    cfg.noise.push_back(model);
  }

  const json& mc = doc["monte_carlo"];
  require_keys(mc, "monte_carlo",
               {"trials", "coherence_trials", "stage_counts"});
  cfg.monte_carlo.trials =
      static_cast<int>(as_integer(mc["trials"], "monte_carlo.trials"));
  cfg.monte_carlo.coherence_trials = static_cast<int>(
      as_integer(mc["coherence_trials"], "monte_carlo.coherence_trials"));
  if (!mc["stage_counts"].is_array())
    fail("'monte_carlo.stage_counts' must be an array");
  cfg.monte_carlo.stage_counts.clear();
  for (const auto& v : mc["stage_counts"])
    cfg.monte_carlo.stage_counts.push_back(
        static_cast<int>(as_integer(v, "monte_carlo.stage_counts")));

  const json& sc = doc["scan"];
  require_keys(sc, "scan",
               {"light_shift_max_hz", "light_shift_points", "waists_um"});
  cfg.scan.light_shift_max =
      c::angular(as_number(sc["light_shift_max_hz"], "scan.light_shift_max_hz"));
  cfg.scan.light_shift_points = static_cast<int>(
      as_integer(sc["light_shift_points"], "scan.light_shift_points"));
  if (!sc["waists_um"].is_array()) fail("'scan.waists_um' must be an array");
  cfg.scan.waists.clear();
  for (const auto& v : sc["waists_um"])
    cfg.scan.waists.push_back(as_number(v, "scan.waists_um") * 1e-6);
  if (cfg.scan.light_shift_points < 2)
    fail("'scan.light_shift_points' must be at least 2");
  if (cfg.scan.waists.empty()) fail("'scan.waists_um' must not be empty");

  const json& out = doc["output"];
  require_keys(out, "output", {"path", "format"});
  cfg.output.path = as_string(out["path"], "output.path");
  const std::string fmt = as_string(out["format"], "output.format");
  if (fmt == "csv")
    cfg.output.format = emit::Format::csv;
  else if (fmt == "json")
    cfg.output.format = emit::Format::json;
  else
    fail("'output.format' must be csv or json");

  cfg.echo = std::move(doc);
  return cfg;
}

nlohmann::ordered_json load_document(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot read configuration file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail("configuration file '" + path + "' is not valid: " + e.what());
  }
  return doc;
}

void apply_override(nlohmann::ordered_json& document, const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    fail("override '" + spec + "' must look like path.to.key=value");
  const std::string path = spec.substr(0, eq);
  const std::string text = spec.substr(eq + 1);

  json* node = &document;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty()) fail("override '" + spec + "' has an empty path segment");
    if (dot == std::string::npos) {
      json value = json::parse(text, nullptr, false);
      (*node)[key] = value.is_discarded() ? json(text) : value;
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

const char* experiment_name(Experiment experiment) {
  switch (experiment) {
    case Experiment::modes: return "modes";
    case Experiment::gate: return "gate";
    case Experiment::synth: return "synth";
    case Experiment::noise: return "noise";
    case Experiment::scan: return "scan";
  }
  return "unknown";
}

} // namespace twz::cli
