#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "twz/chain.hpp"
#include "twz/emit.hpp"
#include "twz/noise.hpp"

// Experiment configuration: a single structured file in user units
// (frequencies in Hz, waists in um, masses in amu), converted to SI angular
// quantities on ingestion. Unknown keys are rejected so typos fail loudly.
namespace twz::cli {

enum class Experiment { modes, gate, synth, noise, scan };

// Bichromatic drive settings for the gate/noise experiments.
struct DriveSettings {
  double wavelength = 729e-9;  // m
  double axis_projection = 1.0;
  int gate_mode = 0;           // 1-based mode index; 0 picks the top mode
  double detuning = 0.0;       // rad/s, closure detuning of the drive
  double rabi = 0.0;           // rad/s; 0 derives the single-loop-pair value
  double duration = 0.0;       // s
  double nbar = 0.0;
  int samples = 256;           // trace resolution
};

struct SynthSettings {
  double target_phase = 0.0;    // rad, phase when every control is bright
  double duration = 0.0;        // s; 0 scans commensurate candidates
  double max_total_rabi = 0.0;  // rad/s; 0 = unbounded
  int n_starts = 8;
};

struct MonteCarloSettings {
  int trials = 10000;
  int coherence_trials = 2000;
  std::vector<int> stage_counts = {1, 2, 4, 8};
};

struct ScanSettings {
  double light_shift_max = 0.0; // rad/s
  int light_shift_points = 26;
  std::vector<double> waists;   // m
};

struct OutputSettings {
  std::string path;             // empty derives "<experiment>.<format>"
  emit::Format format = emit::Format::csv;
};

struct RunConfig {
  Experiment experiment = Experiment::modes;
  std::uint64_t seed = 1;
  chain::ChainConfig chain;
  DriveSettings drive;
  SynthSettings synth;
  std::vector<noise::NoiseModel> noise;
  MonteCarloSettings monte_carlo;
  ScanSettings scan;
  OutputSettings output;
  // Normalized user-unit document (defaults materialized); reparsing it
  // reproduces this configuration exactly.
  nlohmann::ordered_json echo;
};

// Built-in three-ion demonstration point: 360 kHz trap, center ion tweezed
// at a 10.4 MHz light shift through a 1 um waist, 729 nm drive, 4 kHz
// closure detuning over 500 us.
nlohmann::ordered_json default_document();

// Validate a user-unit document against the schema (unknown keys rejected),
// materialize defaults, and convert to SI. Throws std::invalid_argument.
RunConfig parse_config(const nlohmann::ordered_json& document);

// Read and parse a configuration file. Throws std::invalid_argument when the
// file is unreadable or malformed (a broken configuration, not an I/O fault
// of the run itself).
nlohmann::ordered_json load_document(const std::string& path);

// Apply one `dotted.path=value` override; the value is parsed as a JSON
// literal when possible and as a string otherwise.
void apply_override(nlohmann::ordered_json& document, const std::string& spec);

const char* experiment_name(Experiment experiment);

} // namespace twz::cli
