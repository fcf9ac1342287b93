#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

// Experiment orchestration: resolve configuration + command-line overrides,
// dispatch to the named experiment, and write plot-ready tables.
namespace twz::cli {

struct RunOptions {
  std::string config_path;             // empty = built-in defaults
  std::vector<std::string> overrides;  // repeated --set path=value
  std::string experiment;              // subcommand; empty = from config
  std::string out_path;                // --out override
  std::string format;                  // --format override ("csv"/"json")
  bool has_seed = false;
  std::uint64_t seed = 0;              // --seed override
  bool verbose = false;
};

// Runs one experiment end to end. Prints a one-line summary to `out` on
// success; on failure prints a one-line machine-readable error record to
// `err` and returns the matching exit code:
//   0 success, 2 configuration error, 3 numeric/solver error,
//   4 infeasible synthesis, 5 output I/O error.
int run(const RunOptions& options, std::ostream& out, std::ostream& err);

} // namespace twz::cli
