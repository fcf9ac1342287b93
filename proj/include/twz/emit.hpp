#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

// Tabular output channel shared by every experiment: a primary table plus
// optional named side tables, rendered either as CSV files (one per table)
// or as a single structured document with a metadata envelope.
namespace twz::emit {

enum class Format { csv, json };

using Value = std::variant<long long, double, std::string>;

struct Table {
  std::string name; // side-table suffix / document key; primary uses "data"
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
};

struct Metadata {
  std::string tool;
  std::string version;
  std::uint64_t seed = 0;
  nlohmann::ordered_json config; // user-unit configuration echo
};

// One CSV document: header row, one record per line, floats at 12
// significant digits, LF line endings.
std::string render_csv(const Table& table);

// Single document: {"metadata": {...}, "data": [...], "<side name>": [...]}.
nlohmann::ordered_json render_json(const std::vector<Table>& tables,
                                   const Metadata& meta);

// Path of the side table `name` next to the primary path (suffix inserted
// before the extension): "out/gate.csv" + "trace" -> "out/gate_trace.csv".
std::string side_path(const std::string& path, const std::string& name);

// Write all tables in the requested format. CSV puts the first table at
// `path` and side tables at side_path(); json writes one document at `path`.
// Returns the list of files written. Throws IoError on unwritable paths.
std::vector<std::string> write_outputs(const std::vector<Table>& tables,
                                       const Metadata& meta,
                                       const std::string& path, Format format);

} // namespace twz::emit
