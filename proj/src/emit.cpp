#include "twz/emit.hpp"

#include <cstdio>
#include <fstream>
#include <string>

#include "twz/errors.hpp"

namespace twz::emit {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string csv_field(const Value& value) {
  if (std::holds_alternative<long long>(value))
    return std::to_string(std::get<long long>(value));
  if (std::holds_alternative<double>(value))
    return format_double(std::get<double>(value));
  // Quote only when the content would break the record structure.
  const std::string& s = std::get<std::string>(value);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

nlohmann::ordered_json json_value(const Value& value) {
  if (std::holds_alternative<long long>(value))
    return std::get<long long>(value);
  if (std::holds_alternative<double>(value)) return std::get<double>(value);
  return std::get<std::string>(value);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed while writing '" + path + "'");
}

} // namespace

std::string render_csv(const Table& table) {
  std::string doc;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) doc += ',';
    doc += table.columns[c];
  }
  doc += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) doc += ',';
      doc += csv_field(row[c]);
    }
    doc += '\n';
  }
  return doc;
}

nlohmann::ordered_json render_json(const std::vector<Table>& tables,
                                   const Metadata& meta) {
  nlohmann::ordered_json doc;
  doc["metadata"] = {{"tool", meta.tool},
                     {"version", meta.version},
                     {"seed", meta.seed},
                     {"config", meta.config}};
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const std::string key = i == 0 ? "data" : tables[i].name;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : tables[i].rows) {
      nlohmann::ordered_json record;
      for (std::size_t c = 0; c < row.size(); ++c)
        record[tables[i].columns[c]] = json_value(row[c]);
      rows.push_back(std::move(record));
    }
    doc[key] = std::move(rows);
  }
  return doc;
}

std::string side_path(const std::string& path, const std::string& name) {
  const std::size_t slash = path.find_last_of('/');
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "_" + name;
  return path.substr(0, dot) + "_" + name + path.substr(dot);
}

std::vector<std::string> write_outputs(const std::vector<Table>& tables,
                                       const Metadata& meta,
                                       const std::string& path,
                                       Format format) {
  std::vector<std::string> written;
  if (format == Format::json) {
    write_file(path, render_json(tables, meta).dump(2) + "\n");
    written.push_back(path);
    return written;
  }
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const std::string p = i == 0 ? path : side_path(path, tables[i].name);
    write_file(p, render_csv(tables[i]));
    written.push_back(p);
  }
  return written;
}

} // namespace twz::emit
