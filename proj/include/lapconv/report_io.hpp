#pragma once

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace lapconv {

using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

/// Result of one experiment: CSV tables plus a JSON summary.
struct Report {
  std::string kind;
  std::vector<Table> tables;
  nlohmann::json summary;
  nlohmann::json config;

  const Table& table(const std::string& name) const;
};

/// Doubles use the shortest round-trip form; strings are quoted only when
/// they contain a comma or quote.
void write_csv(std::ostream& out, const Table& table);

/// Writes <kind>_<table>.csv for every table and <kind>_summary.json (with
/// the config echo and the artifact version) into `dir`, creating it.
/// Returns the written paths.
std::vector<std::filesystem::path> write_report(const Report& report, const std::filesystem::path& dir);

} // namespace lapconv
