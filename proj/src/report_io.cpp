#include "lapconv/report_io.hpp"

#include "lapconv/config.hpp"
#include "lapconv/errors.hpp"
#include "lapconv/numerics.hpp"

#include <fstream>
#include <ostream>

namespace lapconv {

namespace {

std::string cell_text(const Cell& c) {
  struct {
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(std::uint64_t v) const { return std::to_string(v); }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
  } visitor;
  return std::visit(visitor, c);
}

} // namespace

const Table& Report::table(const std::string& name) const {
  for (const Table& t : tables)
    if (t.name == name) return t;
  throw DomainError("report has no table '" + name + "'");
}

void write_csv(std::ostream& out, const Table& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_text(row[i]);
    out << "\n";
  }
}

std::vector<std::filesystem::path> write_report(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const Table& t : report.tables) {
    const auto path = dir / (report.kind + "_" + t.name + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    write_csv(out, t);
    written.push_back(path);
  }
  nlohmann::json doc;
  doc["version"] = kVersion;
  doc["experiment"] = report.kind;
  doc["config"] = report.config;
  doc["summary"] = report.summary;
  const auto path = dir / (report.kind + "_summary.json");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << "\n";
  written.push_back(path);
  return written;
}

} // namespace lapconv
