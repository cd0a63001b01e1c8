#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "trajzoom/runner.hpp"

namespace trajzoom {

namespace fs = std::filesystem;

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, file.string(), "cannot open for reading");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, file.string(), "missing header", 1);
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.header.size());
    const char* cur = line.c_str();
    for (;;) {
      char* end = nullptr;
      const double v = std::strtod(cur, &end);
      if (end == cur) throw Error(ErrorCode::kParseError, file.string(), "not a number", line_no);
      row.push_back(v);
      if (*end == '\0') break;
      if (*end != ',') throw Error(ErrorCode::kParseError, file.string(), "expected ','", line_no);
      cur = end + 1;
    }
    if (row.size() != table.header.size()) {
      throw Error(ErrorCode::kParseError, file.string(), "row width differs from header", line_no);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void emit_plotdata(const fs::path& in_dir, const fs::path& out_file) {
  std::error_code ec;
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(in_dir, ec)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("traj_") && name.ends_with(".csv")) inputs.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::kIo, in_dir.string(), "cannot list directory: " + ec.message());
  std::sort(inputs.begin(), inputs.end());

  std::ofstream out(out_file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, out_file.string(), "cannot open for writing");
  out << "trajectory,panel,x,y\n";
  for (const auto& file : inputs) {
    const CsvTable table = read_csv(file);
    const auto need = [&](std::string_view col) {
      const auto idx = table.column(col);
      if (!idx) throw Error(ErrorCode::kMissingColumn, std::string(col), "missing in " + file.filename().string());
      return *idx;
    };
    const std::size_t qi = need("Q"), si = need("s"), ti = need("t");
    const std::string stem = file.stem().string();
    const std::string id = stem.substr(5);
    // Q(s) on top, Q(t) in the middle, t(s) at the bottom.
    const std::pair<const char*, std::pair<std::size_t, std::size_t>> panels[] = {
        {"Q_vs_s", {si, qi}}, {"Q_vs_t", {ti, qi}}, {"t_vs_s", {si, ti}}};
    for (const auto& [panel, xy] : panels) {
      for (const auto& row : table.rows) {
        out << id << ',' << panel << ',' << format_double(row[xy.first]) << ',' << format_double(row[xy.second])
            << '\n';
      }
    }
  }
  out.close();
  if (!out) throw Error(ErrorCode::kIo, out_file.string(), "write failed");
}

}  // namespace trajzoom
