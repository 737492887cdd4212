#include "backreact/output.hpp"

#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

#include "backreact/errors.hpp"

namespace backreact {

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

namespace {

void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

std::ofstream open_output(const std::filesystem::path& path) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) cells.push_back(cell);
  return cells;
}

double parse_double(const std::string& text, const std::filesystem::path& file) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidArgument(file.string() + ": bad number '" + text + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(const std::string& text, const std::filesystem::path& file) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidArgument(file.string() + ": bad integer '" + text + "'");
  }
  return v;
}

}  // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : out_(open_output(path)), columns_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw InvalidArgument("CsvWriter: wrong number of cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw InvalidArgument("CsvWriter: write failed");
}

void write_columns(const std::filesystem::path& path, const std::vector<std::string>& header,
                   const std::vector<const std::vector<double>*>& columns) {
  if (header.size() != columns.size()) throw InvalidArgument("write_columns: header/column mismatch");
  const std::size_t rows = columns.empty() ? 0 : columns.front()->size();
  for (const auto* c : columns) {
    if (c->size() != rows) throw InvalidArgument("write_columns: ragged columns");
  }
  CsvWriter csv(path, header);
  std::vector<double> values(columns.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) values[c] = (*columns[c])[r];
    csv.row(values);
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) throw InvalidArgument("cannot write " + path.string());
}

void write_snapshot(const Ensemble& e, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "psi");
  std::unordered_map<const WaveFunction*, std::size_t> ids;
  CsvWriter table(dir / "replicas.csv", {"index", "t", "X", "K", "y", "flags", "psi"});
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto& r = e.replicas[i];
    auto [it, inserted] = ids.try_emplace(r.psi.get(), ids.size());
    if (inserted) {
      CsvWriter psi(dir / "psi" / ("psi_" + std::to_string(it->second) + ".csv"), {"re", "im"});
      for (const auto& a : r.psi->amplitudes()) psi.row(std::vector<double>{a.real(), a.imag()});
    }
    const unsigned flags = (r.flags.node_proximity ? 1u : 0u) | (r.flags.boundary ? 2u : 0u);
    table.row(std::vector<std::string>{std::to_string(i), format_double(e.time),
                                       format_double(r.classical.position),
                                       format_double(r.classical.momentum), format_double(r.y),
                                       std::to_string(flags), std::to_string(it->second)});
  }
}

Ensemble read_snapshot(const std::filesystem::path& dir, const SpatialGrid& grid,
                       const HybridModel& model, double dt, std::uint64_t seed,
                       GuidanceSettings guidance) {
  const auto table_path = dir / "replicas.csv";
  std::ifstream table(table_path);
  if (!table) throw InvalidArgument("cannot read " + table_path.string());
  std::string line;
  std::getline(table, line);
  if (line != "index,t,X,K,y,flags,psi") throw InvalidArgument(table_path.string() + ": unexpected header");

  std::map<std::uint64_t, std::shared_ptr<const WaveFunction>> psis;
  auto load_psi = [&](std::uint64_t id) {
    auto it = psis.find(id);
    if (it != psis.end()) return it->second;
    const auto path = dir / "psi" / ("psi_" + std::to_string(id) + ".csv");
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read " + path.string());
    std::string row;
    std::getline(in, row);
    std::vector<Complex> amp;
    while (std::getline(in, row)) {
      const auto cells = split_csv(row);
      if (cells.size() != 2) throw InvalidArgument(path.string() + ": expected re,im");
      amp.emplace_back(parse_double(cells[0], path), parse_double(cells[1], path));
    }
    auto psi = std::make_shared<const WaveFunction>(grid, std::move(amp));
    psis.emplace(id, psi);
    return psi;
  };

  Ensemble e{{}, 0.0, seed, model, dt, guidance};
  while (std::getline(table, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 7) throw InvalidArgument(table_path.string() + ": expected 7 columns");
    if (parse_unsigned(cells[0], table_path) != e.replicas.size()) {
      throw InvalidArgument(table_path.string() + ": replica indices must run 0, 1, ...");
    }
    e.time = parse_double(cells[1], table_path);
    Replica r;
    r.classical = {parse_double(cells[2], table_path), parse_double(cells[3], table_path)};
    r.y = parse_double(cells[4], table_path);
    const auto flags = parse_unsigned(cells[5], table_path);
    r.flags = {(flags & 1u) != 0, (flags & 2u) != 0};
    r.psi = load_psi(parse_unsigned(cells[6], table_path));
    e.replicas.push_back(std::move(r));
  }
  return e;
}

}  // namespace backreact
