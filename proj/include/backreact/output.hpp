#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "backreact/ensemble.hpp"

namespace backreact {

// Shortest text that reads back to the same double: 17 significant digits.
std::string format_double(double value);

// CSV with a header row and a fixed column order.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

// Columns of equal length written row by row.
void write_columns(const std::filesystem::path& path, const std::vector<std::string>& header,
                   const std::vector<const std::vector<double>*>& columns);

void write_text(const std::filesystem::path& path, const std::string& text);

// Snapshot layout inside `dir`:
//   replicas.csv            index,t,X,K,y,flags,psi
//   psi/psi_<id>.csv        re,im   (one row per grid point)
// flags is a bit mask (1 = node proximity, 2 = boundary); replicas sharing a
// wavefunction reference the same psi id.
void write_snapshot(const Ensemble& e, const std::filesystem::path& dir);

// Inverse of write_snapshot for a known grid and run parameters.
Ensemble read_snapshot(const std::filesystem::path& dir, const SpatialGrid& grid,
                       const HybridModel& model, double dt, std::uint64_t seed,
                       GuidanceSettings guidance = {});

}  // namespace backreact
