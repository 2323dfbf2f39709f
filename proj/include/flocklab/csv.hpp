#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "flocklab/limit_lab.hpp"
#include "flocklab/particle_solver.hpp"
#include "flocklab/phase_density.hpp"

namespace flocklab {

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_field(std::string_view s);

/// Accumulates RFC-4180 rows in memory.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);
  CsvWriter& row(const std::vector<std::string>& fields);
  CsvWriter& row(const std::vector<double>& values);
  const std::string& str() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

/// Writes to a temporary file in the same directory, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Splits RFC-4180 text into rows of fields.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

extern const std::vector<std::string> kDiagnosticsHeader;
extern const std::vector<std::string> kSweepHeader;

std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows);
std::string snapshot_csv(const PhaseDensity& f);
std::string trajectory_csv(const std::vector<ParticleEnsemble>& snapshots);
std::string sweep_csv(const SweepReport& report);

}  // namespace flocklab
