#pragma once
// Subcommand drivers: each writes deterministic CSV files into the output directory.

#include "fraclab/config.hpp"

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace fraclab {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitPartial = 2 };

/// Comma-separated table with a provenance comment and a header row.
/// Numbers are written as %.12e, so output depends only on the values.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::uint64_t config_hash, const std::vector<std::string>& columns);
  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(const std::string& x);
  void end_row();

 private:
  std::ofstream out_;
  std::string path_;
  std::vector<std::string> row_;
  std::size_t columns_;
};

std::string format_number(double x);

/// Writes one coefficient per line after a '#'-prefixed header carrying the basis descriptor.
void write_coefficients(const std::string& path, const std::string& descriptor, std::uint64_t config_hash,
                        const Vector<double>& coeffs);

/// Validates then runs cfg.subcommand. Returns 0 on success, 2 when some
/// rows are flagged (non-convergence, tolerance misses), 1 on validation errors.
int run(const RunConfig& cfg, std::ostream& log);

}  // namespace fraclab
