#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fbrd::io {

// One output record. The column set is shared by every subcommand; fields a
// subcommand does not produce stay zero. `status` is "ok" on normal rows and
// carries the error message on the sentinel row appended when a run aborts.
struct Row {
  std::size_t n = 0;
  double d = 0.0;
  double epsilon = 0.0;
  double theta = 0.0;
  double rate_nats = 0.0;
  double rate_bits = 0.0;
  double dispersion_nats2 = 0.0;
  std::string bound_kind;
  double log_M_nats = 0.0;
  double mc_stderr = 0.0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  std::string status = "ok";
};

extern const char* const kCsvHeader;

// Round-trip decimal formatting: '.' separator, 17 significant digits.
std::string format_sig17(double v);

std::string csv_line(const Row& row);
std::string to_csv(const std::vector<Row>& rows);

// Inverse of to_csv; throws DomainError on a malformed header or row.
std::vector<Row> parse_csv(const std::string& text);

}  // namespace fbrd::io
