#pragma once

#include <string>
#include <vector>

#include "fbrd/config.hpp"
#include "fbrd/csv.hpp"

namespace fbrd::io {

// Computes the rows for the configured subcommand, appending to `rows` as
// points complete so a failure still leaves the finished prefix behind.
// Returns the subcommand-specific summary as a JSON text.
std::string execute(const RunConfig& config, std::vector<Row>& rows);

// Serializes rows (plus resolved config and summary in JSON mode) to text in
// the configured output format.
std::string render(const RunConfig& config, const std::vector<Row>& rows,
                   const std::string& summary_json);

// Full pipeline: validate, execute, write the result file, echo the resolved
// config and summary on stdout. Exit code: 0 success, 2 validation failure
// (nothing written), 3 computation failure (finished rows are flushed with an
// error sentinel row appended).
int run(const RunConfig& config);

}  // namespace fbrd::io
