#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fbrd/bounds.hpp"
#include "fbrd/spectrum.hpp"
#include "fbrd/tilted.hpp"

namespace fbrd::io {

struct OutputConfig {
  std::string path = "results.csv";
  std::string format = "csv";  // csv | json
  std::string units = "nats";  // nats | bits; affects the echoed summary only
  bool timing = false;         // fill wall_ms (breaks byte-identical reruns)
};

struct TaskConfig {
  std::string subcommand;
  std::optional<std::size_t> n;
  std::vector<std::size_t> n_list;
  std::optional<double> d;
  std::vector<double> d_grid;
  std::optional<double> epsilon;
  std::size_t samples = 100000;  // Monte Carlo budget (achievability, aep, sweep)
  std::size_t trials = 100000;   // codec trials
  std::uint64_t M = 0;           // codec codebook size
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = all hardware threads
  std::optional<tilted::Thresholds> thresholds;
  std::optional<bounds::FittedConstants> fitted;  // aep reads it as candidate
};

struct RunConfig {
  spectrum::SourceSpec source;
  spectrum::SpectrumOptions options;
  TaskConfig task;
  OutputConfig output;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);

  // Field-level schema and range checks; throws DomainError naming the field.
  void validate() const;

  // Canonical JSON echo of every resolved field, for provenance.
  std::string resolved_json() const;

  std::vector<std::size_t> blocklengths() const;  // n or n_list
  std::vector<double> distortions() const;        // d or d_grid
};

}  // namespace fbrd::io
