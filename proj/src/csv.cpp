#include "fbrd/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "fbrd/errors.hpp"

namespace fbrd::io {

const char* const kCsvHeader =
    "n,d,epsilon,theta,rate_nats,rate_bits,dispersion_nats2,bound_kind,"
    "log_M_nats,mc_stderr,seed,wall_ms,status";

std::string format_sig17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

// Field values must not break the row structure.
std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double to_double(const std::string& s, const char* col) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw DomainError(std::string("parse_csv: bad numeric field in column ") +
                      col + ": '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s, const char* col) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw DomainError(std::string("parse_csv: bad integer field in column ") +
                      col + ": '" + s + "'");
  return v;
}

}  // namespace

std::string csv_line(const Row& row) {
  std::string out;
  out += std::to_string(row.n);
  out += ',';
  out += format_sig17(row.d);
  out += ',';
  out += format_sig17(row.epsilon);
  out += ',';
  out += format_sig17(row.theta);
  out += ',';
  out += format_sig17(row.rate_nats);
  out += ',';
  out += format_sig17(row.rate_bits);
  out += ',';
  out += format_sig17(row.dispersion_nats2);
  out += ',';
  out += sanitize(row.bound_kind);
  out += ',';
  out += format_sig17(row.log_M_nats);
  out += ',';
  out += format_sig17(row.mc_stderr);
  out += ',';
  out += std::to_string(row.seed);
  out += ',';
  out += format_sig17(row.wall_ms);
  out += ',';
  out += sanitize(row.status);
  return out;
}

std::string to_csv(const std::vector<Row>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const Row& r : rows) {
    out += csv_line(r);
    out += '\n';
  }
  return out;
}

std::vector<Row> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw DomainError("parse_csv: missing or mismatched header row");

  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 13)
      throw DomainError("parse_csv: expected 13 fields, got " +
                        std::to_string(f.size()));
    Row r;
    r.n = static_cast<std::size_t>(to_u64(f[0], "n"));
    r.d = to_double(f[1], "d");
    r.epsilon = to_double(f[2], "epsilon");
    r.theta = to_double(f[3], "theta");
    r.rate_nats = to_double(f[4], "rate_nats");
    r.rate_bits = to_double(f[5], "rate_bits");
    r.dispersion_nats2 = to_double(f[6], "dispersion_nats2");
    r.bound_kind = f[7];
    r.log_M_nats = to_double(f[8], "log_M_nats");
    r.mc_stderr = to_double(f[9], "mc_stderr");
    r.seed = to_u64(f[10], "seed");
    r.wall_ms = to_double(f[11], "wall_ms");
    r.status = f[12];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace fbrd::io
