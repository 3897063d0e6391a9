#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

// Experiment reports: time series of ensemble observables with standard
// errors, fitted rates, and named pass/fail verdicts. Serialized to JSON
// (report.json) and CSV (series.csv). The exact_value column of the CSV is
// always computed from closed-form laws, never from the simulation.

namespace kmix {

using json = nlohmann::ordered_json;

struct ReportRow {
  double time = 0.0;
  std::string observable;
  double estimate = 0.0;
  double se = 0.0;
  std::optional<double> exact;  // closed-form value, when one exists
  std::string exact_source;     // e.g. "exact_laws.inverse_moment"
};

struct RateRecord {
  std::string name;
  double rate = 0.0;
  double se_rate = 0.0;
  double target = 0.0;  // closed-form rate the fit is compared against
  std::string target_source;
};

struct Verdict {
  std::string criterion;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  std::string module;  // which simulation module produced this
  std::string version;
  json config;  // full resolved configuration (audit trail)
  std::uint64_t seed = 0;
  std::uint64_t bootstrap_seed = 0;
  double dt = 0.0;
  std::uint64_t ensemble_size = 0;
  std::uint64_t excluded = 0;  // excluded-sample counter

  std::vector<ReportRow> rows;
  std::vector<RateRecord> rates;
  std::vector<Verdict> verdicts;
  json extra;  // module-specific diagnostics

  bool all_pass() const;
  json to_json() const;
  // CSV dialect: comma separated, '.' decimal, header row, LF endings,
  // floats at 17 significant digits.
  void write_csv(std::ostream& os) const;
};

// %.17g formatting used for all numeric file output (round-trip exact).
std::string format_double(double x);

}  // namespace kmix
